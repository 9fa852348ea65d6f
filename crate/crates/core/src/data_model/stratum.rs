use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CaseRecord;

/// States with a cap on noneconomic and/or punitive damages as of 2024-12-31.
pub const TORT_CAP_STATES: [&str; 29] = [
    "AL", "AK", "CO", "FL", "GA", "HI", "ID", "IN", "KS", "LA", "MA", "MI", "MS", "MO", "MT",
    "NE", "NV", "NH", "NJ", "NC", "OH", "OK", "SC", "TN", "TX", "VA", "WA", "WV", "WI",
];

/// States with third-party litigation funding regulation as of 2024-12-31.
pub const TPLF_STATES: [&str; 16] = [
    "CO", "IL", "IN", "KY", "LA", "ME", "MT", "NE", "NV", "OH", "SC", "TN", "UT", "VT", "WV",
    "WI",
];

/// Regulatory state sets. Defaults are compiled in; a JSON file can override them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateLists {
    pub tort_cap: BTreeSet<String>,
    pub tplf: BTreeSet<String>,
}

impl Default for StateLists {
    fn default() -> Self {
        Self {
            tort_cap: TORT_CAP_STATES.iter().map(|s| s.to_string()).collect(),
            tplf: TPLF_STATES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StratumKind {
    All,
    Corporate,
    IndividualOnly,
    Insured,
    UninsuredOnly,
    Motor,
    General,
    Professional,
    Others,
    TortCap,
    NoTortCap,
    Tplf,
    NoTplf,
    Jury,
    Bench,
}

impl StratumKind {
    pub const ALL_KINDS: [StratumKind; 15] = [
        StratumKind::All,
        StratumKind::Corporate,
        StratumKind::IndividualOnly,
        StratumKind::Insured,
        StratumKind::UninsuredOnly,
        StratumKind::Motor,
        StratumKind::General,
        StratumKind::Professional,
        StratumKind::Others,
        StratumKind::TortCap,
        StratumKind::NoTortCap,
        StratumKind::Tplf,
        StratumKind::NoTplf,
        StratumKind::Jury,
        StratumKind::Bench,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StratumKind::All => "ALL",
            StratumKind::Corporate => "CORPORATE",
            StratumKind::IndividualOnly => "INDIVIDUAL_ONLY",
            StratumKind::Insured => "INSURED",
            StratumKind::UninsuredOnly => "UNINSURED_ONLY",
            StratumKind::Motor => "MOTOR",
            StratumKind::General => "GENERAL",
            StratumKind::Professional => "PROFESSIONAL",
            StratumKind::Others => "OTHERS",
            StratumKind::TortCap => "TORT_CAP",
            StratumKind::NoTortCap => "NO_TORT_CAP",
            StratumKind::Tplf => "TPLF",
            StratumKind::NoTplf => "NO_TPLF",
            StratumKind::Jury => "JURY",
            StratumKind::Bench => "BENCH",
        }
    }
}

impl fmt::Display for StratumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StratumKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        StratumKind::ALL_KINDS
            .into_iter()
            .find(|k| k.as_str() == norm)
            .ok_or_else(|| format!("unknown stratum {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stratum {
    pub kind: StratumKind,
    pub state_lists: StateLists,
}

impl Stratum {
    pub fn new(kind: StratumKind) -> Self {
        Self {
            kind,
            state_lists: StateLists::default(),
        }
    }

    pub fn all() -> Self {
        Self::new(StratumKind::All)
    }

    pub fn with_state_lists(kind: StratumKind, state_lists: StateLists) -> Self {
        Self { kind, state_lists }
    }

    pub fn contains(&self, case: &CaseRecord) -> bool {
        let flags = &case.flags;
        let state = case.state.trim().to_ascii_uppercase();
        match self.kind {
            StratumKind::All => true,
            StratumKind::Corporate => flags.corporate_defendant,
            StratumKind::IndividualOnly => !flags.corporate_defendant,
            StratumKind::Insured => flags.insured_defendant,
            StratumKind::UninsuredOnly => !flags.insured_defendant,
            StratumKind::Motor => flags.motor,
            StratumKind::General => flags.general_liab,
            StratumKind::Professional => flags.prof_liab,
            StratumKind::Others => !(flags.motor || flags.general_liab || flags.prof_liab),
            StratumKind::TortCap => self.state_lists.tort_cap.contains(&state),
            StratumKind::NoTortCap => !self.state_lists.tort_cap.contains(&state),
            StratumKind::Tplf => self.state_lists.tplf.contains(&state),
            StratumKind::NoTplf => !self.state_lists.tplf.contains(&state),
            StratumKind::Jury => flags.jury_trial,
            StratumKind::Bench => !flags.jury_trial,
        }
    }
}

/// Positions of the cases inside the stratum, in input order.
pub fn stratum_indices(cases: &[CaseRecord], stratum: &Stratum) -> Vec<usize> {
    cases
        .iter()
        .enumerate()
        .filter(|(_, c)| stratum.contains(c))
        .map(|(i, _)| i)
        .collect()
}

pub fn filter_stratum(cases: &[CaseRecord], stratum: &Stratum) -> Vec<CaseRecord> {
    if stratum.kind == StratumKind::All {
        return cases.to_vec();
    }
    cases.iter().filter(|c| stratum.contains(c)).cloned().collect()
}
