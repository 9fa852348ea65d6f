use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::YearMonth;

/// How a case was resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    /// Plaintiff verdict.
    P,
    /// Defendant verdict.
    D,
    /// Settlement.
    S,
}

impl Outcome {
    pub fn is_verdict(self) -> bool {
        !matches!(self, Outcome::S)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::P => "P",
            Outcome::D => "D",
            Outcome::S => "S",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "P" | "p" => Ok(Outcome::P),
            "D" | "d" => Ok(Outcome::D),
            "S" | "s" => Ok(Outcome::S),
            other => Err(format!("unknown outcome {other:?}, expected P, D or S")),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseFlags {
    pub corporate_defendant: bool,
    pub insured_defendant: bool,
    pub motor: bool,
    pub general_liab: bool,
    pub prof_liab: bool,
    pub jury_trial: bool,
}

/// One resolved case.
///
/// `amount_real` is `None` until the record has been CPI adjusted (or when the
/// award field was blank). Covariates absent from the maps are treated as 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub case_id: String,
    pub year: i32,
    pub outcome: Outcome,
    pub amount_nominal: Option<f64>,
    pub amount_month: YearMonth,
    pub amount_real: Option<f64>,
    pub factual: BTreeMap<String, f64>,
    pub strategic: BTreeMap<String, f64>,
    pub state: String,
    pub flags: CaseFlags,
}

impl CaseRecord {
    /// Looks a covariate up in the factual map, then the strategic map.
    pub fn covariate(&self, code: &str) -> Option<f64> {
        self.factual
            .get(code)
            .or_else(|| self.strategic.get(code))
            .copied()
    }

    /// `(P_i, D_i, S_i)` indicators; exactly one is 1.
    pub fn indicators(&self) -> (u8, u8, u8) {
        match self.outcome {
            Outcome::P => (1, 0, 0),
            Outcome::D => (0, 1, 0),
            Outcome::S => (0, 0, 1),
        }
    }
}
