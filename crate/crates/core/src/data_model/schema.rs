//! Covariate codes and covariate-set selection.
//!
//! Codes and their order follow the variable tables of the source dataset:
//! factual case characteristics first, then strategic litigation variables.
//! Coefficient vectors are reported in this order so that runs are comparable.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CovariateClass {
    Factual,
    Strategic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CovariateKind {
    /// 0/1 indicator.
    Indicator,
    /// Share in [0, 1].
    Proportion,
    /// Log of a count, >= 0.
    LogCount,
}

impl CovariateKind {
    pub fn check(self, value: f64) -> Result<(), String> {
        if !value.is_finite() {
            return Err(format!("value {value} is not finite"));
        }
        match self {
            CovariateKind::Indicator if value != 0.0 && value != 1.0 => {
                Err(format!("indicator value {value} is not 0 or 1"))
            }
            CovariateKind::Proportion if !(0.0..=1.0).contains(&value) => {
                Err(format!("proportion {value} outside [0, 1]"))
            }
            CovariateKind::LogCount if value < 0.0 => Err(format!("log-count {value} is negative")),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CovariateDef {
    pub code: &'static str,
    pub class: CovariateClass,
    pub kind: CovariateKind,
}

const fn f(code: &'static str, kind: CovariateKind) -> CovariateDef {
    CovariateDef {
        code,
        class: CovariateClass::Factual,
        kind,
    }
}

const fn s(code: &'static str, kind: CovariateKind) -> CovariateDef {
    CovariateDef {
        code,
        class: CovariateClass::Strategic,
        kind,
    }
}

use CovariateKind::{Indicator as I, LogCount as L, Proportion as P};

pub const FACTUAL_COVARIATES: &[CovariateDef] = &[
    f("STATE_TX", I),
    f("STATE_CA", I),
    f("STATE_NY", I),
    f("STATE_FL", I),
    f("STATE_PA", I),
    f("STATE_NJ", I),
    f("STATE_OH", I),
    f("STATE_MI", I),
    f("STATE_GA", I),
    f("STATE_IL", I),
    f("STATE_NEWENG", I),
    f("STATE_CAROLI", I),
    f("STATE_DCMETR", I),
    f("NUM_P.log", L),
    f("NUM_D.log", L),
    f("NUM_P_AGE_0", P),
    f("NUM_P_AGE_16", P),
    f("NUM_P_AGE_30", P),
    f("NUM_P_AGE_40", P),
    f("NUM_P_AGE_50", P),
    f("NUM_P_AGE_60", P),
    f("NUM_P_AGE_70", P),
    f("NUM_P_GEN_M", P),
    f("NUM_P_GEN_F", P),
    f("NUM_P_MAR_M", P),
    f("NUM_P_MAR_S", P),
    f("NUM_P_CHD_Y", P),
    f("NUM_P_CHD_N", P),
    f("(INJURY_NUM>0)", I),
    f("log(pmax(INJURY_NUM,1))", L),
    f("(INJURY_NUM_DEATH>0)", I),
    f("INJURY_NUM_TYPE_ARM", P),
    f("INJURY_NUM_TYPE_BACK", P),
    f("INJURY_NUM_TYPE_BODY", P),
    f("INJURY_NUM_TYPE_HEAD", P),
    f("INJURY_NUM_TYPE_INT", P),
    f("INJURY_NUM_TYPE_LEG", P),
    f("INJURY_NUM_TYPE_MENT", P),
    f("INJURY_NUM_TYPE_NECK", P),
    f("INJURY_NUM_TYPE_SURG", P),
    f("CASETYPE_NUM.log", L),
    f("CASETYPE_NUM_MOTOR", I),
    f("CASETYPE_NUM_GLIAB", I),
    f("CASETYPE_NUM_PLIAB", I),
    f("IDX_D_CORP", I),
    f("IDX_INS_CORP", I),
];

pub const STRATEGIC_COVARIATES: &[CovariateDef] = &[
    s("TRIAL_LEN_1D", I),
    s("TRIAL_LEN_2D", I),
    s("TRIAL_LEN_3D", I),
    s("TRIAL_LEN_4D", I),
    s("TRIAL_LEN_1W", I),
    s("TRIAL_LEN_2W", I),
    s("TRIAL_LEN_1M", I),
    s("JURY_LEN_1I", I),
    s("JURY_LEN_1H", I),
    s("JURY_LEN_2H", I),
    s("JURY_LEN_3H", I),
    s("JURY_LEN_4H", I),
    s("JURY_LEN_1D", I),
    s("JURY_LEN_2D", I),
    s("(EXPERT_P>0)", I),
    s("log(pmax(EXPERT_P,1))", L),
    s("EXPERT_P_ME", P),
    s("EXPERT_P_BU", P),
    s("EXPERT_P_TE", P),
    s("EXPERT_P_AC", P),
    s("(EXPERT_D>0)", I),
    s("log(pmax(EXPERT_D,1))", L),
    s("EXPERT_D_ME", P),
    s("EXPERT_D_BU", P),
    s("EXPERT_D_TE", P),
    s("EXPERT_D_AC", P),
    s("NUM_P_ATT.log", L),
    s("NUM_D_ATT.log", L),
];

/// Prefix marking a user-defined factual covariate column (e.g. `FACTUAL.X`).
pub const FACTUAL_PREFIX: &str = "FACTUAL.";
/// Prefix marking a user-defined strategic covariate column.
pub const STRATEGIC_PREFIX: &str = "STRATEGIC.";

pub fn lookup(code: &str) -> Option<&'static CovariateDef> {
    FACTUAL_COVARIATES
        .iter()
        .chain(STRATEGIC_COVARIATES)
        .find(|d| d.code == code)
}

/// Classifies a column name as a covariate, if it is one.
pub fn classify(column: &str) -> Option<CovariateClass> {
    if let Some(def) = lookup(column) {
        Some(def.class)
    } else if column.starts_with(FACTUAL_PREFIX) && column.len() > FACTUAL_PREFIX.len() {
        Some(CovariateClass::Factual)
    } else if column.starts_with(STRATEGIC_PREFIX) && column.len() > STRATEGIC_PREFIX.len() {
        Some(CovariateClass::Strategic)
    } else {
        None
    }
}

/// Which covariates a model controls for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SpecMode {
    /// No covariates.
    Naive,
    /// Factual case characteristics (the headline index).
    Factual,
    /// Factual plus strategic litigation variables (the residual index).
    FactualPlusStrategic,
}

impl SpecMode {
    pub const ALL: [SpecMode; 3] = [SpecMode::Naive, SpecMode::Factual, SpecMode::FactualPlusStrategic];

    pub fn as_str(self) -> &'static str {
        match self {
            SpecMode::Naive => "NAIVE",
            SpecMode::Factual => "FACTUAL",
            SpecMode::FactualPlusStrategic => "FACTUAL_PLUS_STRATEGIC",
        }
    }

    /// Column label used in summary tables.
    pub fn label(self) -> &'static str {
        match self {
            SpecMode::Naive => "Naive",
            SpecMode::Factual => "Headline",
            SpecMode::FactualPlusStrategic => "Residual",
        }
    }
}

impl fmt::Display for SpecMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SpecMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().replace('-', "_").as_str() {
            "NAIVE" => Ok(SpecMode::Naive),
            "FACTUAL" | "HEADLINE" => Ok(SpecMode::Factual),
            "FACTUAL_PLUS_STRATEGIC" | "RESIDUAL" => Ok(SpecMode::FactualPlusStrategic),
            other => Err(format!("unknown specification {other:?}")),
        }
    }
}

/// Ordered covariate columns for one specification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CovariateSpec {
    pub mode: SpecMode,
    pub columns: Vec<String>,
}

impl CovariateSpec {
    /// Selects the columns of `mode` among the covariates present in the data.
    ///
    /// Schema codes come first in schema order, then prefixed user columns
    /// sorted by name.
    pub fn new<S: AsRef<str>>(mode: SpecMode, available: &[S]) -> Self {
        let present: BTreeSet<&str> = available.iter().map(|s| s.as_ref()).collect();
        let mut columns = Vec::new();
        let mut push_class = |defs: &[CovariateDef], prefix: &str| {
            columns.extend(
                defs.iter()
                    .filter(|d| present.contains(d.code))
                    .map(|d| d.code.to_string()),
            );
            columns.extend(
                present
                    .iter()
                    .filter(|c| c.starts_with(prefix) && c.len() > prefix.len())
                    .map(|c| c.to_string()),
            );
        };
        match mode {
            SpecMode::Naive => {}
            SpecMode::Factual => push_class(FACTUAL_COVARIATES, FACTUAL_PREFIX),
            SpecMode::FactualPlusStrategic => {
                push_class(FACTUAL_COVARIATES, FACTUAL_PREFIX);
                push_class(STRATEGIC_COVARIATES, STRATEGIC_PREFIX);
            }
        }
        Self { mode, columns }
    }

    /// An explicit column list, used by tests and the cross-sectional report.
    pub fn with_columns(mode: SpecMode, columns: Vec<String>) -> Self {
        Self { mode, columns }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_sizes() {
        assert_eq!(FACTUAL_COVARIATES.len(), 46);
        assert_eq!(STRATEGIC_COVARIATES.len(), 28);
        let mut codes: Vec<_> = FACTUAL_COVARIATES
            .iter()
            .chain(STRATEGIC_COVARIATES)
            .map(|d| d.code)
            .collect();
        codes.sort();
        codes.dedup();
        assert_eq!(codes.len(), 74, "codes must be unique");
    }

    #[test]
    fn naive_has_no_columns() {
        let spec = CovariateSpec::new(SpecMode::Naive, &["IDX_D_CORP", "FACTUAL.X"]);
        assert!(spec.columns.is_empty());
    }

    #[test]
    fn factual_is_prefix_of_residual() {
        let avail = [
            "TRIAL_LEN_1D",
            "FACTUAL.X",
            "IDX_D_CORP",
            "NUM_P.log",
            "STRATEGIC.Z",
            "UNRELATED",
        ];
        let fac = CovariateSpec::new(SpecMode::Factual, &avail);
        let all = CovariateSpec::new(SpecMode::FactualPlusStrategic, &avail);
        assert_eq!(fac.columns, ["NUM_P.log", "IDX_D_CORP", "FACTUAL.X"]);
        assert_eq!(
            all.columns,
            ["NUM_P.log", "IDX_D_CORP", "FACTUAL.X", "TRIAL_LEN_1D", "STRATEGIC.Z"]
        );
    }

    #[test]
    fn order_does_not_depend_on_input_order() {
        let a = CovariateSpec::new(SpecMode::Factual, &["IDX_INS_CORP", "STATE_TX"]);
        let b = CovariateSpec::new(SpecMode::Factual, &["STATE_TX", "IDX_INS_CORP"]);
        assert_eq!(a, b);
        assert_eq!(a.columns, ["STATE_TX", "IDX_INS_CORP"]);
    }

    #[test]
    fn kind_checks() {
        assert!(CovariateKind::Proportion.check(1.2).is_err());
        assert!(CovariateKind::LogCount.check(-0.1).is_err());
        assert!(CovariateKind::Indicator.check(0.5).is_err());
        assert!(CovariateKind::Indicator.check(1.0).is_ok());
    }

    #[test]
    fn spec_mode_aliases() {
        assert_eq!("headline".parse::<SpecMode>().unwrap(), SpecMode::Factual);
        assert_eq!(
            "factual-plus-strategic".parse::<SpecMode>().unwrap(),
            SpecMode::FactualPlusStrategic
        );
    }
}
