use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CaseRecord;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct YearMonth {
    pub year: i32,
    pub month: u8,
}

impl YearMonth {
    pub fn new(year: i32, month: u8) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::InvalidInput(format!("month {month} out of range 1-12")));
        }
        Ok(Self { year, month })
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("expected YYYY-MM, got {s:?}"));
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        let year = y.parse().map_err(|_| bad())?;
        let month = m.parse().map_err(|_| bad())?;
        YearMonth::new(year, month)
    }
}

/// Monthly CPI-U levels and the month whose dollars amounts are expressed in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpiTable {
    entries: BTreeMap<YearMonth, f64>,
    base_month: YearMonth,
}

impl CpiTable {
    pub fn new(entries: BTreeMap<YearMonth, f64>, base_month: YearMonth) -> Result<Self> {
        if let Some((month, level)) = entries.iter().find(|(_, &v)| !(v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidCpi(format!("level {level} for {month} is not positive")));
        }
        if !entries.contains_key(&base_month) {
            return Err(Error::MissingCpiMonth(base_month));
        }
        Ok(Self {
            entries,
            base_month,
        })
    }

    /// Uses the latest month in the table as the base month.
    pub fn with_latest_base(entries: BTreeMap<YearMonth, f64>) -> Result<Self> {
        let base = *entries
            .keys()
            .next_back()
            .ok_or_else(|| Error::InvalidCpi("table is empty".into()))?;
        Self::new(entries, base)
    }

    pub fn base_month(&self) -> YearMonth {
        self.base_month
    }

    pub fn level(&self, month: YearMonth) -> Result<f64> {
        self.entries
            .get(&month)
            .copied()
            .ok_or(Error::MissingCpiMonth(month))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Converts a nominal amount paid in `month` into base-month dollars.
pub fn cpi_adjust(amount_nominal: f64, month: YearMonth, table: &CpiTable) -> Result<f64> {
    let base = table.level(table.base_month)?;
    let level = table.level(month)?;
    if month == table.base_month {
        return Ok(amount_nominal);
    }
    Ok(amount_nominal * base / level)
}

/// Fills `amount_real` for every case with a nominal amount.
pub fn adjust_cases(cases: &mut [CaseRecord], table: &CpiTable) -> Result<()> {
    for case in cases.iter_mut() {
        case.amount_real = match case.amount_nominal {
            Some(a) => Some(cpi_adjust(a, case.amount_month, table)?),
            None => None,
        };
    }
    Ok(())
}
