use std::collections::BTreeMap;
use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{CaseRecord, CovariateSpec, Outcome};
use crate::{Error, Result};

/// Offset below the smallest positive log amount at which zero total
/// payments are placed in the SEV_T frame.
pub const ZERO_FLOOR_OFFSET: f64 = 25.0;

/// Outcome channel an index is computed for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Channel {
    /// Plaintiff win probability among verdicts.
    ProbP,
    /// Settlement probability among all cases.
    ProbS,
    /// Verdict award among plaintiff wins.
    SevP,
    /// Settlement amount among settlements.
    SevS,
    /// Total payment among all cases.
    SevT,
}

impl Channel {
    pub const ALL: [Channel; 5] = [
        Channel::ProbP,
        Channel::ProbS,
        Channel::SevP,
        Channel::SevS,
        Channel::SevT,
    ];

    pub fn is_probability(self) -> bool {
        matches!(self, Channel::ProbP | Channel::ProbS)
    }

    pub fn is_severity(self) -> bool {
        !self.is_probability()
    }

    /// Channels that are only meaningful when settlements exist in the data.
    pub fn needs_settlements(self) -> bool {
        matches!(self, Channel::ProbS | Channel::SevS | Channel::SevT)
    }

    /// Default quantile level for severity channels.
    pub fn default_tau(self) -> Option<f64> {
        match self {
            Channel::SevP | Channel::SevS => Some(0.5),
            Channel::SevT => Some(0.75),
            _ => None,
        }
    }

    /// Default (upper, lower) quantile pair for the differential index.
    pub fn default_tau_pair(self) -> Option<(f64, f64)> {
        match self {
            Channel::SevP | Channel::SevS => Some((0.9, 0.5)),
            Channel::SevT => Some((0.95, 0.75)),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::ProbP => "PROB_P",
            Channel::ProbS => "PROB_S",
            Channel::SevP => "SEV_P",
            Channel::SevS => "SEV_S",
            Channel::SevT => "SEV_T",
        }
    }

    fn eligible(self, case: &CaseRecord) -> bool {
        match self {
            Channel::ProbP => case.outcome.is_verdict(),
            Channel::ProbS | Channel::SevT => true,
            Channel::SevP => case.outcome == Outcome::P,
            Channel::SevS => case.outcome == Outcome::S,
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Channel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        Channel::ALL
            .into_iter()
            .find(|c| c.as_str() == norm)
            .ok_or_else(|| format!("unknown channel {s:?}"))
    }
}

/// Rows left out of a frame, by reason.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropCounts {
    /// Severity rows without an amount.
    pub missing_response: usize,
    /// P/S severity rows with amount <= 0.
    pub nonpositive_amount: usize,
    /// Covariate cells imputed as 0.
    pub imputed_covariates: usize,
}

/// Numeric design for one channel and specification.
///
/// `design` is row-major with `columns.len()` entries per row. `case_index`
/// maps each row back to its position in the case list the frame was built
/// from, which is how bootstrap case weights reach the rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFrame {
    pub channel: Channel,
    pub columns: Vec<String>,
    pub responses: Vec<f64>,
    pub design: Vec<f64>,
    pub years: Vec<i32>,
    pub weights: Vec<f64>,
    pub case_index: Vec<usize>,
    /// SEV_T rows whose payment is zero (response holds the floor value).
    pub is_zero: Vec<bool>,
    pub dropped: DropCounts,
}

impl ModelFrame {
    pub fn n_rows(&self) -> usize {
        self.responses.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let k = self.n_cols();
        &self.design[i * k..(i + 1) * k]
    }

    /// Row weights taken from per-case weights.
    pub fn case_weighted(&self, case_weights: &[f64]) -> Vec<f64> {
        self.case_index.iter().map(|&c| case_weights[c]).collect()
    }

    /// Rows belonging to `year`, in frame order.
    pub fn rows_in_year(&self, year: i32) -> Vec<usize> {
        (0..self.n_rows()).filter(|&r| self.years[r] == year).collect()
    }

    /// Distinct years present, ascending.
    pub fn distinct_years(&self) -> Vec<i32> {
        let mut y = self.years.clone();
        y.sort_unstable();
        y.dedup();
        y
    }

    /// Weighted share of zero-payment rows per year (SEV_T only; empty otherwise).
    pub fn zero_mass_by_year(&self, weights: &[f64]) -> BTreeMap<i32, f64> {
        let mut acc: BTreeMap<i32, (f64, f64)> = BTreeMap::new();
        if self.channel != Channel::SevT {
            return BTreeMap::new();
        }
        for r in 0..self.n_rows() {
            let e = acc.entry(self.years[r]).or_default();
            e.1 += weights[r];
            if self.is_zero[r] {
                e.0 += weights[r];
            }
        }
        acc.into_iter()
            .map(|(y, (z, w))| (y, if w > 0.0 { z / w } else { 0.0 }))
            .collect()
    }
}

pub fn build_model_frame(
    cases: &[CaseRecord],
    spec: &CovariateSpec,
    channel: Channel,
    years: RangeInclusive<i32>,
) -> Result<ModelFrame> {
    build_model_frame_indexed(cases, None, spec, channel, years)
}

/// Builds a frame from `cases[i]` for `i` in `subset` (all cases when `None`).
pub fn build_model_frame_indexed(
    cases: &[CaseRecord],
    subset: Option<&[usize]>,
    spec: &CovariateSpec,
    channel: Channel,
    years: RangeInclusive<i32>,
) -> Result<ModelFrame> {
    if years.is_empty() {
        return Err(Error::InvalidInput(format!(
            "empty year range {}..={}",
            years.start(),
            years.end()
        )));
    }
    let k = spec.columns.len();
    let mut frame = ModelFrame {
        channel,
        columns: spec.columns.clone(),
        responses: Vec::new(),
        design: Vec::new(),
        years: Vec::new(),
        weights: Vec::new(),
        case_index: Vec::new(),
        is_zero: Vec::new(),
        dropped: DropCounts::default(),
    };

    let all: Vec<usize>;
    let subset = match subset {
        Some(s) => s,
        None => {
            all = (0..cases.len()).collect();
            &all
        }
    };

    let mut zero_rows = Vec::new();
    for &ci in subset {
        let case = &cases[ci];
        if !years.contains(&case.year) || !channel.eligible(case) {
            continue;
        }
        let (response, zero) = match channel {
            Channel::ProbP => (f64::from(case.outcome == Outcome::P), false),
            Channel::ProbS => (f64::from(case.outcome == Outcome::S), false),
            Channel::SevP | Channel::SevS | Channel::SevT => match case.amount_real {
                None => {
                    frame.dropped.missing_response += 1;
                    continue;
                }
                Some(a) if a > 0.0 => (a.ln(), false),
                Some(_) if channel == Channel::SevT => (f64::NAN, true),
                Some(_) => {
                    frame.dropped.nonpositive_amount += 1;
                    continue;
                }
            },
        };
        for col in &spec.columns {
            match case.covariate(col) {
                Some(v) => frame.design.push(v),
                None => {
                    frame.dropped.imputed_covariates += 1;
                    frame.design.push(0.0);
                }
            }
        }
        if zero {
            zero_rows.push(frame.responses.len());
        }
        frame.responses.push(response);
        frame.years.push(case.year);
        frame.weights.push(1.0);
        frame.case_index.push(ci);
        frame.is_zero.push(zero);
    }
    debug_assert_eq!(frame.design.len(), frame.responses.len() * k);

    if frame.responses.is_empty() {
        return Err(Error::EmptyFrame {
            channel,
            from: *years.start(),
            to: *years.end(),
        });
    }
    if !zero_rows.is_empty() {
        let min_log = frame
            .responses
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(f64::INFINITY, f64::min);
        let floor = if min_log.is_finite() { min_log - ZERO_FLOOR_OFFSET } else { -ZERO_FLOOR_OFFSET };
        for r in zero_rows {
            frame.responses[r] = floor;
        }
    }
    Ok(frame)
}
