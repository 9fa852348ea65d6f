//! Synthetic litigation data with known social inflation.
//!
//! Data years run from 0 (the base year) to `years`. In year `t` each case
//! draws a covariate `x ~ N(drift * t, sd)`, wins with probability
//! `logit^-1(alpha0 + alpha_step * t + beta * x)` and, when it wins, receives a
//! Lomax award with shape `lomax_shape` and scale
//! `lomax_scale * exp(x) * m_t`, where `m_t` chains the configured severity
//! rates. There are no settlements. Indices are reported for years 1..=years.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data_model::{CaseFlags, CaseRecord, Outcome, YearMonth};
use crate::glm::sigmoid;
use crate::{Error, Result};

/// Column holding the synthetic covariate.
pub const COVARIATE: &str = "FACTUAL.X";

/// Year-over-year severity rates of the default scenario, years 1 to 15.
pub const DEFAULT_SEVERITY_ASIR: [f64; 15] = [
    0.08, 0.08, 0.08, 0.08, -0.01, 0.0, 0.0, 0.01, 0.20, -0.15, -0.10, 0.05, 0.15, 0.20, 0.25,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    /// Number of index years after the base year.
    pub years: usize,
    pub cases_per_year: usize,
    /// Covariate mean increase per year.
    pub drift: f64,
    pub covariate_sd: f64,
    pub alpha0: f64,
    pub alpha_step: f64,
    pub beta: f64,
    pub lomax_shape: f64,
    pub lomax_scale: f64,
    /// Severity rate for each year `1..=years`.
    pub severity_asir: Vec<f64>,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            years: 15,
            cases_per_year: 5000,
            drift: 0.05,
            covariate_sd: 0.5,
            alpha0: -0.8,
            alpha_step: 0.1,
            beta: 1.0,
            lomax_shape: 5.0,
            lomax_scale: 4.0,
            severity_asir: DEFAULT_SEVERITY_ASIR.to_vec(),
            seed: 20240601,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if self.years == 0 || self.cases_per_year == 0 {
            return bad("years and cases_per_year must be positive".into());
        }
        if self.severity_asir.len() != self.years {
            return bad(format!(
                "{} severity rates for {} years",
                self.severity_asir.len(),
                self.years
            ));
        }
        if !(self.lomax_shape > 1.0) || !(self.lomax_scale > 0.0) || !(self.covariate_sd > 0.0) {
            return bad("Lomax shape must exceed 1; scale and sd must be positive".into());
        }
        if let Some(r) = self.severity_asir.iter().find(|r| !(**r > -1.0)) {
            return bad(format!("severity rate {r} would make a multiplier nonpositive"));
        }
        Ok(())
    }

    pub fn alpha(&self, t: usize) -> f64 {
        self.alpha0 + self.alpha_step * t as f64
    }

    pub fn covariate_mean(&self, t: usize) -> f64 {
        self.drift * t as f64
    }

    /// Severity multipliers `m_0 = 1, m_t = m_{t-1} (1 + rate_t)`.
    pub fn multipliers(&self) -> Vec<f64> {
        let mut m = vec![1.0];
        for r in &self.severity_asir {
            m.push(m.last().unwrap() * (1.0 + r));
        }
        m
    }
}

pub fn lomax_quantile(shape: f64, scale: f64, tau: f64) -> f64 {
    scale * ((1.0 - tau).powf(-1.0 / shape) - 1.0)
}

pub fn lomax_mean(shape: f64, scale: f64) -> f64 {
    scale / (shape - 1.0)
}

/// Generates the dataset. Each year uses its own random stream, so any year
/// can be regenerated alone.
pub fn generate(config: &SyntheticConfig) -> Result<Vec<CaseRecord>> {
    config.validate()?;
    let multipliers = config.multipliers();
    let mut cases = Vec::with_capacity((config.years + 1) * config.cases_per_year);
    for t in 0..=config.years {
        let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
        rng.set_stream(t as u64);
        let normal = Normal::new(config.covariate_mean(t), config.covariate_sd)
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        let year = t as i32;
        for i in 0..config.cases_per_year {
            let x = normal.sample(&mut rng);
            let win = rng.random::<f64>() < sigmoid(config.alpha(t) + config.beta * x);
            let u: f64 = rng.random();
            let (outcome, amount) = if win {
                let scale = config.lomax_scale * x.exp() * multipliers[t];
                (Outcome::P, lomax_quantile(config.lomax_shape, scale, u))
            } else {
                (Outcome::D, 0.0)
            };
            let mut factual = BTreeMap::new();
            factual.insert(COVARIATE.to_string(), x);
            cases.push(CaseRecord {
                case_id: format!("Y{t:02}-{i:05}"),
                year,
                outcome,
                amount_nominal: Some(amount),
                amount_month: YearMonth { year, month: 12 },
                amount_real: Some(amount),
                factual,
                strategic: BTreeMap::new(),
                state: "TX".into(),
                flags: CaseFlags::default(),
            });
        }
    }
    Ok(cases)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTruth {
    pub base_year: i32,
    pub years: Vec<i32>,
    pub asir_prob: Vec<f64>,
    pub csii_prob: Vec<f64>,
    pub asir_amt: Vec<f64>,
    pub csii_amt: Vec<f64>,
}

/// Composite Simpson integral of `f` against the `N(mean, sd)` density over
/// `mean +- 12 sd`.
fn normal_expectation(mean: f64, sd: f64, f: impl Fn(f64) -> f64) -> f64 {
    let n = 4000;
    let (a, b) = (mean - 12.0 * sd, mean + 12.0 * sd);
    let h = (b - a) / n as f64;
    let norm = 1.0 / (sd * (2.0 * std::f64::consts::PI).sqrt());
    let g = |x: f64| {
        let z = (x - mean) / sd;
        f(x) * norm * (-0.5 * z * z).exp()
    };
    let mut acc = g(a) + g(b);
    for k in 1..n {
        acc += g(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

fn chain(rates: &[f64]) -> Vec<f64> {
    rates
        .iter()
        .scan(1.0, |c, r| {
            *c *= 1.0 + r;
            Some(*c)
        })
        .collect()
}

/// Population indices implied by the configuration.
///
/// The probability rate for year `t` compares year-`t` and year-`t-1`
/// intercepts over the year-`t-1` covariate law. Lomax quantiles are linear in
/// the scale, so severity rates at every level equal the configured rates.
pub fn ground_truth(config: &SyntheticConfig) -> Result<SyntheticTruth> {
    config.validate()?;
    let mut asir_prob = Vec::with_capacity(config.years);
    for t in 1..=config.years {
        let (mean, sd) = (config.covariate_mean(t - 1), config.covariate_sd);
        let num = normal_expectation(mean, sd, |x| sigmoid(config.alpha(t) + config.beta * x));
        let den = normal_expectation(mean, sd, |x| sigmoid(config.alpha(t - 1) + config.beta * x));
        asir_prob.push(num / den - 1.0);
    }
    let asir_amt = config.severity_asir.clone();
    Ok(SyntheticTruth {
        base_year: 0,
        years: (1..=config.years as i32).collect(),
        csii_prob: chain(&asir_prob),
        csii_amt: chain(&asir_amt),
        asir_prob,
        asir_amt,
    })
}
