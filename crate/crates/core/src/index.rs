//! Annual rates (ASIR), chained indices (CSII), differential indices and the
//! pooled cross-sectional effect report.

use serde::{Deserialize, Serialize};

use crate::bootstrap::{self, BootstrapConfig};
use crate::data_model::{
    build_model_frame_indexed, stratum_indices, CaseRecord, Channel, CovariateSpec, ModelFrame, SpecMode,
    Stratum,
};
use crate::glm::{self, LogisticWindowFit};
use crate::quantreg::{self, QuantileWindowFit};
use crate::window::{FitWarning, WindowPlan};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Weighted mean ratio of fitted probabilities at `t + 1` and `t` over the
/// year-`t` rows of `frame`, minus one. `weights` is per frame row.
pub fn asir_prob(fit: &LogisticWindowFit, frame: &ModelFrame, weights: Option<&[f64]>) -> Result<f64> {
    let (a0, a1) = (fit.intercept(fit.t)?, fit.intercept(fit.t + 1)?);
    let (mut num, mut den) = (0.0, 0.0);
    for r in 0..frame.n_rows() {
        if frame.years[r] != fit.t {
            continue;
        }
        let w = weights.map_or(1.0, |w| w[r]);
        let xb: f64 = frame.row(r).iter().zip(&fit.slopes).map(|(a, b)| a * b).sum();
        num += w * glm::sigmoid(a1 + xb);
        den += w * glm::sigmoid(a0 + xb);
    }
    if den <= 0.0 {
        return Err(Error::EmptyYear { year: fit.t });
    }
    Ok(num / den - 1.0)
}

/// Geometric-mean VaR growth from `t` to `t + 1` over the year-`t` rows.
///
/// Slopes are shared inside a window, so the covariate terms cancel and the
/// result equals [`asir_amount_intercepts`] up to rounding.
pub fn asir_amount(fit: &QuantileWindowFit, frame: &ModelFrame, weights: Option<&[f64]>) -> Result<f64> {
    let (g0, g1) = (fit.intercept(fit.t)?, fit.intercept(fit.t + 1)?);
    let (mut acc, mut wsum) = (0.0, 0.0);
    for r in 0..frame.n_rows() {
        if frame.years[r] != fit.t {
            continue;
        }
        let w = weights.map_or(1.0, |w| w[r]);
        let xb: f64 = frame.row(r).iter().zip(&fit.slopes).map(|(a, b)| a * b).sum();
        acc += w * ((g1 + xb) - (g0 + xb));
        wsum += w;
    }
    if wsum <= 0.0 {
        return Err(Error::EmptyYear { year: fit.t });
    }
    let mix = (acc / wsum).exp() - 1.0;
    let direct = asir_amount_intercepts(fit)?;
    if (mix - direct).abs() > 1e-10 * (1.0 + direct.abs()) {
        log::warn!("year {}: case-mix ASIR {mix} differs from intercept form {direct}", fit.t + 1);
    }
    Ok(mix)
}

/// `exp(gamma_{t+1} - gamma_t) - 1`.
pub fn asir_amount_intercepts(fit: &QuantileWindowFit) -> Result<f64> {
    Ok((fit.intercept(fit.t + 1)? - fit.intercept(fit.t)?).exp() - 1.0)
}

/// Chains rates into an index with base 1 at `t0`; `asir[j]` is the rate for
/// year `t0 + 1 + j`.
pub fn csii(asir: &[f64], t0: i32) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(asir.len());
    let mut level = 1.0;
    for (j, &rate) in asir.iter().enumerate() {
        if !(rate > -1.0) {
            return Err(Error::ChainBreak {
                year: t0 + 1 + j as i32,
                rate,
            });
        }
        level *= 1.0 + rate;
        out.push(level);
    }
    Ok(out)
}

/// Like [`csii`] but a missing rate leaves the index unknown from that year on.
pub fn csii_with_gaps(asir: &[Option<f64>], t0: i32) -> Result<Vec<Option<f64>>> {
    let mut out = Vec::with_capacity(asir.len());
    let mut level = Some(1.0);
    for (j, rate) in asir.iter().enumerate() {
        level = match (level, rate) {
            (Some(l), Some(r)) if *r > -1.0 => Some(l * (1.0 + r)),
            (Some(_), Some(r)) => {
                return Err(Error::ChainBreak {
                    year: t0 + 1 + j as i32,
                    rate: *r,
                })
            }
            _ => None,
        };
        out.push(level);
    }
    Ok(out)
}

pub fn dsir(asir_hi: f64, asir_lo: f64) -> f64 {
    asir_hi - asir_lo
}

/// Chains differential rates. A factor `1 + dsir <= 0` breaks the chain: the
/// index is unknown from that year on and the year is returned.
pub fn dsii(dsir: &[Option<f64>], t0: i32) -> (Vec<Option<f64>>, Option<i32>) {
    let mut out = Vec::with_capacity(dsir.len());
    let mut level = Some(1.0);
    let mut broken = None;
    for (j, d) in dsir.iter().enumerate() {
        level = match (level, d) {
            (Some(l), Some(d)) if *d > -1.0 => Some(l * (1.0 + d)),
            (Some(_), Some(_)) => {
                broken = Some(t0 + 1 + j as i32);
                None
            }
            _ => None,
        };
        out.push(level);
    }
    (out, broken)
}

/// Uncertainty attached to a series by the bootstrap.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub se: Vec<Option<f64>>,
    pub lo: Vec<Option<f64>>,
    pub hi: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandInfo {
    pub replicates: usize,
    pub failed: usize,
    /// More than 5% of replicates failed.
    pub unreliable: bool,
    pub seed: u64,
    pub z: f64,
    pub percentile: bool,
}

/// Diagnostics of the window fit behind one annual rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub year: i32,
    pub rows: usize,
    pub converged: bool,
    pub iterations: usize,
    pub warnings: Vec<FitWarning>,
    pub dropped_columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSeries {
    pub schema_version: u32,
    pub channel: Channel,
    pub spec_mode: SpecMode,
    pub stratum: String,
    pub tau: Option<f64>,
    pub window_len: usize,
    pub base_year: i32,
    pub covariates: Vec<String>,
    /// Years `t0 + 1 ..= T`.
    pub years: Vec<i32>,
    pub asir: Vec<Option<f64>>,
    /// Base 1 at `t0`.
    pub csii: Vec<Option<f64>>,
    pub asir_band: Option<Band>,
    pub csii_band: Option<Band>,
    pub bootstrap: Option<BandInfo>,
    pub fits: Vec<FitSummary>,
}

impl IndexSeries {
    /// Series label used in file names and long-format output.
    pub fn label(&self) -> String {
        let tau = self.tau.map_or_else(|| "NA".to_string(), |t| format!("{t}"));
        format!("{}_{}_{}_{}", self.channel, self.spec_mode, self.stratum, tau)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferentialSeries {
    pub schema_version: u32,
    pub channel: Channel,
    pub spec_mode: SpecMode,
    pub stratum: String,
    pub tau_hi: f64,
    pub tau_lo: f64,
    pub base_year: i32,
    pub years: Vec<i32>,
    pub dsir: Vec<Option<f64>>,
    pub dsii: Vec<Option<f64>>,
    /// First year whose factor `1 + dsir` is not positive.
    pub chain_break: Option<i32>,
    pub dsir_band: Option<Band>,
    pub dsii_band: Option<Band>,
    pub bootstrap: Option<BandInfo>,
}

impl DifferentialSeries {
    pub fn from_pair(hi: &IndexSeries, lo: &IndexSeries) -> Result<Self> {
        let (Some(tau_hi), Some(tau_lo)) = (hi.tau, lo.tau) else {
            return Err(Error::InvalidInput("differential index needs two quantile series".into()));
        };
        if tau_hi < tau_lo || hi.years != lo.years || hi.channel != lo.channel {
            return Err(Error::InvalidInput(
                "differential index needs tau_hi >= tau_lo on matching series".into(),
            ));
        }
        let d: Vec<Option<f64>> = hi
            .asir
            .iter()
            .zip(&lo.asir)
            .map(|(a, b)| Some(dsir((*a)?, (*b)?)))
            .collect();
        let (dsii, chain_break) = dsii(&d, hi.base_year);
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            channel: hi.channel,
            spec_mode: hi.spec_mode,
            stratum: hi.stratum.clone(),
            tau_hi,
            tau_lo,
            base_year: hi.base_year,
            years: hi.years.clone(),
            dsir: d,
            dsii,
            chain_break,
            dsir_band: None,
            dsii_band: None,
            bootstrap: None,
        })
    }
}

/// One index computation: channel, covariates, stratum, quantile and horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub channel: Channel,
    pub spec_mode: SpecMode,
    pub stratum: Stratum,
    /// Quantile level; required for severity channels, ignored otherwise.
    pub tau: Option<f64>,
    pub window_len: usize,
    /// Base year `t0`; defaults to the first data year.
    pub t0: Option<i32>,
    /// Last index year `T`; defaults to the last data year.
    pub t_end: Option<i32>,
}

impl RunSpec {
    pub fn new(channel: Channel, spec_mode: SpecMode) -> Self {
        Self {
            channel,
            spec_mode,
            stratum: Stratum::all(),
            tau: channel.default_tau(),
            window_len: 5,
            t0: None,
            t_end: None,
        }
    }
}

/// Point fits and weighted refits for one [`RunSpec`].
///
/// Frames and windows are built once; [`ChannelPipeline::estimate`] then only
/// refits with new case weights, which is what the bootstrap needs.
#[derive(Debug, Clone)]
pub struct ChannelPipeline {
    pub spec: RunSpec,
    pub covariates: CovariateSpec,
    pub frame: ModelFrame,
    pub t0: i32,
    pub t_end: i32,
    /// Number of cases the weights are indexed by.
    pub n_cases: usize,
    /// Window for each target year `t0 ..= T - 1`; `None` marks a gap.
    plans: Vec<Option<WindowPlan>>,
}

/// Target year, case indices and row weights of one window fit.
pub type WindowWeights = (i32, Vec<usize>, Vec<f64>);

/// Rates from one pass over the horizon.
#[derive(Debug, Clone)]
pub struct Estimate {
    pub asir: Vec<Option<f64>>,
    pub fits: Vec<Option<FitSummary>>,
    /// Quantile bases per target year, for warm starts.
    pub bases: Vec<Option<Vec<usize>>>,
    /// Shared slopes per target year.
    pub slopes: Vec<Option<Vec<f64>>>,
}

impl ChannelPipeline {
    pub fn prepare(cases: &[CaseRecord], spec: &RunSpec) -> Result<Self> {
        if spec.window_len < 2 {
            return Err(Error::InvalidInput(format!("window length {} is below 2", spec.window_len)));
        }
        if spec.channel.is_severity() {
            match spec.tau {
                Some(t) if t > 0.0 && t < 1.0 => {}
                other => return Err(Error::InvalidInput(format!("severity channel needs tau in (0, 1), got {other:?}"))),
            }
        }
        let subset = stratum_indices(cases, &spec.stratum);
        let min_year = subset.iter().map(|&i| cases[i].year).min();
        let max_year = subset.iter().map(|&i| cases[i].year).max();
        let (Some(min_year), Some(max_year)) = (min_year, max_year) else {
            return Err(Error::InvalidInput(format!("stratum {} has no cases", spec.stratum.kind)));
        };
        let t0 = spec.t0.unwrap_or(min_year);
        let t_end = spec.t_end.unwrap_or(max_year);
        if t_end <= t0 {
            return Err(Error::HorizonTooShort { t0, t_end });
        }
        let mut available: Vec<&str> = subset
            .iter()
            .flat_map(|&i| cases[i].factual.keys().chain(cases[i].strategic.keys()))
            .map(String::as_str)
            .collect();
        available.sort_unstable();
        available.dedup();
        let covariates = CovariateSpec::new(spec.spec_mode, &available);
        let lo = t0 - spec.window_len as i32 + 1;
        let frame = build_model_frame_indexed(cases, Some(&subset), &covariates, spec.channel, lo..=t_end)?;
        let years = frame.distinct_years();
        let mut plans = Vec::new();
        for t in t0..t_end {
            if years.binary_search(&t).is_err() || years.binary_search(&(t + 1)).is_err() {
                plans.push(None);
            } else {
                plans.push(Some(WindowPlan::new(&frame, t, spec.window_len)?));
            }
        }
        Ok(Self {
            spec: spec.clone(),
            covariates,
            frame,
            t0,
            t_end,
            n_cases: cases.len(),
            plans,
        })
    }

    pub fn years(&self) -> Vec<i32> {
        (self.t0 + 1..=self.t_end).collect()
    }

    /// Fits every window with per-case `case_weights` (unit weights when
    /// `None`) and returns the annual rates. `warm` holds quantile bases from
    /// an earlier estimate.
    pub fn estimate(&self, case_weights: Option<&[f64]>, warm: Option<&Estimate>) -> Result<Estimate> {
        let frame_w = self.frame_weights(case_weights)?;
        let weights = case_weights.map(|_| frame_w.as_slice());
        let n = self.plans.len();
        let mut est = Estimate {
            asir: vec![None; n],
            fits: vec![None; n],
            bases: vec![None; n],
            slopes: vec![None; n],
        };
        for (j, plan) in self.plans.iter().enumerate() {
            let Some(plan) = plan else { continue };
            let t = plan.t;
            let w = plan.gather(&frame_w);
            let rows = plan.counts()[plan.years.binary_search(&t).unwrap()];
            if self.spec.channel.is_probability() {
                let core = glm::fit_plan(plan, &w);
                let fit = glm::assemble(plan, &self.frame, core);
                est.asir[j] = Some(asir_prob(&fit, &self.frame, weights).map_err(|e| e.in_year(t + 1))?);
                est.fits[j] = Some(FitSummary {
                    year: t + 1,
                    rows,
                    converged: fit.converged,
                    iterations: fit.iterations,
                    warnings: fit.warnings,
                    dropped_columns: fit.dropped_columns,
                });
                est.slopes[j] = Some(fit.slopes);
            } else {
                let tau = self.spec.tau.expect("checked in prepare");
                quantreg::check_window(&self.frame, plan, &w, tau).map_err(|e| e.in_year(t + 1))?;
                let warm_basis = warm.and_then(|e| e.bases[j].as_deref()).map(|b| {
                    b.iter()
                        .filter_map(|r| plan.rows.binary_search(r).ok())
                        .collect::<Vec<_>>()
                });
                let core = quantreg::fit_plan(plan, &w, tau, warm_basis.as_deref()).map_err(|e| e.in_year(t + 1))?;
                let fit = quantreg::assemble(plan, &self.frame, &w, tau, core);
                est.asir[j] = Some(asir_amount(&fit, &self.frame, weights).map_err(|e| e.in_year(t + 1))?);
                est.fits[j] = Some(FitSummary {
                    year: t + 1,
                    rows,
                    converged: fit.converged,
                    iterations: fit.pivots,
                    warnings: fit.warnings,
                    dropped_columns: fit.dropped_columns,
                });
                est.bases[j] = Some(fit.basis);
                est.slopes[j] = Some(fit.slopes);
            }
        }
        Ok(est)
    }

    fn frame_weights(&self, case_weights: Option<&[f64]>) -> Result<Vec<f64>> {
        match case_weights {
            Some(w) if w.len() != self.n_cases => Err(Error::DimensionMismatch {
                expected: self.n_cases,
                got: w.len(),
            }),
            Some(w) => Ok(self.frame.case_weighted(w)),
            None => Ok(self.frame.weights.clone()),
        }
    }

    /// For each target year, the case index and weight of every row the window
    /// fit receives. Same weighting path as [`ChannelPipeline::estimate`].
    pub fn window_weights(&self, case_weights: Option<&[f64]>) -> Result<Vec<Option<WindowWeights>>> {
        let frame_w = self.frame_weights(case_weights)?;
        Ok(self
            .plans
            .iter()
            .map(|p| {
                p.as_ref().map(|p| {
                    let cases = p.rows.iter().map(|&r| self.frame.case_index[r]).collect();
                    (p.t, cases, p.gather(&frame_w))
                })
            })
            .collect())
    }

    pub fn series_from(&self, est: &Estimate) -> Result<IndexSeries> {
        let csii = csii_with_gaps(&est.asir, self.t0)?;
        Ok(IndexSeries {
            schema_version: SCHEMA_VERSION,
            channel: self.spec.channel,
            spec_mode: self.spec.spec_mode,
            stratum: self.spec.stratum.kind.to_string(),
            tau: self.spec.tau.filter(|_| self.spec.channel.is_severity()),
            window_len: self.spec.window_len,
            base_year: self.t0,
            covariates: self.covariates.columns.clone(),
            years: self.years(),
            asir: est.asir.clone(),
            csii,
            asir_band: None,
            csii_band: None,
            bootstrap: None,
            fits: est.fits.iter().flatten().cloned().collect(),
        })
    }

    pub fn run(&self) -> Result<IndexSeries> {
        self.series_from(&self.estimate(None, None)?)
    }
}

/// Filters the stratum, fits every window in `[t0, T - 1]` and chains the rates.
#[allow(clippy::too_many_arguments)]
pub fn run_channel(
    cases: &[CaseRecord],
    stratum: &Stratum,
    spec_mode: SpecMode,
    channel: Channel,
    tau: Option<f64>,
    window_len: usize,
    t0: Option<i32>,
    t_end: Option<i32>,
) -> Result<IndexSeries> {
    let spec = RunSpec {
        channel,
        spec_mode,
        stratum: stratum.clone(),
        tau,
        window_len,
        t0,
        t_end,
    };
    ChannelPipeline::prepare(cases, &spec)?.run()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectRow {
    pub covariate: String,
    /// Collinear in the pooled design; coefficient fixed at 0.
    pub dropped: bool,
    pub coefficient: f64,
    /// Odds ratio (probability channels) or relative median (severity).
    pub ratio: f64,
    pub se: Option<f64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectsTable {
    pub schema_version: u32,
    pub channel: Channel,
    pub tau: Option<f64>,
    pub rows_used: usize,
    pub effects: Vec<EffectRow>,
    pub bootstrap: Option<BandInfo>,
}

/// Pooled full-sample fit with one intercept per year and all factual and
/// strategic covariates. Ratios are exponentiated coefficients; CIs come from
/// the bootstrap when `boot` is given.
pub fn cross_sectional_effects(
    cases: &[CaseRecord],
    channel: Channel,
    boot: Option<&BootstrapConfig>,
) -> Result<EffectsTable> {
    if channel == Channel::SevT {
        return Err(Error::InvalidInput("effects are reported for PROB_P, PROB_S, SEV_P and SEV_S".into()));
    }
    let mut available: Vec<&str> = cases
        .iter()
        .flat_map(|c| c.factual.keys().chain(c.strategic.keys()))
        .map(String::as_str)
        .collect();
    available.sort_unstable();
    available.dedup();
    let covariates = CovariateSpec::new(SpecMode::FactualPlusStrategic, &available);
    let (Some(lo), Some(hi)) = (cases.iter().map(|c| c.year).min(), cases.iter().map(|c| c.year).max()) else {
        return Err(Error::InvalidInput("no cases".into()));
    };
    let frame = build_model_frame_indexed(cases, None, &covariates, channel, lo..=hi)?;
    // A window ending at the last year and long enough to reach the first.
    let t = hi - 1;
    let plan = WindowPlan::new(&frame, t, ((hi - lo) as usize).max(2))?;
    let tau = channel.default_tau();
    let fit_coefs = |frame_w: &[f64], warm: Option<&[usize]>| -> Result<(Vec<f64>, Option<Vec<usize>>)> {
        let w = plan.gather(frame_w);
        match tau {
            None => {
                let core = glm::fit_plan(&plan, &w);
                Ok((plan.expand_slopes(&core.theta[plan.n_groups()..]), None))
            }
            Some(tau) => {
                if plan.n_rows() < plan.n_params() {
                    return Err(Error::InsufficientData { year: t, rows: plan.n_rows(), params: plan.n_params() });
                }
                let core = quantreg::fit_plan(&plan, &w, tau, warm)?;
                let basis = core.basis.clone();
                Ok((plan.expand_slopes(&core.theta[plan.n_groups()..]), Some(basis)))
            }
        }
    };
    let (coef, basis) = fit_coefs(&frame.weights, None)?;
    let mut effects: Vec<EffectRow> = covariates
        .columns
        .iter()
        .zip(&coef)
        .enumerate()
        .map(|(j, (c, b))| EffectRow {
            covariate: c.clone(),
            dropped: plan.dropped.contains(&j),
            coefficient: *b,
            ratio: b.exp(),
            se: None,
            ci_lo: None,
            ci_hi: None,
        })
        .collect();
    let mut info = None;
    if let Some(cfg) = boot {
        let reps = bootstrap::run_replicates(cases.len(), cfg, |w| {
            let fw = frame.case_weighted(w);
            fit_coefs(&fw, basis.as_deref()).map(|(c, _)| c.into_iter().map(Some).collect())
        });
        let (band, band_info) = bootstrap::band_from_replicates(
            &coef.iter().copied().map(Some).collect::<Vec<_>>(),
            &reps,
            cfg,
        );
        for (k, row) in effects.iter_mut().enumerate().filter(|(_, r)| !r.dropped) {
            row.se = band.se[k];
            row.ci_lo = band.lo[k].map(f64::exp);
            row.ci_hi = band.hi[k].map(f64::exp);
        }
        info = Some(band_info);
    }
    Ok(EffectsTable {
        schema_version: SCHEMA_VERSION,
        channel,
        tau,
        rows_used: plan.n_rows(),
        effects,
        bootstrap: info,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn logistic_fit(t: i32, a0: f64, a1: f64, slopes: Vec<f64>) -> LogisticWindowFit {
        LogisticWindowFit {
            t,
            window: (t - 4, t + 1),
            intercepts: BTreeMap::from([(t, a0), (t + 1, a1)]),
            slopes,
            dropped_columns: vec![],
            loglik: 0.0,
            iterations: 0,
            converged: true,
            gradient_norm: 0.0,
            warnings: vec![],
        }
    }

    fn quantile_fit(t: i32, g0: f64, g1: f64, slopes: Vec<f64>) -> QuantileWindowFit {
        QuantileWindowFit {
            t,
            window: (t - 4, t + 1),
            tau: 0.5,
            intercepts: BTreeMap::from([(t, g0), (t + 1, g1)]),
            slopes,
            dropped_columns: vec![],
            objective: 0.0,
            negative_fraction: 0.0,
            converged: true,
            pivots: 0,
            warnings: vec![],
            basis: vec![],
        }
    }

    fn frame_t(xs: &[f64], t: i32) -> ModelFrame {
        let n = xs.len();
        ModelFrame {
            channel: Channel::ProbP,
            columns: vec!["FACTUAL.X".into()],
            responses: vec![0.0; n],
            design: xs.to_vec(),
            years: vec![t; n],
            weights: vec![1.0; n],
            case_index: (0..n).collect(),
            is_zero: vec![false; n],
            dropped: Default::default(),
        }
    }

    #[test]
    fn equal_intercepts_give_zero_rates() {
        let f = frame_t(&[0.1, -2.0, 3.0], 5);
        assert_eq!(asir_prob(&logistic_fit(5, 0.3, 0.3, vec![0.7]), &f, None).unwrap(), 0.0);
        assert_eq!(asir_amount(&quantile_fit(5, 0.3, 0.3, vec![0.7]), &f, None).unwrap(), 0.0);
    }

    #[test]
    fn prob_rate_single_case() {
        let f = frame_t(&[0.0], 1);
        let fit = logistic_fit(1, 0.0, 1.5f64.ln(), vec![0.0]);
        assert!((asir_prob(&fit, &f, None).unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn amount_rate_doubles() {
        let f = frame_t(&[0.4, 1.0, -3.0], 1);
        let fit = quantile_fit(1, 0.2, 0.2 + 2f64.ln(), vec![1.3]);
        assert!((asir_amount(&fit, &f, None).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_next_intercept_is_an_error() {
        let f = frame_t(&[0.0], 1);
        let mut fit = logistic_fit(1, 0.0, 0.0, vec![0.0]);
        fit.intercepts.remove(&2);
        assert!(matches!(asir_prob(&fit, &f, None), Err(Error::MissingIntercept { year: 2 })));
    }

    #[test]
    fn prob_rate_depends_on_case_mix() {
        let fit = logistic_fit(1, -1.0, 0.0, vec![2.0]);
        let asym = frame_t(&[-2.0, -1.5, 3.0], 1);
        let mean = frame_t(&[-0.5 / 3.0], 1);
        let a = asir_prob(&fit, &asym, None).unwrap();
        let b = asir_prob(&fit, &mean, None).unwrap();
        assert!((a - b).abs() > 1e-3, "{a} {b}");
    }

    #[test]
    fn chaining() {
        assert!(csii(&[], 0).unwrap().is_empty());
        assert_eq!(csii(&[0.0, 0.0], 0).unwrap(), [1.0, 1.0]);
        let c = csii(&[0.144, -0.048], 2009).unwrap();
        assert_eq!(((c[0] * 1000.0).round(), (c[1] * 1000.0).round()), (1144.0, 1089.0));
        let c = csii(&[0.066, 0.062], 0).unwrap();
        assert_eq!(((c[0] * 1000.0).round(), (c[1] * 1000.0).round()), (1066.0, 1132.0));
        assert!(matches!(csii(&[0.1, -1.0], 2009), Err(Error::ChainBreak { year: 2011, .. })));
    }

    #[test]
    fn gaps_propagate() {
        let c = csii_with_gaps(&[Some(0.1), None, Some(0.1)], 0).unwrap();
        assert_eq!(c[0], Some(1.1));
        assert_eq!(c[1], None);
        assert_eq!(c[2], None);
    }

    #[test]
    fn differential_arithmetic() {
        assert!((dsir(0.10, 0.04) - 0.06).abs() < 1e-15);
        let (d, brk) = dsii(&[Some(0.06), Some(0.06)], 0);
        assert!((d[1].unwrap() - 1.1236).abs() < 1e-12);
        assert_eq!(brk, None);
        let (d, brk) = dsii(&[Some(0.0), Some(0.0)], 0);
        assert_eq!(d, [Some(1.0), Some(1.0)]);
        assert_eq!(brk, None);
        let (d, brk) = dsii(&[Some(0.1), Some(-1.2), Some(0.1)], 2000);
        assert_eq!(d, [Some(1.1), None, None]);
        assert_eq!(brk, Some(2002));
    }
}
