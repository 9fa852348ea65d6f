//! Random-weighted bootstrap.
//!
//! Every replicate draws one weight per case and refits every window of a
//! pipeline with those weights. A case keeps the same weight across years,
//! windows and channels of a replicate. Draws come from ChaCha20 with the
//! replicate index as stream number, so results do not depend on the order in
//! which replicates are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::index::{csii_with_gaps, dsii, Band, BandInfo, ChannelPipeline, DifferentialSeries, IndexSeries};
use crate::window::FitWarning;
use crate::{Error, Result};

/// Share of failed replicates above which a band is flagged unreliable.
pub const MAX_FAILED_SHARE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum WeightLaw {
    /// Standard exponential: mean 1, variance 1.
    Exp1,
    /// All weights 1. Every replicate equals the point estimate.
    Unit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub weight_law: WeightLaw,
    pub seed: u64,
    /// Normal critical value for the bands.
    pub z: f64,
    /// Use 2.5% / 97.5% replicate percentiles instead of `point +- z se`.
    pub percentile: bool,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replicates: 500,
            weight_law: WeightLaw::Exp1,
            seed: 20240601,
            z: 1.96,
            percentile: false,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(Error::InvalidInput(format!("{} replicates; at least 2 needed", self.replicates)));
        }
        if !(self.z > 0.0) {
            return Err(Error::InvalidInput(format!("critical value {} is not positive", self.z)));
        }
        Ok(())
    }
}

/// Case weights for one replicate.
pub fn draw_weights(n: usize, law: WeightLaw, seed: u64, replicate: u64) -> Vec<f64> {
    match law {
        WeightLaw::Unit => vec![1.0; n],
        WeightLaw::Exp1 => {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(replicate);
            (0..n).map(|_| Exp1.sample(&mut rng)).collect()
        }
    }
}

/// Runs `f` once per replicate, in parallel, and returns results in replicate order.
pub fn run_replicates<F>(n_cases: usize, cfg: &BootstrapConfig, f: F) -> Vec<Result<Vec<Option<f64>>>>
where
    F: Fn(&[f64]) -> Result<Vec<Option<f64>>> + Sync,
{
    (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|b| f(&draw_weights(n_cases, cfg.weight_law, cfg.seed, b)))
        .collect()
}

/// Sample standard deviation (n - 1), accumulated in sorted order.
fn sorted_sd(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    if n < 2 {
        return None;
    }
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let ss: f64 = sorted.iter().map(|v| (v - mean) * (v - mean)).sum();
    Some((ss / (n - 1) as f64).sqrt())
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Standard errors and intervals for each statistic from replicate vectors.
/// Failed replicates are logged and excluded.
pub fn band_from_replicates(
    point: &[Option<f64>],
    reps: &[Result<Vec<Option<f64>>>],
    cfg: &BootstrapConfig,
) -> (Band, BandInfo) {
    let mut failed = 0;
    for (b, r) in reps.iter().enumerate() {
        if let Err(e) = r {
            failed += 1;
            log::warn!("bootstrap replicate {b} dropped: {e}");
        }
    }
    let ok: Vec<&Vec<Option<f64>>> = reps.iter().filter_map(|r| r.as_ref().ok()).collect();
    let mut band = Band::default();
    for (k, p) in point.iter().enumerate() {
        let mut vals: Vec<f64> = ok.iter().filter_map(|r| r.get(k).copied().flatten()).collect();
        vals.sort_by(f64::total_cmp);
        let se = p.and(sorted_sd(&vals));
        let (lo, hi) = match (p, se) {
            (Some(p), Some(se)) if !cfg.percentile => (Some(p - cfg.z * se), Some(p + cfg.z * se)),
            (Some(_), Some(_)) => (Some(percentile(&vals, 0.025)), Some(percentile(&vals, 0.975))),
            _ => (None, None),
        };
        band.se.push(se);
        band.lo.push(lo);
        band.hi.push(hi);
    }
    let info = BandInfo {
        replicates: reps.len(),
        failed,
        unreliable: failed as f64 > MAX_FAILED_SHARE * reps.len() as f64,
        seed: cfg.seed,
        z: cfg.z,
        percentile: cfg.percentile,
    };
    if info.unreliable {
        log::warn!("{failed} of {} bootstrap replicates failed; band marked unreliable", reps.len());
    }
    (band, info)
}

pub type ReplicateRows = Vec<Option<Vec<Option<f64>>>>;

/// Replicate ASIR and CSII paths; `None` marks a failed replicate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateMatrix {
    pub years: Vec<i32>,
    pub asir: ReplicateRows,
    pub csii: ReplicateRows,
}

fn split(reps: &[Result<Vec<Option<f64>>>], m: usize) -> (ReplicateRows, ReplicateRows) {
    reps.iter()
        .map(|r| match r {
            Ok(v) => (Some(v[..m].to_vec()), Some(v[m..].to_vec())),
            Err(_) => (None, None),
        })
        .unzip()
}

fn replicate_failure(est: &crate::index::Estimate) -> Option<String> {
    est.fits.iter().flatten().find_map(|f| {
        f.warnings
            .iter()
            .find(|w| matches!(w, FitWarning::Separation | FitWarning::NonConvergence))
            .map(|w| format!("year {}: {w:?}", f.year))
    })
}

/// Point series with bootstrap bands for ASIR and CSII attached.
pub fn bootstrap_series(pipeline: &ChannelPipeline, cfg: &BootstrapConfig) -> Result<(IndexSeries, ReplicateMatrix)> {
    cfg.validate()?;
    let point = pipeline.estimate(None, None)?;
    let mut series = pipeline.series_from(&point)?;
    let m = series.years.len();
    let t0 = pipeline.t0;
    let reps = run_replicates(pipeline.n_cases, cfg, |w| {
        let est = pipeline.estimate(Some(w), Some(&point))?;
        if let Some(reason) = replicate_failure(&est) {
            return Err(Error::Solver(reason));
        }
        let mut v = est.asir.clone();
        v.extend(csii_with_gaps(&est.asir, t0)?);
        Ok(v)
    });
    let mut stacked = series.asir.clone();
    stacked.extend(series.csii.iter().copied());
    let (band, info) = band_from_replicates(&stacked, &reps, cfg);
    let cut = |v: &[Option<f64>], a: usize, b: usize| v[a..b].to_vec();
    series.asir_band = Some(Band {
        se: cut(&band.se, 0, m),
        lo: cut(&band.lo, 0, m),
        hi: cut(&band.hi, 0, m),
    });
    series.csii_band = Some(Band {
        se: cut(&band.se, m, 2 * m),
        lo: cut(&band.lo, m, 2 * m),
        hi: cut(&band.hi, m, 2 * m),
    });
    series.bootstrap = Some(info);
    let (asir, csii) = split(&reps, m);
    Ok((
        series,
        ReplicateMatrix {
            years: pipeline.years(),
            asir,
            csii,
        },
    ))
}

/// Differential series for two quantile pipelines, each replicate reusing
/// one weight vector for both levels.
pub fn bootstrap_differential(
    hi: &ChannelPipeline,
    lo: &ChannelPipeline,
    cfg: Option<&BootstrapConfig>,
) -> Result<DifferentialSeries> {
    let point_hi = hi.estimate(None, None)?;
    let point_lo = lo.estimate(None, None)?;
    let mut diff = DifferentialSeries::from_pair(&hi.series_from(&point_hi)?, &lo.series_from(&point_lo)?)?;
    let Some(cfg) = cfg else { return Ok(diff) };
    cfg.validate()?;
    let m = diff.years.len();
    let t0 = diff.base_year;
    let reps = run_replicates(hi.n_cases, cfg, |w| {
        let a = hi.estimate(Some(w), Some(&point_hi))?;
        let b = lo.estimate(Some(w), Some(&point_lo))?;
        if let Some(reason) = replicate_failure(&a).or_else(|| replicate_failure(&b)) {
            return Err(Error::Solver(reason));
        }
        let d: Vec<Option<f64>> = a.asir.iter().zip(&b.asir).map(|(x, y)| Some((*x)? - (*y)?)).collect();
        let (chain, _) = dsii(&d, t0);
        let mut v = d;
        v.extend(chain);
        Ok(v)
    });
    let mut stacked = diff.dsir.clone();
    stacked.extend(diff.dsii.iter().copied());
    let (band, info) = band_from_replicates(&stacked, &reps, cfg);
    diff.dsir_band = Some(Band {
        se: band.se[..m].to_vec(),
        lo: band.lo[..m].to_vec(),
        hi: band.hi[..m].to_vec(),
    });
    diff.dsii_band = Some(Band {
        se: band.se[m..].to_vec(),
        lo: band.lo[m..].to_vec(),
        hi: band.hi[m..].to_vec(),
    });
    diff.bootstrap = Some(info);
    Ok(diff)
}
