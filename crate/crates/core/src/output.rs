//! Serialisation of index series, differential series, effect tables and
//! replicate matrices. Functions return strings; callers decide where and
//! how to write them.

use std::fmt::Write as _;

use serde::Serialize;

use crate::bootstrap::ReplicateMatrix;
use crate::index::{Band, DifferentialSeries, EffectsTable, IndexSeries};
use crate::synthetic::SyntheticTruth;
use crate::Result;

fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v}"))
}

fn band_cell(b: Option<&Band>, f: impl Fn(&Band) -> &Vec<Option<f64>>, j: usize) -> String {
    cell(b.and_then(|b| f(b)[j]))
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// One row per index year. Rates and indices are raw (not percent, not base 100).
pub fn series_csv(s: &IndexSeries) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "year", "asir", "csii", "se_asir", "ci_lo", "ci_hi", "channel", "spec", "tau", "stratum", "se_csii",
        "csii_ci_lo", "csii_ci_hi",
    ])?;
    let tau = s.tau.map_or_else(|| "NA".to_string(), |t| t.to_string());
    let (ab, cb) = (s.asir_band.as_ref(), s.csii_band.as_ref());
    for (j, year) in s.years.iter().enumerate() {
        w.write_record([
            year.to_string(),
            cell(s.asir[j]),
            cell(s.csii[j]),
            band_cell(ab, |b| &b.se, j),
            band_cell(ab, |b| &b.lo, j),
            band_cell(ab, |b| &b.hi, j),
            s.channel.to_string(),
            s.spec_mode.to_string(),
            tau.clone(),
            s.stratum.clone(),
            band_cell(cb, |b| &b.se, j),
            band_cell(cb, |b| &b.lo, j),
            band_cell(cb, |b| &b.hi, j),
        ])?;
    }
    finish(w)
}

/// Plot-ready long format: one row per series, year, measure and bound.
/// The base year appears with CSII 1 so curves start at the base.
pub fn long_format_csv(series: &[IndexSeries]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["series", "channel", "spec", "stratum", "tau", "year", "measure", "bound", "value"])?;
    for s in series {
        let label = s.label();
        let tau = s.tau.map_or_else(|| "NA".to_string(), |t| t.to_string());
        let mut row = |year: i32, measure: &str, bound: &str, v: Option<f64>| {
            w.write_record([
                label.as_str(),
                s.channel.as_str(),
                s.spec_mode.as_str(),
                s.stratum.as_str(),
                tau.as_str(),
                &year.to_string(),
                measure,
                bound,
                &cell(v),
            ])
        };
        row(s.base_year, "csii", "point", Some(1.0))?;
        for (j, &year) in s.years.iter().enumerate() {
            for (measure, point, band) in [
                ("asir", s.asir[j], s.asir_band.as_ref()),
                ("csii", s.csii[j], s.csii_band.as_ref()),
            ] {
                row(year, measure, "point", point)?;
                if let Some(b) = band {
                    row(year, measure, "lo", b.lo[j])?;
                    row(year, measure, "hi", b.hi[j])?;
                }
            }
        }
    }
    finish(w)
}

pub fn differential_csv(d: &DifferentialSeries) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "year", "dsir", "dsii", "se_dsir", "ci_lo", "ci_hi", "se_dsii", "dsii_ci_lo", "dsii_ci_hi", "channel",
        "spec", "tau_hi", "tau_lo", "stratum",
    ])?;
    let (db, ib) = (d.dsir_band.as_ref(), d.dsii_band.as_ref());
    for (j, year) in d.years.iter().enumerate() {
        w.write_record([
            year.to_string(),
            cell(d.dsir[j]),
            cell(d.dsii[j]),
            band_cell(db, |b| &b.se, j),
            band_cell(db, |b| &b.lo, j),
            band_cell(db, |b| &b.hi, j),
            band_cell(ib, |b| &b.se, j),
            band_cell(ib, |b| &b.lo, j),
            band_cell(ib, |b| &b.hi, j),
            d.channel.to_string(),
            d.spec_mode.to_string(),
            d.tau_hi.to_string(),
            d.tau_lo.to_string(),
            d.stratum.clone(),
        ])?;
    }
    finish(w)
}

pub fn effects_csv(e: &EffectsTable) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["covariate", "coefficient", "ratio", "se", "ci_lo", "ci_hi", "dropped", "channel"])?;
    for r in &e.effects {
        w.write_record([
            r.covariate.clone(),
            r.coefficient.to_string(),
            r.ratio.to_string(),
            cell(r.se),
            cell(r.ci_lo),
            cell(r.ci_hi),
            r.dropped.to_string(),
            e.channel.to_string(),
        ])?;
    }
    finish(w)
}

/// Every replicate's ASIR and CSII per year; failed replicates have empty values.
pub fn replicates_csv(m: &ReplicateMatrix) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["replicate", "year", "asir", "csii", "failed"])?;
    for (b, (asir, csii)) in m.asir.iter().zip(&m.csii).enumerate() {
        for (j, year) in m.years.iter().enumerate() {
            let (a, c) = match (asir, csii) {
                (Some(a), Some(c)) => (a[j], c[j]),
                _ => (None, None),
            };
            w.write_record([b.to_string(), year.to_string(), cell(a), cell(c), asir.is_none().to_string()])?;
        }
    }
    finish(w)
}

/// Truth series scaled for reporting: ASIR in percent, CSII base 100.
#[derive(Debug, Clone, Serialize)]
pub struct TruthReport {
    pub base_year: i32,
    pub years: Vec<i32>,
    pub asir_prob: Vec<f64>,
    pub csii_prob: Vec<f64>,
    pub asir_amt: Vec<f64>,
    pub csii_amt: Vec<f64>,
}

impl From<&SyntheticTruth> for TruthReport {
    fn from(t: &SyntheticTruth) -> Self {
        let r = |v: &[f64]| v.iter().map(|x| (x * 1000.0).round() / 10.0).collect();
        Self {
            base_year: t.base_year,
            years: t.years.clone(),
            asir_prob: r(&t.asir_prob),
            csii_prob: r(&t.csii_prob),
            asir_amt: r(&t.asir_amt),
            csii_amt: r(&t.csii_amt),
        }
    }
}

/// Fixed-width table with ASIR in percent and CSII base 100, one column
/// pair per series, rows from the base year on.
pub fn summary_table(series: &[IndexSeries]) -> String {
    let mut years: Vec<i32> = series.iter().flat_map(|s| s.years.iter().copied()).collect();
    if let Some(b) = series.iter().map(|s| s.base_year).min() {
        years.push(b);
    }
    years.sort_unstable();
    years.dedup();

    let mut out = String::new();
    let width = series.iter().map(|s| s.label().len()).max().unwrap_or(0).max(15);
    let _ = write!(out, "{:>6}", "year");
    for s in series {
        let _ = write!(out, "  {:>w$}", s.label(), w = width);
    }
    out.push('\n');
    let _ = write!(out, "{:>6}", "");
    for _ in series {
        let _ = write!(out, "  {:>w$}", format!("{:>7} {:>7}", "ASIR%", "CSII"), w = width);
    }
    out.push('\n');
    for y in years {
        let _ = write!(out, "{y:>6}");
        for s in series {
            let (a, c) = if y == s.base_year {
                (String::new(), "100.0".to_string())
            } else if let Ok(j) = s.years.binary_search(&y) {
                let f = |v: Option<f64>, k: f64| v.map_or_else(|| "NA".to_string(), |v| format!("{:.1}", v * k));
                (f(s.asir[j], 100.0), f(s.csii[j], 100.0))
            } else {
                (String::new(), String::new())
            };
            let _ = write!(out, "  {:>w$}", format!("{a:>7} {c:>7}"), w = width);
        }
        out.push('\n');
    }
    out
}
