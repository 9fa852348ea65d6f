//! CSV ingestion and export for case and CPI files.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use super::schema::{self, CovariateClass};
use super::{CaseFlags, CaseRecord, CovariateSpec, CpiTable, Outcome, SpecMode, YearMonth};
use crate::{Error, Result};

pub const REQUIRED_COLUMNS: [&str; 12] = [
    "CASE_ID",
    "YEAR",
    "MONTH",
    "OUTCOME",
    "AWARD",
    "STATE",
    "IDX_D_CORP",
    "IDX_INS_CORP",
    "CASETYPE_NUM_MOTOR",
    "CASETYPE_NUM_GLIAB",
    "CASETYPE_NUM_PLIAB",
    "JURY_TRIAL",
];

/// What happened while reading a case file.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ReadReport {
    /// Covariate columns found in the header, in header order.
    pub covariate_columns: Vec<String>,
    /// Header columns that are neither required nor covariates.
    pub unknown_columns: Vec<String>,
    /// Malformed rows, one message per row, prefixed with the line number.
    pub row_errors: Vec<String>,
    /// Rows skipped because OUTCOME was blank.
    pub missing_outcome: usize,
}

impl ReadReport {
    pub fn warnings(&self) -> Vec<String> {
        self.unknown_columns
            .iter()
            .map(|c| format!("unknown column {c:?} ignored"))
            .collect()
    }
}

struct Header {
    idx: BTreeMap<&'static str, usize>,
    covariates: Vec<(usize, String, CovariateClass)>,
}

fn parse_header(headers: &csv::StringRecord, report: &mut ReadReport) -> Result<Header> {
    let names: Vec<&str> = headers.iter().map(str::trim).collect();
    let missing: Vec<String> = REQUIRED_COLUMNS
        .iter()
        .filter(|c| !names.contains(c))
        .map(|c| c.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingColumns(missing));
    }
    let idx = REQUIRED_COLUMNS
        .iter()
        .map(|&c| (c, names.iter().position(|n| *n == c).unwrap()))
        .collect();
    let mut covariates = Vec::new();
    for (i, name) in names.iter().enumerate() {
        if let Some(class) = schema::classify(name) {
            covariates.push((i, name.to_string(), class));
            report.covariate_columns.push(name.to_string());
        } else if !REQUIRED_COLUMNS.contains(name) {
            report.unknown_columns.push(name.to_string());
        }
    }
    Ok(Header { idx, covariates })
}

fn parse_flag(field: &str, column: &str) -> std::result::Result<bool, String> {
    match field.trim() {
        "1" | "1.0" | "true" | "TRUE" => Ok(true),
        "0" | "0.0" | "false" | "FALSE" | "" => Ok(false),
        other => Err(format!("{column}: expected 0 or 1, got {other:?}")),
    }
}

fn parse_row(rec: &csv::StringRecord, h: &Header) -> std::result::Result<Option<CaseRecord>, String> {
    let get = |c: &str| rec.get(h.idx[c]).unwrap_or("").trim();
    let outcome_field = get("OUTCOME");
    if outcome_field.is_empty() {
        return Ok(None);
    }
    let outcome: Outcome = outcome_field.parse()?;
    let year: i32 = get("YEAR")
        .parse()
        .map_err(|_| format!("YEAR: expected an integer, got {:?}", get("YEAR")))?;
    let month: u8 = get("MONTH")
        .parse()
        .map_err(|_| format!("MONTH: expected an integer, got {:?}", get("MONTH")))?;
    let amount_month = YearMonth::new(year, month).map_err(|e| e.to_string())?;
    let award = get("AWARD");
    let amount_nominal = if award.is_empty() {
        None
    } else {
        let a: f64 = award
            .parse()
            .map_err(|_| format!("AWARD: expected a number, got {award:?}"))?;
        if !(a >= 0.0 && a.is_finite()) {
            return Err(format!("AWARD: {a} is not a nonnegative amount"));
        }
        Some(a)
    };
    let flags = CaseFlags {
        corporate_defendant: parse_flag(get("IDX_D_CORP"), "IDX_D_CORP")?,
        insured_defendant: parse_flag(get("IDX_INS_CORP"), "IDX_INS_CORP")?,
        motor: parse_flag(get("CASETYPE_NUM_MOTOR"), "CASETYPE_NUM_MOTOR")?,
        general_liab: parse_flag(get("CASETYPE_NUM_GLIAB"), "CASETYPE_NUM_GLIAB")?,
        prof_liab: parse_flag(get("CASETYPE_NUM_PLIAB"), "CASETYPE_NUM_PLIAB")?,
        jury_trial: parse_flag(get("JURY_TRIAL"), "JURY_TRIAL")?,
    };
    let mut factual = BTreeMap::new();
    let mut strategic = BTreeMap::new();
    for (i, name, class) in &h.covariates {
        let field = rec.get(*i).unwrap_or("").trim();
        if field.is_empty() {
            continue;
        }
        let v: f64 = field
            .parse()
            .map_err(|_| format!("{name}: expected a number, got {field:?}"))?;
        if let Some(def) = schema::lookup(name) {
            def.kind.check(v).map_err(|m| format!("{name}: {m}"))?;
        } else if !v.is_finite() {
            return Err(format!("{name}: value {v} is not finite"));
        }
        match class {
            CovariateClass::Factual => factual.insert(name.clone(), v),
            CovariateClass::Strategic => strategic.insert(name.clone(), v),
        };
    }
    Ok(Some(CaseRecord {
        case_id: get("CASE_ID").to_string(),
        year,
        outcome,
        amount_nominal,
        amount_month,
        amount_real: None,
        factual,
        strategic,
        state: get("STATE").to_ascii_uppercase(),
        flags,
    }))
}

/// Reads a case CSV. Malformed rows are collected in the report rather than
/// aborting the read; callers decide whether any row error is fatal.
pub fn read_cases<R: Read>(reader: R) -> Result<(Vec<CaseRecord>, ReadReport)> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let mut report = ReadReport::default();
    let header = parse_header(rdr.headers()?, &mut report)?;
    let mut cases = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        match parse_row(&rec, &header) {
            Ok(Some(c)) => cases.push(c),
            Ok(None) => report.missing_outcome += 1,
            Err(msg) => report.row_errors.push(Error::Row { line, message: msg }.to_string()),
        }
    }
    Ok((cases, report))
}

pub fn read_cases_path(path: &Path) -> Result<(Vec<CaseRecord>, ReadReport)> {
    read_cases(File::open(path)?)
}

/// Reads a `YEAR, MONTH, CPI` file. The latest month becomes the base month.
pub fn read_cpi<R: Read>(reader: R) -> Result<CpiTable> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |c: &str| headers.iter().position(|h| h == c);
    let (Some(yi), Some(mi), Some(ci)) = (find("YEAR"), find("MONTH"), find("CPI")) else {
        let missing = ["YEAR", "MONTH", "CPI"]
            .iter()
            .filter(|c| find(c).is_none())
            .map(|c| c.to_string())
            .collect();
        return Err(Error::MissingColumns(missing));
    };
    let mut entries = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let row_err = |m: String| Error::Row { line, message: m };
        let year: i32 = rec[yi].parse().map_err(|_| row_err(format!("bad YEAR {:?}", &rec[yi])))?;
        let month: u8 = rec[mi].parse().map_err(|_| row_err(format!("bad MONTH {:?}", &rec[mi])))?;
        let level: f64 = rec[ci].parse().map_err(|_| row_err(format!("bad CPI {:?}", &rec[ci])))?;
        let ym = YearMonth::new(year, month).map_err(|e| row_err(e.to_string()))?;
        entries.insert(ym, level);
    }
    if entries.is_empty() {
        return Err(Error::InvalidCpi("no rows".into()));
    }
    CpiTable::with_latest_base(entries)
}

pub fn read_cpi_path(path: &Path) -> Result<CpiTable> {
    read_cpi(File::open(path)?)
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// Writes cases in the ingestion schema. Covariate columns are the union of
/// all covariates present, in schema order.
pub fn write_cases<W: Write>(cases: &[CaseRecord], writer: W) -> Result<()> {
    let present: BTreeSet<&str> = cases
        .iter()
        .flat_map(|c| c.factual.keys().chain(c.strategic.keys()))
        .map(String::as_str)
        .filter(|c| !REQUIRED_COLUMNS.contains(c))
        .collect();
    let present: Vec<&str> = present.into_iter().collect();
    let covariates = CovariateSpec::new(SpecMode::FactualPlusStrategic, &present).columns;

    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = REQUIRED_COLUMNS.to_vec();
    header.extend(covariates.iter().map(String::as_str));
    w.write_record(&header)?;
    for c in cases {
        let mut row: Vec<String> = vec![
            c.case_id.clone(),
            c.year.to_string(),
            c.amount_month.month.to_string(),
            c.outcome.to_string(),
            c.amount_nominal.map(|a| a.to_string()).unwrap_or_default(),
            c.state.clone(),
            flag(c.flags.corporate_defendant).into(),
            flag(c.flags.insured_defendant).into(),
            flag(c.flags.motor).into(),
            flag(c.flags.general_liab).into(),
            flag(c.flags.prof_liab).into(),
            flag(c.flags.jury_trial).into(),
        ];
        row.extend(
            covariates
                .iter()
                .map(|k| c.covariate(k).map(|v| v.to_string()).unwrap_or_default()),
        );
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct YearCounts {
    pub cases: usize,
    pub plaintiff: usize,
    pub defendant: usize,
    pub settled: usize,
    /// Cases whose award is zero or blank.
    pub zero_award: usize,
}

/// Summary produced by the `validate` command.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub cases: usize,
    pub share_plaintiff: f64,
    pub share_defendant: f64,
    pub share_settled: f64,
    pub zero_award_share: f64,
    pub by_year: BTreeMap<i32, YearCounts>,
    pub covariate_columns: Vec<String>,
    pub warnings: Vec<String>,
    pub errors: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "cases: {}", self.cases)?;
        writeln!(
            f,
            "outcomes: P {:.1}%  D {:.1}%  S {:.1}%",
            100.0 * self.share_plaintiff,
            100.0 * self.share_defendant,
            100.0 * self.share_settled
        )?;
        writeln!(f, "zero or missing awards: {:.1}%", 100.0 * self.zero_award_share)?;
        writeln!(f, "covariates: {}", self.covariate_columns.len())?;
        writeln!(f, "{:>6} {:>8} {:>8} {:>8} {:>8} {:>8}", "year", "cases", "P", "D", "S", "zero")?;
        for (y, c) in &self.by_year {
            writeln!(
                f,
                "{:>6} {:>8} {:>8} {:>8} {:>8} {:>8}",
                y, c.cases, c.plaintiff, c.defendant, c.settled, c.zero_award
            )?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        for e in &self.errors {
            writeln!(f, "error: {e}")?;
        }
        Ok(())
    }
}

/// Summarises cases read from a file. Missing CPI months are reported as errors.
pub fn validate(cases: &[CaseRecord], read: &ReadReport, cpi: Option<&CpiTable>) -> ValidationReport {
    let mut by_year: BTreeMap<i32, YearCounts> = BTreeMap::new();
    let (mut p, mut d, mut s, mut z) = (0usize, 0usize, 0usize, 0usize);
    for c in cases {
        let e = by_year.entry(c.year).or_default();
        e.cases += 1;
        match c.outcome {
            Outcome::P => {
                e.plaintiff += 1;
                p += 1
            }
            Outcome::D => {
                e.defendant += 1;
                d += 1
            }
            Outcome::S => {
                e.settled += 1;
                s += 1
            }
        }
        if c.amount_nominal.is_none_or(|a| a == 0.0) {
            e.zero_award += 1;
            z += 1;
        }
    }
    let n = cases.len();
    let share = |k: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    let mut warnings = read.warnings();
    if read.missing_outcome > 0 {
        warnings.push(format!("{} rows without OUTCOME dropped", read.missing_outcome));
    }
    let mut errors = read.row_errors.clone();
    if n == 0 {
        errors.push("no cases".into());
    }
    if let Some(table) = cpi {
        let months: BTreeSet<YearMonth> = cases
            .iter()
            .filter(|c| c.amount_nominal.is_some())
            .map(|c| c.amount_month)
            .collect();
        errors.extend(
            months
                .into_iter()
                .filter(|m| table.level(*m).is_err())
                .map(|m| format!("CPI table has no entry for {m}")),
        );
    }
    ValidationReport {
        cases: n,
        share_plaintiff: share(p),
        share_defendant: share(d),
        share_settled: share(s),
        zero_award_share: share(z),
        by_year,
        covariate_columns: read.covariate_columns.clone(),
        warnings,
        errors,
    }
}
