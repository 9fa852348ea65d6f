use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use inflidx::bootstrap::{bootstrap_differential, bootstrap_series, BootstrapConfig};
use inflidx::data_model::io::{read_cases_path, read_cpi_path, validate as validate_cases, write_cases, ValidationReport};
use inflidx::data_model::{adjust_cases, CaseRecord, Channel, Outcome, SpecMode, StateLists, Stratum};
use inflidx::index::{cross_sectional_effects, ChannelPipeline, IndexSeries, RunSpec};
use inflidx::output::{self, TruthReport};
use inflidx::synthetic::{generate, ground_truth, SyntheticConfig, DEFAULT_SEVERITY_ASIR};
use inflidx::window::FitWarning;

use crate::fsio::write_atomic;
use crate::{BootArgs, IndexArgs, InputArgs, SynthArgs};

pub const VALIDATION: u8 = 1;
pub const NUMERIC: u8 = 2;
pub const IO: u8 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<inflidx::Error> for Failure {
    fn from(e: inflidx::Error) -> Self {
        let code = match e.root() {
            inflidx::Error::Io(_) => IO,
            inflidx::Error::Csv(c) if c.is_io_error() => IO,
            _ if e.is_numeric() => NUMERIC,
            _ => VALIDATION,
        };
        Self::new(code, e.to_string())
    }
}

fn with_path(path: &Path) -> impl Fn(inflidx::Error) -> Failure + '_ {
    move |e| {
        let f = Failure::from(e);
        Failure::new(f.code, format!("{}: {}", path.display(), f.message))
    }
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    write_atomic(path, contents).map_err(|e| Failure::new(IO, format!("{}: {e}", path.display())))
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::new(IO, format!("{}: {e}", dir.display())))
}

fn read_inputs(input: &InputArgs) -> Result<(Vec<CaseRecord>, ValidationReport, Option<inflidx::data_model::CpiTable>), Failure> {
    let (cases, read) = read_cases_path(&input.cases).map_err(with_path(&input.cases))?;
    let cpi = match &input.cpi {
        Some(p) => Some(read_cpi_path(p).map_err(with_path(p))?),
        None => None,
    };
    let report = validate_cases(&cases, &read, cpi.as_ref());
    Ok((cases, report, cpi))
}

/// Reads, validates and deflates the cases. Any validation error is fatal.
fn load(input: &InputArgs) -> Result<Vec<CaseRecord>, Failure> {
    let (mut cases, report, cpi) = read_inputs(input)?;
    if !report.is_ok() {
        eprint!("{report}");
        return Err(Failure::new(VALIDATION, format!("{} failed validation", input.cases.display())));
    }
    for w in &report.warnings {
        log::warn!("{w}");
    }
    match cpi {
        Some(t) => adjust_cases(&mut cases, &t)?,
        None => cases.iter_mut().for_each(|c| c.amount_real = c.amount_nominal),
    }
    Ok(cases)
}

pub fn validate(input: &InputArgs) -> Result<(), Failure> {
    let (_, report, _) = read_inputs(input)?;
    print!("{report}");
    if report.is_ok() {
        Ok(())
    } else {
        Err(Failure::new(VALIDATION, format!("{} error(s)", report.errors.len())))
    }
}

fn default_channels(cases: &[CaseRecord], wanted: &[Channel], with_settled: &[Channel]) -> Vec<Channel> {
    if !wanted.is_empty() {
        return wanted.to_vec();
    }
    let settled = cases.iter().any(|c| c.outcome == Outcome::S);
    with_settled
        .iter()
        .copied()
        .filter(|c| settled || !c.needs_settlements())
        .collect()
}

fn check_tau(t: f64) -> Result<f64, Failure> {
    if t > 0.0 && t < 1.0 {
        Ok(t)
    } else {
        Err(Failure::new(VALIDATION, format!("tau {t} is outside (0, 1)")))
    }
}

fn warn_fits(s: &IndexSeries) {
    for f in &s.fits {
        for w in &f.warnings {
            if matches!(w, FitWarning::Separation | FitWarning::NonConvergence) {
                log::warn!("{} year {}: {w:?}", s.label(), f.year);
            }
        }
    }
}

/// Table per (stratum, channel, tau) with the specifications side by side.
fn grouped_summary(series: &[IndexSeries]) -> String {
    let mut groups: BTreeMap<(String, String, String), Vec<&IndexSeries>> = BTreeMap::new();
    for s in series {
        let tau = s.tau.map_or_else(|| "NA".into(), |t| t.to_string());
        groups.entry((s.stratum.clone(), s.channel.to_string(), tau)).or_default().push(s);
    }
    let mut out = String::new();
    for ((stratum, channel, tau), mut g) in groups {
        g.sort_by_key(|s| SpecMode::ALL.iter().position(|m| *m == s.spec_mode));
        let owned: Vec<IndexSeries> = g.into_iter().cloned().collect();
        out.push_str(&format!("{channel}  stratum {stratum}  tau {tau}\n"));
        out.push_str(&output::summary_table(&owned));
        out.push('\n');
    }
    out
}

pub fn index(args: &IndexArgs, boot: Option<&BootArgs>) -> Result<(), Failure> {
    if args.window < 2 {
        return Err(Failure::new(VALIDATION, format!("window length {} is below 2", args.window)));
    }
    let taus: Vec<f64> = args.tau.iter().map(|t| check_tau(*t)).collect::<Result<_, _>>()?;
    let pair = match &args.tau_pair {
        &Some((hi, lo)) => {
            let (hi, lo) = (check_tau(hi)?, check_tau(lo)?);
            if hi <= lo {
                return Err(Failure::new(VALIDATION, format!("--tau-pair needs HI > LO, got {hi},{lo}")));
            }
            Some((hi, lo))
        }
        None => None,
    };
    let state_lists: StateLists = match &args.state_lists {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::new(IO, format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure::new(VALIDATION, format!("{}: {e}", p.display())))?
        }
        None => StateLists::default(),
    };
    let cfg = match boot {
        Some(b) => {
            let c = BootstrapConfig {
                replicates: b.boot_b,
                seed: b.seed,
                percentile: b.percentile,
                ..Default::default()
            };
            c.validate()?;
            Some(c)
        }
        None => None,
    };
    let dump = boot.is_some_and(|b| b.dump_replicates);

    let cases = load(&args.input)?;
    let channels = default_channels(&cases, &args.channel, &Channel::ALL);
    let specs = if args.spec.is_empty() { SpecMode::ALL.to_vec() } else { args.spec.clone() };
    ensure_dir(&args.out)?;

    let spec_for = |kind, channel: Channel, mode, tau| RunSpec {
        channel,
        spec_mode: mode,
        stratum: Stratum::with_state_lists(kind, state_lists.clone()),
        tau,
        window_len: args.window,
        t0: args.base_year,
        t_end: args.end_year,
    };

    let mut done = Vec::new();
    let mut failures: Vec<Failure> = Vec::new();
    let mut attempted = 0;
    for &kind in &args.stratum {
        for &channel in &channels {
            let channel_taus: Vec<Option<f64>> = if !channel.is_severity() {
                vec![None]
            } else if taus.is_empty() {
                vec![channel.default_tau()]
            } else {
                taus.iter().copied().map(Some).collect()
            };
            for &mode in &specs {
                for &tau in &channel_taus {
                    attempted += 1;
                    let spec = spec_for(kind, channel, mode, tau);
                    let label = format!(
                        "{channel}_{mode}_{kind}_{}",
                        tau.map_or_else(|| "NA".into(), |t| t.to_string())
                    );
                    let result = (|| -> Result<IndexSeries, Failure> {
                        let pipeline = ChannelPipeline::prepare(&cases, &spec)?;
                        let series = match &cfg {
                            None => pipeline.run()?,
                            Some(cfg) => {
                                let (s, reps) = bootstrap_series(&pipeline, cfg)?;
                                if dump {
                                    write(
                                        &args.out.join(format!("{label}_replicates.csv")),
                                        &output::replicates_csv(&reps)?,
                                    )?;
                                }
                                s
                            }
                        };
                        write(&args.out.join(format!("{label}.json")), &output::to_json(&series)?)?;
                        write(&args.out.join(format!("{label}.csv")), &output::series_csv(&series)?)?;
                        Ok(series)
                    })();
                    match result {
                        Ok(s) => {
                            warn_fits(&s);
                            done.push(s);
                        }
                        Err(f) => {
                            eprintln!("{label}: {}", f.message);
                            failures.push(f);
                        }
                    }
                }
            }
            let Some((hi, lo)) = pair.filter(|_| channel.is_severity()) else { continue };
            for &mode in &specs {
                attempted += 1;
                let label = format!("{channel}_{mode}_{kind}_DSIR_{hi}_{lo}");
                let result = (|| -> Result<(), Failure> {
                    let p_hi = ChannelPipeline::prepare(&cases, &spec_for(kind, channel, mode, Some(hi)))?;
                    let p_lo = ChannelPipeline::prepare(&cases, &spec_for(kind, channel, mode, Some(lo)))?;
                    let d = bootstrap_differential(&p_hi, &p_lo, cfg.as_ref())?;
                    if let Some(year) = d.chain_break {
                        log::warn!("{label}: differential chain breaks in {year}");
                    }
                    write(&args.out.join(format!("{label}.json")), &output::to_json(&d)?)?;
                    write(&args.out.join(format!("{label}.csv")), &output::differential_csv(&d)?)?;
                    Ok(())
                })();
                if let Err(f) = result {
                    eprintln!("{label}: {}", f.message);
                    failures.push(f);
                }
            }
        }
    }

    if !done.is_empty() {
        let summary = grouped_summary(&done);
        print!("{summary}");
        write(&args.out.join("summary.txt"), &summary)?;
        write(&args.out.join("plot_long.csv"), &output::long_format_csv(&done)?)?;
    }
    match failures.iter().map(|f| f.code).max() {
        None => Ok(()),
        Some(code) => Err(Failure::new(code, format!("{} of {attempted} runs failed", failures.len()))),
    }
}

pub fn synth(args: &SynthArgs) -> Result<(), Failure> {
    if args.years > DEFAULT_SEVERITY_ASIR.len() {
        return Err(Failure::new(
            VALIDATION,
            format!("--years is at most {} (one severity rate per year)", DEFAULT_SEVERITY_ASIR.len()),
        ));
    }
    let config = SyntheticConfig {
        years: args.years,
        cases_per_year: args.cases_per_year,
        severity_asir: DEFAULT_SEVERITY_ASIR[..args.years].to_vec(),
        seed: args.seed,
        ..Default::default()
    };
    let cases = generate(&config)?;
    let truth = ground_truth(&config)?;
    ensure_dir(&args.out)?;
    let mut buf = Vec::new();
    write_cases(&cases, &mut buf)?;
    let csv_path = args.out.join("synthetic_cases.csv");
    write(&csv_path, std::str::from_utf8(&buf).expect("csv output is utf-8"))?;
    write(&args.out.join("synthetic_truth.json"), &output::to_json(&TruthReport::from(&truth))?)?;
    println!("wrote {} cases to {}", cases.len(), csv_path.display());
    Ok(())
}

pub fn effects(input: &InputArgs, channels: &[Channel], boot_b: usize, seed: u64, out: &Path) -> Result<(), Failure> {
    let cfg = if boot_b > 0 {
        let c = BootstrapConfig { replicates: boot_b, seed, ..Default::default() };
        c.validate()?;
        Some(c)
    } else {
        None
    };
    let cases = load(input)?;
    let channels = default_channels(&cases, channels, &[Channel::ProbP, Channel::ProbS, Channel::SevP, Channel::SevS]);
    ensure_dir(out)?;
    for ch in channels {
        let table = cross_sectional_effects(&cases, ch, cfg.as_ref())?;
        write(&out.join(format!("effects_{ch}.json")), &output::to_json(&table)?)?;
        write(&out.join(format!("effects_{ch}.csv")), &output::effects_csv(&table)?)?;
        println!("{ch} ({} rows)", table.rows_used);
        println!("{:<28} {:>10} {:>10} {:>10}", "covariate", "ratio", "ci_lo", "ci_hi");
        for r in &table.effects {
            if r.dropped {
                println!("{:<28} {:>10}", r.covariate, "dropped");
                continue;
            }
            let c = |v: Option<f64>| v.map_or_else(|| "-".into(), |v| format!("{v:.3}"));
            println!("{:<28} {:>10.3} {:>10} {:>10}", r.covariate, r.ratio, c(r.ci_lo), c(r.ci_hi));
        }
        println!();
    }
    Ok(())
}

pub fn report(dir: &Path) -> Result<(), Failure> {
    let entries = fs::read_dir(dir).map_err(|e| Failure::new(IO, format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut series = Vec::new();
    for p in paths {
        let text = fs::read_to_string(&p).map_err(|e| Failure::new(IO, format!("{}: {e}", p.display())))?;
        // Other JSON outputs (differentials, effects, truth) share the directory.
        if let Ok(s) = serde_json::from_str::<IndexSeries>(&text) {
            series.push(s);
        }
    }
    if series.is_empty() {
        return Err(Failure::new(VALIDATION, format!("no series JSON files in {}", dir.display())));
    }
    let summary = grouped_summary(&series);
    print!("{summary}");
    write(&dir.join("summary.txt"), &summary)
}
