mod commands;
mod fsio;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use inflidx::data_model::{Channel, SpecMode, StratumKind};

#[derive(Parser)]
#[command(name = "inflidx", version, about = "Case-mix adjusted social inflation indices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a case file (and CPI file) and print a summary.
    Validate(InputArgs),
    /// Estimate ASIR and CSII series.
    Index(IndexArgs),
    /// Estimate series with random-weighted bootstrap bands.
    Bootstrap {
        #[command(flatten)]
        index: IndexArgs,
        #[command(flatten)]
        boot: BootArgs,
    },
    /// Generate the synthetic dataset and its ground-truth indices.
    Synth(SynthArgs),
    /// Pooled cross-sectional covariate effects.
    Effects {
        #[command(flatten)]
        input: InputArgs,
        /// Channels to report (default PROB_P and SEV_P, plus PROB_S and SEV_S with settlements).
        #[arg(long, value_delimiter = ',')]
        channel: Vec<Channel>,
        /// Bootstrap replicates for confidence intervals; 0 skips them.
        #[arg(long, default_value_t = 0)]
        boot_b: usize,
        #[arg(long, default_value_t = 20240601)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Summary table from series JSON files in a directory.
    Report {
        /// Directory holding series JSON files written by `index` or `bootstrap`.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Clone)]
struct InputArgs {
    /// Case file (CSV).
    #[arg(long)]
    cases: PathBuf,
    /// Monthly CPI file (YEAR, MONTH, CPI). Without it amounts are taken as real.
    #[arg(long)]
    cpi: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct IndexArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Base year t0 (default: first data year).
    #[arg(long)]
    base_year: Option<i32>,
    /// Last index year T (default: last data year).
    #[arg(long)]
    end_year: Option<i32>,
    /// Rolling window length in years.
    #[arg(long, default_value_t = 5)]
    window: usize,
    /// Channels to index (default PROB_P and SEV_P, plus PROB_S and SEV_S with settlements).
    #[arg(long, value_delimiter = ',')]
    channel: Vec<Channel>,
    /// Specifications: NAIVE, FACTUAL (headline), FACTUAL_PLUS_STRATEGIC (residual).
    #[arg(long, value_delimiter = ',')]
    spec: Vec<SpecMode>,
    /// Strata such as ALL, MOTOR, GENERAL, PROFESSIONAL, CORPORATE, INSURED, TORT_CAP, TPLF, JURY.
    #[arg(long, value_delimiter = ',', default_value = "ALL")]
    stratum: Vec<StratumKind>,
    /// Quantile levels for severity channels (default: per-channel level).
    #[arg(long, value_delimiter = ',')]
    tau: Vec<f64>,
    /// Quantile pair `HI,LO` for differential indices on severity channels.
    #[arg(long, value_parser = parse_pair)]
    tau_pair: Option<(f64, f64)>,
    /// JSON file overriding the tort-cap and TPLF state lists.
    #[arg(long)]
    state_lists: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct BootArgs {
    /// Bootstrap replicates.
    #[arg(long, default_value_t = 500)]
    boot_b: usize,
    #[arg(long, default_value_t = 20240601)]
    seed: u64,
    /// Percentile intervals instead of point +- 1.96 se.
    #[arg(long)]
    percentile: bool,
    /// Also write every replicate's series as CSV.
    #[arg(long)]
    dump_replicates: bool,
}

#[derive(Args)]
struct SynthArgs {
    /// Number of index years after the base year (at most 15).
    #[arg(long, default_value_t = 15)]
    years: usize,
    #[arg(long, default_value_t = 5000)]
    cases_per_year: usize,
    #[arg(long, default_value_t = 20240601)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected HI,LO")?;
    let p = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok((p(a)?, p(b)?))
}

fn init_threads() {
    let Ok(v) = std::env::var("INFLIDX_THREADS") else { return };
    match v.parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("INFLIDX_THREADS ignored: {e}");
            }
        }
        _ => log::warn!("INFLIDX_THREADS={v:?} is not a positive integer; ignored"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    init_threads();
    let result = match cli.command {
        Command::Validate(a) => commands::validate(&a),
        Command::Index(a) => commands::index(&a, None),
        Command::Bootstrap { index, boot } => commands::index(&index, Some(&boot)),
        Command::Synth(a) => commands::synth(&a),
        Command::Effects { input, channel, boot_b, seed, out } => {
            commands::effects(&input, &channel, boot_b, seed, &out)
        }
        Command::Report { out } => commands::report(&out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}
