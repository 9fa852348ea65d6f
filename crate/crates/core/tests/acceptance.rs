//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs as a plain binary (`harness = false`) so the lines are always shown.
//! The process fails when any criterion fails, except those listed in
//! `UNATTAINABLE`, which are printed as FAIL with the reason.

mod common;

use std::time::Instant;

use inflidx::bootstrap::{band_from_replicates, bootstrap_series, BootstrapConfig, ReplicateMatrix};
use inflidx::data_model::io::{read_cases, validate};
use inflidx::data_model::{CaseRecord, Channel, ModelFrame, SpecMode, Stratum};
use inflidx::glm::fit_window_logistic;
use inflidx::index::{asir_amount, asir_amount_intercepts, csii, run_channel, ChannelPipeline, IndexSeries, RunSpec};
use inflidx::output::summary_table;
use inflidx::quantreg::{fit_window_quantile, QuantileWindowFit};
use inflidx::synthetic::{generate, ground_truth, SyntheticConfig, SyntheticTruth};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria that cannot hold as literally stated; see README.
const UNATTAINABLE: &[(&str, &str)] = &[(
    "5a",
    "published CSII column is computed from unrounded rates; chaining the one-decimal ASIRs drifts by up to 0.2",
)];

/// Headline column of the executive summary table: ASIR (%) and CSII, 2010-2024.
const HEADLINE_ASIR: [f64; 15] = [
    14.4, -4.8, 12.3, -33.2, 0.4, -5.2, 2.8, -2.3, 18.7, 0.8, 2.4, 45.7, 51.5, 10.3, 36.2,
];
const HEADLINE_CSII: [f64; 15] = [
    114.4, 108.9, 122.3, 81.7, 82.0, 77.7, 79.9, 78.0, 92.7, 93.4, 95.6, 139.3, 211.1, 232.8, 317.1,
];

struct Outcome {
    id: &'static str,
    pass: bool,
    line: String,
}

#[derive(Default)]
struct Report {
    outcomes: Vec<Outcome>,
}

impl Report {
    fn record(&mut self, id: &'static str, pass: bool, line: String) {
        let waived = UNATTAINABLE.iter().find(|(w, _)| *w == id);
        let status = if pass { "PASS" } else { "FAIL" };
        match (pass, waived) {
            (false, Some((_, why))) => println!("{status} criterion {id}: {line} [unattainable as stated: {why}]"),
            _ => println!("{status} criterion {id}: {line}"),
        }
        self.outcomes.push(Outcome { id, pass, line });
    }

    fn blocking_failures(&self) -> Vec<&Outcome> {
        self.outcomes
            .iter()
            .filter(|o| !o.pass && !UNATTAINABLE.iter().any(|(w, _)| *w == o.id))
            .collect()
    }
}

fn last(s: &IndexSeries) -> f64 {
    s.csii.last().copied().flatten().expect("year-15 CSII")
}

fn run(cases: &[CaseRecord], channel: Channel, mode: SpecMode, tau: Option<f64>, window: usize) -> IndexSeries {
    run_channel(cases, &Stratum::all(), mode, channel, tau, window, Some(0), None).unwrap()
}

fn pipeline(cases: &[CaseRecord], channel: Channel, tau: Option<f64>) -> ChannelPipeline {
    let mut spec = RunSpec::new(channel, SpecMode::Factual);
    spec.tau = tau;
    spec.t0 = Some(0);
    ChannelPipeline::prepare(cases, &spec).unwrap()
}

fn covered(lo: &[Option<f64>], hi: &[Option<f64>], truth: &[f64]) -> usize {
    truth
        .iter()
        .enumerate()
        .filter(|(j, t)| matches!((lo[*j], hi[*j]), (Some(l), Some(h)) if l <= **t && **t <= h))
        .count()
}

fn criterion_1(r: &mut Report, cases: &[CaseRecord]) {
    let start = Instant::now();
    let factual = last(&run(cases, Channel::ProbP, SpecMode::Factual, None, 5)) * 100.0;
    let naive = last(&run(cases, Channel::ProbP, SpecMode::Naive, None, 5)) * 100.0;
    let secs = start.elapsed().as_secs_f64();
    r.record(
        "1",
        (170.0..=200.0).contains(&factual) && naive > 225.0 && secs <= 120.0,
        format!("PROB_P year-15 CSII FACTUAL {factual:.1} in [170, 200], NAIVE {naive:.1} > 225, {secs:.1}s <= 120s"),
    );
}

fn criterion_2(r: &mut Report, cases: &[CaseRecord], truth: &SyntheticTruth) {
    let target = truth.csii_amt.last().unwrap() * 100.0;
    let mut ok = true;
    let mut parts = Vec::new();
    for tau in [0.75, 0.5] {
        let f = last(&run(cases, Channel::SevP, SpecMode::Factual, Some(tau), 5)) * 100.0;
        let within = (f / target - 1.0).abs() <= 0.15;
        ok &= within;
        parts.push(format!("tau {tau}: FACTUAL {f:.1} vs truth {target:.1}"));
    }
    let mut naive_wins = 0;
    let seeds = [20240601u64, 1, 2, 3, 4, 5];
    for &seed in &seeds {
        let c = generate(&SyntheticConfig { seed, ..Default::default() }).unwrap();
        for tau in [0.75, 0.5] {
            let f = last(&run(&c, Channel::SevP, SpecMode::Factual, Some(tau), 5));
            let n = last(&run(&c, Channel::SevP, SpecMode::Naive, Some(tau), 5));
            naive_wins += usize::from(n > f);
        }
    }
    let all = naive_wins == 2 * seeds.len();
    ok &= all;
    parts.push(format!("NAIVE > FACTUAL in {naive_wins}/{} seed-tau runs", 2 * seeds.len()));
    r.record("2", ok, format!("SEV_P within 15% of truth; {}", parts.join("; ")));
}

struct FullBootstrap {
    prob: (IndexSeries, ReplicateMatrix),
    sev75: (IndexSeries, ReplicateMatrix),
    sev50: (IndexSeries, ReplicateMatrix),
    secs: f64,
}

fn full_bootstrap(cases: &[CaseRecord]) -> FullBootstrap {
    let cfg = BootstrapConfig::default();
    let start = Instant::now();
    let prob = bootstrap_series(&pipeline(cases, Channel::ProbP, None), &cfg).unwrap();
    let sev75 = bootstrap_series(&pipeline(cases, Channel::SevP, Some(0.75)), &cfg).unwrap();
    let sev50 = bootstrap_series(&pipeline(cases, Channel::SevP, Some(0.5)), &cfg).unwrap();
    FullBootstrap { prob, sev75, sev50, secs: start.elapsed().as_secs_f64() }
}

fn criterion_3(r: &mut Report, boot: &FullBootstrap, truth: &SyntheticTruth) {
    let mut ok = boot.secs <= 1800.0;
    let mut parts = Vec::new();
    for (name, (s, _), ta, tc, gating) in [
        ("PROB_P", &boot.prob, &truth.asir_prob, &truth.csii_prob, true),
        ("SEV_P tau 0.75", &boot.sev75, &truth.asir_amt, &truth.csii_amt, true),
        ("SEV_P tau 0.5", &boot.sev50, &truth.asir_amt, &truth.csii_amt, false),
    ] {
        let a = s.asir_band.as_ref().unwrap();
        let c = s.csii_band.as_ref().unwrap();
        let ca = covered(&a.lo, &a.hi, ta);
        let cc = covered(&c.lo, &c.hi, tc);
        if gating {
            ok &= ca >= 13 && s.bootstrap.as_ref().is_some_and(|b| !b.unreliable);
        }
        parts.push(format!("{name} ASIR {ca}/15 (CSII {cc}/15){}", if gating { "" } else { " info" }));
    }
    r.record(
        "3a",
        ok,
        format!("B=500 truth ASIR inside 95% band >= 13/15: {}; {:.0}s <= 1800s", parts.join(", "), boot.secs),
    );

    // Stability of se between the first 250 and all 500 replicates.
    let cfg = BootstrapConfig::default();
    let mut worst = 0.0f64;
    for (s, m) in [&boot.prob, &boot.sev75] {
        let reps: Vec<inflidx::Result<Vec<Option<f64>>>> = m
            .asir
            .iter()
            .map(|v| v.clone().ok_or(inflidx::Error::Solver("failed".into())))
            .collect();
        let (half, _) = band_from_replicates(&s.asir, &reps[..250], &cfg);
        let full = s.asir_band.as_ref().unwrap();
        for (a, b) in half.se.iter().zip(&full.se) {
            if let (Some(a), Some(b)) = (a, b) {
                worst = worst.max((a / b - 1.0).abs());
            }
        }
    }
    r.record("3b", worst <= 0.30, format!("se from 250 vs 500 replicates differ by at most {:.1}% (<= 30%)", 100.0 * worst));

    // Reduced-scale Monte Carlo.
    let start = Instant::now();
    let cfg = BootstrapConfig { replicates: 200, ..Default::default() };
    let (mut hit, mut cells) = (0usize, 0usize);
    for seed in 0..20u64 {
        let sc = SyntheticConfig { cases_per_year: 500, seed: 1000 + seed, ..Default::default() };
        let cases = generate(&sc).unwrap();
        for (channel, tau, t) in [
            (Channel::ProbP, None, &truth.asir_prob),
            (Channel::SevP, Some(0.75), &truth.asir_amt),
        ] {
            let (s, _) = bootstrap_series(&pipeline(&cases, channel, tau), &BootstrapConfig { seed, ..cfg.clone() }).unwrap();
            let a = s.asir_band.as_ref().unwrap();
            hit += covered(&a.lo, &a.hi, t);
            cells += t.len();
        }
    }
    let share = hit as f64 / cells as f64;
    r.record(
        "3c",
        share >= 0.85,
        format!(
            "Monte Carlo 500 cases/yr, 20 seeds, B=200: ASIR coverage {:.1}% ({hit}/{cells}) >= 85%, {:.0}s",
            100.0 * share,
            start.elapsed().as_secs_f64()
        ),
    );
}

fn logistic_instance(seed: u64) -> ModelFrame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let beta = [1.0, -0.5, 0.25];
    let (mut years, mut design, mut y) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..200 {
        let year = 2000 + i % 2;
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.5..1.5)).collect();
        let eta = -0.3 + 0.4 * (year - 2000) as f64 + x.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>();
        y.push(f64::from(rng.random::<f64>() < 1.0 / (1.0 + (-eta).exp())));
        years.push(year);
        design.extend(x);
    }
    common::frame(Channel::ProbP, years, 3, design, y)
}

fn criterion_4(r: &mut Report) {
    let mut worst = 0.0f64;
    for seed in 0..3 {
        let f = logistic_instance(seed);
        let fit = fit_window_logistic(&f, 2000, 2, &f.weights).unwrap();
        let negll = |th: &[f64]| -> f64 {
            -(0..f.n_rows())
                .map(|i| {
                    let x = f.row(i);
                    let eta = th[(f.years[i] - 2000) as usize] + th[2] * x[0] + th[3] * x[1] + th[4] * x[2];
                    let p = 1.0 / (1.0 + (-eta).exp());
                    if f.responses[i] == 1.0 { p.ln() } else { (1.0 - p).ln() }
                })
                .sum::<f64>()
        };
        let oracle = common::nelder_mead(&negll, &[0.0; 5]);
        let ours = [fit.intercepts[&2000], fit.intercepts[&2001], fit.slopes[0], fit.slopes[1], fit.slopes[2]];
        for (a, b) in ours.iter().zip(&oracle) {
            worst = worst.max((a - b).abs());
        }
    }
    r.record("4a", worst < 1e-3, format!("logistic vs Nelder-Mead, 200 cases x 3 covariates x 2 years: max coordinate gap {worst:.2e} < 1e-3"));

    let mut worst = 0.0f64;
    for seed in 0..400 {
        let mut inst = common::small_instance(seed, 12, 3);
        if inst.frame.distinct_years().len() == 1 {
            let last = inst.frame.n_rows() - 1;
            inst.frame.years[last] = 2;
        }
        let t = inst.frame.years.iter().copied().max().unwrap() - 1;
        let fit = fit_window_quantile(&inst.frame, t, 16, inst.tau, &inst.weights).unwrap();
        let oracle = common::brute_force_objective(&inst.frame, &inst.weights, inst.tau);
        worst = worst.max((fit.objective - oracle).abs());
    }
    r.record("4b", worst <= 1e-9, format!("quantile vs basis enumeration, 400 instances <= 12 rows, <= 3 params: max objective gap {worst:.2e} <= 1e-9"));
}

fn criterion_5(r: &mut Report) {
    let rates: Vec<f64> = HEADLINE_ASIR.iter().map(|a| a / 100.0).collect();
    let chained: Vec<f64> = csii(&rates, 2009).unwrap().iter().map(|c| c * 100.0).collect();
    let mismatches: Vec<String> = chained
        .iter()
        .zip(HEADLINE_CSII)
        .zip(2010..)
        .filter(|((c, p), _)| (*c * 10.0).round() / 10.0 != *p)
        .map(|((c, p), y)| format!("{y}: {c:.1} vs {p}"))
        .collect();
    r.record(
        "5a",
        mismatches.is_empty(),
        format!(
            "chained headline ASIRs reproduce published CSII to one decimal; {} of 15 differ ({})",
            mismatches.len(),
            mismatches.join(", ")
        ),
    );

    // Each published rate is only known to +-0.05pp; the published index must
    // lie inside the band those inputs allow.
    let (mut lo, mut hi) = (100.0, 100.0);
    let mut outside = Vec::new();
    for (j, a) in HEADLINE_ASIR.iter().enumerate() {
        lo *= 1.0 + (a - 0.05) / 100.0;
        hi *= 1.0 + (a + 0.05) / 100.0;
        let p = HEADLINE_CSII[j];
        if p < lo - 0.05 || p > hi + 0.05 {
            outside.push(2010 + j);
        }
    }
    r.record("5b", outside.is_empty(), format!("published CSII within the rounding band of chained ASIRs in all 15 years (outside: {outside:?})"));

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(1..40);
        let k = rng.random_range(0..5);
        let design: Vec<f64> = (0..n * k).map(|_| rng.random_range(-5.0..5.0)).collect();
        let f = common::frame(Channel::SevP, vec![3; n], k, design, vec![0.0; n]);
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..4.0)).collect();
        let fit = QuantileWindowFit {
            t: 3,
            window: (-1, 4),
            tau: 0.5,
            intercepts: [(3, rng.random_range(-3.0..3.0)), (4, rng.random_range(-3.0..3.0))].into(),
            slopes: (0..k).map(|_| rng.random_range(-2.0..2.0)).collect(),
            dropped_columns: vec![],
            objective: 0.0,
            negative_fraction: 0.0,
            converged: true,
            pivots: 0,
            warnings: vec![],
            basis: vec![],
        };
        let a = asir_amount(&fit, &f, Some(&w)).unwrap();
        let b = asir_amount_intercepts(&fit).unwrap();
        worst = worst.max((a - b).abs() / (1.0 + b.abs()));
    }
    r.record("5c", worst <= 1e-10, format!("severity ASIR covariate cancellation on 1000 random fits: max gap {worst:.1e} <= 1e-10"));
}

fn criterion_6(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut violations = Vec::new();
    for i in 0..1000 {
        let groups = rng.random_range(2..=4);
        let cols = rng.random_range(0..=3);
        let n = rng.random_range(groups * 3 + cols..=80);
        let integer = rng.random_bool(0.3);
        let mut design = Vec::with_capacity(n * cols);
        let (mut years, mut y) = (Vec::new(), Vec::new());
        for row in 0..n {
            let g = if row < groups { row } else { rng.random_range(0..groups) };
            years.push(1 + g as i32);
            let x: Vec<f64> = (0..cols)
                .map(|_| if integer { rng.random_range(0..3) as f64 } else { rng.random_range(-2.0..2.0) })
                .collect();
            let noise: f64 = if integer { rng.random_range(0..4) as f64 } else { rng.random_range(-1.0..1.0f64).powi(3) * 5.0 };
            y.push(0.3 * g as f64 + x.iter().sum::<f64>() + noise);
            design.extend(x);
        }
        let f = common::frame(Channel::SevP, years, cols, design, y);
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..3.0)).collect();
        let tau = rng.random_range(0.05..0.95);
        let fit = fit_window_quantile(&f, groups as i32 - 1, 16, tau, &w).unwrap();
        let res = common::residuals(&f, &fit.intercepts, &fit.slopes);
        let p = fit.intercepts.len() + cols - fit.dropped_columns.len();
        if let Some(v) = common::balance_violation(&res, &w, tau, p) {
            violations.push(format!("instance {i}: {v}"));
        }
    }
    r.record(
        "6",
        violations.is_empty(),
        format!("quantile balance on 1000 random weighted instances: {} violations {:?}", violations.len(), violations.first()),
    );
}

fn criterion_7(r: &mut Report, cases: &[CaseRecord], boot: &FullBootstrap) {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, channel, tau, (s5, _)) in [
        ("PROB_P", Channel::ProbP, None, &boot.prob),
        ("SEV_P tau 0.75", Channel::SevP, Some(0.75), &boot.sev75),
    ] {
        let s6 = run(cases, channel, SpecMode::Factual, tau, 6);
        let band = s5.csii_band.as_ref().unwrap();
        let mut worst = 0.0f64;
        let mut inside = 0;
        for j in 0..s5.years.len() {
            let diff = (s6.csii[j].unwrap() - s5.csii[j].unwrap()).abs();
            let half = (band.hi[j].unwrap() - band.lo[j].unwrap()) / 2.0;
            inside += usize::from(diff < half);
            worst = worst.max(diff / half);
        }
        ok &= inside == s5.years.len();
        parts.push(format!("{name} {inside}/15 (max diff/half-width {worst:.2})"));
    }
    r.record("7", ok, format!("window 6 vs 5 CSII difference below CI half-width every year: {}", parts.join(", ")));
}

fn criterion_8(r: &mut Report) {
    // Real-data tables cannot be rerun; check that the format fixtures hold.
    let mut csv = String::from(
        "CASE_ID,YEAR,MONTH,OUTCOME,AWARD,STATE,IDX_D_CORP,IDX_INS_CORP,CASETYPE_NUM_MOTOR,CASETYPE_NUM_GLIAB,CASETYPE_NUM_PLIAB,JURY_TRIAL\n",
    );
    for (outcome, n) in [("P", 437), ("D", 300), ("S", 263)] {
        for i in 0..n {
            csv.push_str(&format!("{outcome}{i},2015,6,{outcome},{},NY,1,1,1,0,0,1\n", if outcome == "D" { 0 } else { 1000 }));
        }
    }
    let (cases, read) = read_cases(csv.as_bytes()).unwrap();
    let shares = validate(&cases, &read, None).to_string();
    let shares_ok = shares.contains("P 43.7%  D 30.0%  S 26.3%");

    let rates: Vec<f64> = HEADLINE_ASIR.iter().map(|a| a / 100.0).collect();
    let series = IndexSeries {
        schema_version: inflidx::index::SCHEMA_VERSION,
        channel: Channel::SevT,
        spec_mode: SpecMode::Factual,
        stratum: "ALL".into(),
        tau: Some(0.5),
        window_len: 5,
        base_year: 2009,
        covariates: vec![],
        years: (2010..=2024).collect(),
        asir: rates.iter().copied().map(Some).collect(),
        csii: csii(&rates, 2009).unwrap().into_iter().map(Some).collect(),
        asir_band: None,
        csii_band: None,
        bootstrap: None,
        fits: vec![],
    };
    let table = summary_table(&[series]);
    let table_ok = table.lines().nth(2).is_some_and(|l| l.trim_start().starts_with("2009") && l.ends_with("100.0"))
        && table.lines().nth(3).is_some_and(|l| l.contains("14.4") && l.ends_with("114.4"));
    r.record(
        "8",
        shares_ok && table_ok,
        "real-data tables not reproducible (proprietary data); format fixtures hold: outcome shares 43.7/30.0/26.3 echoed, summary table ASIR % / CSII base 100".into(),
    );
}

fn main() {
    let total = Instant::now();
    let mut report = Report::default();
    let config = SyntheticConfig::default();
    let cases = generate(&config).unwrap();
    let truth = ground_truth(&config).unwrap();

    criterion_1(&mut report, &cases);
    criterion_2(&mut report, &cases, &truth);
    criterion_4(&mut report);
    criterion_5(&mut report);
    criterion_6(&mut report);
    criterion_8(&mut report);
    let boot = full_bootstrap(&cases);
    criterion_3(&mut report, &boot, &truth);
    criterion_7(&mut report, &cases, &boot);

    let blocking = report.blocking_failures();
    println!(
        "acceptance: {} passed, {} failed ({} blocking) in {:.0}s",
        report.outcomes.iter().filter(|o| o.pass).count(),
        report.outcomes.iter().filter(|o| !o.pass).count(),
        blocking.len(),
        total.elapsed().as_secs_f64()
    );
    if !blocking.is_empty() {
        for o in blocking {
            eprintln!("blocking failure {}: {}", o.id, o.line);
        }
        std::process::exit(1);
    }
}
