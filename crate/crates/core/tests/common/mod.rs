#![allow(dead_code)]

use inflidx::data_model::{Channel, DropCounts, ModelFrame};
use inflidx::quantreg::check_loss;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn frame(channel: Channel, years: Vec<i32>, cols: usize, design: Vec<f64>, y: Vec<f64>) -> ModelFrame {
    let n = years.len();
    assert_eq!(design.len(), n * cols);
    ModelFrame {
        channel,
        columns: (0..cols).map(|j| format!("FACTUAL.X{j}")).collect(),
        responses: y,
        design,
        years,
        weights: vec![1.0; n],
        case_index: (0..n).collect(),
        is_zero: vec![false; n],
        dropped: DropCounts::default(),
    }
}

/// A small quantile instance: `groups` years starting at 1, `cols` covariates.
/// Integer-valued data is drawn half the time so that ties and degenerate
/// vertices occur.
pub struct SmallInstance {
    pub frame: ModelFrame,
    pub weights: Vec<f64>,
    pub tau: f64,
}

pub fn small_instance(seed: u64, max_rows: usize, max_params: usize) -> SmallInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = rng.random_range(1..=max_params);
    let groups = rng.random_range(1..=params);
    let cols = params - groups;
    let n = rng.random_range((params + 1).max(groups * 2)..=max_rows);
    let integer = rng.random_bool(0.5);
    let draw = |rng: &mut ChaCha8Rng| -> f64 {
        if integer {
            rng.random_range(-3..=3) as f64
        } else {
            rng.random_range(-2.0..2.0)
        }
    };
    let years: Vec<i32> = (0..n).map(|i| 1 + (i % groups) as i32).collect();
    let design: Vec<f64> = (0..n * cols).map(|_| draw(&mut rng)).collect();
    let y: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
    let weights: Vec<f64> = (0..n)
        .map(|_| if integer { rng.random_range(1..=3) as f64 } else { rng.random_range(0.1..3.0) })
        .collect();
    let tau = [0.1, 0.25, 0.5, 0.75, 0.9, rng.random_range(0.05..0.95)][rng.random_range(0..6)];
    SmallInstance {
        frame: frame(Channel::SevP, years, cols, design, y),
        weights,
        tau,
    }
}

/// Full design rows `(year dummies, covariates)` for the years present.
pub fn dense_design(f: &ModelFrame) -> (Vec<i32>, DMatrix<f64>) {
    let mut years = f.years.clone();
    years.sort_unstable();
    years.dedup();
    let ng = years.len();
    let p = ng + f.n_cols();
    let mut x = DMatrix::zeros(f.n_rows(), p);
    for r in 0..f.n_rows() {
        x[(r, years.binary_search(&f.years[r]).unwrap())] = 1.0;
        for (k, v) in f.row(r).iter().enumerate() {
            x[(r, ng + k)] = *v;
        }
    }
    (years, x)
}

fn subsets(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == k {
        out.push(cur.clone());
        return;
    }
    for i in start..n {
        cur.push(i);
        subsets(n, k, i + 1, cur, out);
        cur.pop();
    }
}

/// Minimum check loss over every basic solution (every nonsingular set of
/// `p` interpolated rows). Exact optimum of the LP when the design has full rank.
pub fn brute_force_objective(f: &ModelFrame, w: &[f64], tau: f64) -> f64 {
    let (_, x) = dense_design(f);
    let p = x.ncols();
    let mut all = Vec::new();
    subsets(f.n_rows(), p, 0, &mut Vec::new(), &mut all);
    let y = DVector::from_vec(f.responses.clone());
    let mut best = f64::INFINITY;
    for s in all {
        let xh = DMatrix::from_fn(p, p, |i, j| x[(s[i], j)]);
        if xh.determinant().abs() < 1e-9 {
            continue;
        }
        let yh = DVector::from_fn(p, |i, _| y[s[i]]);
        let Some(theta) = xh.lu().solve(&yh) else { continue };
        let fitted = &x * theta;
        let obj: f64 = (0..f.n_rows()).map(|r| w[r] * check_loss(y[r] - fitted[r], tau)).sum();
        best = best.min(obj);
    }
    best
}

/// Residuals of a fit on the rows of its frame.
pub fn residuals(f: &ModelFrame, intercepts: &std::collections::BTreeMap<i32, f64>, slopes: &[f64]) -> Vec<f64> {
    (0..f.n_rows())
        .map(|r| f.responses[r] - intercepts[&f.years[r]] - f.row(r).iter().zip(slopes).map(|(a, b)| a * b).sum::<f64>())
        .collect()
}

/// Checks `W(r < 0) <= tau W <= W(r <= 0)` with slack `p * max w`.
/// Returns the violation, if any.
pub fn balance_violation(r: &[f64], w: &[f64], tau: f64, p: usize) -> Option<String> {
    let total: f64 = w.iter().sum();
    let wmax = w.iter().fold(0.0f64, |m, v| m.max(*v));
    let slack = p as f64 * wmax + 1e-9 * total;
    let tol = 1e-9;
    let neg: f64 = r.iter().zip(w).filter(|(r, _)| **r < -tol).map(|(_, w)| w).sum();
    let nonpos: f64 = r.iter().zip(w).filter(|(r, _)| **r <= tol).map(|(_, w)| w).sum();
    if neg > tau * total + slack || nonpos < tau * total - slack {
        Some(format!("neg {neg} nonpos {nonpos} tauW {} slack {slack}", tau * total))
    } else {
        None
    }
}

/// Nelder-Mead minimiser with restarts from the best vertex.
pub fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, start: &[f64]) -> Vec<f64> {
    let n = start.len();
    let mut best = start.to_vec();
    for _restart in 0..8 {
        let mut simplex: Vec<Vec<f64>> = vec![best.clone()];
        for i in 0..n {
            let mut v = best.clone();
            v[i] += 0.5;
            simplex.push(v);
        }
        let mut vals: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
        for _ in 0..20000 {
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            vals = order.iter().map(|&i| vals[i]).collect();
            if (vals[n] - vals[0]).abs() < 1e-14 {
                break;
            }
            let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64).collect();
            let along = |t: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + t * (simplex[n][j] - centroid[j])).collect() };
            let xr = along(-1.0);
            let fr = f(&xr);
            if fr < vals[0] {
                let xe = along(-2.0);
                let fe = f(&xe);
                if fe < fr {
                    simplex[n] = xe;
                    vals[n] = fe;
                } else {
                    simplex[n] = xr;
                    vals[n] = fr;
                }
            } else if fr < vals[n - 1] {
                simplex[n] = xr;
                vals[n] = fr;
            } else {
                let xc = if fr < vals[n] { along(-0.5) } else { along(0.5) };
                let fc = f(&xc);
                if fc < vals[n].min(fr) {
                    simplex[n] = xc;
                    vals[n] = fc;
                } else {
                    for i in 1..=n {
                        simplex[i] = (0..n).map(|j| simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j])).collect();
                        vals[i] = f(&simplex[i]);
                    }
                }
            }
        }
        best = simplex[0].clone();
    }
    best
}
