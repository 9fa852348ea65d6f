//! Weighted linear quantile regression over a rolling window.
//!
//! Minimises `sum_i w_i rho_tau(y_i - gamma_{year(i)} - eta . z_i)` exactly. The
//! problem is a linear program whose vertices are basic solutions: fits that
//! interpolate `p` rows, `p` being the parameter count. The solver walks
//! between adjacent vertices, each pivot swapping one interpolated row, and
//! along each edge jumps directly to the breakpoint where the directional
//! derivative turns nonnegative.
//!
//! Degenerate vertices (extra rows with zero residual) are resolved by a
//! symbolic perturbation `y_i + eps * c_i` with fixed pseudo-random `c_i`, which
//! rules out cycling. When the optimum is not unique the solver keeps moving
//! along zero-cost edges that decrease the parameter vector lexicographically,
//! so the returned vertex is the lexicographic infimum over optimal vertices.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data_model::{Channel, ModelFrame};
use crate::linalg;
use crate::window::{FitWarning, WindowPlan};
use crate::{Error, Result};

const MAX_PIVOTS: usize = 50_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileWindowFit {
    pub t: i32,
    pub window: (i32, i32),
    pub tau: f64,
    pub intercepts: BTreeMap<i32, f64>,
    /// One slope per frame column; dropped columns carry 0.
    pub slopes: Vec<f64>,
    pub dropped_columns: Vec<String>,
    /// Weighted check loss at the solution.
    pub objective: f64,
    /// Weighted share of strictly negative residuals.
    pub negative_fraction: f64,
    pub converged: bool,
    pub pivots: usize,
    pub warnings: Vec<FitWarning>,
    /// Frame rows interpolated by the solution.
    pub basis: Vec<usize>,
}

impl QuantileWindowFit {
    pub fn intercept(&self, year: i32) -> Result<f64> {
        self.intercepts
            .get(&year)
            .copied()
            .ok_or(Error::MissingIntercept { year })
    }

    /// Log VaR at covariates `x` in `year`.
    pub fn log_var(&self, x: &[f64], year: i32) -> Result<f64> {
        Ok(self.intercept(year)? + dot(x, &self.slopes))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fitted VaR `exp(gamma + eta . x)`.
pub fn predict_var(x: &[f64], gamma: f64, eta: &[f64]) -> f64 {
    assert_eq!(x.len(), eta.len(), "covariate and slope dimensions differ");
    (gamma + dot(x, eta)).exp()
}

/// The check function `u (tau - 1{u < 0})`.
pub fn check_loss(u: f64, tau: f64) -> f64 {
    if u < 0.0 {
        u * (tau - 1.0)
    } else {
        u * tau
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Perturbation coefficient for a frame row, uniform on (0, 1).
fn perturbation(row: usize) -> f64 {
    ((splitmix(row as u64) >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}

pub(crate) struct QuantileCore {
    pub theta: Vec<f64>,
    /// Window-row indices of the final basis.
    pub basis: Vec<usize>,
    pub pivots: usize,
    pub converged: bool,
    pub degenerate: bool,
}

struct Solver<'a> {
    plan: &'a WindowPlan,
    w: &'a [f64],
    tau: f64,
    ng: usize,
    p: usize,
    n: usize,
    c: Vec<f64>,
    tol_r: f64,
    tol_slope: f64,
}

impl<'a> Solver<'a> {
    fn new(plan: &'a WindowPlan, w: &'a [f64], tau: f64) -> Self {
        let ymax = plan.y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let wsum: f64 = w.iter().sum();
        Self {
            plan,
            w,
            tau,
            ng: plan.n_groups(),
            p: plan.n_params(),
            n: plan.n_rows(),
            c: plan.rows.iter().map(|&r| perturbation(r)).collect(),
            tol_r: 1e-11 * (1.0 + ymax),
            tol_slope: 1e-10 * wsum.max(f64::MIN_POSITIVE),
        }
    }

    fn x_dense(&self, i: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.p];
        x[self.plan.slot[i]] = 1.0;
        x[self.ng..].copy_from_slice(self.plan.z_row(i));
        x
    }

    fn basis_matrix(&self, basis: &[usize]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.p, self.p);
        for (k, &i) in basis.iter().enumerate() {
            m[(k, self.plan.slot[i])] = 1.0;
            for (a, v) in self.plan.z_row(i).iter().enumerate() {
                m[(k, self.ng + a)] = *v;
            }
        }
        m
    }

    /// Weighted least squares slopes, then per-year lower weighted quantiles of
    /// the partial residuals as intercepts.
    fn initial_theta(&self) -> Vec<f64> {
        let (ng, q, p) = (self.ng, self.plan.q(), self.p);
        let mut theta = vec![0.0; p];
        if q > 0 {
            let mut a = DMatrix::zeros(p, p);
            let mut b = DVector::zeros(p);
            for i in 0..self.n {
                let w = self.w[i];
                let g = self.plan.slot[i];
                let z = self.plan.z_row(i);
                let y = self.plan.y[i];
                a[(g, g)] += w;
                b[g] += w * y;
                for k in 0..q {
                    a[(g, ng + k)] += w * z[k];
                    b[ng + k] += w * z[k] * y;
                    for l in k..q {
                        a[(ng + k, ng + l)] += w * z[k] * z[l];
                    }
                }
            }
            for r in 0..p {
                for c in 0..r {
                    a[(r, c)] = a[(c, r)];
                }
            }
            if let Some(sol) = linalg::solve_spd(&a, &b) {
                theta[ng..].copy_from_slice(&sol.as_slice()[ng..]);
            }
        }
        let mut groups: Vec<Vec<(f64, f64)>> = vec![Vec::new(); ng];
        for i in 0..self.n {
            let partial = self.plan.y[i] - dot(self.plan.z_row(i), &theta[ng..]);
            groups[self.plan.slot[i]].push((partial, self.w[i]));
        }
        for (g, pairs) in groups.iter_mut().enumerate() {
            theta[g] = linalg::weighted_quantile_lower(pairs, self.tau);
        }
        theta
    }

    /// Picks `p` linearly independent rows, closest to the starting fit first.
    fn initial_basis(&self) -> Result<Vec<usize>> {
        let theta = self.initial_theta();
        let mut order: Vec<(f64, usize)> = (0..self.n)
            .map(|i| ((self.plan.y[i] - self.plan.linear(i, &theta)).abs(), i))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut q: Vec<Vec<f64>> = Vec::with_capacity(self.p);
        let mut basis = Vec::with_capacity(self.p);
        for &(_, i) in &order {
            let x = self.x_dense(i);
            let norm0 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut v = x;
            for _ in 0..2 {
                for u in &q {
                    let proj = dot(u, &v);
                    for (vi, ui) in v.iter_mut().zip(u) {
                        *vi -= proj * ui;
                    }
                }
            }
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm > 1e-8 * norm0.max(1.0) {
                v.iter_mut().for_each(|a| *a /= norm);
                q.push(v);
                basis.push(i);
                if basis.len() == self.p {
                    return Ok(basis);
                }
            }
        }
        Err(Error::Solver(format!(
            "design has rank {} below {} parameters",
            basis.len(),
            self.p
        )))
    }

    fn solve(&self, warm: Option<&[usize]>) -> Result<QuantileCore> {
        let mut basis = match warm {
            Some(b) if b.len() == self.p && b.iter().all(|&i| i < self.n) => {
                let m = self.basis_matrix(b);
                if linalg::invert(&m).is_some() {
                    b.to_vec()
                } else {
                    self.initial_basis()?
                }
            }
            _ => self.initial_basis()?,
        };
        let (n, p, ng, tau) = (self.n, self.p, self.ng, self.tau);
        let mut in_basis = vec![false; n];
        let mut r = vec![0.0; n];
        let mut qv = vec![0.0; n];
        let mut a = vec![0.0; n];
        let mut cand: Vec<(f64, f64, f64, usize)> = Vec::with_capacity(n);
        let mut pivots = 0;

        loop {
            let xb = self.basis_matrix(&basis);
            let m = linalg::invert(&xb).ok_or_else(|| Error::Solver("singular basis".into()))?;
            let yb = DVector::from_iterator(p, basis.iter().map(|&i| self.plan.y[i]));
            let cb = DVector::from_iterator(p, basis.iter().map(|&i| self.c[i]));
            let theta = &m * yb;
            let u = &m * cb;
            in_basis.iter_mut().for_each(|b| *b = false);
            for &i in &basis {
                in_basis[i] = true;
            }

            let mut g = DVector::<f64>::zeros(p);
            for i in 0..n {
                if in_basis[i] {
                    r[i] = 0.0;
                    qv[i] = 0.0;
                    continue;
                }
                let ri = self.plan.y[i] - self.plan.linear(i, theta.as_slice());
                r[i] = if ri.abs() <= self.tol_r { 0.0 } else { ri };
                qv[i] = self.c[i] - self.plan.linear(i, u.as_slice());
                let negative = r[i] < 0.0 || (r[i] == 0.0 && qv[i] < 0.0);
                let psi = self.w[i] * if negative { tau - 1.0 } else { tau };
                g[self.plan.slot[i]] += psi;
                for (k, z) in self.plan.z_row(i).iter().enumerate() {
                    g[ng + k] += psi * z;
                }
            }
            let cvec = m.tr_mul(&g);

            // Edge slopes: `+` moves theta by +M e_k (row k's residual turns
            // negative), `-` by -M e_k.
            let slope = |k: usize, sigma: f64| -> f64 {
                let wk = self.w[basis[k]];
                if sigma > 0.0 {
                    wk * (1.0 - tau) - cvec[k]
                } else {
                    wk * tau + cvec[k]
                }
            };
            let mut best: Option<(usize, f64, f64)> = None;
            for k in 0..p {
                for sigma in [1.0, -1.0] {
                    let s = slope(k, sigma);
                    if s < -self.tol_slope && best.is_none_or(|b| s < b.2) {
                        best = Some((k, sigma, s));
                    }
                }
            }
            let mut degenerate = false;
            let mut tilt_edges = Vec::new();
            if best.is_none() {
                for k in 0..p {
                    for sigma in [1.0, -1.0] {
                        if slope(k, sigma).abs() <= self.tol_slope {
                            degenerate = true;
                            let col = m.column(k);
                            let scale = col.amax();
                            let lead = col.iter().find(|v| v.abs() > 1e-12 * scale).copied().unwrap_or(0.0);
                            if sigma * lead < 0.0 {
                                tilt_edges.push((k, sigma, slope(k, sigma)));
                            }
                        }
                    }
                }
            }
            let edges: Vec<(usize, f64, f64)> = match best {
                Some(b) => vec![b],
                None => tilt_edges,
            };
            if edges.is_empty() {
                return Ok(QuantileCore {
                    theta: theta.as_slice().to_vec(),
                    basis,
                    pivots,
                    converged: true,
                    degenerate,
                });
            }
            if pivots >= MAX_PIVOTS {
                return Ok(QuantileCore {
                    theta: theta.as_slice().to_vec(),
                    basis,
                    pivots,
                    converged: false,
                    degenerate,
                });
            }

            let mut entering = None;
            for &(k, sigma, s0) in &edges {
                let d: Vec<f64> = m.column(k).iter().map(|v| sigma * v).collect();
                let dmax = d.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
                let zmax = self.plan.z.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
                let tiny = 1e-13 * dmax * zmax;
                cand.clear();
                for i in 0..n {
                    if in_basis[i] {
                        continue;
                    }
                    a[i] = d[self.plan.slot[i]] + dot(self.plan.z_row(i), &d[ng..]);
                    if a[i].abs() <= tiny {
                        continue;
                    }
                    let s = r[i] / a[i];
                    let t = qv[i] / a[i];
                    if s > 0.0 || (s == 0.0 && t > 0.0) {
                        cand.push((s, t, self.w[i] * a[i].abs(), i));
                    }
                }
                let need = (-s0).max(f64::MIN_POSITIVE);
                let total: f64 = cand.iter().map(|c| c.2).sum();
                if cand.is_empty() || total < need {
                    if s0 < -self.tol_slope {
                        return Err(Error::Solver("objective unbounded along an edge".into()));
                    }
                    continue;
                }
                entering = Some((k, first_crossing(&mut cand, need)));
                break;
            }
            match entering {
                Some((k, j)) => {
                    basis[k] = j;
                    pivots += 1;
                }
                None => {
                    return Ok(QuantileCore {
                        theta: theta.as_slice().to_vec(),
                        basis,
                        pivots,
                        converged: true,
                        degenerate,
                    })
                }
            }
        }
    }
}

fn lex(a: &(f64, f64, f64, usize), b: &(f64, f64, f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.3.cmp(&b.3))
}

/// Row at which the running sum of increments, taken in breakpoint order,
/// first reaches `need`. Expected linear time.
fn first_crossing(cand: &mut [(f64, f64, f64, usize)], mut need: f64) -> usize {
    let (mut lo, mut hi) = (0, cand.len());
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        cand[lo..hi].select_nth_unstable_by(mid - lo, lex);
        let left: f64 = cand[lo..mid].iter().map(|c| c.2).sum();
        if left >= need {
            hi = mid;
        } else {
            need -= left;
            lo = mid;
        }
    }
    cand[lo].3
}

pub(crate) fn fit_plan(
    plan: &WindowPlan,
    w: &[f64],
    tau: f64,
    warm: Option<&[usize]>,
) -> Result<QuantileCore> {
    Solver::new(plan, w, tau).solve(warm)
}

/// Rejects windows the solver cannot handle.
pub(crate) fn check_window(frame: &ModelFrame, plan: &WindowPlan, w: &[f64], tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidInput(format!("tau {tau} outside (0, 1)")));
    }
    let params = plan.n_params();
    for year in [plan.t, plan.t + 1] {
        if !plan.has_year(year) {
            return Err(Error::InsufficientData { year, rows: 0, params });
        }
    }
    if plan.n_rows() < params {
        return Err(Error::InsufficientData {
            year: plan.t,
            rows: plan.n_rows(),
            params,
        });
    }
    if frame.channel == Channel::SevT {
        for year in [plan.t, plan.t + 1] {
            let (mut zero, mut total) = (0.0, 0.0);
            for (i, &r) in plan.rows.iter().enumerate() {
                if frame.years[r] == year {
                    total += w[i];
                    if frame.is_zero[r] {
                        zero += w[i];
                    }
                }
            }
            let share = zero / total;
            if share >= tau {
                return Err(Error::QuantileBelowMass { year, tau, zero_share: share });
            }
        }
    }
    Ok(())
}

pub(crate) fn assemble(
    plan: &WindowPlan,
    frame: &ModelFrame,
    w: &[f64],
    tau: f64,
    core: QuantileCore,
) -> QuantileWindowFit {
    let ng = plan.n_groups();
    let (mut objective, mut neg, mut total) = (0.0, 0.0, 0.0);
    let tol = 1e-11 * (1.0 + plan.y.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    for i in 0..plan.n_rows() {
        let u = plan.y[i] - plan.linear(i, &core.theta);
        objective += w[i] * check_loss(u, tau);
        total += w[i];
        if u < -tol {
            neg += w[i];
        }
    }
    let mut warnings = Vec::new();
    if core.degenerate {
        warnings.push(FitWarning::DegenerateOptimum);
    }
    if !core.converged {
        warnings.push(FitWarning::NonConvergence);
    }
    QuantileWindowFit {
        t: plan.t,
        window: (plan.start, plan.end),
        tau,
        intercepts: plan.years.iter().copied().zip(core.theta[..ng].iter().copied()).collect(),
        slopes: plan.expand_slopes(&core.theta[ng..]),
        dropped_columns: plan.dropped.iter().map(|&j| frame.columns[j].clone()).collect(),
        objective,
        negative_fraction: if total > 0.0 { neg / total } else { 0.0 },
        converged: core.converged,
        pivots: core.pivots,
        warnings,
        basis: core.basis.iter().map(|&i| plan.rows[i]).collect(),
    }
}

/// Fits the window for target year `t`. `weights` has one entry per frame row.
pub fn fit_window_quantile(
    frame: &ModelFrame,
    t: i32,
    window_len: usize,
    tau: f64,
    weights: &[f64],
) -> Result<QuantileWindowFit> {
    if weights.len() != frame.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: frame.n_rows(),
            got: weights.len(),
        });
    }
    let plan = WindowPlan::new(frame, t, window_len)?;
    let w = plan.gather(weights);
    check_window(frame, &plan, &w, tau)?;
    let core = fit_plan(&plan, &w, tau, None)?;
    Ok(assemble(&plan, frame, &w, tau, core))
}
