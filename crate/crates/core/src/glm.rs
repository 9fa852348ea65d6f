//! Weighted logistic regression over a rolling window.
//!
//! The model is `logit p_i = alpha_{year(i)} + beta . x_i` with one intercept
//! per window year and a shared slope vector. Fitting is Newton-Raphson on the
//! exact Hessian with step halving, starting from zero.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data_model::ModelFrame;
use crate::linalg;
use crate::window::{FitWarning, WindowPlan};
use crate::{Error, Result};

pub const GRADIENT_TOL: f64 = 1e-8;
pub const MAX_ITERATIONS: usize = 100;
/// Linear predictors are clamped to this magnitude before exponentiation.
pub const ETA_CLAMP: f64 = 35.0;
/// Coefficient magnitude treated as divergence when not converged.
pub const COEF_CAP: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticWindowFit {
    pub t: i32,
    /// Nominal window `[t - len + 1, t + 1]`.
    pub window: (i32, i32),
    pub intercepts: BTreeMap<i32, f64>,
    /// One slope per frame column; dropped columns carry 0.
    pub slopes: Vec<f64>,
    pub dropped_columns: Vec<String>,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    pub warnings: Vec<FitWarning>,
}

impl LogisticWindowFit {
    pub fn intercept(&self, year: i32) -> Result<f64> {
        self.intercepts
            .get(&year)
            .copied()
            .ok_or(Error::MissingIntercept { year })
    }

    pub fn predict(&self, x: &[f64], year: i32) -> Result<f64> {
        Ok(predict_prob(x, self.intercept(year)?, &self.slopes))
    }
}

#[inline]
pub(crate) fn sigmoid(eta: f64) -> f64 {
    let eta = eta.clamp(-ETA_CLAMP, ETA_CLAMP);
    1.0 / (1.0 + (-eta).exp())
}

/// `logit^-1(alpha + beta . x)`.
pub fn predict_prob(x: &[f64], alpha: f64, beta: &[f64]) -> f64 {
    assert_eq!(x.len(), beta.len(), "covariate and slope dimensions differ");
    sigmoid(alpha + x.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>())
}

/// Stable `y eta - log(1 + e^eta)`.
#[inline]
fn bernoulli_loglik(y: f64, eta: f64) -> f64 {
    let eta = eta.clamp(-ETA_CLAMP, ETA_CLAMP);
    let log1pexp = if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    };
    y * eta - log1pexp
}

fn loglik(plan: &WindowPlan, w: &[f64], theta: &[f64]) -> f64 {
    (0..plan.n_rows())
        .map(|i| w[i] * bernoulli_loglik(plan.y[i], plan.linear(i, theta)))
        .sum()
}

/// Gradient and information (negative Hessian) of the weighted log-likelihood.
fn derivatives(plan: &WindowPlan, w: &[f64], theta: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
    let ng = plan.n_groups();
    let q = plan.q();
    let p = ng + q;
    let mut grad = DVector::zeros(p);
    let mut info = DMatrix::zeros(p, p);
    for i in 0..plan.n_rows() {
        let pi = sigmoid(plan.linear(i, theta));
        let resid = w[i] * (plan.y[i] - pi);
        let v = w[i] * pi * (1.0 - pi);
        let g = plan.slot[i];
        let z = plan.z_row(i);
        grad[g] += resid;
        info[(g, g)] += v;
        for a in 0..q {
            grad[ng + a] += resid * z[a];
            let vz = v * z[a];
            info[(g, ng + a)] += vz;
            for b in a..q {
                info[(ng + a, ng + b)] += vz * z[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            info[(a, b)] = info[(b, a)];
        }
    }
    (grad, info)
}

pub(crate) struct LogisticCore {
    pub theta: Vec<f64>,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    pub warnings: Vec<FitWarning>,
}

pub(crate) fn fit_plan(plan: &WindowPlan, w: &[f64]) -> LogisticCore {
    let p = plan.n_params();
    let mut theta = vec![0.0; p];
    let mut ll = loglik(plan, w, &theta);
    let mut warnings = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut gnorm = f64::INFINITY;
    let total_w: f64 = w.iter().sum();

    while iterations < MAX_ITERATIONS {
        let (grad, info) = derivatives(plan, w, &theta);
        gnorm = grad.amax();
        if gnorm <= GRADIENT_TOL {
            converged = true;
            break;
        }
        if theta.iter().any(|v| v.abs() > COEF_CAP) {
            break;
        }
        iterations += 1;
        let step = match linalg::solve_spd(&info, &grad) {
            Some(s) => s,
            None => {
                if !warnings.contains(&FitWarning::Collinearity) {
                    warnings.push(FitWarning::Collinearity);
                }
                let scale = info.diagonal().amax().max(1e-12);
                grad.clone() / scale
            }
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        // Predicted gain below what the log-likelihood can resolve: the
        // comparison below is noise, so take the Newton step as is.
        let gain = grad.dot(&step);
        if gain.abs() <= 1e-10 * (1.0 + ll.abs()) {
            theta.iter_mut().zip(step.iter()).for_each(|(t, s)| *t += s);
            ll = loglik(plan, w, &theta);
            continue;
        }
        for _ in 0..40 {
            let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + lambda * s).collect();
            let ll_trial = loglik(plan, w, &trial);
            // Near the optimum the log-likelihood is flat to rounding; accept
            // steps that lose no more than that.
            if ll_trial >= ll - 1e-13 * (1.0 + ll.abs()) {
                theta = trial;
                ll = ll_trial;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            // No ascent left at machine precision.
            let (grad, _) = derivatives(plan, w, &theta);
            gnorm = grad.amax();
            converged = gnorm <= GRADIENT_TOL * total_w.max(1.0);
            break;
        }
    }
    if !converged {
        if theta.iter().any(|v| v.abs() > COEF_CAP) {
            warnings.push(FitWarning::Separation);
            for v in theta.iter_mut() {
                *v = v.clamp(-COEF_CAP, COEF_CAP);
            }
            ll = loglik(plan, w, &theta);
        } else {
            warnings.push(FitWarning::NonConvergence);
        }
    }
    LogisticCore {
        theta,
        loglik: ll,
        iterations,
        converged,
        gradient_norm: gnorm,
        warnings,
    }
}

pub(crate) fn assemble(plan: &WindowPlan, frame: &ModelFrame, core: LogisticCore) -> LogisticWindowFit {
    let ng = plan.n_groups();
    LogisticWindowFit {
        t: plan.t,
        window: (plan.start, plan.end),
        intercepts: plan.years.iter().copied().zip(core.theta[..ng].iter().copied()).collect(),
        slopes: plan.expand_slopes(&core.theta[ng..]),
        dropped_columns: plan.dropped.iter().map(|&j| frame.columns[j].clone()).collect(),
        loglik: core.loglik,
        iterations: core.iterations,
        converged: core.converged,
        gradient_norm: core.gradient_norm,
        warnings: core.warnings,
    }
}

/// Fits the window for target year `t`. `weights` has one entry per frame row.
pub fn fit_window_logistic(
    frame: &ModelFrame,
    t: i32,
    window_len: usize,
    weights: &[f64],
) -> Result<LogisticWindowFit> {
    if weights.len() != frame.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: frame.n_rows(),
            got: weights.len(),
        });
    }
    let plan = WindowPlan::new(frame, t, window_len)?;
    let w = plan.gather(weights);
    let core = fit_plan(&plan, &w);
    Ok(assemble(&plan, frame, core))
}
