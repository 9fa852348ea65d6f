//! Rolling-window row selection shared by the logistic and quantile fitters.
//!
//! A window for target year `t` pools the years `[t - len + 1, t + 1]` that are
//! present in the frame. Each pooled year gets its own intercept; covariate
//! slopes are shared. Covariate columns that are constant, all zero or
//! collinear with earlier columns inside the window are dropped before fitting
//! and reported with a zero slope.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data_model::ModelFrame;
use crate::linalg;
use crate::{Error, Result};

const COLLINEAR_TOL: f64 = 1e-10;

/// Non-fatal conditions attached to a window fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FitWarning {
    /// A coefficient hit the divergence cap (perfect or quasi separation).
    Separation,
    /// The information matrix was singular; gradient steps were used.
    Collinearity,
    /// Iteration limit reached before the convergence test passed.
    NonConvergence,
    /// The quantile objective has more than one optimal basis.
    DegenerateOptimum,
}

#[derive(Debug, Clone)]
pub struct WindowPlan {
    /// Target year: the window supports the rate from `t` to `t + 1`.
    pub t: i32,
    /// Nominal window bounds before intersecting with the data.
    pub start: i32,
    pub end: i32,
    /// Years with at least one row, ascending. Intercept `g` belongs to `years[g]`.
    pub years: Vec<i32>,
    /// Frame rows in the window.
    pub rows: Vec<usize>,
    /// Intercept slot of each window row.
    pub slot: Vec<usize>,
    /// Frame column indices kept for fitting.
    pub active: Vec<usize>,
    /// Frame column indices dropped as dependent.
    pub dropped: Vec<usize>,
    /// Active covariates, row-major, `rows.len() * active.len()`.
    pub z: Vec<f64>,
    /// Responses of the window rows.
    pub y: Vec<f64>,
    n_frame_cols: usize,
}

impl WindowPlan {
    pub fn new(frame: &ModelFrame, t: i32, window_len: usize) -> Result<Self> {
        if window_len < 2 {
            return Err(Error::InvalidInput(format!("window length {window_len} is below 2")));
        }
        let start = t - window_len as i32 + 1;
        let end = t + 1;
        let rows: Vec<usize> = (0..frame.n_rows())
            .filter(|&r| (start..=end).contains(&frame.years[r]))
            .collect();
        if rows.is_empty() {
            return Err(Error::EmptyYear { year: t });
        }
        let mut years: Vec<i32> = rows.iter().map(|&r| frame.years[r]).collect();
        years.sort_unstable();
        years.dedup();
        let slot: Vec<usize> = rows
            .iter()
            .map(|&r| years.binary_search(&frame.years[r]).unwrap())
            .collect();

        let ng = years.len();
        let k = frame.n_cols();
        let mut gram = DMatrix::<f64>::zeros(ng + k, ng + k);
        for (i, &r) in rows.iter().enumerate() {
            let x = frame.row(r);
            let g = slot[i];
            gram[(g, g)] += 1.0;
            for a in 0..k {
                gram[(g, ng + a)] += x[a];
                for b in a..k {
                    gram[(ng + a, ng + b)] += x[a] * x[b];
                }
            }
        }
        for a in 0..ng + k {
            for b in 0..a {
                gram[(a, b)] = gram[(b, a)];
            }
        }
        let kept = linalg::independent_columns(&gram, COLLINEAR_TOL);
        debug_assert!(kept[..ng].iter().copied().eq(0..ng));
        let active: Vec<usize> = kept.iter().filter(|&&j| j >= ng).map(|j| j - ng).collect();
        let dropped: Vec<usize> = (0..k).filter(|j| !active.contains(j)).collect();

        let mut z = Vec::with_capacity(rows.len() * active.len());
        for &r in &rows {
            let x = frame.row(r);
            z.extend(active.iter().map(|&j| x[j]));
        }
        let y = rows.iter().map(|&r| frame.responses[r]).collect();
        Ok(Self {
            t,
            start,
            end,
            years,
            rows,
            slot,
            active,
            dropped,
            z,
            y,
            n_frame_cols: k,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_groups(&self) -> usize {
        self.years.len()
    }

    /// Number of active covariates.
    pub fn q(&self) -> usize {
        self.active.len()
    }

    pub fn n_params(&self) -> usize {
        self.n_groups() + self.q()
    }

    pub fn z_row(&self, i: usize) -> &[f64] {
        let q = self.q();
        &self.z[i * q..(i + 1) * q]
    }

    /// `x_i . theta` with `theta = (intercepts, active slopes)`.
    pub fn linear(&self, i: usize, theta: &[f64]) -> f64 {
        let ng = self.n_groups();
        theta[self.slot[i]]
            + self
                .z_row(i)
                .iter()
                .zip(&theta[ng..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
    }

    /// Gathers per-frame-row weights onto the window rows.
    pub fn gather(&self, frame_weights: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|&r| frame_weights[r]).collect()
    }

    pub fn has_year(&self, year: i32) -> bool {
        self.years.binary_search(&year).is_ok()
    }

    /// Full-length slope vector with zeros in dropped columns.
    pub fn expand_slopes(&self, active_slopes: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_frame_cols];
        for (&j, &b) in self.active.iter().zip(active_slopes) {
            out[j] = b;
        }
        out
    }

    /// Rows counted per intercept slot.
    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.n_groups()];
        for &s in &self.slot {
            c[s] += 1;
        }
        c
    }
}
