//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

/// Solves `a x = b` for symmetric positive definite `a`.
pub(crate) fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let chol = a.clone().cholesky()?;
    let x = chol.solve(b);
    x.iter().all(|v| v.is_finite()).then_some(x)
}

pub(crate) fn invert(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let inv = a.clone().try_inverse()?;
    inv.iter().all(|v| v.is_finite()).then_some(inv)
}

/// Indices of a maximal linearly independent set of columns, scanning in order.
///
/// Runs a Cholesky factorisation of the Gram matrix and skips any column whose
/// pivot falls below `rel_tol` times its diagonal entry.
pub(crate) fn independent_columns(gram: &DMatrix<f64>, rel_tol: f64) -> Vec<usize> {
    let n = gram.nrows();
    let mut kept: Vec<usize> = Vec::new();
    // Rows of L for kept columns, each of length kept.len() at insertion time.
    let mut l: Vec<Vec<f64>> = Vec::new();
    for j in 0..n {
        let gjj = gram[(j, j)];
        if !(gjj > 0.0) {
            continue;
        }
        let mut row = Vec::with_capacity(kept.len());
        for (a, &ka) in kept.iter().enumerate() {
            let dot: f64 = (0..a).map(|b| row[b] * l[a][b]).sum();
            row.push((gram[(j, ka)] - dot) / l[a][a]);
        }
        let pivot = gjj - row.iter().map(|v| v * v).sum::<f64>();
        if pivot > rel_tol * gjj {
            row.push(pivot.sqrt());
            l.push(row);
            kept.push(j);
        }
    }
    kept
}

/// Lower weighted `tau`-quantile: the smallest value whose cumulative weight
/// reaches `tau` times the total.
pub(crate) fn weighted_quantile_lower(pairs: &mut [(f64, f64)], tau: f64) -> f64 {
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let target = tau * total;
    let mut acc = 0.0;
    for &(v, w) in pairs.iter() {
        acc += w;
        if acc >= target * (1.0 - 1e-12) {
            return v;
        }
    }
    pairs.last().map_or(f64::NAN, |p| p.0)
}
