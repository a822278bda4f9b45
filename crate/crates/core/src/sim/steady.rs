//! Steady state of the truncated chain from its global balance equations.
//!
//! Independent of the product form: the generator is assembled from the
//! transition rates and solved densely with one balance row replaced by the
//! normalization constraint.

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::partial::StationaryLaw;

/// Largest threshold the dense solve accepts by default (1891 states).
pub const DEFAULT_SOLVER_CAP: usize = 60;

fn state_index(n: usize, m: usize) -> usize {
    let d = n + m;
    d * (d + 1) / 2 + n
}

pub fn solve_steady_state(params: &ModelParams, threshold: usize) -> Result<StationaryLaw> {
    solve_steady_state_capped(params, threshold, DEFAULT_SOLVER_CAP)
}

pub fn solve_steady_state_capped(
    params: &ModelParams,
    threshold: usize,
    cap: usize,
) -> Result<StationaryLaw> {
    if threshold > cap {
        return Err(Error::ThresholdCap { k: threshold, cap });
    }
    let dim = (threshold + 1) * (threshold + 2) / 2;
    // Row j of `a` is the balance equation of state j: sum_i pi_i q_ij = 0.
    let mut a = vec![0.0; dim * dim];
    for d in 0..=threshold {
        for n in 0..=d {
            let m = d - n;
            let i = state_index(n, m);
            let mut out = 0.0;
            if d < threshold {
                a[state_index(n + 1, m) * dim + i] += params.lambda;
                out += params.lambda;
            }
            if n > 0 {
                a[state_index(n - 1, m + 1) * dim + i] += params.mu1;
                out += params.mu1;
            }
            if m > 0 {
                a[state_index(n, m - 1) * dim + i] += params.mu2;
                out += params.mu2;
            }
            a[i * dim + i] -= out;
        }
    }
    let last = dim - 1;
    a[last * dim..].fill(1.0);
    let mut b = vec![0.0; dim];
    b[last] = 1.0;

    let pi = gauss_solve(dim, &mut a, &mut b)?;
    let p00 = pi[0];
    Ok(StationaryLaw::from_fn(
        threshold,
        params.lambda / params.mu1,
        params.lambda / params.mu2,
        p00,
        |n, m| pi[state_index(n, m)],
    ))
}

/// Dense Gaussian elimination with partial pivoting on a row-major matrix.
pub(crate) fn gauss_solve(dim: usize, a: &mut [f64], b: &mut [f64]) -> Result<Vec<f64>> {
    for col in 0..dim {
        let pivot = (col..dim)
            .max_by(|&r, &s| a[r * dim + col].abs().total_cmp(&a[s * dim + col].abs()))
            .expect("non-empty pivot range");
        if a[pivot * dim + col] == 0.0 {
            return Err(Error::Singular(col));
        }
        if pivot != col {
            for j in 0..dim {
                a.swap(col * dim + j, pivot * dim + j);
            }
            b.swap(col, pivot);
        }
        let diag = a[col * dim + col];
        let (upper, lower) = a.split_at_mut((col + 1) * dim);
        let pivot_row = &upper[col * dim..];
        for (r, row) in lower.chunks_exact_mut(dim).enumerate() {
            let factor = row[col] / diag;
            if factor == 0.0 {
                continue;
            }
            for j in col..dim {
                row[j] -= factor * pivot_row[j];
            }
            b[col + 1 + r] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; dim];
    for i in (0..dim).rev() {
        let row = &a[i * dim..(i + 1) * dim];
        let s: f64 = (i + 1..dim).map(|j| row[j] * x[j]).sum();
        x[i] = (b[i] - s) / row[i];
    }
    Ok(x)
}
