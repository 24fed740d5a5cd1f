//! Euclidean projections onto the feasible set: `W ≥ 0`, and for every column
//! of `H` the capped simplex `{h ≥ 0, 1ᵀh ≤ 1}`.

use crate::linalg::DenseMatrix;

/// Slack allowed on column sums when checking feasibility.
pub const COLUMN_SUM_SLACK: f64 = 1e-12;

pub fn project_nonneg(m: &DenseMatrix) -> DenseMatrix {
    m.map(|v| v.max(0.0))
}

pub(crate) fn project_nonneg_in_place(m: &mut DenseMatrix) {
    for v in m.as_mut_slice() {
        *v = v.max(0.0);
    }
}

/// Projection onto `{h ≥ 0, 1ᵀh ≤ 1}`.
pub fn project_capped_simplex(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    let mut scratch = Vec::with_capacity(v.len());
    capped_simplex_in_place(&mut out, &mut scratch);
    out
}

fn capped_simplex_in_place(h: &mut [f64], scratch: &mut Vec<f64>) {
    let mut sum = 0.0;
    for x in h.iter_mut() {
        *x = x.max(0.0);
        sum += *x;
    }
    if sum <= 1.0 {
        return;
    }
    // Sort-and-threshold onto the unit simplex. Clamped zeros can be kept:
    // the threshold is positive here, so they never enter the support.
    scratch.clear();
    scratch.extend_from_slice(h);
    scratch.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (i, &u) in scratch.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if u - t > 0.0 {
            tau = t;
        } else {
            break;
        }
    }
    for x in h.iter_mut() {
        *x = (*x - tau).max(0.0);
    }
}

/// Applies [`project_capped_simplex`] to every column of `H`.
pub fn project_h_columns(h: &DenseMatrix) -> DenseMatrix {
    let mut out = h.clone();
    project_h_columns_in_place(&mut out);
    out
}

pub(crate) fn project_h_columns_in_place(h: &mut DenseMatrix) {
    let (r, n) = h.shape();
    let mut col = vec![0.0; r];
    let mut scratch = Vec::with_capacity(r);
    let data = h.as_mut_slice();
    for j in 0..n {
        for i in 0..r {
            col[i] = data[i * n + j];
        }
        capped_simplex_in_place(&mut col, &mut scratch);
        for i in 0..r {
            data[i * n + j] = col[i];
        }
    }
}

/// Membership test for the feasible set: `W ≥ 0`, `H ≥ 0` and column sums of
/// `H` at most `1 + COLUMN_SUM_SLACK`.
pub fn is_feasible(w: &DenseMatrix, h: &DenseMatrix) -> bool {
    w.min_value() >= 0.0
        && h.min_value() >= 0.0
        && h.column_sums().iter().all(|&s| s <= 1.0 + COLUMN_SUM_SLACK)
}
