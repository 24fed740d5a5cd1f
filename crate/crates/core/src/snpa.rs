//! Successive nonnegative projection algorithm (SNPA) for initializing both
//! solvers from near-separable data.

use crate::blocks::HBlock;
use crate::error::{Error, Result};
use crate::fgm::{self, FgmOptions};
use crate::linalg::{spectral_norm, DenseMatrix};

pub const SNPA_NNLS_ITERS: usize = 500;
pub const SNPA_NNLS_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct SnpaResult {
    /// Columns of `X` picked, in selection order.
    pub selected_indices: Vec<usize>,
    /// `X(:, selected_indices)`.
    pub w0: DenseMatrix,
    /// Capped-simplex coefficients fitting `X ≈ W0·H0`.
    pub h0: DenseMatrix,
    /// `‖X − W0·H0‖_F` after each selection.
    pub residual_norms: Vec<f64>,
}

/// Fits `min ‖X − WH‖²_F` with every column of `H` in the capped simplex,
/// by accelerated projected gradient started at `h_init`.
pub fn nnls_capped_simplex(
    w: &DenseMatrix,
    x: &DenseMatrix,
    h_init: &DenseMatrix,
    iters: usize,
    tol: f64,
) -> Result<DenseMatrix> {
    if w.rows() != x.rows() {
        return Err(Error::input(format!(
            "W has {} rows but X has {}",
            w.rows(),
            x.rows()
        )));
    }
    if h_init.shape() != (w.cols(), x.cols()) {
        return Err(Error::input(format!(
            "H_init is {:?}, expected {:?}",
            h_init.shape(),
            (w.cols(), x.cols())
        )));
    }
    if let Some(j) = (0..w.cols()).find(|&j| w.column(j).iter().all(|&v| v == 0.0)) {
        return Err(Error::input(format!("column {j} of W is identically zero")));
    }
    let mut block = HBlock::new(x, w);
    let lip = 2.0 * spectral_norm(block.gram(), 1e-10)?;
    let mut start = h_init.clone();
    crate::projections::project_h_columns_in_place(&mut start);
    let out = fgm::minimize(&mut block, start, lip, FgmOptions { max_iters: iters, tol });
    Ok(out.x)
}

/// Greedy column selection: at each step take the column of the current
/// residual with the largest ℓ₂ norm (lowest index on ties), then refit all
/// coefficients on the enlarged selection.
pub fn snpa(x: &DenseMatrix, r: usize) -> Result<SnpaResult> {
    let (m, n) = x.shape();
    if r == 0 || r > m.min(n) {
        return Err(Error::param(format!(
            "rank {r} outside 1..={} for a {m}x{n} matrix",
            m.min(n)
        )));
    }
    if !x.is_finite() {
        return Err(Error::input("X has non-finite entries"));
    }
    if x.min_value() < 0.0 {
        return Err(Error::input("X has negative entries"));
    }

    let mut selected: Vec<usize> = Vec::with_capacity(r);
    let mut residual = x.clone();
    let mut h = DenseMatrix::zeros(0, n);
    let mut residual_norms = Vec::with_capacity(r);

    for _ in 0..r {
        let scores = column_norms_sq(&residual);
        let mut best: Option<usize> = None;
        for (j, &s) in scores.iter().enumerate() {
            if selected.contains(&j) {
                continue;
            }
            if best.is_none_or(|b| s > scores[b]) {
                best = Some(j);
            }
        }
        let j = best.expect("r <= n leaves an unselected column");
        if x.column(j).iter().all(|&v| v == 0.0) {
            return Err(Error::input(format!(
                "X has fewer than {r} nonzero columns to select"
            )));
        }
        selected.push(j);

        let w0 = x.select_columns(&selected);
        // warm start: previous coefficients plus a zero row for the new column
        let mut h_init = DenseMatrix::zeros(selected.len(), n);
        h_init.as_mut_slice()[..h.as_slice().len()].copy_from_slice(h.as_slice());
        h = nnls_capped_simplex(&w0, x, &h_init, SNPA_NNLS_ITERS, SNPA_NNLS_TOL)?;
        residual = x.sub(&w0.matmul(&h));
        residual_norms.push(residual.norm_sq().sqrt());
    }

    Ok(SnpaResult {
        w0: x.select_columns(&selected),
        selected_indices: selected,
        h0: h,
        residual_norms,
    })
}

fn column_norms_sq(m: &DenseMatrix) -> Vec<f64> {
    let mut out = vec![0.0; m.cols()];
    for i in 0..m.rows() {
        for (o, v) in out.iter_mut().zip(m.row(i)) {
            *o += v * v;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projections::is_feasible;

    #[test]
    fn scalar_nnls() {
        let w = DenseMatrix::from_rows(&[&[2.0]]);
        let x = DenseMatrix::from_rows(&[&[1.0]]);
        let h = nnls_capped_simplex(&w, &x, &DenseMatrix::zeros(1, 1), 500, 1e-12).unwrap();
        assert!((h.get(0, 0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn nnls_self_representation() {
        let w = DenseMatrix::from_rows(&[&[1.0, 0.2, 0.0], &[0.0, 1.0, 0.3], &[0.5, 0.0, 1.0]]);
        let h = nnls_capped_simplex(&w, &w, &DenseMatrix::zeros(3, 3), 500, 1e-14).unwrap();
        let res = w.sub(&w.matmul(&h)).norm_sq().sqrt();
        assert!(res <= 1e-8 * w.norm_sq().sqrt(), "residual {res}");
        assert!(is_feasible(&w, &h));
    }

    #[test]
    fn nnls_rejects_zero_column() {
        let w = DenseMatrix::from_rows(&[&[1.0, 0.0], &[1.0, 0.0]]);
        let x = DenseMatrix::from_rows(&[&[1.0], &[1.0]]);
        assert!(matches!(
            nnls_capped_simplex(&w, &x, &DenseMatrix::zeros(2, 1), 10, 1e-8),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn snpa_rank_checks() {
        let x = DenseMatrix::from_rows(&[&[1.0, 0.0, 0.5], &[0.0, 1.0, 0.5]]);
        assert!(matches!(snpa(&x, 0), Err(Error::InvalidParameter(_))));
        assert!(matches!(snpa(&x, 3), Err(Error::InvalidParameter(_))));
        let neg = DenseMatrix::from_rows(&[&[1.0, -0.1], &[0.0, 1.0]]);
        assert!(matches!(snpa(&neg, 1), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn snpa_exhausts_columns() {
        let x = DenseMatrix::from_rows(&[&[1.0, 0.0, 0.3], &[0.0, 1.0, 0.2], &[0.2, 0.4, 1.0]]);
        let res = snpa(&x, 3).unwrap();
        let mut idx = res.selected_indices.clone();
        idx.sort();
        assert_eq!(idx, vec![0, 1, 2]);
        assert!(*res.residual_norms.last().unwrap() < 1e-10);
    }

    #[test]
    fn ties_break_to_lowest_index() {
        // identical columns: the first one is taken
        let x = DenseMatrix::from_rows(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let res = snpa(&x, 1).unwrap();
        assert_eq!(res.selected_indices, vec![0]);
    }
}
