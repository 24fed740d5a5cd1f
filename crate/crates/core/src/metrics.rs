//! Recovery metrics and the 2D PCA view used for scatter plots.

use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::{dot, DenseMatrix};

/// `‖X* − ŴĤ‖_F / ‖X*‖_F`.
pub fn rel_rmse_x(x_star: &DenseMatrix, w_hat: &DenseMatrix, h_hat: &DenseMatrix) -> Result<f64> {
    let denom = x_star.norm_sq().sqrt();
    if denom == 0.0 {
        return Err(Error::UndefinedMetric("‖X*‖_F is zero".into()));
    }
    if w_hat.rows() != x_star.rows() || h_hat.cols() != x_star.cols() || w_hat.cols() != h_hat.rows()
    {
        return Err(Error::input("factor shapes do not match X*"));
    }
    Ok(x_star.sub(&w_hat.matmul(h_hat)).norm_sq().sqrt() / denom)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentResult {
    /// `permutation[t]` is the column of `Ŵ` matched to column `t` of `W*`.
    pub permutation: Vec<usize>,
    /// `Ŵ` with columns reordered to line up with `W*`.
    pub aligned_w_hat: DenseMatrix,
    /// `Σ_t ‖Ŵ(:, π(t)) − W*(:, t)‖²`.
    pub cost: f64,
}

/// Column matching of `Ŵ` to `W*` minimizing total squared distance.
pub fn align_columns(w_star: &DenseMatrix, w_hat: &DenseMatrix) -> Result<AlignmentResult> {
    if w_star.shape() != w_hat.shape() {
        return Err(Error::input(format!(
            "W* is {:?} but Ŵ is {:?}",
            w_star.shape(),
            w_hat.shape()
        )));
    }
    let r = w_star.cols();
    let star_cols: Vec<Vec<f64>> = (0..r).map(|j| w_star.column(j)).collect();
    let hat_cols: Vec<Vec<f64>> = (0..r).map(|j| w_hat.column(j)).collect();
    let cost: Vec<Vec<f64>> = star_cols
        .iter()
        .map(|s| hat_cols.iter().map(|h| sq_dist(s, h)).collect())
        .collect();
    let permutation = hungarian(&cost);
    let total = permutation
        .iter()
        .enumerate()
        .map(|(t, &p)| cost[t][p])
        .sum();
    Ok(AlignmentResult {
        aligned_w_hat: w_hat.select_columns(&permutation),
        permutation,
        cost: total,
    })
}

/// `‖W* − Ŵ_aligned‖_F / ‖W*‖_F` after permutation alignment.
pub fn rel_rmse_w(w_star: &DenseMatrix, w_hat: &DenseMatrix) -> Result<f64> {
    let aligned = align_columns(w_star, w_hat)?;
    let denom = w_star.norm_sq().sqrt();
    if denom == 0.0 {
        return Err(Error::UndefinedMetric("‖W*‖_F is zero".into()));
    }
    Ok(w_star.sub(&aligned.aligned_w_hat).norm_sq().sqrt() / denom)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method
/// with potentials). Returns `assignment[row] = column`.
fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    // 1-based arrays; index 0 is the virtual source
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[matched_row[j] - 1] = j - 1;
    }
    assignment
}

/// Top-two principal directions of a column cloud, with the cloud and any
/// overlay column sets projected onto them.
#[derive(Debug, Clone)]
pub struct Pca2d {
    pub mean_column: Vec<f64>,
    pub basis: [Vec<f64>; 2],
    pub eigenvalues: Vec<f64>,
    pub projected_points: Vec<[f64; 2]>,
    pub projected_overlays: Vec<Vec<[f64; 2]>>,
}

impl Pca2d {
    /// Share of total variance captured by the two retained directions.
    pub fn captured_variance(&self) -> f64 {
        let total: f64 = self.eigenvalues.iter().sum();
        if total == 0.0 {
            return 1.0;
        }
        (self.eigenvalues[0] + self.eigenvalues.get(1).copied().unwrap_or(0.0)) / total
    }

    pub fn project(&self, column: &[f64]) -> [f64; 2] {
        let centered: Vec<f64> = column
            .iter()
            .zip(&self.mean_column)
            .map(|(c, m)| c - m)
            .collect();
        [dot(&self.basis[0], &centered), dot(&self.basis[1], &centered)]
    }

    /// CSV with header `set,index,pc1,pc2`; `labels` names each overlay set.
    pub fn to_csv(&self, labels: &[&str]) -> String {
        let mut out = String::from("set,index,pc1,pc2\n");
        for (i, p) in self.projected_points.iter().enumerate() {
            let _ = writeln!(out, "X,{i},{:.17e},{:.17e}", p[0], p[1]);
        }
        for (set, points) in self.projected_overlays.iter().enumerate() {
            let label = labels.get(set).copied().unwrap_or("overlay");
            for (i, p) in points.iter().enumerate() {
                let _ = writeln!(out, "{label},{i},{:.17e},{:.17e}", p[0], p[1]);
            }
        }
        out
    }
}

/// Fits the basis on the columns of `points` and projects `points` plus every
/// overlay set through the same centering and basis. Each basis vector is
/// signed so its largest-magnitude entry is positive.
pub fn pca_2d(points: &DenseMatrix, overlays: &[&DenseMatrix]) -> Result<Pca2d> {
    let (d, n) = points.shape();
    if n < 2 {
        return Err(Error::input("PCA needs at least two columns"));
    }
    if d < 2 {
        return Err(Error::input("PCA needs column dimension at least two"));
    }
    if let Some(o) = overlays.iter().find(|o| o.rows() != d) {
        return Err(Error::input(format!(
            "overlay has {} rows, points have {d}",
            o.rows()
        )));
    }
    let mean: Vec<f64> = (0..d)
        .map(|i| points.row(i).iter().sum::<f64>() / n as f64)
        .collect();
    let centered = DenseMatrix::from_fn(d, n, |i, j| points.get(i, j) - mean[i]);
    let cov = centered.matmul_t(&centered).scaled(1.0 / (n - 1) as f64);

    let eig = SymmetricEigen::new(DMatrix::from_row_slice(d, d, cov.as_slice()));
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k].max(0.0)).collect();
    let direction = |k: usize| -> Vec<f64> {
        let mut v: Vec<f64> = eig.eigenvectors.column(order[k]).iter().copied().collect();
        let norm = dot(&v, &v).sqrt();
        let pivot = v
            .iter()
            .copied()
            .fold(0.0_f64, |best, x| if x.abs() > best.abs() { x } else { best });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for x in &mut v {
            *x *= sign / norm;
        }
        v
    };
    let mut pca = Pca2d {
        mean_column: mean,
        basis: [direction(0), direction(1)],
        eigenvalues,
        projected_points: Vec::new(),
        projected_overlays: Vec::new(),
    };
    pca.projected_points = (0..n).map(|j| pca.project(&points.column(j))).collect();
    pca.projected_overlays = overlays
        .iter()
        .map(|o| (0..o.cols()).map(|j| pca.project(&o.column(j))).collect())
        .collect();
    Ok(pca)
}
