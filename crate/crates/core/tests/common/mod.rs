//! Independent reference implementations used as test oracles. None of these
//! share code with the library kernels they check.

#![allow(dead_code)]

use minvol_core::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random::<f64>())
}

pub fn signed_uniform(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| 2.0 * rng.random::<f64>() - 1.0)
}

/// Random `AᵀA + shift·I`.
pub fn random_spd(n: usize, shift: f64, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let a = signed_uniform(n, n, rng);
    let mut q = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += a.get(k, i) * a.get(k, j);
            }
            q[i][j] = s + if i == j { shift } else { 0.0 };
        }
    }
    to_matrix(&q)
}

/// Columns in the capped simplex: a random point of the simplex scaled by a
/// random factor in `[0, 1]`.
pub fn random_feasible_h(r: usize, n: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let mut h = DenseMatrix::zeros(r, n);
    for j in 0..n {
        let raw: Vec<f64> = (0..r).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
        let total: f64 = raw.iter().sum();
        let scale: f64 = rng.random();
        for (i, v) in raw.iter().enumerate() {
            h.set(i, j, scale * v / total);
        }
    }
    h
}

pub fn to_rows(m: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

pub fn to_matrix(rows: &[Vec<f64>]) -> DenseMatrix {
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    DenseMatrix::from_rows(&refs)
}

pub fn naive_matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (m, k, n) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; n]; m];
    for i in 0..m {
        for j in 0..n {
            for t in 0..k {
                out[i][j] += a[i][t] * b[t][j];
            }
        }
    }
    out
}

/// Eigenvalues of a symmetric matrix by cyclic two-sided Jacobi rotations.
pub fn jacobi_eigenvalues(m: &DenseMatrix) -> Vec<f64> {
    let n = m.rows();
    let mut a = to_rows(m);
    for _ in 0..200 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-300 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// Singular values by one-sided Jacobi orthogonalization of the columns.
pub fn jacobi_singular_values(m: &DenseMatrix) -> Vec<f64> {
    let (rows, cols) = m.shape();
    let mut c: Vec<Vec<f64>> = (0..cols).map(|j| m.column(j)).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    for _ in 0..100 {
        let mut rotated = false;
        for i in 0..cols {
            for j in i + 1..cols {
                let alpha = dot(&c[i], &c[i]);
                let beta = dot(&c[j], &c[j]);
                let gamma = dot(&c[i], &c[j]);
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for k in 0..rows {
                    let (a, b) = (c[i][k], c[j][k]);
                    c[i][k] = cs * a - sn * b;
                    c[j][k] = sn * a + cs * b;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s: Vec<f64> = c.iter().map(|v| dot(v, v).sqrt()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Determinant by Laplace expansion along the first row.
pub fn det_cofactor(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    if n == 1 {
        return a[0][0];
    }
    let mut total = 0.0;
    for j in 0..n {
        let minor: Vec<Vec<f64>> = a[1..]
            .iter()
            .map(|row| row.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &v)| v).collect())
            .collect();
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * a[0][j] * det_cofactor(&minor);
    }
    total
}

/// Solves `A Y = B` by Gaussian elimination with partial pivoting.
pub fn lu_solve(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let k = b[0].len();
    let mut aug: Vec<Vec<f64>> = (0..n)
        .map(|i| a[i].iter().chain(b[i].iter()).copied().collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| aug[x][col].abs().total_cmp(&aug[y][col].abs()))
            .unwrap();
        aug.swap(col, pivot);
        for row in col + 1..n {
            let f = aug[row][col] / aug[col][col];
            for c in col..n + k {
                aug[row][c] -= f * aug[col][c];
            }
        }
    }
    let mut y = vec![vec![0.0; k]; n];
    for c in 0..k {
        for i in (0..n).rev() {
            let mut s = aug[i][n + c];
            for j in i + 1..n {
                s -= aug[i][j] * y[j][c];
            }
            y[i][c] = s / aug[i][i];
        }
    }
    y
}

/// Euclidean projection onto `{h ≥ 0, Σh ≤ 1}` by enumerating every active
/// set: each subset of coordinates pinned at zero, with the sum constraint
/// either active or not. The projection is the closest feasible candidate.
pub fn capped_simplex_qp(v: &[f64]) -> Vec<f64> {
    let k = v.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << k) {
        let free: Vec<usize> = (0..k).filter(|i| mask & (1 << i) == 0).collect();
        for sum_active in [false, true] {
            let mut x = vec![0.0; k];
            if sum_active {
                if free.is_empty() {
                    continue;
                }
                let tau = (free.iter().map(|&i| v[i]).sum::<f64>() - 1.0) / free.len() as f64;
                for &i in &free {
                    x[i] = v[i] - tau;
                }
            } else {
                for &i in &free {
                    x[i] = v[i];
                }
            }
            if x.iter().any(|&xi| xi < -1e-14) || x.iter().sum::<f64>() > 1.0 + 1e-12 {
                continue;
            }
            let d: f64 = x.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
            if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                best = Some((d, x));
            }
        }
    }
    best.expect("the origin is always a feasible candidate").1
}

pub fn permutations(r: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; r], &mut out);
    out
}

/// `Σ_t ‖Ŵ(:, π(t)) − W*(:, t)‖²` for a given matching.
pub fn matching_cost(w_star: &DenseMatrix, w_hat: &DenseMatrix, perm: &[usize]) -> f64 {
    perm.iter()
        .enumerate()
        .map(|(t, &p)| {
            (0..w_star.rows())
                .map(|i| (w_hat.get(i, p) - w_star.get(i, t)).powi(2))
                .sum::<f64>()
        })
        .sum()
}

/// Relative distance `‖a − b‖ / ‖b‖` between two matrices.
pub fn rel_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.sub(b).norm_sq().sqrt() / b.norm_sq().sqrt()
}

/// Central finite-difference gradient of `f` at `x`.
pub fn fd_gradient(x: &DenseMatrix, step: f64, mut f: impl FnMut(&DenseMatrix) -> f64) -> DenseMatrix {
    let mut g = DenseMatrix::zeros(x.rows(), x.cols());
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            let mut plus = x.clone();
            plus.set(i, j, x.get(i, j) + step);
            let mut minus = x.clone();
            minus.set(i, j, x.get(i, j) - step);
            g.set(i, j, (f(&plus) - f(&minus)) / (2.0 * step));
        }
    }
    g
}
