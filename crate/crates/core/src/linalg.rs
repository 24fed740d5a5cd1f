//! Dense row-major matrices and the handful of kernels the solvers need:
//! norms, shifted Gram matrices, Cholesky, log-determinants, SPD solves and
//! power-iteration spectral norms.

use std::fmt;

use crate::error::{Error, Result};

/// Rectangular matrix of `f64` stored in row-major order.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    /// Builds a matrix from row-major data, rejecting wrong lengths and
    /// non-finite values.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::input(format!(
                "expected {} values for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!(
                "non-finite entry at ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Convenience constructor for literals; panics on ragged input.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Stacks column vectors side by side.
    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Self {
        let cols = columns.len();
        let mut m = Self::zeros(rows, cols);
        for (j, col) in columns.iter().enumerate() {
            m.set_column(j, col);
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[f64]) {
        assert_eq!(values.len(), self.rows);
        for (i, &v) in values.iter().enumerate() {
            self.set(i, j, v);
        }
    }

    /// New matrix made of the listed columns, in order.
    pub fn select_columns(&self, indices: &[usize]) -> Self {
        Self::from_fn(self.rows, indices.len(), |i, t| self.get(i, indices[t]))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// `self · other`.
    pub fn matmul(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows, other.cols);
        self.matmul_into(other, &mut out);
        out
    }

    /// `self · other` written into a preallocated output.
    pub fn matmul_into(&self, other: &Self, out: &mut Self) {
        assert_eq!(self.cols, other.rows, "matmul: inner dimensions differ");
        assert_eq!(out.shape(), (self.rows, other.cols));
        let n = other.cols;
        out.data.fill(0.0);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * n..(k + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
    }

    /// `selfᵀ · other` without forming the transpose.
    pub fn t_matmul(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.cols, other.cols);
        self.t_matmul_into(other, &mut out);
        out
    }

    pub fn t_matmul_into(&self, other: &Self, out: &mut Self) {
        assert_eq!(self.rows, other.rows, "t_matmul: row counts differ");
        assert_eq!(out.shape(), (self.cols, other.cols));
        let n = other.cols;
        out.data.fill(0.0);
        for k in 0..self.rows {
            let a_row = self.row(k);
            let b_row = other.row(k);
            for (i, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * n..(i + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
    }

    /// `self · otherᵀ` without forming the transpose.
    pub fn matmul_t(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows, other.rows);
        self.matmul_t_into(other, &mut out);
        out
    }

    pub fn matmul_t_into(&self, other: &Self, out: &mut Self) {
        assert_eq!(self.cols, other.cols, "matmul_t: column counts differ");
        assert_eq!(out.shape(), (self.rows, other.rows));
        for i in 0..self.rows {
            let a = self.row(i);
            for j in 0..other.rows {
                out.data[i * other.rows + j] = dot(a, other.row(j));
            }
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    /// `self += alpha · other`.
    pub fn axpy(&mut self, alpha: f64, other: &Self) {
        assert_eq!(self.shape(), other.shape());
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.shape(), other.shape(), "shape mismatch");
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Sum of squared entries. No finiteness check; see [`frobenius_norm`].
    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Frobenius inner product `⟨self, other⟩`.
    pub fn inner(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape());
        dot(&self.data, &other.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// Column sums as a vector of length `cols`.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (s, v) in sums.iter_mut().zip(self.row(i)) {
                *s += v;
            }
        }
        sums
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `‖M‖_F`; rejects matrices with NaN or infinite entries.
pub fn frobenius_norm(m: &DenseMatrix) -> Result<f64> {
    if !m.is_finite() {
        return Err(Error::input("frobenius_norm: matrix has non-finite entries"));
    }
    Ok(m.norm_sq().sqrt())
}

/// `WᵀW + δI`.
pub fn gram_shifted(w: &DenseMatrix, delta: f64) -> Result<DenseMatrix> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::param(format!("delta must be positive, got {delta}")));
    }
    let mut q = w.t_matmul(w);
    let r = q.rows();
    // exact symmetry: mirror the upper triangle
    for i in 0..r {
        for j in 0..i {
            let v = q.get(j, i);
            q.set(i, j, v);
        }
        let d = q.get(i, i);
        q.set(i, i, d + delta);
    }
    Ok(q)
}

/// Lower-triangular Cholesky factor `L` with `L·Lᵀ = Q`.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    lower: DenseMatrix,
}

impl SpdFactor {
    pub fn dimension(&self) -> usize {
        self.lower.rows()
    }

    pub fn lower(&self) -> &DenseMatrix {
        &self.lower
    }

    /// `2 Σ ln Lᵢᵢ`.
    pub fn logdet(&self) -> f64 {
        2.0 * (0..self.dimension())
            .map(|i| self.lower.get(i, i).ln())
            .sum::<f64>()
    }
}

const SYMMETRY_TOL: f64 = 1e-10;

pub fn cholesky(q: &DenseMatrix) -> Result<SpdFactor> {
    let n = q.rows();
    if q.cols() != n {
        return Err(Error::input(format!(
            "cholesky: matrix is {}x{}, not square",
            q.rows(),
            q.cols()
        )));
    }
    if !q.is_finite() {
        return Err(Error::input("cholesky: matrix has non-finite entries"));
    }
    for i in 0..n {
        for j in 0..i {
            if (q.get(i, j) - q.get(j, i)).abs() > SYMMETRY_TOL {
                return Err(Error::input(format!(
                    "cholesky: matrix not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = q.get(j, j);
        for k in 0..j {
            d -= l.get(j, k) * l.get(j, k);
        }
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite { index: j, pivot: d });
        }
        let ljj = d.sqrt();
        l.set(j, j, ljj);
        for i in j + 1..n {
            let mut s = q.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, s / ljj);
        }
    }
    Ok(SpdFactor { lower: l })
}

pub fn logdet_spd(q: &DenseMatrix) -> Result<f64> {
    Ok(cholesky(q)?.logdet())
}

/// Solves `Q·Y = B` given the Cholesky factor of `Q`.
pub fn solve_spd(factor: &SpdFactor, b: &DenseMatrix) -> Result<DenseMatrix> {
    let n = factor.dimension();
    if b.rows() != n {
        return Err(Error::input(format!(
            "solve_spd: factor has dimension {n}, right-hand side has {} rows",
            b.rows()
        )));
    }
    let l = &factor.lower;
    let mut y = b.clone();
    for c in 0..b.cols() {
        // forward: L z = b
        for i in 0..n {
            let mut s = y.get(i, c);
            for k in 0..i {
                s -= l.get(i, k) * y.get(k, c);
            }
            y.set(i, c, s / l.get(i, i));
        }
        // backward: Lᵀ x = z
        for i in (0..n).rev() {
            let mut s = y.get(i, c);
            for k in i + 1..n {
                s -= l.get(k, i) * y.get(k, c);
            }
            y.set(i, c, s / l.get(i, i));
        }
    }
    Ok(y)
}

/// Inverse of an SPD matrix through its Cholesky factor, symmetrized.
pub fn inverse_spd(factor: &SpdFactor) -> Result<DenseMatrix> {
    let n = factor.dimension();
    let mut inv = solve_spd(factor, &DenseMatrix::identity(n))?;
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (inv.get(i, j) + inv.get(j, i));
            inv.set(i, j, v);
            inv.set(j, i, v);
        }
    }
    Ok(inv)
}

const POWER_MAX_ITERS: usize = 10_000;

/// Largest singular value of `M` by power iteration on the smaller of
/// `MᵀM` and `MMᵀ`, starting from the normalized all-ones vector.
pub fn spectral_norm(m: &DenseMatrix, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::param(format!("spectral_norm: tol must be positive, got {tol}")));
    }
    if !m.is_finite() {
        return Err(Error::input("spectral_norm: matrix has non-finite entries"));
    }
    if m.max_abs() == 0.0 {
        return Ok(0.0);
    }
    let gram = if m.cols() <= m.rows() {
        m.t_matmul(m)
    } else {
        m.matmul_t(m)
    };
    let n = gram.rows();
    let start = vec![1.0 / (n as f64).sqrt(); n];
    let mut eig = power_iterate(&gram, start, tol);
    if eig == 0.0 {
        // all-ones start orthogonal to the range; retry from the heaviest coordinate
        let k = (0..n)
            .max_by(|&a, &b| gram.get(a, a).total_cmp(&gram.get(b, b)))
            .unwrap_or(0);
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        eig = power_iterate(&gram, e, tol);
    }
    Ok(eig.max(0.0).sqrt())
}

/// Dominant eigenvalue of a symmetric PSD matrix by power iteration.
fn power_iterate(g: &DenseMatrix, mut v: Vec<f64>, tol: f64) -> f64 {
    let n = g.rows();
    let mut w = vec![0.0; n];
    let mut est = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        for (i, wi) in w.iter_mut().enumerate() {
            *wi = dot(g.row(i), &v);
        }
        let norm = dot(&w, &w).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        // Rayleigh quotient with unit v
        let next = dot(&v, &w);
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / norm;
        }
        let converged = (next - est).abs() <= tol * next.abs();
        est = next;
        if converged {
            break;
        }
    }
    // ‖Gv‖ for the final unit v is at least the Rayleigh value
    for (i, wi) in w.iter_mut().enumerate() {
        *wi = dot(g.row(i), &v);
    }
    dot(&w, &w).sqrt().max(est)
}
