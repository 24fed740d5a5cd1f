//! The two block subproblems shared by SNPA and the min-vol solvers.
//!
//! Both are quadratics kept in Gram form, so an iteration costs `O(r²n)` for
//! `H` and `O(mr²)` for `W` instead of a full `m×n` residual.

use crate::fgm::BlockProblem;
use crate::linalg::DenseMatrix;
use crate::projections::{project_h_columns_in_place, project_nonneg_in_place};

fn symmetrized(mut m: DenseMatrix) -> DenseMatrix {
    let n = m.rows();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (m.get(i, j) + m.get(j, i));
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    m
}

/// `⟨to − from, P − 2Q⟩` where `P` is the product already written by the
/// caller for `from + to`.
fn quadratic_change(from: &DenseMatrix, to: &DenseMatrix, product: &DenseMatrix, linear: &DenseMatrix) -> f64 {
    from.as_slice()
        .iter()
        .zip(to.as_slice())
        .zip(product.as_slice().iter().zip(linear.as_slice()))
        .map(|((&a, &b), (&p, &q))| (b - a) * (p - 2.0 * q))
        .sum()
}

/// `H ↦ ‖X − WH‖²_F`, i.e. `⟨H, GH⟩ − 2⟨H, WᵀX⟩ + const` with `G = WᵀW`,
/// over capped-simplex columns.
pub(crate) struct HBlock {
    gram: DenseMatrix,
    wtx: DenseMatrix,
    sum: DenseMatrix,
    product: DenseMatrix,
}

impl HBlock {
    pub fn new(x: &DenseMatrix, w: &DenseMatrix) -> Self {
        let (r, n) = (w.cols(), x.cols());
        Self {
            gram: symmetrized(w.t_matmul(w)),
            wtx: w.t_matmul(x),
            sum: DenseMatrix::zeros(r, n),
            product: DenseMatrix::zeros(r, n),
        }
    }

    pub fn gram(&self) -> &DenseMatrix {
        &self.gram
    }
}

impl BlockProblem for HBlock {
    fn change(&mut self, from: &DenseMatrix, to: &DenseMatrix) -> f64 {
        self.sum.as_mut_slice().copy_from_slice(from.as_slice());
        self.sum.axpy(1.0, to);
        self.gram.matmul_into(&self.sum, &mut self.product);
        quadratic_change(from, to, &self.product, &self.wtx)
    }

    fn gradient(&mut self, h: &DenseMatrix, out: &mut DenseMatrix) {
        self.gram.matmul_into(h, out);
        for (g, &b) in out.as_mut_slice().iter_mut().zip(self.wtx.as_slice()) {
            *g = 2.0 * (*g - b);
        }
    }

    fn project(&self, h: &mut DenseMatrix) {
        project_h_columns_in_place(h);
    }
}

/// `W ↦ ‖X − WH‖²_F + λ·tr(A WᵀW)`, i.e. `⟨W, WM⟩ − 2⟨W, XHᵀ⟩ + const`
/// with `M = HHᵀ + λA`, over `W ≥ 0`.
pub(crate) struct WBlock {
    m: DenseMatrix,
    xht: DenseMatrix,
    sum: DenseMatrix,
    product: DenseMatrix,
}

impl WBlock {
    pub fn new(x: &DenseMatrix, h: &DenseMatrix, a: &DenseMatrix, lambda: f64) -> Self {
        let mut m = h.matmul_t(h);
        if lambda != 0.0 {
            m.axpy(lambda, a);
        }
        let (rows, r) = (x.rows(), h.rows());
        Self {
            m: symmetrized(m),
            xht: x.matmul_t(h),
            sum: DenseMatrix::zeros(rows, r),
            product: DenseMatrix::zeros(rows, r),
        }
    }
}

impl BlockProblem for WBlock {
    fn change(&mut self, from: &DenseMatrix, to: &DenseMatrix) -> f64 {
        self.sum.as_mut_slice().copy_from_slice(from.as_slice());
        self.sum.axpy(1.0, to);
        self.sum.matmul_into(&self.m, &mut self.product);
        quadratic_change(from, to, &self.product, &self.xht)
    }

    fn gradient(&mut self, w: &DenseMatrix, out: &mut DenseMatrix) {
        w.matmul_into(&self.m, out);
        for (g, &c) in out.as_mut_slice().iter_mut().zip(self.xht.as_slice()) {
            *g = 2.0 * (*g - c);
        }
    }

    fn project(&self, w: &mut DenseMatrix) {
        project_nonneg_in_place(w);
    }
}
