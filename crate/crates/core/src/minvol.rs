//! Baseline noisy min-vol NMF:
//!
//! ```text
//! min ‖X − WH‖²_F + λ·log det(WᵀW + δI)   s.t.  W ≥ 0, H ≥ 0, 1ᵀH(:,j) ≤ 1
//! ```
//!
//! solved by block coordinate descent. Each sweep replaces the log-det term
//! by its tangent at the current `W`, `tr(Q⁻¹ WᵀW)` with `Q = WᵀW + δI`,
//! minimizes that over `W` and then fits `H`, both with the projected fast
//! gradient method. The same routine is the inner solver of the square-root
//! variant.

use crate::blocks::{HBlock, WBlock};
use crate::error::{Error, Result};
use crate::fgm::{self, FgmOptions};
use crate::linalg::{cholesky, gram_shifted, inverse_spd, spectral_norm, DenseMatrix};
use crate::projections::{is_feasible, project_h_columns_in_place, project_nonneg_in_place};

const LIPSCHITZ_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct MinvolConfig {
    pub lambda: f64,
    pub delta: f64,
    /// Maximum number of (W, H) sweeps.
    pub outer_sweeps: usize,
    /// Fast-gradient iterations per block per sweep.
    pub inner_iters_per_block: usize,
    /// Stop when the relative objective change between sweeps drops below this.
    pub tol_rel_obj: f64,
    /// Relative step-size tolerance inside each block solve.
    pub inner_tol: f64,
}

impl Default for MinvolConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            delta: 0.1,
            outer_sweeps: 100,
            inner_iters_per_block: 50,
            tol_rel_obj: 1e-7,
            inner_tol: 1e-6,
        }
    }
}

impl MinvolConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::param(format!(
                "lambda must be finite and nonnegative, got {}",
                self.lambda
            )));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::param(format!("delta must be positive, got {}", self.delta)));
        }
        if self.outer_sweeps == 0 || self.inner_iters_per_block == 0 {
            return Err(Error::param("iteration budgets must be at least 1"));
        }
        if !(self.tol_rel_obj > 0.0) || !(self.inner_tol > 0.0) {
            return Err(Error::param("tolerances must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct MinvolState {
    pub w: DenseMatrix,
    pub h: DenseMatrix,
    /// Objective at the initialization followed by one value per sweep.
    pub objective_history: Vec<f64>,
}

impl MinvolState {
    pub fn sweeps(&self) -> usize {
        self.objective_history.len().saturating_sub(1)
    }

    pub fn final_objective(&self) -> f64 {
        *self.objective_history.last().expect("history holds the initial value")
    }
}

pub fn objective_minvol(
    x: &DenseMatrix,
    w: &DenseMatrix,
    h: &DenseMatrix,
    lambda: f64,
    delta: f64,
) -> Result<f64> {
    let fit = x.sub(&w.matmul(h)).norm_sq();
    if lambda == 0.0 {
        return Ok(fit);
    }
    let logdet = cholesky(&gram_shifted(w, delta)?)?.logdet();
    Ok(fit + lambda * logdet)
}

/// Gradient `(∇_W, ∇_H)` of the baseline objective:
/// `2(WH − X)Hᵀ + 2λ·W(WᵀW + δI)⁻¹` and `2Wᵀ(WH − X)`.
pub fn objective_minvol_gradient(
    x: &DenseMatrix,
    w: &DenseMatrix,
    h: &DenseMatrix,
    lambda: f64,
    delta: f64,
) -> Result<(DenseMatrix, DenseMatrix)> {
    let resid = w.matmul(h).sub(x);
    let mut grad_w = resid.matmul_t(h).scaled(2.0);
    if lambda != 0.0 {
        let q_inv = inverse_spd(&cholesky(&gram_shifted(w, delta)?)?)?;
        grad_w.axpy(2.0 * lambda, &w.matmul(&q_inv));
    }
    Ok((grad_w, w.t_matmul(&resid).scaled(2.0)))
}

/// The function `update_w` decreases: `‖X − WH‖²_F + λ·tr(A WᵀW)`.
pub fn w_surrogate(
    x: &DenseMatrix,
    w: &DenseMatrix,
    h: &DenseMatrix,
    a: &DenseMatrix,
    lambda_eff: f64,
) -> f64 {
    x.sub(&w.matmul(h)).norm_sq() + lambda_eff * w.inner(&w.matmul(a))
}

/// Gradient of [`w_surrogate`] in `W`: `2(WH − X)Hᵀ + 2λ·WA`.
pub fn w_surrogate_gradient(
    x: &DenseMatrix,
    w: &DenseMatrix,
    h: &DenseMatrix,
    a: &DenseMatrix,
    lambda_eff: f64,
) -> DenseMatrix {
    let mut g = w.matmul(h).sub(x).matmul_t(h);
    g.axpy(lambda_eff, &w.matmul(a));
    g.scaled(2.0)
}

/// Decreases `‖X − WH‖²_F` over `H` with columns in the capped simplex.
pub fn update_h(
    x: &DenseMatrix,
    w: &DenseMatrix,
    h: &DenseMatrix,
    iters: usize,
    tol: f64,
) -> DenseMatrix {
    let mut block = HBlock::new(x, w);
    let lip = 2.0 * spectral_norm(block.gram(), LIPSCHITZ_TOL).unwrap_or(0.0);
    let mut start = h.clone();
    project_h_columns_in_place(&mut start);
    fgm::minimize(&mut block, start, lip, FgmOptions { max_iters: iters, tol }).x
}

/// Decreases `‖X − WH‖²_F + λ·tr(A WᵀW)` over `W ≥ 0` for SPD `A`.
pub fn update_w(
    x: &DenseMatrix,
    w: &DenseMatrix,
    h: &DenseMatrix,
    a: &DenseMatrix,
    lambda_eff: f64,
    iters: usize,
    tol: f64,
) -> Result<DenseMatrix> {
    if !(lambda_eff >= 0.0) {
        return Err(Error::param(format!(
            "effective lambda must be nonnegative, got {lambda_eff}"
        )));
    }
    let r = w.cols();
    if a.shape() != (r, r) {
        return Err(Error::input(format!("A is {:?}, expected {r}x{r}", a.shape())));
    }
    cholesky(a).map_err(|e| Error::input(format!("A is not SPD: {e}")))?;
    let mut block = WBlock::new(x, h, a, lambda_eff);
    let hht = h.matmul_t(h);
    let lip = 2.0
        * (spectral_norm(&hht, LIPSCHITZ_TOL)? + lambda_eff * spectral_norm(a, LIPSCHITZ_TOL)?);
    let mut start = w.clone();
    project_nonneg_in_place(&mut start);
    Ok(fgm::minimize(&mut block, start, lip, FgmOptions { max_iters: iters, tol }).x)
}

/// Block coordinate descent from a feasible start.
pub fn minvol(
    x: &DenseMatrix,
    r: usize,
    w_init: &DenseMatrix,
    h_init: &DenseMatrix,
    config: &MinvolConfig,
) -> Result<MinvolState> {
    config.validate()?;
    let (m, n) = x.shape();
    if w_init.shape() != (m, r) || h_init.shape() != (r, n) {
        return Err(Error::input(format!(
            "initial factors {:?} and {:?} do not match X {m}x{n} with rank {r}",
            w_init.shape(),
            h_init.shape()
        )));
    }
    if !is_feasible(w_init, h_init) {
        return Err(Error::input("initial factors are not feasible"));
    }

    let mut w = w_init.clone();
    let mut h = h_init.clone();
    let mut history = vec![objective_minvol(x, &w, &h, config.lambda, config.delta)?];
    let iters = config.inner_iters_per_block;

    for _ in 0..config.outer_sweeps {
        if config.lambda > 0.0 {
            let a = inverse_spd(&cholesky(&gram_shifted(&w, config.delta)?)?)?;
            w = update_w(x, &w, &h, &a, config.lambda, iters, config.inner_tol)?;
        } else {
            let a = DenseMatrix::identity(r);
            w = update_w(x, &w, &h, &a, 0.0, iters, config.inner_tol)?;
        }
        h = update_h(x, &w, &h, iters, config.inner_tol);

        let obj = objective_minvol(x, &w, &h, config.lambda, config.delta)?;
        if !obj.is_finite() {
            return Err(Error::NumericalFault {
                message: format!("min-vol objective became {obj}"),
                trace: None,
            });
        }
        let prev = *history.last().expect("non-empty");
        history.push(obj);
        if (prev - obj).abs() <= config.tol_rel_obj * prev.abs() {
            break;
        }
    }

    Ok(MinvolState {
        w,
        h,
        objective_history: history,
    })
}

/// Penalty weight from an initial factorization:
/// `λ̃ · ‖X − W0H0‖²_F / log det(W0ᵀW0 + δI)`.
///
/// The denominator may be negative; the sign is passed through.
pub fn lambda_from_init(
    x: &DenseMatrix,
    w0: &DenseMatrix,
    h0: &DenseMatrix,
    lambda_tilde: f64,
    delta: f64,
) -> Result<f64> {
    let logdet = cholesky(&gram_shifted(w0, delta)?)?.logdet();
    if logdet.abs() < 1e-300 {
        return Err(Error::DegenerateDenominator(logdet));
    }
    let fit = x.sub(&w0.matmul(h0)).norm_sq();
    Ok(lambda_tilde * fit / logdet)
}
