//! Square-root min-vol NMF.
//!
//! Minimizes the smoothed objective
//!
//! ```text
//! f_ε(W, H) = √(‖X − WH‖²_F + ε) + λ·log det(WᵀW + δI)
//! ```
//!
//! over the feasible set by majorization-minimization. At the iterate
//! `θ_k = (W_k, H_k)` the square root is replaced by its tangent at
//! `r_k = ‖X − W_kH_k‖²_F + ε` and the log-det by its tangent at
//! `Q_k = W_kᵀW_k + δI`. Minimizing that surrogate is a min-vol problem with
//! data weight one and penalty `λ_k = 2λ√r_k`, so each outer step runs the
//! baseline min-vol solver warm-started at `θ_k`. `λ_k` shrinks with the
//! residual, which is what lets one fixed `λ` serve across noise levels.

use std::fmt::Write as _;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, gram_shifted, inverse_spd, solve_spd, DenseMatrix};
use crate::metrics;
use crate::minvol::{minvol, MinvolConfig};
use crate::projections::{is_feasible, project_h_columns, project_nonneg};
use crate::snpa::snpa;

#[derive(Debug, Clone, PartialEq)]
pub struct SqrtConfig {
    pub lambda: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub max_outer: usize,
    pub tol_rel_f: f64,
    /// Inner solver settings; its `lambda` and `delta` are overwritten per
    /// outer iteration.
    pub inner: MinvolConfig,
}

impl Default for SqrtConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            delta: 0.1,
            epsilon: 0.1,
            max_outer: 200,
            tol_rel_f: 1e-9,
            inner: MinvolConfig {
                outer_sweeps: 20,
                ..MinvolConfig::default()
            },
        }
    }
}

impl SqrtConfig {
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
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::param(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.max_outer == 0 || !(self.tol_rel_f > 0.0) {
            return Err(Error::param("max_outer must be at least 1 and tol_rel_f positive"));
        }
        MinvolConfig {
            lambda: 0.0,
            delta: self.delta,
            ..self.inner.clone()
        }
        .validate()
    }
}

/// A factorization `(W, H)` in the feasible set.
#[derive(Debug, Clone)]
pub struct FactorPair {
    pub w: DenseMatrix,
    pub h: DenseMatrix,
}

impl FactorPair {
    pub fn rank(&self) -> usize {
        self.w.cols()
    }

    pub fn reconstruction(&self) -> DenseMatrix {
        self.w.matmul(&self.h)
    }
}

/// Optional ground truth used to fill the rel-RMSE columns of the trace.
#[derive(Debug, Clone, Copy)]
pub struct GroundTruthRef<'a> {
    pub w_star: &'a DenseMatrix,
    pub x_star: &'a DenseMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    /// Outer iteration, starting at 1 for the SNPA initialization.
    pub k: usize,
    pub f_eps: f64,
    pub r_k: f64,
    pub lambda_k: f64,
    pub sigma_hat: f64,
    pub rel_rmse_x: Option<f64>,
    pub rel_rmse_w: Option<f64>,
    pub wall_ms: f64,
}

/// Per-iteration record of a square-root min-vol solve. Row `k` describes
/// the iterate `θ_k`; the last row is the returned factorization.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveTrace {
    pub rows: Vec<TraceRow>,
}

pub const TRACE_CSV_HEADER: &str = "k,f_eps,r_k,lambda_k,sigma_hat,rel_rmse_X,rel_rmse_W,wall_ms";

impl SolveTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn f_eps_values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.f_eps).collect()
    }

    pub fn lambda_k_values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.lambda_k).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRACE_CSV_HEADER);
        out.push('\n');
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:.17e},{:.17e},{:.17e},{:.17e},{},{},{:.3}",
                r.k,
                r.f_eps,
                r.r_k,
                r.lambda_k,
                r.sigma_hat,
                opt(r.rel_rmse_x),
                opt(r.rel_rmse_w),
                r.wall_ms
            );
        }
        out
    }
}

/// `‖X − WH‖²_F + ε`.
pub fn residual_r(x: &DenseMatrix, w: &DenseMatrix, h: &DenseMatrix, epsilon: f64) -> f64 {
    x.sub(&w.matmul(h)).norm_sq() + epsilon
}

/// Effective min-vol penalty `2λ√r_k` for the surrogate at iterate `k`.
pub fn lambda_k(r_k: f64, lambda: f64) -> f64 {
    2.0 * lambda * r_k.sqrt()
}

/// `√(‖X − WH‖²_F + ε)/(mn)`, the per-entry noise scale implied by the iterate.
pub fn sigma_hat(x: &DenseMatrix, w: &DenseMatrix, h: &DenseMatrix, epsilon: f64) -> f64 {
    let (m, n) = x.shape();
    residual_r(x, w, h, epsilon).sqrt() / (m * n) as f64
}

pub fn f_eps(
    x: &DenseMatrix,
    w: &DenseMatrix,
    h: &DenseMatrix,
    lambda: f64,
    delta: f64,
    epsilon: f64,
) -> Result<f64> {
    let fit = residual_r(x, w, h, epsilon).sqrt();
    if lambda == 0.0 {
        return Ok(fit);
    }
    let vol = cholesky(&gram_shifted(w, delta)?)?.logdet();
    Ok(fit + lambda * vol)
}

/// Value of the majorizer of `f_ε` anchored at `(W_k, H_k)`, evaluated at
/// `(W, H)`:
///
/// ```text
/// √r_k + (‖X − WH‖²_F + ε − r_k)/(2√r_k) + λ[log det Q_k + tr(Q_k⁻¹(Q − Q_k))]
/// ```
#[allow(clippy::too_many_arguments)]
pub fn surrogate_g(
    w: &DenseMatrix,
    h: &DenseMatrix,
    w_k: &DenseMatrix,
    h_k: &DenseMatrix,
    x: &DenseMatrix,
    lambda: f64,
    delta: f64,
    epsilon: f64,
) -> Result<f64> {
    let r_k = residual_r(x, w_k, h_k, epsilon);
    let u = residual_r(x, w, h, epsilon);
    let sqrt_rk = r_k.sqrt();
    let fit = sqrt_rk + (u - r_k) / (2.0 * sqrt_rk);
    if lambda == 0.0 {
        return Ok(fit);
    }
    let q_k = gram_shifted(w_k, delta)?;
    let factor = cholesky(&q_k)?;
    let q = gram_shifted(w, delta)?;
    let trace = solve_spd(&factor, &q.sub(&q_k))?.trace();
    Ok(fit + lambda * (factor.logdet() + trace))
}

/// Unprojected gradient `(∇_W f_ε, ∇_H f_ε)`.
pub fn f_eps_gradient(
    x: &DenseMatrix,
    w: &DenseMatrix,
    h: &DenseMatrix,
    lambda: f64,
    delta: f64,
    epsilon: f64,
) -> Result<(DenseMatrix, DenseMatrix)> {
    let resid = w.matmul(h).sub(x);
    let scale = 1.0 / (resid.norm_sq() + epsilon).sqrt();
    let mut grad_w = resid.matmul_t(h).scaled(scale);
    let grad_h = w.t_matmul(&resid).scaled(scale);
    if lambda != 0.0 {
        let q_inv = inverse_spd(&cholesky(&gram_shifted(w, delta)?)?)?;
        grad_w.axpy(2.0 * lambda, &w.matmul(&q_inv));
    }
    Ok((grad_w, grad_h))
}

/// First-order stationarity measure `‖θ − P_S(θ − ∇f_ε(θ))‖_F`.
pub fn stationarity_gap(
    x: &DenseMatrix,
    w: &DenseMatrix,
    h: &DenseMatrix,
    lambda: f64,
    delta: f64,
    epsilon: f64,
) -> Result<f64> {
    let (gw, gh) = f_eps_gradient(x, w, h, lambda, delta, epsilon)?;
    let pw = project_nonneg(&w.sub(&gw));
    let ph = project_h_columns(&h.sub(&gh));
    Ok((w.sub(&pw).norm_sq() + h.sub(&ph).norm_sq()).sqrt())
}

/// Runs the MM scheme from an SNPA initialization.
pub fn sqrt_minvol(
    x: &DenseMatrix,
    r: usize,
    config: &SqrtConfig,
    ground_truth: Option<GroundTruthRef<'_>>,
) -> Result<(FactorPair, SolveTrace)> {
    config.validate()?;
    if !x.is_finite() || x.min_value() < 0.0 {
        return Err(Error::input("X must be finite and nonnegative"));
    }
    let init = snpa(x, r)?;
    sqrt_minvol_from(
        x,
        FactorPair {
            w: init.w0,
            h: init.h0,
        },
        config,
        ground_truth,
    )
}

/// Runs the MM scheme from a given feasible starting point.
pub fn sqrt_minvol_from(
    x: &DenseMatrix,
    init: FactorPair,
    config: &SqrtConfig,
    ground_truth: Option<GroundTruthRef<'_>>,
) -> Result<(FactorPair, SolveTrace)> {
    config.validate()?;
    let r = init.rank();
    let (m, n) = x.shape();
    if init.w.rows() != m || init.h.shape() != (r, n) {
        return Err(Error::input("initial factors do not conform with X"));
    }
    if !is_feasible(&init.w, &init.h) {
        return Err(Error::input("initial factors are not feasible"));
    }
    if let Some(gt) = ground_truth {
        if gt.x_star.shape() != x.shape() || gt.w_star.shape() != init.w.shape() {
            return Err(Error::input("ground truth shapes do not match the problem"));
        }
    }

    let started = Instant::now();
    let mut trace = SolveTrace::default();
    let mut current = init;
    let mut inner = config.inner.clone();
    inner.delta = config.delta;

    for k in 1.. {
        let r_k = residual_r(x, &current.w, &current.h, config.epsilon);
        let lam_k = lambda_k(r_k, config.lambda);
        let f = f_eps(x, &current.w, &current.h, config.lambda, config.delta, config.epsilon)?;
        let (rel_x, rel_w) = match ground_truth {
            Some(gt) => (
                Some(metrics::rel_rmse_x(gt.x_star, &current.w, &current.h)?),
                Some(metrics::rel_rmse_w(gt.w_star, &current.w)?),
            ),
            None => (None, None),
        };
        trace.rows.push(TraceRow {
            k,
            f_eps: f,
            r_k,
            lambda_k: lam_k,
            sigma_hat: r_k.sqrt() / (m * n) as f64,
            rel_rmse_x: rel_x,
            rel_rmse_w: rel_w,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        });
        if !f.is_finite() {
            return Err(Error::NumericalFault {
                message: format!("f_eps became {f} at outer iteration {k}"),
                trace: Some(Box::new(trace)),
            });
        }
        if k > 1 {
            let prev = trace.rows[k - 2].f_eps;
            if (prev - f).abs() <= config.tol_rel_f * prev.abs() {
                break;
            }
        }
        if k > config.max_outer {
            break;
        }

        inner.lambda = lam_k;
        let state = minvol(x, r, &current.w, &current.h, &inner).map_err(|e| match e {
            Error::NumericalFault { message, .. } => Error::NumericalFault {
                message,
                trace: Some(Box::new(trace.clone())),
            },
            other => other,
        })?;
        current = FactorPair {
            w: state.w,
            h: state.h,
        };
    }

    Ok((current, trace))
}
