//! One solver run, shared by `solve` and every sweep cell.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use minvol_core::minvol::{lambda_from_init, minvol};
use minvol_core::snpa::snpa;
use minvol_core::sqrt_minvol::sqrt_minvol_from;
use minvol_core::{DenseMatrix, Error, FactorPair, GroundTruthRef, MinvolConfig, SqrtConfig};

/// Trace header for baseline runs: one row per block coordinate sweep, `k = 0`
/// being the SNPA start.
pub const BASELINE_TRACE_HEADER: &str = "k,objective";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SolverKind {
    /// Square-root data fit with adaptive penalty.
    SqrtMinvol,
    /// Squared data fit with a fixed penalty.
    MinvolBaseline,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::SqrtMinvol => "sqrt-minvol",
            Self::MinvolBaseline => "minvol-baseline",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sqrt-minvol" => Ok(Self::SqrtMinvol),
            "minvol-baseline" => Ok(Self::MinvolBaseline),
            other => Err(format!(
                "unknown solver `{other}` (expected `sqrt-minvol` or `minvol-baseline`)"
            )),
        }
    }
}

/// How the penalty weight is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Penalty {
    /// Used as given.
    Lambda(f64),
    /// Baseline only: scaled by the SNPA fit over its log-volume.
    LambdaTilde(f64),
}

/// Solver knobs. `None` falls back to the solver's own default.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub delta: f64,
    pub epsilon: f64,
    /// Outer MM iterations (square-root) or block sweeps (baseline).
    pub max_outer: Option<usize>,
    /// Relative objective change that stops the outer loop.
    pub tol: Option<f64>,
    /// Inner block sweeps per MM iteration (square-root only).
    pub inner_sweeps: Option<usize>,
    pub inner_iters: Option<usize>,
    pub inner_tol: Option<f64>,
}

/// Outer budget of the baseline when none is given.
pub const BASELINE_MAX_SWEEPS: usize = 1000;
/// Relative-change stop of the baseline when none is given.
pub const BASELINE_TOL: f64 = 1e-9;

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            delta: 0.1,
            epsilon: 0.1,
            max_outer: None,
            tol: None,
            inner_sweeps: None,
            inner_iters: None,
            inner_tol: None,
        }
    }
}

#[derive(Debug)]
pub struct SettingsError {
    pub key: &'static str,
    pub message: String,
}

impl SolverSettings {
    pub fn sqrt_config(&self, lambda: f64) -> SqrtConfig {
        let d = SqrtConfig::default();
        SqrtConfig {
            lambda,
            delta: self.delta,
            epsilon: self.epsilon,
            max_outer: self.max_outer.unwrap_or(d.max_outer),
            tol_rel_f: self.tol.unwrap_or(d.tol_rel_f),
            inner: MinvolConfig {
                outer_sweeps: self.inner_sweeps.unwrap_or(d.inner.outer_sweeps),
                inner_iters_per_block: self.inner_iters.unwrap_or(d.inner.inner_iters_per_block),
                inner_tol: self.inner_tol.unwrap_or(d.inner.inner_tol),
                ..d.inner
            },
        }
    }

    pub fn baseline_config(&self, lambda: f64) -> MinvolConfig {
        let d = MinvolConfig::default();
        MinvolConfig {
            lambda,
            delta: self.delta,
            outer_sweeps: self.max_outer.unwrap_or(BASELINE_MAX_SWEEPS),
            inner_iters_per_block: self.inner_iters.unwrap_or(d.inner_iters_per_block),
            tol_rel_obj: self.tol.unwrap_or(BASELINE_TOL),
            inner_tol: self.inner_tol.unwrap_or(d.inner_tol),
        }
    }

    /// Checks each knob on its own so errors can name the offending key.
    pub fn validate(&self, solver: SolverKind) -> Result<(), SettingsError> {
        let err = |key, message: String| Err(SettingsError { key, message });
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.delta) {
            return err("delta", format!("delta must be positive, got {}", self.delta));
        }
        if !positive(self.epsilon) {
            return err("epsilon", format!("epsilon must be positive, got {}", self.epsilon));
        }
        for (key, v) in [("max_outer", self.max_outer), ("inner_sweeps", self.inner_sweeps), ("inner_iters", self.inner_iters)] {
            if v == Some(0) {
                return err(key, format!("{key} must be at least 1"));
            }
        }
        for (key, v) in [("tol", self.tol), ("inner_tol", self.inner_tol)] {
            if let Some(t) = v.filter(|t| !positive(*t)) {
                return err(key, format!("{key} must be positive, got {t}"));
            }
        }
        if solver == SolverKind::MinvolBaseline && self.inner_sweeps.is_some() {
            return err("inner_sweeps", "inner_sweeps applies to sqrt-minvol only".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub factors: FactorPair,
    /// Penalty weight actually used (after the `λ̃` conversion for the baseline).
    pub lambda: f64,
    /// Final smoothed square-root objective, or the baseline objective.
    pub final_obj: f64,
    pub outer_iters: usize,
    pub trace_csv: String,
}

/// A failed run with whatever trace was recorded before the failure.
#[derive(Debug)]
pub struct SolveFailure {
    pub error: Error,
    pub partial_trace_csv: Option<String>,
}

impl From<Error> for SolveFailure {
    fn from(error: Error) -> Self {
        Self {
            error,
            partial_trace_csv: None,
        }
    }
}

pub fn baseline_trace_csv(history: &[f64]) -> String {
    let mut out = format!("{BASELINE_TRACE_HEADER}\n");
    for (k, v) in history.iter().enumerate() {
        let _ = writeln!(out, "{k},{v:.17e}");
    }
    out
}

/// Runs `solver` on `x` from an SNPA start.
pub fn solve(
    x: &DenseMatrix,
    rank: usize,
    solver: SolverKind,
    penalty: Penalty,
    settings: &SolverSettings,
    ground_truth: Option<GroundTruthRef<'_>>,
) -> Result<SolveOutcome, SolveFailure> {
    if let Err(e) = settings.validate(solver) {
        return Err(Error::InvalidParameter(e.message).into());
    }
    if !x.is_finite() || x.min_value() < 0.0 {
        return Err(Error::InvalidInput("X must be finite and nonnegative".into()).into());
    }
    let init = snpa(x, rank)?;
    match solver {
        SolverKind::SqrtMinvol => {
            let lambda = match penalty {
                Penalty::Lambda(l) => l,
                Penalty::LambdaTilde(_) => {
                    return Err(Error::InvalidParameter(
                        "lambda-tilde applies to minvol-baseline only; use lambda".into(),
                    )
                    .into())
                }
            };
            let config = settings.sqrt_config(lambda);
            let start = FactorPair {
                w: init.w0,
                h: init.h0,
            };
            match sqrt_minvol_from(x, start, &config, ground_truth) {
                Ok((factors, trace)) => Ok(SolveOutcome {
                    factors,
                    lambda,
                    final_obj: trace.last().map_or(f64::NAN, |r| r.f_eps),
                    outer_iters: trace.len().saturating_sub(1),
                    trace_csv: trace.to_csv(),
                }),
                Err(Error::NumericalFault { message, trace }) => Err(SolveFailure {
                    partial_trace_csv: trace.as_deref().map(|t| t.to_csv()),
                    error: Error::NumericalFault {
                        message,
                        trace: None,
                    },
                }),
                Err(e) => Err(e.into()),
            }
        }
        SolverKind::MinvolBaseline => {
            let lambda = match penalty {
                Penalty::Lambda(l) => l,
                Penalty::LambdaTilde(t) => {
                    let l = lambda_from_init(x, &init.w0, &init.h0, t, settings.delta)?;
                    if l < 0.0 {
                        return Err(Error::InvalidParameter(format!(
                            "lambda-tilde {t:e} gives lambda {l:e} < 0: log det(W0ᵀW0 + δI) is negative at the SNPA start"
                        ))
                        .into());
                    }
                    l
                }
            };
            let config = settings.baseline_config(lambda);
            let state = minvol(x, rank, &init.w0, &init.h0, &config)?;
            Ok(SolveOutcome {
                lambda,
                final_obj: state.final_objective(),
                outer_iters: state.sweeps(),
                trace_csv: baseline_trace_csv(&state.objective_history),
                factors: FactorPair {
                    w: state.w,
                    h: state.h,
                },
            })
        }
    }
}
