//! Minimum-volume nonnegative matrix factorization with a square-root data
//! fidelity term.
//!
//! Two solvers share the same building blocks:
//!
//! * [`minvol::minvol`] fits `‖X − WH‖²_F + λ·log det(WᵀW + δI)`, the
//!   baseline whose best `λ` tracks the noise level;
//! * [`sqrt_minvol::sqrt_minvol`] fits `√(‖X − WH‖²_F + ε) + λ·log det(WᵀW + δI)`
//!   by majorization-minimization, calling the baseline as its inner solver
//!   with a penalty rescaled by the current residual.
//!
//! Both constrain `W ≥ 0`, `H ≥ 0` and `1ᵀH(:,j) ≤ 1`, and start from
//! [`snpa::snpa`].

mod blocks;
mod fgm;

pub mod datagen;
pub mod error;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod minvol;
pub mod projections;
pub mod snpa;
pub mod sqrt_minvol;

pub use error::{Error, Result};
pub use linalg::DenseMatrix;
pub use minvol::{MinvolConfig, MinvolState};
pub use sqrt_minvol::{FactorPair, GroundTruthRef, SolveTrace, SqrtConfig, TraceRow};
