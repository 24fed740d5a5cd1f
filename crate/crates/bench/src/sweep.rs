//! Grid sweeps over `(σ, λ)` and their per-σ summaries.

use std::fmt::Write as _;
use std::time::Instant;

use minvol_core::datagen::{derive_seed, make_instance};
use minvol_core::metrics::{rel_rmse_w, rel_rmse_x};
use minvol_core::Error;
use rayon::prelude::*;

use crate::config::ExperimentSpec;
use crate::solve::{solve, Penalty, SolverKind};

pub const SWEEP_CSV_HEADER: &str =
    "solver,sigma,lambda,replicate,seed,rel_rmse_X,rel_rmse_W,final_obj,outer_iters,status,wall_ms";

pub const SUMMARY_CSV_HEADER: &str =
    "sigma,min_rel_rmse_X,argmin_lambda_X,min_rel_rmse_W,argmin_lambda_W,ok_cells";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellStatus {
    Ok,
    /// The solver produced a non-finite objective.
    NumericalFault,
    /// Any other failure, e.g. a negative penalty from the `λ̃` conversion.
    Error,
}

impl CellStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::NumericalFault => "numerical-fault",
            Self::Error => "error",
        }
    }
}

/// Metrics of one successful cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellMetrics {
    pub rel_rmse_x: f64,
    pub rel_rmse_w: f64,
    pub final_obj: f64,
    pub outer_iters: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub solver: SolverKind,
    pub sigma: f64,
    /// `λ` for the square-root solver, `λ̃` for the baseline.
    pub lambda: f64,
    pub replicate: usize,
    /// Seed of the generated instance, shared by every `λ` at this `(σ, replicate)`.
    pub seed: u64,
    pub metrics: Option<CellMetrics>,
    pub status: CellStatus,
    pub message: Option<String>,
    pub wall_ms: f64,
}

/// One unit of work, in grid order.
#[derive(Debug, Clone, Copy)]
struct Cell {
    sigma_index: usize,
    lambda_index: usize,
    replicate: usize,
}

/// Seed for the instance at grid row `sigma_index`, replicate `replicate`.
pub fn instance_seed(base_seed: u64, sigma_index: usize, replicate: usize) -> u64 {
    derive_seed(base_seed, &[sigma_index as u64, replicate as u64])
}

fn cells(spec: &ExperimentSpec) -> Vec<Cell> {
    let mut out = Vec::with_capacity(spec.sigma_grid.len() * spec.lambda_grid.len() * spec.replicates);
    for sigma_index in 0..spec.sigma_grid.len() {
        for lambda_index in 0..spec.lambda_grid.len() {
            for replicate in 0..spec.replicates {
                out.push(Cell {
                    sigma_index,
                    lambda_index,
                    replicate,
                });
            }
        }
    }
    out
}

fn run_cell(spec: &ExperimentSpec, cell: Cell) -> SweepRecord {
    let started = Instant::now();
    let sigma = spec.sigma_grid[cell.sigma_index];
    let lambda = spec.lambda_grid[cell.lambda_index];
    let seed = instance_seed(spec.base_seed, cell.sigma_index, cell.replicate);
    let penalty = match spec.solver {
        SolverKind::SqrtMinvol => Penalty::Lambda(lambda),
        SolverKind::MinvolBaseline => Penalty::LambdaTilde(lambda),
    };

    let result = make_instance(&spec.template.instance(sigma, seed))
        .map_err(|e| e.into())
        .and_then(|(gt, x)| {
            let out = solve(&x, spec.rank, spec.solver, penalty, &spec.settings, None)?;
            let metrics = CellMetrics {
                rel_rmse_x: rel_rmse_x(&gt.x_star, &out.factors.w, &out.factors.h)?,
                rel_rmse_w: rel_rmse_w(&gt.w_star, &out.factors.w)?,
                final_obj: out.final_obj,
                outer_iters: out.outer_iters,
            };
            Ok::<_, crate::solve::SolveFailure>(metrics)
        });

    let (metrics, status, message) = match result {
        Ok(m) => (Some(m), CellStatus::Ok, None),
        Err(f) => {
            let status = match f.error {
                Error::NumericalFault { .. } => CellStatus::NumericalFault,
                _ => CellStatus::Error,
            };
            (None, status, Some(f.error.to_string()))
        }
    };
    SweepRecord {
        solver: spec.solver,
        sigma,
        lambda,
        replicate: cell.replicate,
        seed,
        metrics,
        status,
        message,
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    }
}

/// Runs every cell on a pool of `jobs` threads. Records come back in grid
/// order (σ, then λ, then replicate) whatever the completion order.
pub fn run_sweep(spec: &ExperimentSpec, jobs: usize) -> Result<Vec<SweepRecord>, rayon::ThreadPoolBuildError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build()?;
    let cells = cells(spec);
    Ok(pool.install(|| cells.par_iter().map(|&c| run_cell(spec, c)).collect()))
}

pub fn sweep_csv(records: &[SweepRecord]) -> String {
    let mut out = format!("{SWEEP_CSV_HEADER}\n");
    for r in records {
        let (x, w, obj, iters) = match &r.metrics {
            Some(m) => (
                format!("{:.17e}", m.rel_rmse_x),
                format!("{:.17e}", m.rel_rmse_w),
                format!("{:.17e}", m.final_obj),
                m.outer_iters.to_string(),
            ),
            None => Default::default(),
        };
        let _ = writeln!(
            out,
            "{},{:e},{:e},{},{},{x},{w},{obj},{iters},{},{:.3}",
            r.solver,
            r.sigma,
            r.lambda,
            r.replicate,
            r.seed,
            r.status.as_str(),
            r.wall_ms
        );
    }
    out
}

/// Best `λ` per σ, where each `(σ, λ)` cell is scored by the mean over its
/// successful replicates. Ties go to the earlier grid entry.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub sigma: f64,
    pub min_rel_rmse_x: Option<f64>,
    pub argmin_lambda_x: Option<f64>,
    pub min_rel_rmse_w: Option<f64>,
    pub argmin_lambda_w: Option<f64>,
    pub ok_cells: usize,
}

pub fn summarize(spec: &ExperimentSpec, records: &[SweepRecord]) -> Vec<SummaryRow> {
    spec.sigma_grid
        .iter()
        .map(|&sigma| {
            let mut best_x: Option<(f64, f64)> = None;
            let mut best_w: Option<(f64, f64)> = None;
            let mut ok_cells = 0;
            for &lambda in &spec.lambda_grid {
                let ok: Vec<&CellMetrics> = records
                    .iter()
                    .filter(|r| r.sigma == sigma && r.lambda == lambda)
                    .filter_map(|r| r.metrics.as_ref())
                    .collect();
                if ok.is_empty() {
                    continue;
                }
                ok_cells += ok.len();
                let k = ok.len() as f64;
                let mx = ok.iter().map(|m| m.rel_rmse_x).sum::<f64>() / k;
                let mw = ok.iter().map(|m| m.rel_rmse_w).sum::<f64>() / k;
                if best_x.is_none_or(|(v, _)| mx < v) {
                    best_x = Some((mx, lambda));
                }
                if best_w.is_none_or(|(v, _)| mw < v) {
                    best_w = Some((mw, lambda));
                }
            }
            SummaryRow {
                sigma,
                min_rel_rmse_x: best_x.map(|b| b.0),
                argmin_lambda_x: best_x.map(|b| b.1),
                min_rel_rmse_w: best_w.map(|b| b.0),
                argmin_lambda_w: best_w.map(|b| b.1),
                ok_cells,
            }
        })
        .collect()
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = format!("{SUMMARY_CSV_HEADER}\n");
    let metric = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
    let grid = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
    for r in rows {
        let _ = writeln!(
            out,
            "{:e},{},{},{},{},{}",
            r.sigma,
            metric(r.min_rel_rmse_x),
            grid(r.argmin_lambda_x),
            metric(r.min_rel_rmse_w),
            grid(r.argmin_lambda_w),
            r.ok_cells
        );
    }
    out
}
