//! Projected fast gradient method with monotone restarts.
//!
//! Used for every block subproblem (`H` given `W`, `W` given `H`, and the
//! SNPA coefficient fit). Accepted iterates never increase the objective:
//! when an extrapolated step would, momentum is dropped and the step is
//! retried from the last accepted point; if even a plain projected gradient
//! step fails to decrease, the Lipschitz estimate is doubled.

use crate::linalg::DenseMatrix;

/// Doublings of the Lipschitz estimate tolerated before a non-decreasing
/// plain step is treated as rounding noise at a minimizer.
const MAX_BACKTRACKS: usize = 30;

pub(crate) trait BlockProblem {
    /// `f(to) − f(from)`, computed without forming either value so that
    /// small decreases survive near the optimum.
    fn change(&mut self, from: &DenseMatrix, to: &DenseMatrix) -> f64;
    /// Gradient at `x`, written into `out`.
    fn gradient(&mut self, x: &DenseMatrix, out: &mut DenseMatrix);
    fn project(&self, x: &mut DenseMatrix);
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct FgmOptions {
    pub max_iters: usize,
    /// Stop once `‖x⁺ − x‖_F ≤ tol · ‖x₁ − x₀‖_F`.
    pub tol: f64,
}

#[derive(Debug)]
pub(crate) struct FgmOutcome {
    pub x: DenseMatrix,
}

pub(crate) fn minimize<P: BlockProblem>(
    problem: &mut P,
    x0: DenseMatrix,
    lipschitz: f64,
    opts: FgmOptions,
) -> FgmOutcome {
    let mut x = x0;
    if !(lipschitz > 0.0) || !lipschitz.is_finite() {
        // constant objective in this block
        return FgmOutcome { x };
    }
    let mut lip = lipschitz;
    let mut y = x.clone();
    let mut grad = DenseMatrix::zeros(x.rows(), x.cols());
    let mut t = 1.0_f64;
    let mut momentum = false;
    let mut backtracks = 0;
    let mut first_step: Option<f64> = None;

    for _ in 0..opts.max_iters {
        problem.gradient(&y, &mut grad);
        let mut xn = y.clone();
        xn.axpy(-1.0 / lip, &grad);
        problem.project(&mut xn);
        let change = problem.change(&x, &xn);

        if !(change <= 0.0) {
            if momentum {
                y = x.clone();
                t = 1.0;
                momentum = false;
                continue;
            }
            if !change.is_finite() || backtracks == MAX_BACKTRACKS {
                break;
            }
            backtracks += 1;
            lip *= 2.0;
            continue;
        }

        let diff = xn.sub(&x);
        let step = diff.norm_sq().sqrt();
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        y = xn.clone();
        y.axpy(beta, &diff);
        momentum = beta > 0.0;
        t = t_next;
        x = xn;

        let reference = *first_step.get_or_insert(step);
        if step == 0.0 || step <= opts.tol * reference {
            break;
        }
    }
    FgmOutcome { x }
}
