use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use minvol_bench::commands::{self, SolveArgs};
use minvol_bench::exit_code;
use minvol_bench::solve::{SolverKind, SolverSettings};

/// Minimum-volume NMF: generate synthetic instances, solve, sweep and plot.
#[derive(Debug, Parser)]
#[command(name = "minvol-bench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write X, W*, H*, X* and a manifest from an instance config.
    Generate {
        /// TOML file with an [instance] table.
        config: PathBuf,
        #[arg(long, default_value = "instance")]
        out: PathBuf,
        /// Overrides instance.seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run one solver on a matrix file.
    Solve(SolveCli),
    /// Run a (sigma, lambda) grid from a sweep spec.
    Sweep {
        /// TOML sweep spec.
        spec: PathBuf,
        /// Overrides sweep.out.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Overrides sweep.base_seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// PCA scatter coordinates of X with W* and estimated W overlays.
    Pca {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        w_star: Option<PathBuf>,
        #[arg(long)]
        w_hat: Option<PathBuf>,
        #[arg(long, default_value = "pca.csv")]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct SolveCli {
    /// Data matrix in the plain-text matrix format.
    x: PathBuf,
    #[arg(long)]
    rank: usize,
    #[arg(long, value_enum, default_value_t = SolverKind::SqrtMinvol)]
    solver: SolverKind,
    /// Penalty weight (default 1 for sqrt-minvol).
    #[arg(long)]
    lambda: Option<f64>,
    /// Baseline only: penalty relative to the SNPA fit.
    #[arg(long)]
    lambda_tilde: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long)]
    max_outer: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Ground-truth W*, enables rel-RMSE(W) reporting.
    #[arg(long)]
    w_star: Option<PathBuf>,
    /// Noiseless X*, enables rel-RMSE(X) reporting.
    #[arg(long)]
    x_star: Option<PathBuf>,
    /// Accepted for symmetry with the other commands; the solvers are deterministic.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "solve-out")]
    out: PathBuf,
}

fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Generate { config, out, seed } => commands::generate(&config, &out, seed),
        Command::Solve(s) => commands::solve_file(&SolveArgs {
            x: s.x,
            rank: s.rank,
            solver: s.solver,
            lambda: s.lambda,
            lambda_tilde: s.lambda_tilde,
            settings: SolverSettings {
                delta: s.delta,
                epsilon: s.epsilon,
                max_outer: s.max_outer,
                tol: s.tol,
                ..SolverSettings::default()
            },
            w_star: s.w_star,
            x_star: s.x_star,
            out: s.out,
        }),
        Command::Sweep { spec, out, jobs, seed } => commands::sweep_file(&spec, out.as_deref(), jobs, seed),
        Command::Pca { x, w_star, w_hat, out } => {
            commands::pca_file(&x, w_star.as_deref(), w_hat.as_deref(), &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(minvol_bench::EXIT_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(report) => {
            println!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
