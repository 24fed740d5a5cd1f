//! The four subcommands. Each returns a short human-readable report for
//! stdout; files go under the output directory.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use minvol_core::datagen::{make_instance, Generator};
use minvol_core::io::{read_matrix, write_matrix};
use minvol_core::metrics::{pca_2d, rel_rmse_w, rel_rmse_x};
use minvol_core::{DenseMatrix, GroundTruthRef};
use serde::Serialize;

use crate::config::{parse_generate, parse_sweep};
use crate::solve::{solve, Penalty, SolverKind, SolverSettings};
use crate::sweep::{run_sweep, summarize, summary_csv, sweep_csv, CellStatus};

pub const X_FILE: &str = "X.txt";
pub const W_STAR_FILE: &str = "W_star.txt";
pub const H_STAR_FILE: &str = "H_star.txt";
pub const X_STAR_FILE: &str = "X_star.txt";
pub const MANIFEST_FILE: &str = "manifest.toml";
pub const W_FILE: &str = "W.txt";
pub const H_FILE: &str = "H.txt";
pub const TRACE_FILE: &str = "trace.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

/// Default output directory of `sweep` when neither `--out` nor `sweep.out` is set.
pub const DEFAULT_SWEEP_OUT: &str = "sweep-out";

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn write_matrix_file(path: &Path, m: &DenseMatrix) -> Result<()> {
    write_matrix(path, m).with_context(|| format!("cannot write {}", path.display()))
}

fn read_matrix_file(path: &Path) -> Result<DenseMatrix> {
    read_matrix(path).with_context(|| format!("cannot read matrix {}", path.display()))
}

#[derive(Debug, Serialize)]
struct Manifest {
    generator: &'static str,
    m: usize,
    r: usize,
    n: usize,
    alpha: f64,
    sigma: f64,
    noise: String,
    seed: u64,
    files: Vec<&'static str>,
}

/// Writes `X`, `W*`, `H*`, `X*` and a manifest. `seed` overrides the config.
pub fn generate(config: &Path, out: &Path, seed: Option<u64>) -> Result<String> {
    let text = read_text(config)?;
    let mut cfg = parse_generate(config, &text)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let spec = cfg.instance();
    let (gt, x) = make_instance(&spec)?;

    create_dir(out)?;
    write_matrix_file(&out.join(X_FILE), &x)?;
    write_matrix_file(&out.join(W_STAR_FILE), &gt.w_star)?;
    write_matrix_file(&out.join(H_STAR_FILE), &gt.h_star)?;
    write_matrix_file(&out.join(X_STAR_FILE), &gt.x_star)?;

    let (m, r, n) = spec.generator.dims();
    let alpha = match spec.generator {
        Generator::Paper4x4 { alpha, .. } | Generator::RandomUniform { alpha, .. } => alpha,
    };
    let manifest = Manifest {
        generator: spec.generator.name(),
        m,
        r,
        n,
        alpha,
        sigma: spec.sigma,
        noise: spec.noise.to_string(),
        seed: spec.seed,
        files: vec![X_FILE, W_STAR_FILE, H_STAR_FILE, X_STAR_FILE],
    };
    let manifest = toml::to_string(&manifest).context("cannot serialize manifest")?;
    write_file(&out.join(MANIFEST_FILE), &manifest)?;
    Ok(format!(
        "generated {} {m}x{n} (r = {r}, sigma = {}, seed = {}) in {}",
        spec.generator.name(),
        spec.sigma,
        spec.seed,
        out.display()
    ))
}

#[derive(Debug, Clone)]
pub struct SolveArgs {
    pub x: PathBuf,
    pub rank: usize,
    pub solver: SolverKind,
    pub lambda: Option<f64>,
    pub lambda_tilde: Option<f64>,
    pub settings: SolverSettings,
    pub w_star: Option<PathBuf>,
    pub x_star: Option<PathBuf>,
    pub out: PathBuf,
}

/// Default `λ` of the square-root solver.
pub const DEFAULT_SQRT_LAMBDA: f64 = 1.0;

fn penalty(args: &SolveArgs) -> Result<Penalty> {
    match (args.solver, args.lambda, args.lambda_tilde) {
        (_, Some(_), Some(_)) => bail!("give either --lambda or --lambda-tilde, not both"),
        (SolverKind::SqrtMinvol, _, Some(_)) => {
            bail!("--lambda-tilde applies to minvol-baseline only; use --lambda")
        }
        (SolverKind::SqrtMinvol, l, None) => Ok(Penalty::Lambda(l.unwrap_or(DEFAULT_SQRT_LAMBDA))),
        (SolverKind::MinvolBaseline, Some(l), None) => Ok(Penalty::Lambda(l)),
        (SolverKind::MinvolBaseline, None, Some(t)) => Ok(Penalty::LambdaTilde(t)),
        (SolverKind::MinvolBaseline, None, None) => {
            bail!("minvol-baseline needs --lambda-tilde or --lambda")
        }
    }
}

/// Runs one solver and writes `W`, `H` and the trace. On a numerical fault
/// the partial trace is still written before the error is returned.
pub fn solve_file(args: &SolveArgs) -> Result<String> {
    let penalty = penalty(args)?;
    let x = read_matrix_file(&args.x)?;
    let w_star = args.w_star.as_deref().map(read_matrix_file).transpose()?;
    let x_star = args.x_star.as_deref().map(read_matrix_file).transpose()?;
    if let Some(xs) = &x_star {
        if xs.shape() != x.shape() {
            bail!("X* is {:?} but X is {:?}", xs.shape(), x.shape());
        }
    }
    if let Some(ws) = &w_star {
        if ws.shape() != (x.rows(), args.rank) {
            bail!("W* is {:?}, expected {:?}", ws.shape(), (x.rows(), args.rank));
        }
    }
    // the trace tracks both metrics only when both references are present
    let gt = match (&w_star, &x_star) {
        (Some(w), Some(xs)) => Some(GroundTruthRef { w_star: w, x_star: xs }),
        _ => None,
    };

    create_dir(&args.out)?;
    let trace_path = args.out.join(TRACE_FILE);
    let outcome = match solve(&x, args.rank, args.solver, penalty, &args.settings, gt) {
        Ok(o) => o,
        Err(f) => {
            if let Some(partial) = &f.partial_trace_csv {
                write_file(&trace_path, partial)?;
            }
            return Err(anyhow::Error::new(f.error).context(format!("{} failed", args.solver)));
        }
    };
    write_matrix_file(&args.out.join(W_FILE), &outcome.factors.w)?;
    write_matrix_file(&args.out.join(H_FILE), &outcome.factors.h)?;
    write_file(&trace_path, &outcome.trace_csv)?;

    let mut report = vec![format!("solver: {}", args.solver), format!("rank: {}", args.rank)];
    if let Penalty::LambdaTilde(t) = penalty {
        report.push(format!("lambda_tilde: {t:e}"));
    }
    report.push(format!("lambda: {:e}", outcome.lambda));
    report.push(format!("outer_iters: {}", outcome.outer_iters));
    report.push(format!("final_obj: {:.12e}", outcome.final_obj));
    if let Some(xs) = &x_star {
        let v = rel_rmse_x(xs, &outcome.factors.w, &outcome.factors.h)?;
        report.push(format!("rel_rmse_X: {v:.6e}"));
    }
    if let Some(ws) = &w_star {
        report.push(format!("rel_rmse_W: {:.6e}", rel_rmse_w(ws, &outcome.factors.w)?));
    }
    Ok(report.join("\n"))
}

/// Runs a sweep spec and writes `sweep.csv` and `summary.csv`.
pub fn sweep_file(spec_path: &Path, out: Option<&Path>, jobs: usize, seed: Option<u64>) -> Result<String> {
    let text = read_text(spec_path)?;
    let mut spec = parse_sweep(spec_path, &text)?;
    if let Some(s) = seed {
        spec.base_seed = s;
    }
    let out: PathBuf = match (out, &spec.out) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(o)) => o.clone(),
        (None, None) => PathBuf::from(DEFAULT_SWEEP_OUT),
    };
    create_dir(&out)?;

    let records = run_sweep(&spec, jobs).context("cannot start worker pool")?;
    write_file(&out.join(SWEEP_FILE), &sweep_csv(&records))?;
    let summary = summarize(&spec, &records);
    let summary_text = summary_csv(&summary);
    write_file(&out.join(SUMMARY_FILE), &summary_text)?;

    let failed: Vec<String> = records
        .iter()
        .filter(|r| r.status != CellStatus::Ok)
        .map(|r| {
            format!(
                "  sigma={:e} lambda={:e} replicate={}: {} ({})",
                r.sigma,
                r.lambda,
                r.replicate,
                r.status.as_str(),
                r.message.as_deref().unwrap_or("")
            )
        })
        .collect();
    let mut report = format!(
        "{} cells ({} failed) written to {}\n{summary_text}",
        records.len(),
        failed.len(),
        out.display()
    );
    if !failed.is_empty() {
        report.push_str("failed cells:\n");
        report.push_str(&failed.join("\n"));
    }
    Ok(report.trim_end().to_string())
}

/// Writes PCA scatter coordinates for `X` plus optional `W*` and `Ŵ` overlays.
pub fn pca_file(x: &Path, w_star: Option<&Path>, w_hat: Option<&Path>, out: &Path) -> Result<String> {
    let points = read_matrix_file(x)?;
    let mut labels = Vec::new();
    let mut overlays = Vec::new();
    if let Some(p) = w_star {
        labels.push("W_star");
        overlays.push(read_matrix_file(p)?);
    }
    if let Some(p) = w_hat {
        labels.push("W_hat");
        overlays.push(read_matrix_file(p)?);
    }
    let refs: Vec<&DenseMatrix> = overlays.iter().collect();
    let pca = pca_2d(&points, &refs)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    write_file(out, &pca.to_csv(&labels))?;
    Ok(format!(
        "captured variance {:.6} written to {}",
        pca.captured_variance(),
        out.display()
    ))
}
