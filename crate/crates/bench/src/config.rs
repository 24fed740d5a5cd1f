//! TOML configuration for `generate` and `sweep`.
//!
//! Every error carries the file path and, when it can be pinned down, the
//! 1-based line of the offending key. The grammar is documented in
//! `crates/bench/CONFIG.md`.

use std::fmt;
use std::path::{Path, PathBuf};

use minvol_core::datagen::{Generator, InstanceSpec, NoiseModel};
use serde::Deserialize;
use thiserror::Error;

use crate::solve::{SolverKind, SolverSettings};

#[derive(Debug, Error)]
pub struct ConfigError {
    pub path: PathBuf,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{line}: {}", self.path.display(), self.message),
            None => write!(f, "{}: {}", self.path.display(), self.message),
        }
    }
}

/// Source text kept around so validation failures can point at a line.
struct Source<'a> {
    path: &'a Path,
    text: &'a str,
}

impl Source<'_> {
    fn error(&self, line: Option<usize>, message: impl Into<String>) -> ConfigError {
        ConfigError {
            path: self.path.to_path_buf(),
            line,
            message: message.into(),
        }
    }

    fn parse<T: for<'de> Deserialize<'de>>(&self) -> Result<T, ConfigError> {
        toml::from_str(self.text).map_err(|e| {
            let line = e.span().map(|s| line_of_offset(self.text, s.start));
            self.error(line, e.message().trim().to_string())
        })
    }

    /// Error anchored at the first line assigning `key` inside `section`.
    fn key_error(&self, section: &str, key: &str, message: impl Into<String>) -> ConfigError {
        self.error(line_of_key(self.text, section, key), message)
    }
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn line_of_key(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            if current == section && key.is_empty() {
                return Some(i + 1);
            }
            continue;
        }
        if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

fn default_alpha() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceTable {
    generator: String,
    m: Option<usize>,
    r: Option<usize>,
    n: usize,
    #[serde(default = "default_alpha")]
    alpha: f64,
    #[serde(default)]
    noise: Option<String>,
    sigma: Option<f64>,
    seed: Option<u64>,
}

/// Generator family plus dimensions, without noise level or seed.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceTemplate {
    pub generator: Generator,
    pub noise: NoiseModel,
}

impl InstanceTemplate {
    pub fn instance(&self, sigma: f64, seed: u64) -> InstanceSpec {
        InstanceSpec {
            generator: self.generator.clone(),
            sigma,
            noise: self.noise,
            seed,
        }
    }

    /// Rank of the generator's ground truth.
    pub fn rank(&self) -> usize {
        self.generator.dims().1
    }
}

fn instance_template(src: &Source<'_>, t: &InstanceTable) -> Result<InstanceTemplate, ConfigError> {
    let at = |key: &str, msg: String| src.key_error("instance", key, msg);
    let (m, r) = match t.generator.as_str() {
        "paper-4x4" => {
            if t.m.is_some_and(|m| m != 4) || t.r.is_some_and(|r| r != 4) {
                return Err(at("generator", "paper-4x4 is fixed at m = r = 4".into()));
            }
            (4, 4)
        }
        "random-uniform" => {
            let m = t.m.ok_or_else(|| at("generator", "random-uniform needs `m`".into()))?;
            let r = t.r.ok_or_else(|| at("generator", "random-uniform needs `r`".into()))?;
            if m == 0 || r == 0 {
                return Err(at(if m == 0 { "m" } else { "r" }, "dimensions must be at least 1".into()));
            }
            (m, r)
        }
        other => {
            return Err(at(
                "generator",
                format!("unknown generator `{other}` (expected one of {:?})", Generator::NAMES),
            ))
        }
    };
    if t.n == 0 {
        return Err(at("n", "n must be at least 1".into()));
    }
    if !(t.alpha > 0.0) || !t.alpha.is_finite() {
        return Err(at("alpha", format!("alpha must be positive, got {}", t.alpha)));
    }
    let generator = Generator::from_name(&t.generator, m, r, t.n, t.alpha)
        .map_err(|e| at("generator", e.to_string()))?;
    let noise = match &t.noise {
        None => NoiseModel::default(),
        Some(name) => name.parse().map_err(|e: minvol_core::Error| at("noise", e.to_string()))?,
    };
    Ok(InstanceTemplate { generator, noise })
}

fn check_sigma(src: &Source<'_>, section: &str, key: &str, sigma: f64) -> Result<(), ConfigError> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(src.key_error(section, key, format!("sigma must be finite and nonnegative, got {sigma}")));
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenerateFile {
    instance: InstanceTable,
}

/// Parsed `generate` config: one fully specified instance.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerateConfig {
    pub template: InstanceTemplate,
    pub sigma: f64,
    pub seed: u64,
}

impl GenerateConfig {
    pub fn instance(&self) -> InstanceSpec {
        self.template.instance(self.sigma, self.seed)
    }
}

pub fn parse_generate(path: &Path, text: &str) -> Result<GenerateConfig, ConfigError> {
    let src = Source { path, text };
    let file: GenerateFile = src.parse()?;
    let template = instance_template(&src, &file.instance)?;
    let sigma = file.instance.sigma.unwrap_or(0.0);
    check_sigma(&src, "instance", "sigma", sigma)?;
    Ok(GenerateConfig {
        template,
        sigma,
        seed: file.instance.seed.unwrap_or(0),
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepTable {
    solver: String,
    #[serde(default = "default_replicates")]
    replicates: usize,
    #[serde(default)]
    base_seed: u64,
    rank: Option<usize>,
    out: Option<PathBuf>,
}

fn default_replicates() -> usize {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridTable {
    sigma: Vec<f64>,
    lambda: Option<Vec<f64>>,
    lambda_tilde: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverTable {
    delta: Option<f64>,
    epsilon: Option<f64>,
    max_outer: Option<usize>,
    tol: Option<f64>,
    inner_sweeps: Option<usize>,
    inner_iters: Option<usize>,
    inner_tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    sweep: SweepTable,
    instance: InstanceTable,
    grid: GridTable,
    #[serde(default)]
    solver: SolverTable,
}

/// A declarative `(σ, λ)` grid experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub solver: SolverKind,
    pub template: InstanceTemplate,
    pub rank: usize,
    pub sigma_grid: Vec<f64>,
    /// `λ` for the square-root solver, `λ̃` for the baseline.
    pub lambda_grid: Vec<f64>,
    pub replicates: usize,
    pub base_seed: u64,
    pub settings: SolverSettings,
    pub out: Option<PathBuf>,
}

pub fn parse_sweep(path: &Path, text: &str) -> Result<ExperimentSpec, ConfigError> {
    let src = Source { path, text };
    let file: SweepFile = src.parse()?;

    let solver: SolverKind = file
        .sweep
        .solver
        .parse()
        .map_err(|e: String| src.key_error("sweep", "solver", e))?;
    if file.sweep.replicates == 0 {
        return Err(src.key_error("sweep", "replicates", "replicates must be at least 1"));
    }
    if file.instance.sigma.is_some() {
        return Err(src.key_error("instance", "sigma", "put noise levels in grid.sigma"));
    }
    if file.instance.seed.is_some() {
        return Err(src.key_error("instance", "seed", "sweeps derive seeds from sweep.base_seed"));
    }
    let template = instance_template(&src, &file.instance)?;
    let rank = file.sweep.rank.unwrap_or_else(|| template.rank());
    if rank == 0 {
        return Err(src.key_error("sweep", "rank", "rank must be at least 1"));
    }

    if file.grid.sigma.is_empty() {
        return Err(src.key_error("grid", "sigma", "grid.sigma must not be empty"));
    }
    for &s in &file.grid.sigma {
        check_sigma(&src, "grid", "sigma", s)?;
    }
    let (key, wrong) = match solver {
        SolverKind::SqrtMinvol => ("lambda", "lambda_tilde"),
        SolverKind::MinvolBaseline => ("lambda_tilde", "lambda"),
    };
    let (grid, other) = match solver {
        SolverKind::SqrtMinvol => (file.grid.lambda, file.grid.lambda_tilde),
        SolverKind::MinvolBaseline => (file.grid.lambda_tilde, file.grid.lambda),
    };
    if other.is_some() {
        return Err(src.key_error(
            "grid",
            wrong,
            format!("solver `{solver}` takes grid.{key}, not grid.{wrong}"),
        ));
    }
    let lambda_grid = grid.ok_or_else(|| {
        src.key_error("grid", "", format!("solver `{solver}` needs grid.{key}"))
    })?;
    if lambda_grid.is_empty() {
        return Err(src.key_error("grid", key, format!("grid.{key} must not be empty")));
    }
    if let Some(bad) = lambda_grid.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
        return Err(src.key_error("grid", key, format!("grid.{key} values must be positive, got {bad}")));
    }

    let mut settings = SolverSettings::default();
    let s = &file.solver;
    if let Some(v) = s.delta {
        settings.delta = v;
    }
    if let Some(v) = s.epsilon {
        settings.epsilon = v;
    }
    settings.max_outer = s.max_outer;
    settings.tol = s.tol;
    settings.inner_sweeps = s.inner_sweeps;
    settings.inner_iters = s.inner_iters;
    settings.inner_tol = s.inner_tol;
    if let Err(e) = settings.validate(solver) {
        let key = e.key;
        return Err(src.key_error("solver", key, e.message));
    }

    Ok(ExperimentSpec {
        solver,
        template,
        rank,
        sigma_grid: file.grid.sigma,
        lambda_grid,
        replicates: file.sweep.replicates,
        base_seed: file.sweep.base_seed,
        settings,
        out: file.sweep.out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SWEEP: &str = r#"
[sweep]
solver = "minvol-baseline"
base_seed = 3

[instance]
generator = "paper-4x4"
n = 50

[grid]
sigma = [0.1, 0.01]
lambda_tilde = [1.5, 0.15]
"#;

    fn sweep(text: &str) -> Result<ExperimentSpec, ConfigError> {
        parse_sweep(Path::new("spec.toml"), text)
    }

    #[test]
    fn parses_minimal_sweep() {
        let spec = sweep(SWEEP).unwrap();
        assert_eq!(spec.solver, SolverKind::MinvolBaseline);
        assert_eq!(spec.rank, 4);
        assert_eq!(spec.lambda_grid, vec![1.5, 0.15]);
        assert_eq!(spec.replicates, 1);
        assert_eq!(spec.settings, SolverSettings::default());
    }

    #[test]
    fn syntax_error_reports_line() {
        let text = SWEEP.replace("n = 50", "n = = 50");
        let err = sweep(&text).unwrap_err();
        assert_eq!(err.line, Some(8), "{err}");
        assert!(err.to_string().starts_with("spec.toml:8:"));
    }

    #[test]
    fn unknown_key_reports_line() {
        let text = SWEEP.replace("base_seed = 3", "base_seed = 3\nseeed = 4");
        let err = sweep(&text).unwrap_err();
        assert_eq!(err.line, Some(5), "{err}");
    }

    #[test]
    fn validation_errors_point_at_key() {
        let text = SWEEP.replace("sigma = [0.1, 0.01]", "sigma = []");
        assert_eq!(sweep(&text).unwrap_err().line, Some(11));
        let text = SWEEP.replace("lambda_tilde = [1.5, 0.15]", "lambda = [1.5]");
        assert_eq!(sweep(&text).unwrap_err().line, Some(12));
        let text = SWEEP.replace("sigma = [0.1, 0.01]", "sigma = [0.1, -1.0]");
        assert_eq!(sweep(&text).unwrap_err().line, Some(11));
        let text = SWEEP.replace("\"paper-4x4\"", "\"paper-5x5\"");
        assert_eq!(sweep(&text).unwrap_err().line, Some(7));
    }

    #[test]
    fn random_uniform_requires_dimensions() {
        let text = SWEEP.replace("\"paper-4x4\"", "\"random-uniform\"\nm = 6");
        let err = sweep(&text).unwrap_err();
        assert!(err.message.contains("`r`"), "{err}");
    }

    #[test]
    fn generate_config_defaults() {
        let cfg = parse_generate(
            Path::new("g.toml"),
            "[instance]\ngenerator = \"random-uniform\"\nm = 5\nr = 3\nn = 40\nsigma = 0.01\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.sigma, 0.01);
        assert_eq!(cfg.template.generator.dims(), (5, 3, 40));
        assert_eq!(cfg.template.noise, NoiseModel::Uniform);
    }

    #[test]
    fn solver_overrides_are_validated() {
        let text = format!("{SWEEP}\n[solver]\ndelta = -1.0\n");
        let err = sweep(&text).unwrap_err();
        assert_eq!(err.line, Some(15), "{err}");
    }
}
