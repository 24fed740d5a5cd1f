//! Seeded synthetic instances: ground-truth factors, their product, and
//! additive noise.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// SplitMix64 finalizer, used to derive independent child seeds.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for a path of counters below `base`. Distinct paths give
/// statistically independent streams; equal paths give equal seeds.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix64(base), |acc, &p| mix64(acc ^ mix64(p)))
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The 4×4 0/1 endmember matrix of the rank-deficient benchmark. Its columns
/// are the corners of a square, so `W*ᵀW*` is singular.
pub fn fixed_w4() -> DenseMatrix {
    DenseMatrix::from_rows(&[
        &[1.0, 1.0, 0.0, 0.0],
        &[0.0, 0.0, 1.0, 1.0],
        &[0.0, 1.0, 1.0, 0.0],
        &[1.0, 0.0, 0.0, 1.0],
    ])
}

/// `r×n` matrix whose columns are i.i.d. Dirichlet(α·1_r) draws.
pub fn dirichlet_h(r: usize, n: usize, alpha: f64, seed: u64) -> Result<DenseMatrix> {
    if r == 0 || n == 0 {
        return Err(Error::param("dirichlet_h needs r, n >= 1"));
    }
    let gamma = Gamma::new(alpha, 1.0)
        .map_err(|e| Error::param(format!("invalid Dirichlet concentration {alpha}: {e}")))?;
    let mut rng = rng(seed);
    let mut h = DenseMatrix::zeros(r, n);
    let mut draw = vec![0.0; r];
    for j in 0..n {
        let total = loop {
            for g in draw.iter_mut() {
                *g = gamma.sample(&mut rng);
            }
            let s: f64 = draw.iter().sum();
            if s > 0.0 && s.is_finite() {
                break s;
            }
        };
        for (i, g) in draw.iter().enumerate() {
            h.set(i, j, g / total);
        }
    }
    Ok(h)
}

/// `m×r` matrix with i.i.d. Uniform[0, 1] entries.
pub fn random_uniform_w(m: usize, r: usize, seed: u64) -> Result<DenseMatrix> {
    if m == 0 || r == 0 {
        return Err(Error::param("random_uniform_w needs m, r >= 1"));
    }
    let mut rng = rng(seed);
    Ok(DenseMatrix::from_fn(m, r, |_, _| rng.random::<f64>()))
}

/// Noiseless separable instance: `W` uniform `m×r`, `H` Dirichlet(1) columns
/// with an `r×r` identity block planted at `r` distinct seeded positions.
/// Returns `(W, H, X = WH, planted)` with `planted[t]` the column equal to
/// `W(:, t)`.
pub fn separable_instance(
    m: usize,
    r: usize,
    n: usize,
    seed: u64,
) -> Result<(DenseMatrix, DenseMatrix, DenseMatrix, Vec<usize>)> {
    if r > n {
        return Err(Error::param(format!("cannot plant {r} vertices among {n} columns")));
    }
    let w = random_uniform_w(m, r, derive_seed(seed, &[0]))?;
    let mut h = dirichlet_h(r, n, 1.0, derive_seed(seed, &[1]))?;
    let mut rng = rng(derive_seed(seed, &[2]));
    let planted = rand::seq::index::sample(&mut rng, n, r).into_vec();
    for (t, &j) in planted.iter().enumerate() {
        for i in 0..r {
            h.set(i, j, if i == t { 1.0 } else { 0.0 });
        }
    }
    let x = w.matmul(&h);
    Ok((w, h, x, planted))
}

/// `X* + E` with `E` i.i.d. Uniform[0, σ].
pub fn add_uniform_noise(x_star: &DenseMatrix, sigma: f64, seed: u64) -> Result<DenseMatrix> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::param(format!("noise level must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(x_star.clone());
    }
    let mut rng = rng(seed);
    Ok(x_star.map(|v| v + sigma * rng.random::<f64>()))
}

/// `X* + E` with `E` i.i.d. N(0, σ²).
pub fn add_gaussian_noise(x_star: &DenseMatrix, sigma: f64, seed: u64) -> Result<DenseMatrix> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::param(format!("noise level must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(x_star.clone());
    }
    let normal = Normal::new(0.0, sigma).expect("sigma is finite and positive");
    let mut rng = rng(seed);
    Ok(x_star.map(|v| v + normal.sample(&mut rng)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseModel {
    #[default]
    Uniform,
    Gaussian,
}

impl FromStr for NoiseModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "gaussian" => Ok(Self::Gaussian),
            other => Err(Error::param(format!("unknown noise model `{other}`"))),
        }
    }
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Uniform => "uniform",
            Self::Gaussian => "gaussian",
        })
    }
}

/// Ground-truth generator families.
#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    /// `W*` = [`fixed_w4`], `H*` Dirichlet over 4 categories.
    Paper4x4 { n: usize, alpha: f64 },
    /// `W*` i.i.d. Uniform[0, 1], `H*` Dirichlet over `r` categories.
    RandomUniform { m: usize, r: usize, n: usize, alpha: f64 },
}

impl Generator {
    pub const NAMES: [&'static str; 2] = ["paper-4x4", "random-uniform"];

    /// Builds a generator from its name and dimensions. `m` and `r` are
    /// ignored for `paper-4x4`.
    pub fn from_name(name: &str, m: usize, r: usize, n: usize, alpha: f64) -> Result<Self> {
        match name {
            "paper-4x4" => Ok(Self::Paper4x4 { n, alpha }),
            "random-uniform" => Ok(Self::RandomUniform { m, r, n, alpha }),
            other => Err(Error::param(format!(
                "unknown generator `{other}` (expected one of {:?})",
                Self::NAMES
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Paper4x4 { .. } => "paper-4x4",
            Self::RandomUniform { .. } => "random-uniform",
        }
    }

    /// `(m, r, n)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        match *self {
            Self::Paper4x4 { n, .. } => (4, 4, n),
            Self::RandomUniform { m, r, n, .. } => (m, r, n),
        }
    }
}

/// Full description of one synthetic instance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSpec {
    pub generator: Generator,
    pub sigma: f64,
    pub noise: NoiseModel,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub w_star: DenseMatrix,
    pub h_star: DenseMatrix,
    pub x_star: DenseMatrix,
    pub spec: InstanceSpec,
}

const STREAM_W: u64 = 1;
const STREAM_H: u64 = 2;
const STREAM_NOISE: u64 = 3;

/// Generates ground truth and the noisy observation `X = X* + E`.
pub fn make_instance(spec: &InstanceSpec) -> Result<(GroundTruth, DenseMatrix)> {
    let seed = spec.seed;
    let (w_star, h_star) = match spec.generator {
        Generator::Paper4x4 { n, alpha } => (
            fixed_w4(),
            dirichlet_h(4, n, alpha, derive_seed(seed, &[STREAM_H]))?,
        ),
        Generator::RandomUniform { m, r, n, alpha } => (
            random_uniform_w(m, r, derive_seed(seed, &[STREAM_W]))?,
            dirichlet_h(r, n, alpha, derive_seed(seed, &[STREAM_H]))?,
        ),
    };
    let x_star = w_star.matmul(&h_star);
    let noise_seed = derive_seed(seed, &[STREAM_NOISE]);
    let x = match spec.noise {
        NoiseModel::Uniform => add_uniform_noise(&x_star, spec.sigma, noise_seed)?,
        NoiseModel::Gaussian => add_gaussian_noise(&x_star, spec.sigma, noise_seed)?,
    };
    Ok((
        GroundTruth {
            w_star,
            h_star,
            x_star,
            spec: spec.clone(),
        },
        x,
    ))
}
