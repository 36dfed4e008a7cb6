use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::adaptation::{AdaptConfig, AdaptVariant, SupportTransform};
use crate::elliptical::EllipticalFamily;
use crate::error::{Error, Result};
use crate::target::TargetDensity;
use crate::targets::{self, Dataset, DeepGpConfig};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "AGESS_OUTPUT_DIR";

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

fn default_max_lag() -> usize {
    50
}

fn default_true() -> bool {
    true
}

/// One sampler on one target, replicated over independent chains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub target: TargetSpec,
    pub sampler: SamplerSpec,
    #[serde(default = "one")]
    pub chains: usize,
    pub iterations: usize,
    pub burn_in: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub preset: Option<String>,
    /// Starting state; the target's default when absent.
    #[serde(default)]
    pub init: Option<Vec<f64>>,
    #[serde(default = "default_max_lag")]
    pub max_lag: usize,
    /// Convergence threshold on the multivariate scale reduction factor.
    #[serde(default = "default_gr_threshold")]
    pub gr_threshold: f64,
}

fn default_gr_threshold() -> f64 {
    1.01
}

/// Target by name with its data options. `dataset` points at a CSV written by
/// [`Dataset::save`]; otherwise data are simulated from `data_seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    Gaussian {
        dim: usize,
        #[serde(default = "unit")]
        variance: f64,
    },
    Volcano {
        dim: usize,
    },
    Banana {
        n: usize,
        #[serde(default)]
        data_seed: u64,
        #[serde(default)]
        offsets: Option<[f64; 2]>,
        #[serde(default)]
        dataset: Option<PathBuf>,
    },
    TwinBanana {
        n: usize,
        #[serde(default)]
        data_seed: u64,
        #[serde(default)]
        offsets: Option<[f64; 2]>,
        #[serde(default)]
        dataset: Option<PathBuf>,
    },
    Relu {
        n: usize,
        d: usize,
        #[serde(default)]
        data_seed: u64,
        #[serde(default)]
        dataset: Option<PathBuf>,
    },
    Horseshoe {
        n: usize,
        d: usize,
        #[serde(default)]
        data_seed: u64,
        #[serde(default)]
        dataset: Option<PathBuf>,
    },
    DeepGp {
        #[serde(default)]
        dataset: Option<PathBuf>,
        #[serde(default)]
        config: Option<DeepGpConfig>,
    },
}

/// Adaptive-sampler settings; unset tuning constants take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgessSettings {
    #[serde(default = "EllipticalFamily::t6")]
    pub family: EllipticalFamily,
    #[serde(default)]
    pub variant: AdaptVariant,
    /// Initial reference scale is `sigma0_variance I`.
    #[serde(default = "unit")]
    pub sigma0_variance: f64,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub eps_a: Option<f64>,
    #[serde(default)]
    pub eps_b: Option<f64>,
    #[serde(default)]
    pub burn_1d_fraction: Option<f64>,
    #[serde(default)]
    pub weight_exponent: Option<f64>,
    #[serde(default = "default_true")]
    pub adapt: bool,
    /// Sampling-space transform for constrained coordinates.
    #[serde(default)]
    pub transform: Option<SupportTransform>,
}

impl Default for AgessSettings {
    fn default() -> Self {
        AgessSettings {
            family: EllipticalFamily::t6(),
            variant: AdaptVariant::FullCovariance,
            sigma0_variance: 1.0,
            beta: None,
            eps_a: None,
            eps_b: None,
            burn_1d_fraction: None,
            weight_exponent: None,
            adapt: true,
            transform: None,
        }
    }
}

/// Sampler and its tuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplerSpec {
    /// Elliptical slice sampling with an `N(mu0, prior_variance I)` prior.
    Ess {
        #[serde(default = "unit")]
        prior_variance: f64,
    },
    /// Full steps with a fixed reference `(mu0, sigma0_variance I)`.
    Fixed {
        family: EllipticalFamily,
        #[serde(default = "unit")]
        sigma0_variance: f64,
    },
    Agess(AgessSettings),
    /// As `agess` with the scalar-scale variant forced.
    AgessScalar(AgessSettings),
    /// Adaptive random-walk Metropolis with greedy start `initial_variance I`.
    Arw {
        #[serde(default = "unit")]
        initial_variance: f64,
    },
}

impl SamplerSpec {
    pub fn label(&self) -> &'static str {
        match self {
            SamplerSpec::Ess { .. } => "ess",
            SamplerSpec::Fixed { .. } => "fixed",
            SamplerSpec::Agess(_) => "agess",
            SamplerSpec::AgessScalar(_) => "agess_scalar",
            SamplerSpec::Arw { .. } => "arw",
        }
    }

    /// Settings of an adaptive sampler.
    pub fn agess_settings(&self) -> Option<&AgessSettings> {
        match self {
            SamplerSpec::Agess(s) | SamplerSpec::AgessScalar(s) => Some(s),
            _ => None,
        }
    }

    /// Adaptive-driver settings for a `dim`-dimensional run.
    pub fn adapt_config(&self, dim: usize, iterations: usize, burn_in: usize) -> Option<AdaptConfig> {
        let s = self.agess_settings()?;
        let mut c = AdaptConfig::for_dim(dim, iterations, burn_in);
        c.family = s.family;
        c.variant = if matches!(self, SamplerSpec::AgessScalar(_)) { AdaptVariant::ScalarScale } else { s.variant };
        c.adapt = s.adapt;
        if let Some(v) = s.beta {
            c.beta = v;
        }
        if let Some(v) = s.eps_a {
            c.eps_a = v;
        }
        if let Some(v) = s.eps_b {
            c.eps_b = v;
        }
        if let Some(v) = s.burn_1d_fraction {
            c.burn_1d_fraction = v;
        }
        if s.weight_exponent.is_some() {
            c.weight_exponent = s.weight_exponent;
        }
        Some(c)
    }
}

/// A constructed target with its defaults.
pub struct BuiltTarget {
    pub density: TargetDensity,
    pub dataset: Option<Dataset>,
    /// Default reference mean.
    pub mean: DVector<f64>,
    kind: InitKind,
}

enum InitKind {
    AtMean,
    /// Mean with the last three coordinates redrawn from `N(0, 1)` per chain.
    RandomTail3,
}

impl BuiltTarget {
    pub fn dim(&self) -> usize {
        self.density.dim()
    }

    /// Default starting state for a chain.
    pub fn default_init<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut x: Vec<f64> = self.mean.iter().copied().collect();
        if let InitKind::RandomTail3 = self.kind {
            let p = x.len();
            for v in &mut x[p - 3..] {
                *v = StandardNormal.sample(rng);
            }
        }
        x
    }
}

/// Ridge estimate for `beta`, residual variance for `sigma^2`, unit local
/// and global scales. At `beta = 0` the density is unbounded as `tau -> 0`.
fn horseshoe_start(ds: &Dataset) -> DVector<f64> {
    let d = ds.d();
    let y = DVector::from_column_slice(&ds.y);
    let gram = ds.x.transpose() * &ds.x + DMatrix::identity(d, d);
    let beta = gram.cholesky().map(|c| c.solve(&(ds.x.transpose() * &y))).unwrap_or_else(|| DVector::zeros(d));
    let rss = (&y - &ds.x * &beta).norm_squared();
    let mut start = DVector::zeros(2 * d + 2);
    start.rows_mut(0, d).copy_from(&beta);
    start[2 * d + 1] = (rss / ds.n() as f64).max(1e-8).ln();
    start
}

fn load_or(path: &Option<PathBuf>, make: impl FnOnce() -> Dataset) -> Result<Dataset> {
    match path {
        Some(p) => Dataset::load(p),
        None => Ok(make()),
    }
}

fn offsets_from(ds: &Dataset, fallback: (f64, f64)) -> (f64, f64) {
    match (ds.meta.params.get("mu1"), ds.meta.params.get("mu2")) {
        (Some(a), Some(b)) => (*a, *b),
        _ => fallback,
    }
}

fn y_only(kind: &str, y: Vec<f64>, mu: (f64, f64), seed: u64) -> Dataset {
    let mut ds = Dataset {
        x: DMatrix::zeros(y.len(), 0),
        meta: targets::DatasetMeta { kind: kind.into(), seed: Some(seed), n: y.len(), d: 0, ..Default::default() },
        y,
    };
    ds.meta.params.insert("mu1".into(), mu.0);
    ds.meta.params.insert("mu2".into(), mu.1);
    ds
}

impl TargetSpec {
    pub fn dataset_path(&self) -> Option<&Path> {
        match self {
            TargetSpec::Banana { dataset, .. }
            | TargetSpec::TwinBanana { dataset, .. }
            | TargetSpec::Relu { dataset, .. }
            | TargetSpec::Horseshoe { dataset, .. }
            | TargetSpec::DeepGp { dataset, .. } => dataset.as_deref(),
            _ => None,
        }
    }

    /// Builds the density, loading or simulating its data.
    pub fn build(&self) -> Result<BuiltTarget> {
        if let Some(p) = self.dataset_path() {
            if !p.exists() {
                return Err(Error::config(format!("dataset {} does not exist", p.display())));
            }
        }
        let plain = |density: TargetDensity, dataset: Option<Dataset>, mean: DVector<f64>| BuiltTarget {
            density,
            dataset,
            mean,
            kind: InitKind::AtMean,
        };
        Ok(match self {
            TargetSpec::Gaussian { dim, variance } => {
                if *dim == 0 || variance.is_nan() || *variance <= 0.0 {
                    return Err(Error::config("gaussian target needs dim > 0 and variance > 0"));
                }
                let t = targets::gaussian_target(DVector::zeros(*dim), DMatrix::identity(*dim, *dim) * *variance)?;
                plain(t, None, DVector::zeros(*dim))
            }
            TargetSpec::Volcano { dim } => {
                if *dim == 0 {
                    return Err(Error::config("volcano target needs dim > 0"));
                }
                plain(targets::volcano_target(*dim), None, DVector::zeros(*dim))
            }
            TargetSpec::Banana { n, data_seed, offsets, dataset } => {
                let ds = load_or(dataset, || {
                    let mut rng = ChaCha8Rng::seed_from_u64(*data_seed);
                    let mu = targets::banana_nuisance(&mut rng);
                    let mu = offsets.map(|o| (o[0], o[1])).unwrap_or(mu);
                    y_only("banana", targets::banana_data(*n, &mut rng), mu, *data_seed)
                })?;
                let (m1, m2) = offsets_from(&ds, (0.0, 0.0));
                let t = targets::banana_target(&ds.y, m1, m2);
                plain(t, Some(ds), DVector::from_column_slice(&targets::BANANA_PRIOR_MEAN))
            }
            TargetSpec::TwinBanana { n, data_seed, offsets, dataset } => {
                let ds = load_or(dataset, || {
                    let mut rng = ChaCha8Rng::seed_from_u64(*data_seed);
                    let mu = targets::banana_nuisance(&mut rng);
                    let mu = offsets.map(|o| (o[0], o[1])).unwrap_or(mu);
                    y_only("twin_banana", targets::twin_banana_data(*n, &mut rng), mu, *data_seed)
                })?;
                let (m1, m2) = offsets_from(&ds, (0.0, 0.0));
                plain(targets::twin_banana_target(&ds.y, m1, m2), Some(ds), DVector::zeros(2))
            }
            TargetSpec::Relu { n, d, data_seed, dataset } => {
                let ds = load_or(dataset, || {
                    let mut rng = ChaCha8Rng::seed_from_u64(*data_seed);
                    let mut ds = targets::relu_data(*n, *d, &mut rng);
                    ds.meta.seed = Some(*data_seed);
                    ds
                })?;
                let dim = ds.d();
                plain(targets::relu_target(&ds), Some(ds), DVector::zeros(dim))
            }
            TargetSpec::Horseshoe { n, d, data_seed, dataset } => {
                let ds = load_or(dataset, || {
                    let mut rng = ChaCha8Rng::seed_from_u64(*data_seed);
                    let mut ds = targets::horseshoe_data(*n, *d, &mut rng);
                    ds.meta.seed = Some(*data_seed);
                    ds
                })?;
                let start = horseshoe_start(&ds);
                plain(targets::horseshoe_target(&ds), Some(ds), start)
            }
            TargetSpec::DeepGp { dataset, config } => {
                let ds = load_or(dataset, targets::deep_gp_data)?;
                let t = targets::deep_gp_target(&ds, config.unwrap_or_default());
                let n = ds.n();
                let mut mean = DVector::zeros(n + 3);
                for i in 0..n {
                    mean[i] = ds.x[(i, 0)];
                }
                BuiltTarget { density: t, dataset: Some(ds), mean, kind: InitKind::RandomTail3 }
            }
        })
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }

    /// Checks everything that can be checked before sampling starts.
    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::config("experiment name must be non-empty and contain no path separators"));
        }
        if self.chains == 0 {
            return Err(Error::config("chains must be at least 1"));
        }
        if self.iterations < 2 || self.burn_in >= self.iterations {
            return Err(Error::config("need iterations >= 2 and burn_in < iterations"));
        }
        if self.workers == Some(0) {
            return Err(Error::config("workers must be at least 1"));
        }
        if let Some(p) = self.target.dataset_path() {
            if !p.exists() {
                return Err(Error::config(format!("dataset {} does not exist", p.display())));
            }
        }
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!("{what} must be positive")))
            }
        };
        match &self.sampler {
            SamplerSpec::Ess { prior_variance } => positive(*prior_variance, "prior_variance")?,
            SamplerSpec::Fixed { sigma0_variance, .. } => positive(*sigma0_variance, "sigma0_variance")?,
            SamplerSpec::Arw { initial_variance } => positive(*initial_variance, "initial_variance")?,
            SamplerSpec::Agess(s) | SamplerSpec::AgessScalar(s) => positive(s.sigma0_variance, "sigma0_variance")?,
        }
        Ok(())
    }

    /// Output directory: the override, the config value, the environment
    /// variable, or `agess-out`, with the experiment name appended.
    pub fn resolve_output_dir(&self, override_dir: Option<&Path>) -> PathBuf {
        let base = override_dir
            .map(Path::to_path_buf)
            .or_else(|| self.output_dir.clone())
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("agess-out"));
        base.join(&self.name)
    }
}
