//! Background moment estimation, the commit schedule and the adaptive driver.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::elliptical::{EllipticalFamily, EllipticalParams};
use crate::error::{Error, Result};
use crate::kernels::{coord_sweep_cached, coordinate_params, slice_move, slice_stats, KernelTag};
use crate::shrinkage::DEFAULT_MAX_SHRINK;
use crate::target::TargetDensity;
use crate::trace::{CommitRecord, Trace};

/// How a commit turns the background estimate into new reference parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AdaptVariant {
    /// `(mean, covariance)` of the background estimate.
    #[default]
    FullCovariance,
    /// Initial mean with `trace(cov) / P` times the identity.
    ScalarScale,
}

/// Settings of the adaptive driver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaptConfig {
    /// Total number of states, the initial one included.
    pub iterations: usize,
    pub burn_in: usize,
    /// Exponent of the commit schedule; commit `j` lands at `sum_{i<=j} floor(i^beta)`.
    pub beta: f64,
    /// Probability of a full step at the initial parameters.
    pub eps_a: f64,
    /// Probability of a coordinate sweep after the forced phase (`P >= 10` only).
    pub eps_b: f64,
    /// Fraction of the burn-in spent on forced coordinate sweeps when `P >= 10`.
    pub burn_1d_fraction: f64,
    pub family: EllipticalFamily,
    pub variant: AdaptVariant,
    /// When false, commits are skipped and the reference stays at its initial value.
    pub adapt: bool,
    /// Overrides the background weight exponent.
    pub weight_exponent: Option<f64>,
    pub max_shrink: usize,
    pub seed: u64,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        AdaptConfig {
            iterations: 10_000,
            burn_in: 5_000,
            beta: 0.5,
            eps_a: 0.1,
            eps_b: 0.05,
            burn_1d_fraction: 0.1,
            family: EllipticalFamily::t6(),
            variant: AdaptVariant::FullCovariance,
            adapt: true,
            weight_exponent: None,
            max_shrink: DEFAULT_MAX_SHRINK,
            seed: 0,
        }
    }
}

impl AdaptConfig {
    /// Defaults for a `dim`-dimensional target: `eps_a` is 0.1 below ten
    /// dimensions and 0.05 from ten on.
    pub fn for_dim(dim: usize, iterations: usize, burn_in: usize) -> Self {
        AdaptConfig {
            iterations,
            burn_in,
            eps_a: if dim < 10 { 0.1 } else { 0.05 },
            ..Default::default()
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if self.iterations == 0 {
            return Err(Error::config("iterations must be positive"));
        }
        if self.burn_in > self.iterations {
            return Err(Error::config("burn-in exceeds the number of iterations"));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::config(format!("schedule exponent must be positive, got {}", self.beta)));
        }
        if !unit(self.eps_a) || !unit(self.eps_b) || self.eps_a + self.eps_b > 1.0 {
            return Err(Error::config("mixture probabilities must lie in [0, 1] and sum to at most 1"));
        }
        if !unit(self.burn_1d_fraction) {
            return Err(Error::config(format!(
                "burn_1d_fraction must lie in [0, 1], got {}",
                self.burn_1d_fraction
            )));
        }
        if let Some(d) = self.weight_exponent {
            if !(d > 0.0 && d <= 1.0) {
                return Err(Error::config("weight exponent must lie in (0, 1]"));
            }
        }
        if self.max_shrink == 0 {
            return Err(Error::config("max_shrink must be positive"));
        }
        self.family.validate(dim)
    }
}

/// `max(2/3, (P^(1/3) - 1) / P^(1/3))`.
pub fn weight_exponent(dim: usize) -> f64 {
    let c = (dim as f64).cbrt();
    (2.0 / 3.0_f64).max((c - 1.0) / c)
}

/// `floor(j^beta)`, robust to `powf` landing just below an integer.
fn floor_pow(j: u64, beta: f64) -> u64 {
    ((j as f64).powf(beta) + 1e-9).floor() as u64
}

/// Commit iterations `N_j = sum_{i<=j} floor(i^beta)`.
#[derive(Debug, Clone)]
pub struct AirSchedule {
    beta: f64,
    j: u64,
    total: u64,
}

impl AirSchedule {
    pub fn new(beta: f64) -> Self {
        AirSchedule { beta, j: 0, total: 0 }
    }
}

impl Iterator for AirSchedule {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        self.j += 1;
        self.total += floor_pow(self.j, self.beta).max(1);
        Some(self.total)
    }
}

/// Exponentially weighted background estimate of the mean and covariance.
#[derive(Debug, Clone)]
pub struct AdaptiveEstimator {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub exponent: f64,
}

impl AdaptiveEstimator {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>, exponent: f64) -> Self {
        AdaptiveEstimator { mean, cov, exponent }
    }

    pub fn weight(&self, i: usize) -> f64 {
        (i as f64).powf(-self.exponent)
    }

    /// Folds in state `x` seen at iteration `i >= 2`. The covariance update
    /// uses the already updated mean.
    pub fn update(&mut self, x: &[f64], i: usize) {
        let w = self.weight(i);
        let p = self.mean.len();
        for (m, v) in self.mean.iter_mut().zip(x) {
            *m = (1.0 - w) * *m + w * v;
        }
        let d: Vec<f64> = (0..p).map(|k| x[k] - self.mean[k]).collect();
        for c in 0..p {
            for r in c..p {
                let v = (1.0 - w) * self.cov[(r, c)] + w * d[r] * d[c];
                self.cov[(r, c)] = v;
                self.cov[(c, r)] = v;
            }
        }
    }
}

/// `update` as a free function.
pub fn background_update(est: &mut AdaptiveEstimator, x: &[f64], i: usize) {
    est.update(x, i);
}

/// New reference parameters from the background estimate; returns the jitter
/// that had to be added to make the scale factorisable.
pub fn commit_adaptation(
    est: &AdaptiveEstimator,
    family: EllipticalFamily,
    variant: AdaptVariant,
    initial_mean: &DVector<f64>,
) -> Result<(EllipticalParams, f64)> {
    match variant {
        AdaptVariant::FullCovariance => EllipticalParams::new_with_jitter(family, est.mean.clone(), est.cov.clone()),
        AdaptVariant::ScalarScale => {
            let p = est.mean.len();
            let s = est.cov.trace() / p as f64;
            EllipticalParams::new_with_jitter(family, initial_mean.clone(), DMatrix::identity(p, p) * s)
        }
    }
}

/// Per-coordinate map between the original space and the sampling space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordTransform {
    Identity,
    /// `x = exp(u)` for a positive coordinate.
    LogPositive,
}

/// Reparametrisation applied before sampling; states are recorded in the
/// original space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SupportTransform {
    coords: Vec<CoordTransform>,
}

impl SupportTransform {
    pub fn identity() -> Self {
        SupportTransform { coords: Vec::new() }
    }

    pub fn new(coords: Vec<CoordTransform>) -> Self {
        SupportTransform { coords }
    }

    /// Log transform on the listed coordinates of a `dim`-dimensional state.
    pub fn log_positive(dim: usize, indices: &[usize]) -> Self {
        let mut coords = vec![CoordTransform::Identity; dim];
        for &i in indices {
            coords[i] = CoordTransform::LogPositive;
        }
        SupportTransform { coords }
    }

    /// Number of explicitly listed coordinates; later ones are identity.
    pub fn declared_len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_identity(&self) -> bool {
        self.coords.iter().all(|c| *c == CoordTransform::Identity)
    }

    fn kind(&self, i: usize) -> CoordTransform {
        self.coords.get(i).copied().unwrap_or(CoordTransform::Identity)
    }

    pub fn to_internal(&self, x: &[f64]) -> Result<Vec<f64>> {
        x.iter()
            .enumerate()
            .map(|(i, &v)| match self.kind(i) {
                CoordTransform::Identity => Ok(v),
                CoordTransform::LogPositive if v > 0.0 => Ok(v.ln()),
                CoordTransform::LogPositive => {
                    Err(Error::ChainInit(format!("coordinate {i} must be positive, got {v}")))
                }
            })
            .collect()
    }

    pub fn to_original_into(&self, u: &[f64], out: &mut [f64]) {
        for (i, (&v, o)) in u.iter().zip(out.iter_mut()).enumerate() {
            *o = match self.kind(i) {
                CoordTransform::Identity => v,
                CoordTransform::LogPositive => v.exp(),
            };
        }
    }

    pub fn to_original(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.to_original_into(u, &mut out);
        out
    }

    /// `log |dx/du|`.
    pub fn log_jacobian(&self, u: &[f64]) -> f64 {
        u.iter()
            .enumerate()
            .filter(|(i, _)| self.kind(*i) == CoordTransform::LogPositive)
            .map(|(_, v)| *v)
            .sum()
    }
}

/// Which transition the mixture picked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Choice {
    Adaptive,
    NonAdaptive,
    Sweep,
}

/// Draws a uniform only when the outcome is not already determined.
fn coin<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    if p <= 0.0 {
        false
    } else if p >= 1.0 {
        true
    } else {
        rng.random::<f64>() <= p
    }
}

/// Runs the adaptive sampler for `config.iterations` states starting from
/// `init` (original space). `mu0` and `sigma0` live in the sampling space.
pub fn run_agess<R: Rng + ?Sized>(
    target: &TargetDensity,
    transform: &SupportTransform,
    init: &[f64],
    mu0: &DVector<f64>,
    sigma0: &DMatrix<f64>,
    config: &AdaptConfig,
    rng: &mut R,
) -> Result<Trace> {
    let p = target.dim();
    config.validate(p)?;
    if init.len() != p || mu0.len() != p {
        return Err(Error::config(format!("initial state and mean must have dimension {p}")));
    }
    let gamma0 = EllipticalParams::new(config.family, mu0.clone(), sigma0.clone())?;
    let identity = transform.is_identity();
    let mut scratch = vec![0.0; p];
    let mut eval = |u: &[f64]| -> f64 {
        if identity {
            return target.log_density(u);
        }
        transform.to_original_into(u, &mut scratch);
        let lt = target.log_density(&scratch);
        if lt == f64::NEG_INFINITY {
            lt
        } else {
            lt + transform.log_jacobian(u)
        }
    };

    let mut x = transform.to_internal(init)?;
    let mut value = eval(&x);
    if !value.is_finite() {
        return Err(Error::ChainInit(format!("log density at the initial state is {value}")));
    }

    let evals_before = target.evals();
    let n = config.iterations;
    let mut trace = Trace::new(p, config.burn_in, n);
    trace.push_initial(&transform.to_original(&x));

    let mut gamma = gamma0.clone();
    let mut coords: Option<Vec<EllipticalParams>> = None;
    let mut est = AdaptiveEstimator::new(
        mu0.clone(),
        sigma0.clone(),
        config.weight_exponent.unwrap_or_else(|| weight_exponent(p)),
    );
    let mut schedule = AirSchedule::new(config.beta);
    let mut next_commit = schedule.by_ref().find(|&c| c >= 2).unwrap_or(u64::MAX);

    let high_dim = p >= 10;
    let forced = (config.burn_1d_fraction * config.burn_in as f64).floor() as usize;
    let mix = config.eps_a + config.eps_b;
    let sweep_share = if mix > 0.0 { config.eps_b / mix } else { 0.0 };

    let start = Instant::now();
    let mut burn_mark = if config.burn_in <= 1 { Some(0.0) } else { None };

    for i in 2..=n {
        let choice = if high_dim {
            if i <= forced {
                Choice::Sweep
            } else if coin(rng, mix) {
                if coin(rng, sweep_share) {
                    Choice::Sweep
                } else {
                    Choice::NonAdaptive
                }
            } else {
                Choice::Adaptive
            }
        } else if coin(rng, config.eps_a) {
            Choice::NonAdaptive
        } else {
            Choice::Adaptive
        };

        let step = match choice {
            Choice::Adaptive | Choice::NonAdaptive => {
                let (params, tag) = if choice == Choice::Adaptive {
                    (&gamma, KernelTag::AdaptiveFull)
                } else {
                    (&gamma0, KernelTag::NonAdaptiveFull)
                };
                slice_move(params, &x, value, &mut eval, true, rng, config.max_shrink)
                    .map(|mv| (mv.point, mv.value, slice_stats(mv.loops, tag)))
            }
            Choice::Sweep => {
                if coords.is_none() {
                    coords = Some(coordinate_params(&gamma)?);
                }
                let cs = coords.as_deref().unwrap_or_default();
                coord_sweep_cached(cs, &x, value, &mut eval, rng, config.max_shrink)
                    .map(|(s, v, loops)| (s, v, slice_stats(loops, KernelTag::CoordSweep)))
            }
        };
        let (next, next_value, stats) = match step {
            Ok(s) => s,
            Err(e) => return Err(abort(trace, i, e, start, burn_mark, target.evals() - evals_before)),
        };
        x = next;
        value = next_value;

        est.update(&x, i);
        if i as u64 == next_commit {
            if config.adapt {
                match commit_adaptation(&est, config.family, config.variant, mu0) {
                    Ok((g, jitter)) => {
                        trace.commits.push(CommitRecord {
                            iteration: i,
                            mean: g.mean().iter().copied().collect(),
                            scale_diag: g.scale().diagonal().iter().copied().collect(),
                            jitter,
                        });
                        gamma = g;
                        coords = None;
                    }
                    Err(e) => return Err(abort(trace, i, e, start, burn_mark, target.evals() - evals_before)),
                }
            }
            next_commit = schedule.next().unwrap_or(u64::MAX);
        }

        trace.push(&transform.to_original(&x), stats);
        if i == config.burn_in {
            burn_mark = Some(start.elapsed().as_secs_f64());
        }
    }
    finish_timing(&mut trace, start, burn_mark);
    trace.target_evals = target.evals() - evals_before;
    Ok(trace)
}

pub(crate) fn finish_timing(trace: &mut Trace, start: Instant, burn_mark: Option<f64>) {
    let total = start.elapsed().as_secs_f64();
    let burn = burn_mark.unwrap_or(total);
    trace.timing.burn_in_secs = burn;
    trace.timing.sampling_secs = (total - burn).max(0.0);
}

pub(crate) fn abort(
    mut trace: Trace,
    iteration: usize,
    source: Error,
    start: Instant,
    burn_mark: Option<f64>,
    evals: u64,
) -> Error {
    finish_timing(&mut trace, start, burn_mark);
    trace.target_evals = evals;
    trace.truncate_stats_to_states();
    Error::SamplingAbort { iteration, source: Box::new(source), partial: Box::new(trace) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_for_square_root_exponent() {
        let got: Vec<u64> = AirSchedule::new(0.5).take(9).collect();
        assert_eq!(got, vec![1, 2, 3, 5, 7, 9, 11, 13, 16]);
    }

    #[test]
    fn weight_exponent_values() {
        assert_eq!(weight_exponent(1), 2.0 / 3.0);
        assert!((weight_exponent(27) - 2.0 / 3.0).abs() < 1e-15);
        assert!((weight_exponent(1000) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn config_rejects_bad_fractions() {
        let mut c = AdaptConfig::for_dim(3, 100, 50);
        assert!(c.validate(3).is_ok());
        c.burn_1d_fraction = 1.5;
        assert!(matches!(c.validate(3), Err(Error::Config(_))));
        c.burn_1d_fraction = 0.1;
        c.eps_a = 0.7;
        c.eps_b = 0.5;
        assert!(c.validate(3).is_err());
    }

    #[test]
    fn scalar_commit_keeps_initial_mean() {
        let est = AdaptiveEstimator::new(
            DVector::from_vec(vec![5.0, 5.0]),
            DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 4.0]),
            2.0 / 3.0,
        );
        let mu0 = DVector::zeros(2);
        let (g, _) = commit_adaptation(&est, EllipticalFamily::Gaussian, AdaptVariant::ScalarScale, &mu0).unwrap();
        assert_eq!(g.mean(), &mu0);
        assert_eq!(g.scale(), &(DMatrix::identity(2, 2) * 3.0));
    }

    #[test]
    fn commit_repairs_rank_deficient_covariance() {
        let est = AdaptiveEstimator::new(DVector::zeros(2), DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]), 0.7);
        let mu0 = DVector::zeros(2);
        let (g, jitter) = commit_adaptation(&est, EllipticalFamily::t6(), AdaptVariant::FullCovariance, &mu0).unwrap();
        assert!(jitter > 0.0);
        assert!((g.scale()[(1, 1)] - 1.0 - jitter).abs() < 1e-15);
    }

    #[test]
    fn log_transform_round_trip_and_jacobian() {
        let t = SupportTransform::log_positive(3, &[1]);
        let u = t.to_internal(&[-1.0, 2.0, 0.5]).unwrap();
        assert_eq!(u[1], 2f64.ln());
        assert!((t.to_original(&u)[1] - 2.0).abs() < 1e-15);
        assert_eq!(t.log_jacobian(&u), 2f64.ln());
        assert!(t.to_internal(&[0.0, -2.0, 0.0]).is_err());
    }
}
