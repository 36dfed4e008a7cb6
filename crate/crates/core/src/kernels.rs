//! Markov kernels: elliptical slice steps with a fixed reference, coordinate
//! sweeps and the adaptive random-walk Metropolis baseline.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::elliptical::{EllipticalFamily, EllipticalParams};
use crate::error::{Error, Result};
use crate::linalg;
use crate::shrinkage::{point_on_ellipse_into, shrink_angles, DEFAULT_MAX_SHRINK};
use crate::target::TargetDensity;

/// Which kernel produced a transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelTag {
    AdaptiveFull,
    NonAdaptiveFull,
    CoordSweep,
    Arw,
}

impl KernelTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            KernelTag::AdaptiveFull => "adaptive_full",
            KernelTag::NonAdaptiveFull => "non_adaptive_full",
            KernelTag::CoordSweep => "coord_sweep",
            KernelTag::Arw => "arw",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "adaptive_full" => KernelTag::AdaptiveFull,
            "non_adaptive_full" => KernelTag::NonAdaptiveFull,
            "coord_sweep" => KernelTag::CoordSweep,
            "arw" => KernelTag::Arw,
            _ => return None,
        })
    }
}

/// Per-transition statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    /// Target evaluations spent on proposals; one plus the rejections for a
    /// slice step, summed over coordinates for a sweep, one for Metropolis.
    pub loop_count: usize,
    pub kernel: KernelTag,
    /// Metropolis decision; `None` for slice kernels, which always move.
    pub accepted: Option<bool>,
}

/// `log target(x) - log E(x; gamma)`.
pub fn transformed_loglik(target: &TargetDensity, gamma: &EllipticalParams, x: &[f64]) -> f64 {
    let lt = target.log_density(x);
    if lt == f64::NEG_INFINITY {
        return lt;
    }
    lt - gamma.log_density(x)
}

/// Result of one slice move with the target value at the new point cached.
#[derive(Debug, Clone)]
pub(crate) struct SliceMove {
    pub point: Vec<f64>,
    pub value: f64,
    pub loops: usize,
}

/// One elliptical slice move around `params`.
///
/// `eval` returns the log target (or, when `subtract_reference` is false, the
/// log-likelihood already divided by the reference); `current` is its value at
/// `x`. The auxiliary point is drawn before the slice height, which is drawn
/// before the first angle.
pub(crate) fn slice_move<R, F>(
    params: &EllipticalParams,
    x: &[f64],
    current: f64,
    mut eval: F,
    subtract_reference: bool,
    rng: &mut R,
    max_iter: usize,
) -> Result<SliceMove>
where
    R: Rng + ?Sized,
    F: FnMut(&[f64]) -> f64,
{
    let a = params.whiten(x);
    let q_x = a.norm_squared();
    let cur = if subtract_reference { current - params.log_density_from_quad(q_x) } else { current };
    if cur.is_nan() || cur == f64::NEG_INFINITY || current == f64::INFINITY {
        return Err(Error::ChainInit(format!("log density {current} at the current state")));
    }
    let (z, b) = params.conditional_draw(q_x, rng);
    let mut u: f64 = rng.random();
    if u == 0.0 {
        u = f64::MIN_POSITIVE;
    }
    let height = cur + u.ln();

    let center = params.mean().as_slice();
    let mut buf = vec![0.0; x.len()];
    let mut accepted_value = f64::NAN;
    let (_, loops) = shrink_angles(rng, max_iter, |theta| {
        point_on_ellipse_into(x, &z, center, theta, &mut buf);
        let lt = eval(&buf);
        if lt.is_nan() || lt == f64::NEG_INFINITY {
            return false;
        }
        let val = if subtract_reference {
            let (s, c) = theta.sin_cos();
            let q = a.iter().zip(b.iter()).map(|(ai, bi)| (ai * c + bi * s).powi(2)).sum::<f64>();
            lt - params.log_density_from_quad(q)
        } else {
            lt
        };
        if val > height {
            accepted_value = lt;
            true
        } else {
            false
        }
    })?;
    Ok(SliceMove { point: buf, value: accepted_value, loops })
}

/// Elliptical slice sampling step for `loglik` under a Gaussian prior.
pub fn ess_step<R, F>(
    mut loglik: F,
    prior: &EllipticalParams,
    x: &[f64],
    rng: &mut R,
) -> Result<(Vec<f64>, StepStats)>
where
    R: Rng + ?Sized,
    F: FnMut(&[f64]) -> f64,
{
    if prior.family() != EllipticalFamily::Gaussian {
        return Err(Error::config("elliptical slice sampling needs a Gaussian prior"));
    }
    let current = loglik(x);
    let mv = slice_move(prior, x, current, loglik, false, rng, DEFAULT_MAX_SHRINK)?;
    Ok((mv.point, slice_stats(mv.loops, KernelTag::NonAdaptiveFull)))
}

/// One full-dimensional step targeting `target` with the reference `gamma`
/// held fixed.
pub fn agess_step<R: Rng + ?Sized>(
    target: &TargetDensity,
    gamma: &EllipticalParams,
    x: &[f64],
    rng: &mut R,
) -> Result<(Vec<f64>, StepStats)> {
    let current = target.log_density(x);
    let mv = slice_move(gamma, x, current, |p| target.log_density(p), true, rng, DEFAULT_MAX_SHRINK)?;
    Ok((mv.point, slice_stats(mv.loops, KernelTag::AdaptiveFull)))
}

/// One-dimensional reference parameters for every coordinate of `gamma`.
pub(crate) fn coordinate_params(gamma: &EllipticalParams) -> Result<Vec<EllipticalParams>> {
    let p = gamma.dim();
    let family = gamma.family().restrict_to_coordinate(p);
    (0..p)
        .map(|j| {
            EllipticalParams::new(
                family,
                DVector::from_element(1, gamma.mean()[j]),
                DMatrix::from_element(1, 1, gamma.scale()[(j, j)]),
            )
        })
        .collect()
}

/// Sweeps the coordinates in order with one-dimensional slice moves; the
/// caller supplies the cached log target at `x`. Returns the new state, its
/// log target and the summed proposal count.
pub(crate) fn coord_sweep_cached<R, F>(
    coords: &[EllipticalParams],
    x: &[f64],
    current: f64,
    mut eval: F,
    rng: &mut R,
    max_iter: usize,
) -> Result<(Vec<f64>, f64, usize)>
where
    R: Rng + ?Sized,
    F: FnMut(&[f64]) -> f64,
{
    let mut state = x.to_vec();
    let mut value = current;
    let mut loops = 0;
    for (j, params) in coords.iter().enumerate() {
        let xj = [state[j]];
        let mut full = state.clone();
        let mv = slice_move(
            params,
            &xj,
            value,
            |v| {
                full[j] = v[0];
                eval(&full)
            },
            true,
            rng,
            max_iter,
        )?;
        state[j] = mv.point[0];
        value = mv.value;
        loops += mv.loops;
    }
    Ok((state, value, loops))
}

/// One coordinate-wise sweep with the reference restricted to each coordinate.
pub fn coord_sweep<R: Rng + ?Sized>(
    target: &TargetDensity,
    gamma: &EllipticalParams,
    x: &[f64],
    rng: &mut R,
) -> Result<(Vec<f64>, StepStats)> {
    let coords = coordinate_params(gamma)?;
    let current = target.log_density(x);
    let (state, _, loops) =
        coord_sweep_cached(&coords, x, current, |p| target.log_density(p), rng, DEFAULT_MAX_SHRINK)?;
    Ok((state, slice_stats(loops, KernelTag::CoordSweep)))
}

pub(crate) fn slice_stats(loops: usize, kernel: KernelTag) -> StepStats {
    StepStats { loop_count: loops, kernel, accepted: None }
}

/// Running state of the adaptive random-walk Metropolis baseline.
#[derive(Debug, Clone)]
pub struct ArwState {
    mean: DVector<f64>,
    scatter: DMatrix<f64>,
    count: usize,
    iteration: usize,
    initial_chol: DMatrix<f64>,
    chol: DMatrix<f64>,
    since_refresh: usize,
    /// Proposal scale factor, `2.38^2 / P` by default.
    pub scale_factor: f64,
    /// Ridge added to the running covariance.
    pub ridge: f64,
    /// Number of iterations between refactorisations of the proposal.
    pub refresh_interval: usize,
}

impl ArwState {
    /// Starts from `x0` with the greedy-start covariance `initial_cov`.
    pub fn new(x0: &[f64], initial_cov: &DMatrix<f64>) -> Result<Self> {
        let p = x0.len();
        if initial_cov.nrows() != p || initial_cov.ncols() != p {
            return Err(Error::config("initial proposal covariance has the wrong shape"));
        }
        let initial_chol = linalg::cholesky_lower(initial_cov)
            .ok_or_else(|| Error::NotPositiveDefinite("initial proposal covariance".into()))?;
        Ok(ArwState {
            mean: DVector::from_column_slice(x0),
            scatter: DMatrix::zeros(p, p),
            count: 1,
            iteration: 0,
            chol: initial_chol.clone(),
            initial_chol,
            since_refresh: 0,
            scale_factor: 2.38 * 2.38 / p as f64,
            ridge: 1e-6,
            refresh_interval: (p / 10).max(1),
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Iterations taken so far.
    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Running sample covariance of the states seen so far.
    pub fn running_covariance(&self) -> DMatrix<f64> {
        let denom = (self.count.max(2) - 1) as f64;
        &self.scatter / denom
    }

    /// `s_d (Cov + ridge I)`.
    pub fn adapted_covariance(&self) -> DMatrix<f64> {
        let p = self.dim();
        (self.running_covariance() + DMatrix::identity(p, p) * self.ridge) * self.scale_factor
    }

    fn greedy(&self) -> bool {
        self.iteration <= 2 * self.dim()
    }

    fn proposal_chol(&mut self) -> &DMatrix<f64> {
        if self.greedy() {
            return &self.initial_chol;
        }
        if self.since_refresh == 0 {
            let cov = self.adapted_covariance();
            if let Some((l, _, _)) = linalg::cholesky_with_jitter(&linalg::symmetrize(&cov), 10) {
                self.chol = l;
            }
        }
        self.since_refresh = (self.since_refresh + 1) % self.refresh_interval;
        &self.chol
    }

    fn observe(&mut self, x: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        let delta = DVector::from_iterator(x.len(), x.iter().zip(self.mean.iter()).map(|(a, b)| a - b));
        self.mean += &delta / n;
        let delta2 = DVector::from_iterator(x.len(), x.iter().zip(self.mean.iter()).map(|(a, b)| a - b));
        self.scatter.ger(1.0, &delta, &delta2, 1.0);
    }
}

/// Metropolis acceptance for a symmetric proposal.
pub fn metropolis_accept(log_ratio: f64, u: f64) -> bool {
    let u = if u == 0.0 { f64::MIN_POSITIVE } else { u };
    u.ln() < log_ratio
}

pub(crate) fn arw_step_cached<R, F>(
    mut eval: F,
    state: &mut ArwState,
    x: &[f64],
    current: f64,
    rng: &mut R,
) -> (Vec<f64>, f64, StepStats)
where
    R: Rng + ?Sized,
    F: FnMut(&[f64]) -> f64,
{
    state.iteration += 1;
    let p = x.len();
    let eta = DVector::from_iterator(p, (0..p).map(|_| StandardNormal.sample(rng)));
    let step = linalg::mul_lower(state.proposal_chol(), &eta);
    let proposal: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
    let lp = eval(&proposal);
    let u: f64 = rng.random();
    let accepted = lp != f64::NEG_INFINITY && metropolis_accept(lp - current, u);
    let (next, value) = if accepted { (proposal, lp) } else { (x.to_vec(), current) };
    state.observe(&next);
    (next, value, StepStats { loop_count: 1, kernel: KernelTag::Arw, accepted: Some(accepted) })
}

/// One adaptive random-walk Metropolis step; updates the running moments.
pub fn arw_step<R: Rng + ?Sized>(
    target: &TargetDensity,
    state: &mut ArwState,
    x: &[f64],
    rng: &mut R,
) -> Result<(Vec<f64>, StepStats)> {
    let current = target.log_density(x);
    if current == f64::NEG_INFINITY {
        return Err(Error::ChainInit("random-walk state has zero density".into()));
    }
    let (next, _, stats) = arw_step_cached(|p| target.log_density(p), state, x, current, rng);
    Ok((next, stats))
}
