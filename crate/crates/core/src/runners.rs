//! Chain drivers for the non-adaptive kernels.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;

use crate::adaptation::{abort, finish_timing};
use crate::elliptical::{EllipticalFamily, EllipticalParams};
use crate::error::{Error, Result};
use crate::kernels::{arw_step_cached, slice_move, slice_stats, ArwState, KernelTag};
use crate::shrinkage::DEFAULT_MAX_SHRINK;
use crate::target::TargetDensity;
use crate::trace::Trace;

fn check_init(value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::ChainInit(format!("log density at the initial state is {value}")))
    }
}

/// Elliptical slice sampling for `target = loglik x prior` with a Gaussian
/// prior; `loglik` is evaluated as `target - log prior`.
pub fn run_ess<R: Rng + ?Sized>(
    target: &TargetDensity,
    prior: &EllipticalParams,
    init: &[f64],
    iterations: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<Trace> {
    if prior.family() != EllipticalFamily::Gaussian {
        return Err(Error::config("elliptical slice sampling needs a Gaussian prior"));
    }
    let loglik = |x: &[f64]| {
        let lt = target.log_density(x);
        if lt == f64::NEG_INFINITY {
            lt
        } else {
            lt - prior.log_density(x)
        }
    };
    drive_slice(target, prior, init, iterations, burn_in, rng, loglik, false, KernelTag::NonAdaptiveFull)
}

/// Repeated full steps with the reference held at `gamma`.
pub fn run_fixed<R: Rng + ?Sized>(
    target: &TargetDensity,
    gamma: &EllipticalParams,
    init: &[f64],
    iterations: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<Trace> {
    let eval = |x: &[f64]| target.log_density(x);
    drive_slice(target, gamma, init, iterations, burn_in, rng, eval, true, KernelTag::NonAdaptiveFull)
}

#[allow(clippy::too_many_arguments)]
fn drive_slice<R, F>(
    target: &TargetDensity,
    params: &EllipticalParams,
    init: &[f64],
    iterations: usize,
    burn_in: usize,
    rng: &mut R,
    mut eval: F,
    subtract_reference: bool,
    tag: KernelTag,
) -> Result<Trace>
where
    R: Rng + ?Sized,
    F: FnMut(&[f64]) -> f64,
{
    let p = params.dim();
    if init.len() != p || target.dim() != p {
        return Err(Error::config("dimension mismatch between target, reference and initial state"));
    }
    if burn_in > iterations || iterations == 0 {
        return Err(Error::config("need 0 < iterations and burn-in <= iterations"));
    }
    let evals_before = target.evals();
    let mut x = init.to_vec();
    let mut value = eval(&x);
    check_init(value)?;
    let mut trace = Trace::new(p, burn_in, iterations);
    trace.push_initial(&x);
    let start = Instant::now();
    let mut burn_mark = if burn_in <= 1 { Some(0.0) } else { None };
    for i in 2..=iterations {
        match slice_move(params, &x, value, &mut eval, subtract_reference, rng, DEFAULT_MAX_SHRINK) {
            Ok(mv) => {
                trace.push(&mv.point, slice_stats(mv.loops, tag));
                x = mv.point;
                value = mv.value;
            }
            Err(e) => return Err(abort(trace, i, e, start, burn_mark, target.evals() - evals_before)),
        }
        if i == burn_in {
            burn_mark = Some(start.elapsed().as_secs_f64());
        }
    }
    finish_timing(&mut trace, start, burn_mark);
    trace.target_evals = target.evals() - evals_before;
    Ok(trace)
}

/// Adaptive random-walk Metropolis with greedy start covariance `initial_cov`.
pub fn run_arw<R: Rng + ?Sized>(
    target: &TargetDensity,
    init: &[f64],
    initial_cov: &DMatrix<f64>,
    iterations: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<Trace> {
    let p = target.dim();
    if init.len() != p {
        return Err(Error::config("initial state has the wrong dimension"));
    }
    if burn_in > iterations || iterations == 0 {
        return Err(Error::config("need 0 < iterations and burn-in <= iterations"));
    }
    let mut state = ArwState::new(init, initial_cov)?;
    let evals_before = target.evals();
    let mut x = init.to_vec();
    let mut value = target.log_density(&x);
    check_init(value)?;
    let mut trace = Trace::new(p, burn_in, iterations);
    trace.push_initial(&x);
    let start = Instant::now();
    let mut burn_mark = if burn_in <= 1 { Some(0.0) } else { None };
    for i in 2..=iterations {
        let (next, v, stats) = arw_step_cached(|y| target.log_density(y), &mut state, &x, value, rng);
        trace.push(&next, stats);
        x = next;
        value = v;
        if i == burn_in {
            burn_mark = Some(start.elapsed().as_secs_f64());
        }
    }
    finish_timing(&mut trace, start, burn_mark);
    trace.target_evals = target.evals() - evals_before;
    Ok(trace)
}
