//! Elliptical slice proposals and the angle-bracket shrinkage loop.

use std::f64::consts::TAU;

use rand::Rng;

use crate::error::{Error, Result};

/// Default cap on the number of proposals in one shrinkage loop.
pub const DEFAULT_MAX_SHRINK: usize = 10_000;

/// The ellipse through the current state `x` and the auxiliary point `z`,
/// centred at `center`.
#[derive(Debug, Clone)]
pub struct EllipseProposal<'a> {
    pub x: &'a [f64],
    pub z: &'a [f64],
    pub center: &'a [f64],
}

impl EllipseProposal<'_> {
    /// `(x - c) cos(theta) + (z - c) sin(theta) + c`.
    pub fn point(&self, theta: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.x.len()];
        point_on_ellipse_into(self.x, self.z, self.center, theta, &mut out);
        out
    }
}

pub fn point_on_ellipse(x: &[f64], z: &[f64], center: &[f64], theta: f64) -> Vec<f64> {
    EllipseProposal { x, z, center }.point(theta)
}

pub(crate) fn point_on_ellipse_into(x: &[f64], z: &[f64], center: &[f64], theta: f64, out: &mut [f64]) {
    let (s, c) = theta.sin_cos();
    for i in 0..x.len() {
        out[i] = (x[i] - center[i]) * c + (z[i] - center[i]) * s + center[i];
    }
}

/// Outcome of one shrinkage loop.
#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkResult {
    pub point: Vec<f64>,
    pub theta: f64,
    /// Number of proposals evaluated, accepted one included.
    pub loop_count: usize,
}

/// Runs the bracket loop on angles only. `accept` is called once per proposed
/// angle; returns the accepted angle and the number of proposals.
pub fn shrink_angles<R, F>(rng: &mut R, max_iter: usize, mut accept: F) -> Result<(f64, usize)>
where
    R: Rng + ?Sized,
    F: FnMut(f64) -> bool,
{
    let mut theta = rng.random::<f64>() * TAU;
    let mut lo = theta - TAU;
    let mut hi = theta;
    for count in 1..=max_iter {
        if accept(theta) {
            return Ok((theta, count));
        }
        if theta < 0.0 {
            lo = theta;
        } else {
            hi = theta;
        }
        theta = lo + rng.random::<f64>() * (hi - lo);
    }
    Err(Error::ShrinkageLimit(max_iter))
}

/// Shrinks along `proposal` until `accept(point)` holds.
pub fn shrink<R, F>(
    proposal: &EllipseProposal<'_>,
    mut accept: F,
    rng: &mut R,
    max_iter: usize,
) -> Result<ShrinkResult>
where
    R: Rng + ?Sized,
    F: FnMut(&[f64]) -> bool,
{
    let mut buf = vec![0.0; proposal.x.len()];
    let (theta, loop_count) = shrink_angles(rng, max_iter, |t| {
        point_on_ellipse_into(proposal.x, proposal.z, proposal.center, t, &mut buf);
        accept(&buf)
    })?;
    Ok(ShrinkResult { point: proposal.point(theta), theta, loop_count })
}
