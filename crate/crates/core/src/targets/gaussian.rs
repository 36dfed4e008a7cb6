use nalgebra::{DMatrix, DVector};

use crate::elliptical::{EllipticalFamily, EllipticalParams};
use crate::error::Result;
use crate::target::TargetDensity;

/// Normalised `N(mean, cov)` log density.
pub fn gaussian_target(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<TargetDensity> {
    let params = EllipticalParams::new(EllipticalFamily::Gaussian, mean, cov)?;
    let dim = params.dim();
    Ok(TargetDensity::new("gaussian", dim, move |x| params.log_density(x)))
}

/// `log pi(x) = |x| - |x|^2 / 2`, a ring around the origin.
pub fn volcano_target(dim: usize) -> TargetDensity {
    TargetDensity::new("volcano", dim, |x: &[f64]| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        r2.sqrt() - 0.5 * r2
    })
}
