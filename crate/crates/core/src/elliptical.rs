//! Elliptical reference distributions: Gaussian, Student-t and Pearson type VII.
//!
//! A family is described by its density generator on the joint space of the
//! state and the auxiliary variable (dimension `2P`). The marginal of one half
//! is what the sampler divides out of the target, the conditional of the
//! auxiliary given the state is what it draws from on every step.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg;

/// Density generator family on the joint `2P`-dimensional space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EllipticalFamily {
    /// `g(t) = exp(-t/2)`.
    Gaussian,
    /// Multivariate t with `nu` degrees of freedom on every marginal.
    StudentT { nu: f64 },
    /// `g(t) = (1 + t/m)^(-big_m)` on the joint space; needs `big_m > P`.
    PearsonVII { m: f64, big_m: f64 },
}

impl EllipticalFamily {
    pub fn t6() -> Self {
        EllipticalFamily::StudentT { nu: 6.0 }
    }

    /// `(m, M)` of the joint generator in dimension `dim`, `None` for the Gaussian.
    pub fn pearson_params(&self, dim: usize) -> Option<(f64, f64)> {
        match *self {
            EllipticalFamily::Gaussian => None,
            EllipticalFamily::StudentT { nu } => Some((nu, (2.0 * dim as f64 + nu) / 2.0)),
            EllipticalFamily::PearsonVII { m, big_m } => Some((m, big_m)),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if dim == 0 {
            return Err(Error::config("dimension must be positive"));
        }
        match *self {
            EllipticalFamily::Gaussian => Ok(()),
            EllipticalFamily::StudentT { nu } => {
                if nu.is_finite() && nu > 0.0 {
                    Ok(())
                } else {
                    Err(Error::config(format!("degrees of freedom must be positive, got {nu}")))
                }
            }
            EllipticalFamily::PearsonVII { m, big_m } => {
                if !(m.is_finite() && m > 0.0) {
                    return Err(Error::config(format!("Pearson VII scale m must be positive, got {m}")));
                }
                if !(big_m.is_finite() && big_m > dim as f64) {
                    return Err(Error::config(format!(
                        "Pearson VII exponent must exceed the dimension {dim}, got {big_m}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// The same family seen on a single coordinate of a `dim`-dimensional state.
    ///
    /// For Pearson VII the one-dimensional marginal of the `dim`-dimensional
    /// marginal has exponent `M - dim + 1/2`, so the joint exponent in one
    /// dimension is `M - dim + 1`. The Student-t keeps its degrees of freedom.
    pub fn restrict_to_coordinate(&self, dim: usize) -> Self {
        match *self {
            EllipticalFamily::PearsonVII { m, big_m } => EllipticalFamily::PearsonVII {
                m,
                big_m: big_m - dim as f64 + 1.0,
            },
            other => other,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            EllipticalFamily::Gaussian => "gaussian".into(),
            EllipticalFamily::StudentT { nu } => format!("t{nu}"),
            EllipticalFamily::PearsonVII { m, big_m } => format!("pearson7(m={m},M={big_m})"),
        }
    }
}

/// Location, scale and family of an elliptical reference distribution, with
/// the factorisation and normalising constants cached.
#[derive(Debug, Clone)]
pub struct EllipticalParams {
    family: EllipticalFamily,
    mean: DVector<f64>,
    scale: DMatrix<f64>,
    chol: DMatrix<f64>,
    log_det: f64,
    log_norm: f64,
    radial: Radial,
}

#[derive(Debug, Clone)]
enum Radial {
    Gaussian,
    Pearson {
        m: f64,
        marg_exp: f64,
        cond_num: Gamma<f64>,
        cond_den: Gamma<f64>,
        marg_den: Gamma<f64>,
        student_nu: Option<f64>,
    },
}

impl EllipticalParams {
    pub fn new(family: EllipticalFamily, mean: DVector<f64>, scale: DMatrix<f64>) -> Result<Self> {
        Self::check_shapes(&family, &mean, &scale)?;
        if linalg::relative_asymmetry(&scale) > 1e-10 {
            return Err(Error::config("scale matrix is not symmetric"));
        }
        let chol = linalg::cholesky_lower(&scale)
            .ok_or_else(|| Error::NotPositiveDefinite("scale matrix".into()))?;
        Self::assemble(family, mean, scale, chol)
    }

    /// Like [`EllipticalParams::new`] but symmetrises the scale and applies
    /// jitter repair (at most 10 doublings). Returns the jitter that was added.
    pub fn new_with_jitter(
        family: EllipticalFamily,
        mean: DVector<f64>,
        scale: DMatrix<f64>,
    ) -> Result<(Self, f64)> {
        Self::check_shapes(&family, &mean, &scale)?;
        let sym = linalg::symmetrize(&scale);
        let (chol, repaired, delta) = linalg::cholesky_with_jitter(&sym, 10)
            .ok_or_else(|| Error::NotPositiveDefinite("adapted covariance".into()))?;
        Ok((Self::assemble(family, mean, repaired, chol)?, delta))
    }

    /// `N(mean, variance * I)`-shaped parameters of the given family.
    pub fn isotropic(family: EllipticalFamily, mean: DVector<f64>, variance: f64) -> Result<Self> {
        let p = mean.len();
        Self::new(family, mean, DMatrix::identity(p, p) * variance)
    }

    fn check_shapes(family: &EllipticalFamily, mean: &DVector<f64>, scale: &DMatrix<f64>) -> Result<()> {
        let p = mean.len();
        family.validate(p)?;
        if scale.nrows() != p || scale.ncols() != p {
            return Err(Error::config(format!(
                "scale is {}x{} but the mean has length {p}",
                scale.nrows(),
                scale.ncols()
            )));
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("mean has non-finite entries"));
        }
        Ok(())
    }

    fn assemble(
        family: EllipticalFamily,
        mean: DVector<f64>,
        scale: DMatrix<f64>,
        chol: DMatrix<f64>,
    ) -> Result<Self> {
        let p = mean.len() as f64;
        let log_det = linalg::log_det_from_chol(&chol);
        let gamma = |shape: f64| {
            Gamma::new(shape, 1.0).map_err(|e| Error::config(format!("gamma shape {shape}: {e}")))
        };
        let (log_norm, radial) = match family.pearson_params(mean.len()) {
            None => (
                -0.5 * log_det - 0.5 * p * (2.0 * std::f64::consts::PI).ln(),
                Radial::Gaussian,
            ),
            Some((m, big_m)) => {
                // Marginal of one half of the joint law is Pearson VII with
                // exponent M - P/2.
                let marg = big_m - 0.5 * p;
                let log_norm = ln_gamma(marg) - ln_gamma(marg - 0.5 * p)
                    - 0.5 * p * (m * std::f64::consts::PI).ln()
                    - 0.5 * log_det;
                let student_nu = match family {
                    EllipticalFamily::StudentT { nu } => Some(nu),
                    _ => None,
                };
                let radial = Radial::Pearson {
                    m,
                    marg_exp: marg,
                    cond_num: gamma(0.5 * p)?,
                    cond_den: gamma(big_m - 0.5 * p)?,
                    marg_den: gamma(big_m - p)?,
                    student_nu,
                };
                (log_norm, radial)
            }
        };
        Ok(EllipticalParams { family, mean, scale, chol, log_det, log_norm, radial })
    }

    pub fn family(&self) -> EllipticalFamily {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn scale(&self) -> &DMatrix<f64> {
        &self.scale
    }

    /// Lower Cholesky factor of the scale matrix.
    pub fn chol(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Same location and scale under another family.
    pub fn with_family(&self, family: EllipticalFamily) -> Result<Self> {
        Self::check_shapes(&family, &self.mean, &self.scale)?;
        Self::assemble(family, self.mean.clone(), self.scale.clone(), self.chol.clone())
    }

    /// `L^{-1} (x - mean)`.
    pub fn whiten(&self, x: &[f64]) -> DVector<f64> {
        debug_assert_eq!(x.len(), self.dim());
        let centered = DVector::from_iterator(self.dim(), x.iter().zip(self.mean.iter()).map(|(a, b)| a - b));
        linalg::solve_lower(&self.chol, &centered)
    }

    /// `(x - mean)^T Sigma^{-1} (x - mean)`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.whiten(x).norm_squared()
    }

    /// Log density of the `P`-dimensional marginal at `x`.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        self.log_density_from_quad(self.quadratic_form(x))
    }

    /// Log density of the marginal as a function of the quadratic form.
    pub fn log_density_from_quad(&self, q: f64) -> f64 {
        match &self.radial {
            Radial::Gaussian => self.log_norm - 0.5 * q,
            Radial::Pearson { m, marg_exp, .. } => self.log_norm - marg_exp * (q / m).ln_1p(),
        }
    }

    fn standard_normal_vec<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        DVector::from_iterator(self.dim(), (0..self.dim()).map(|_| StandardNormal.sample(rng)))
    }

    fn shift(&self, whitened: &DVector<f64>) -> Vec<f64> {
        let lw = linalg::mul_lower(&self.chol, whitened);
        lw.iter().zip(self.mean.iter()).map(|(a, b)| a + b).collect()
    }

    /// One draw from the `P`-dimensional marginal.
    pub fn sample_marginal<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut eta = self.standard_normal_vec(rng);
        match &self.radial {
            Radial::Gaussian => {}
            Radial::Pearson { m, cond_num, marg_den, student_nu, .. } => {
                let factor = match student_nu {
                    Some(nu) => {
                        let chi2 = 2.0 * marg_den.sample(rng);
                        (nu / chi2).sqrt()
                    }
                    None => {
                        let norm = eta.norm();
                        let b = cond_num.sample(rng) / marg_den.sample(rng);
                        (m * b).sqrt() / norm
                    }
                };
                eta *= factor;
            }
        }
        self.shift(&eta)
    }

    /// One draw of the auxiliary variable given the state `x`.
    pub fn sample_conditional_aux<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Vec<f64> {
        let a = self.whiten(x);
        let q = a.norm_squared();
        self.conditional_draw(q, rng).0
    }

    /// Conditional draw given the quadratic form of the current state;
    /// returns the auxiliary point and its whitened coordinates.
    pub(crate) fn conditional_draw<R: Rng + ?Sized>(&self, q: f64, rng: &mut R) -> (Vec<f64>, DVector<f64>) {
        let mut w = self.standard_normal_vec(rng);
        if let Radial::Pearson { m, cond_num, cond_den, .. } = &self.radial {
            let norm = w.norm();
            let b = cond_num.sample(rng) / cond_den.sample(rng);
            let radius = ((m + q) * b).sqrt();
            w *= radius / norm;
        }
        (self.shift(&w), w)
    }

    /// Covariance of the auxiliary variable given `x`.
    pub fn conditional_covariance(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        match self.family.pearson_params(self.dim()) {
            None => Ok(self.scale.clone()),
            Some((m, big_m)) => {
                let p = self.dim() as f64;
                let denom = 2.0 * big_m - p - 2.0;
                if denom <= 0.0 {
                    return Err(Error::config(
                        "conditional covariance is infinite for this family and dimension",
                    ));
                }
                Ok(&self.scale * ((m + self.quadratic_form(x)) / denom))
            }
        }
    }
}
