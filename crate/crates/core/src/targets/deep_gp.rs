//! Two-layer deep Gaussian process with a Student-t marginal likelihood.
//!
//! Parameters are the latent warping `W` at the `N` inputs followed by the
//! log lengthscales `(theta_y1, theta_y2, theta_w1)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::dataset::{Dataset, DatasetMeta};
use crate::linalg;
use crate::target::TargetDensity;

/// Nuggets, degrees of freedom and the log-normal lengthscale prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeepGpConfig {
    pub g_w: f64,
    pub g_y: f64,
    pub nu: f64,
    pub log_lengthscale_mean: f64,
    pub log_lengthscale_sd: f64,
}

impl Default for DeepGpConfig {
    fn default() -> Self {
        DeepGpConfig { g_w: 1e-8, g_y: 1e-8, nu: 6.0, log_lengthscale_mean: 0.0, log_lengthscale_sd: 1.0 }
    }
}

/// `f(x) = sin(x) + 2 exp(-30 x^2)` at 50 evenly spaced points on `[-5, 5]`.
pub fn deep_gp_data() -> Dataset {
    let n = 50;
    let xs: Vec<f64> = (0..n).map(|i| -5.0 + 10.0 * i as f64 / (n - 1) as f64).collect();
    let y = xs.iter().map(|x| x.sin() + 2.0 * (-30.0 * x * x).exp()).collect();
    Dataset {
        x: DMatrix::from_column_slice(n, 1, &xs),
        y,
        meta: DatasetMeta { kind: "deep_gp".into(), n, d: 1, ..Default::default() },
    }
}

/// Log density of `y ~ t_nu(0, K)`, i.e. `N(0, tau K)` with `tau ~ IG(nu/2, nu/2)`
/// integrated out. `None` when `K` is not factorisable.
pub fn student_t_marginal_loglik(y: &[f64], k: &DMatrix<f64>, nu: f64) -> Option<f64> {
    let l = linalg::cholesky_lower(k)?;
    let n = y.len() as f64;
    let alpha = linalg::solve_lower(&l, &DVector::from_column_slice(y)).norm_squared();
    Some(
        ln_gamma((nu + n) / 2.0) - ln_gamma(nu / 2.0) - 0.5 * n * (nu * std::f64::consts::PI).ln()
            - 0.5 * linalg::log_det_from_chol(&l)
            - 0.5 * (nu + n) * (alpha / nu).ln_1p(),
    )
}

fn squared_exponential(d2: &DMatrix<f64>, lengthscale: f64, nugget: f64) -> DMatrix<f64> {
    let n = d2.nrows();
    let mut k = d2.map(|v| (-v / lengthscale).exp());
    for i in 0..n {
        k[(i, i)] += nugget;
    }
    k
}

/// `log N(w; 0, L L^T)`.
fn gaussian_loglik(w: &[f64], l: &DMatrix<f64>) -> f64 {
    let n = w.len() as f64;
    let alpha = linalg::solve_lower(l, &DVector::from_column_slice(w)).norm_squared();
    -0.5 * linalg::log_det_from_chol(l) - 0.5 * alpha - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
}

/// Posterior over `(W, log theta_y1, log theta_y2, log theta_w1)`; a failed
/// factorisation gives `-inf`.
pub fn deep_gp_target(data: &Dataset, cfg: DeepGpConfig) -> TargetDensity {
    let n = data.n();
    let xs: Vec<f64> = data.x.column(0).iter().copied().collect();
    let dx2 = DMatrix::from_fn(n, n, |i, j| (xs[i] - xs[j]).powi(2));
    let y = data.y.clone();
    let log_prior = move |l: f64| {
        let z = (l - cfg.log_lengthscale_mean) / cfg.log_lengthscale_sd;
        -0.5 * z * z - cfg.log_lengthscale_sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
    };
    TargetDensity::new("deep_gp", n + 3, move |th: &[f64]| {
        let w = &th[..n];
        let (ly1, ly2, lw1) = (th[n], th[n + 1], th[n + 2]);
        if th.iter().any(|v| !v.is_finite()) {
            return f64::NEG_INFINITY;
        }
        let (t1, t2, tw) = (ly1.exp(), ly2.exp(), lw1.exp());
        if !(t1 > 0.0 && t2 > 0.0 && tw > 0.0 && t1.is_finite() && t2.is_finite() && tw.is_finite()) {
            return f64::NEG_INFINITY;
        }

        let mut ky = DMatrix::from_fn(n, n, |i, j| (-dx2[(i, j)] / t1 - (w[i] - w[j]).powi(2) / t2).exp());
        for i in 0..n {
            ky[(i, i)] += cfg.g_y;
        }
        let Some(lik) = student_t_marginal_loglik(&y, &ky, cfg.nu) else {
            return f64::NEG_INFINITY;
        };

        let Some(lw) = linalg::cholesky_lower(&squared_exponential(&dx2, tw, cfg.g_w)) else {
            return f64::NEG_INFINITY;
        };
        let w_prior = gaussian_loglik(w, &lw);

        lik + w_prior + log_prior(ly1) + log_prior(ly2) + log_prior(lw1)
    })
}
