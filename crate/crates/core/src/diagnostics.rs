//! Chain diagnostics: batch-means effective sample size, multivariate
//! potential scale reduction, autocorrelation, a grid-based relative KL and
//! the Gaussian KL bound for repeated elliptical rotations.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::digamma;

use crate::error::{Error, Result};
use crate::linalg;
use crate::target::TargetDensity;
use crate::trace::Trace;

fn diag(msg: impl Into<String>) -> Error {
    Error::Diagnostics(msg.into())
}

/// `E[log |S|] - log |Sigma|` for a sample covariance `S` with `k` degrees of
/// freedom in `p` dimensions (Wishart log-determinant bias).
fn log_det_bias(k: usize, p: usize) -> f64 {
    let k = k as f64;
    (1..=p).map(|i| digamma((k - i as f64 + 1.0) / 2.0) - (k / 2.0).ln()).sum()
}

fn log_det(m: &DMatrix<f64>, what: &str) -> Result<f64> {
    let l = linalg::cholesky_lower(&linalg::symmetrize(m))
        .ok_or_else(|| diag(format!("{what} is singular")))?;
    Ok(linalg::log_det_from_chol(&l))
}

/// Batch-means multivariate effective sample size of the rows of `data`.
///
/// Uses `b = floor(sqrt(n))` and `a = floor(n / b)` batches. Both log
/// determinants are corrected for their Wishart bias, which otherwise
/// dominates once the number of batches is not large compared with `P`.
/// The result is capped at `n`.
pub fn multivariate_ess(data: &DMatrix<f64>) -> Result<f64> {
    let n = data.nrows();
    let p = data.ncols();
    if p == 0 {
        return Err(diag("no coordinates"));
    }
    if n < 16 {
        return Err(diag(format!("window of {n} states is too short for batch means")));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(diag("trace has non-finite entries"));
    }
    let b = (n as f64).sqrt().floor() as usize;
    let a = n / b;
    if a <= p {
        return Err(diag(format!(
            "batch-means covariance is singular: {a} batches for {p} coordinates"
        )));
    }
    let used = a * b;
    let (_, lambda) = linalg::sample_covariance(data);

    let mut batch_means = DMatrix::zeros(a, p);
    for k in 0..a {
        for j in 0..p {
            let mut s = 0.0;
            for i in k * b..(k + 1) * b {
                s += data[(i, j)];
            }
            batch_means[(k, j)] = s / b as f64;
        }
    }
    let grand = DVector::from_iterator(p, (0..p).map(|j| data.view((0, j), (used, 1)).sum() / used as f64));
    let mut centered = batch_means;
    for k in 0..a {
        for j in 0..p {
            centered[(k, j)] -= grand[j];
        }
    }
    let sigma = (centered.transpose() * &centered) * (b as f64 / (a - 1) as f64);

    let ld_lambda = log_det(&lambda, "sample covariance")? - log_det_bias(n - 1, p);
    let ld_sigma = log_det(&sigma, "batch-means covariance")? - log_det_bias(a - 1, p);
    let mess = n as f64 * ((ld_lambda - ld_sigma) / p as f64).exp();
    Ok(mess.min(n as f64))
}

/// Effective sample size of a scalar series.
pub fn ess_of_series(series: &[f64]) -> Result<f64> {
    multivariate_ess(&DMatrix::from_column_slice(series.len(), 1, series))
}

/// Multivariate potential scale reduction factor from the largest eigenvalue
/// of `W^{-1} B / n`, floored at 1.
pub fn gelman_rubin(chains: &[DMatrix<f64>]) -> Result<f64> {
    let m = chains.len();
    if m < 2 {
        return Err(diag("need at least two chains"));
    }
    let n = chains[0].nrows();
    let p = chains[0].ncols();
    if chains.iter().any(|c| c.nrows() != n || c.ncols() != p) {
        return Err(diag("chains must have equal shapes"));
    }
    if n < 2 || p == 0 {
        return Err(diag("chains are too short"));
    }
    let mut w = DMatrix::zeros(p, p);
    let mut means = Vec::with_capacity(m);
    for c in chains {
        let (mean, cov) = linalg::sample_covariance(c);
        w += cov;
        means.push(mean);
    }
    w /= m as f64;
    let grand = means.iter().fold(DVector::zeros(p), |acc, v| acc + v) / m as f64;
    let mut b_over_n = DMatrix::zeros(p, p);
    for mean in &means {
        let d = mean - &grand;
        b_over_n += &d * d.transpose();
    }
    b_over_n /= (m - 1) as f64;
    let l = linalg::cholesky_lower(&linalg::symmetrize(&w))
        .ok_or_else(|| diag("within-chain covariance is degenerate"))?;
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| diag("within-chain covariance is degenerate"))?;
    let sym = linalg::symmetrize(&(&linv * b_over_n * linv.transpose()));
    let lambda = SymmetricEigen::new(sym).eigenvalues.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let nf = n as f64;
    let r = (nf - 1.0) / nf + (m as f64 + 1.0) / m as f64 * lambda;
    Ok(r.max(1.0))
}

/// Biased sample autocorrelations at lags `0..=max_lag`.
pub fn acf(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = series.len();
    if n < 4 || max_lag >= n / 4 {
        return Err(diag(format!("max_lag {max_lag} must be below n/4 for n = {n}")));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let c0: f64 = c.iter().map(|v| v * v).sum();
    if c0 == 0.0 {
        return Err(diag("series is constant"));
    }
    Ok((0..=max_lag)
        .map(|k| c[..n - k].iter().zip(&c[k..]).map(|(a, b)| a * b).sum::<f64>() / c0)
        .collect())
}

/// Upper bound on `KL(pi || K^n(x0, .))` where `K` rotates by a uniform angle
/// around the mean of `pi = N(0, Sigma)` and `quad = x0^T Sigma^{-1} x0`.
/// Needs `n >= 3`.
pub fn gaussian_kl_bound_quad(n: u32, quad: f64, dim: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::config(format!("the bound needs at least 3 steps, got {n}")));
    }
    let nf = n as f64;
    Ok((quad + dim as f64) * (2f64.powf(-(nf + 1.0)) + std::f64::consts::PI.powf(-nf / 2.0)))
}

fn quad_form(x0: &[f64], sigma: &DMatrix<f64>) -> Result<f64> {
    if sigma.nrows() != x0.len() || sigma.ncols() != x0.len() {
        return Err(Error::config("covariance does not match the starting point"));
    }
    let l = linalg::cholesky_lower(sigma).ok_or_else(|| Error::NotPositiveDefinite("covariance".into()))?;
    Ok(linalg::solve_lower(&l, &DVector::from_column_slice(x0)).norm_squared())
}

/// [`gaussian_kl_bound_quad`] from a starting point and covariance.
pub fn gaussian_kl_bound(n: u32, x0: &[f64], sigma: &DMatrix<f64>) -> Result<f64> {
    gaussian_kl_bound_quad(n, quad_form(x0, sigma)?, x0.len())
}

/// Monte Carlo mean and standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Monte Carlo estimate of the same KL divergence: averages the KL between
/// `pi` and the Gaussian reached after the angles `theta_1..theta_n`.
pub fn gaussian_kl_estimate_quad<R: Rng + ?Sized>(
    n: u32,
    quad: f64,
    dim: usize,
    reps: usize,
    rng: &mut R,
) -> Result<McEstimate> {
    if reps < 10_000 {
        return Err(Error::Contract(format!("need at least 10000 repetitions, got {reps}")));
    }
    let pf = dim as f64;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..reps {
        // log psi^2 = sum log cos^2, kept accurate for angles near 0 and pi.
        let mut log_psi2 = 0.0;
        for _ in 0..n {
            let theta = rng.random::<f64>() * std::f64::consts::TAU;
            let s = theta.sin();
            log_psi2 += (-s * s).ln_1p();
        }
        let psi2 = log_psi2.exp();
        let one_minus = -log_psi2.exp_m1();
        let term = 0.5 * pf * one_minus.ln() + 0.5 * (quad + pf) * psi2 / one_minus;
        sum += term;
        sum_sq += term * term;
    }
    let r = reps as f64;
    let mean = sum / r;
    let var = (sum_sq / r - mean * mean).max(0.0) * r / (r - 1.0);
    Ok(McEstimate { mean, std_error: (var / r).sqrt() })
}

pub fn gaussian_kl_estimate<R: Rng + ?Sized>(
    n: u32,
    x0: &[f64],
    sigma: &DMatrix<f64>,
    reps: usize,
    rng: &mut R,
) -> Result<McEstimate> {
    gaussian_kl_estimate_quad(n, quad_form(x0, sigma)?, x0.len(), reps, rng)
}

/// Rectangular evaluation grid in two dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2d {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid2d {
    pub fn validate(&self) -> Result<()> {
        if self.nx < 50 || self.ny < 50 {
            return Err(Error::config("grid needs at least 50 points per axis"));
        }
        if !(self.x_max > self.x_min && self.y_max > self.y_min) {
            return Err(Error::config("grid bounds are empty"));
        }
        Ok(())
    }

    pub fn x_centers(&self) -> Vec<f64> {
        centers(self.x_min, self.x_max, self.nx)
    }

    pub fn y_centers(&self) -> Vec<f64> {
        centers(self.y_min, self.y_max, self.ny)
    }

    /// Target cell probabilities, row-major in `x`.
    pub fn target_probabilities(&self, target: &TargetDensity) -> Result<Vec<f64>> {
        let xs = self.x_centers();
        let ys = self.y_centers();
        let mut lp = Vec::with_capacity(self.nx * self.ny);
        for &x in &xs {
            for &y in &ys {
                lp.push(target.log_density(&[x, y]));
            }
        }
        let max = lp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(diag("target has no mass on the grid"));
        }
        let mut probs: Vec<f64> = lp.iter().map(|v| (v - max).exp()).collect();
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|v| *v /= total);
        Ok(probs)
    }
}

fn centers(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / n as f64;
    (0..n).map(|i| lo + (i as f64 + 0.5) * h).collect()
}

/// Gaussian kernel density estimate of the rows of `samples` (two columns) at
/// the grid centres, with Scott's rule bandwidth on each axis; cell
/// probabilities floored at `1e-12` and renormalised.
pub fn kde_probabilities(samples: &DMatrix<f64>, grid: &Grid2d) -> Result<Vec<f64>> {
    if samples.ncols() != 2 {
        return Err(Error::config("kernel density estimate needs two columns"));
    }
    let n = samples.nrows();
    if n < 2 {
        return Err(diag("too few samples for a density estimate"));
    }
    let (_, cov) = linalg::sample_covariance(samples);
    let factor = (n as f64).powf(-1.0 / 6.0);
    let hx = cov[(0, 0)].sqrt() * factor;
    let hy = cov[(1, 1)].sqrt() * factor;
    if !(hx > 0.0 && hy > 0.0) {
        return Err(diag("samples have zero spread"));
    }
    let xs = grid.x_centers();
    let ys = grid.y_centers();
    let chunk = 4096;
    let mut dens = DMatrix::<f64>::zeros(grid.nx, grid.ny);
    let mut start = 0;
    while start < n {
        let len = chunk.min(n - start);
        let a = DMatrix::from_fn(grid.nx, len, |i, k| {
            let d = (xs[i] - samples[(start + k, 0)]) / hx;
            (-0.5 * d * d).exp()
        });
        let b = DMatrix::from_fn(len, grid.ny, |k, j| {
            let d = (ys[j] - samples[(start + k, 1)]) / hy;
            (-0.5 * d * d).exp()
        });
        dens.gemm(1.0, &a, &b, 1.0);
        start += len;
    }
    let mut probs: Vec<f64> = Vec::with_capacity(grid.nx * grid.ny);
    for i in 0..grid.nx {
        for j in 0..grid.ny {
            probs.push(dens[(i, j)]);
        }
    }
    let total: f64 = probs.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(diag("density estimate has no mass on the grid"));
    }
    probs.iter_mut().for_each(|v| *v = (*v / total).max(1e-12));
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|v| *v /= total);
    Ok(probs)
}

/// `sum p log(p / q)` over cells with `p > 0`.
pub fn discrete_kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, b)| a * (a / b).ln())
        .sum::<f64>()
        .max(0.0)
}

/// KL divergence from the grid-normalised target to a kernel density
/// estimate of the samples, both discretised on `grid`.
pub fn relative_kl_2d(samples: &DMatrix<f64>, target: &TargetDensity, grid: &Grid2d) -> Result<f64> {
    grid.validate()?;
    if target.dim() != 2 {
        return Err(Error::config("relative KL is defined for two-dimensional targets"));
    }
    let p = grid.target_probabilities(target)?;
    let q = kde_probabilities(samples, grid)?;
    Ok(discrete_kl(&p, &q))
}

/// Summary of one chain, or of several pooled chains, as written to JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub iterations: usize,
    pub window_start: usize,
    pub mess: f64,
    pub mess_per_iteration: f64,
    pub mess_per_second: Option<f64>,
    pub gelman_rubin: Option<f64>,
    pub lag_acfs: Vec<Vec<f64>>,
    pub mean_loop_count: f64,
    pub kernel_mix_counts: BTreeMap<String, usize>,
    pub target_evals: u64,
    pub burn_in_secs: f64,
    pub sampling_secs: f64,
}

impl DiagnosticsReport {
    /// Report on the post-burn-in window of one chain. Lags go up to
    /// `max_lag` (shortened when the window is short).
    pub fn from_trace(trace: &Trace, max_lag: usize) -> Result<Self> {
        let start = trace.burn_in.min(trace.len().saturating_sub(1));
        let window = trace.matrix_from(start);
        let mess = multivariate_ess(&window)?;
        let n = window.nrows();
        let lag = max_lag.min(n / 4 - 1);
        let lag_acfs = (0..trace.dim())
            .map(|j| acf(window.column(j).as_slice(), lag).unwrap_or_default())
            .collect();
        let secs = trace.timing.sampling_secs;
        Ok(DiagnosticsReport {
            iterations: trace.len(),
            window_start: start,
            mess,
            mess_per_iteration: mess / n as f64,
            mess_per_second: if secs > 0.0 { Some(mess / secs) } else { None },
            gelman_rubin: None,
            lag_acfs,
            mean_loop_count: trace.mean_loop_count(),
            kernel_mix_counts: trace.kernel_counts(),
            target_evals: trace.target_evals,
            burn_in_secs: trace.timing.burn_in_secs,
            sampling_secs: secs,
        })
    }
}
