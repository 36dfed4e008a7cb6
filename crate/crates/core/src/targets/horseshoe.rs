//! Linear regression with a horseshoe prior, sampled on the log scale of the
//! local scales, the global scale and the noise variance.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::dataset::{Dataset, DatasetMeta};
use crate::linalg;
use crate::target::TargetDensity;

/// `log(1 + e^v)` without overflow.
fn softplus(v: f64) -> f64 {
    v.max(0.0) + (-v.abs()).exp().ln_1p()
}

/// Half-Cauchy(0, 1) density of `exp(l)` on the log scale, Jacobian included.
fn log_half_cauchy_on_log(l: f64) -> f64 {
    (2.0 / std::f64::consts::PI).ln() - softplus(2.0 * l) + l
}

/// `n` rows from `N(0, S)` with `S_jk = 0.8^|j-k|`; each coefficient is
/// `(-1)^j Z_j` with probability 0.05 (`Z_j ~ N(1, 9)`), zero otherwise, with
/// at least one non-zero; unit noise.
pub fn horseshoe_data<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Dataset {
    let cov = DMatrix::from_fn(d, d, |j, k| 0.8_f64.powi((j as i32 - k as i32).abs()));
    let l = linalg::cholesky_lower(&cov).expect("AR(1) correlation is positive definite");
    let mut x = DMatrix::zeros(n, d);
    for i in 0..n {
        let z = nalgebra::DVector::from_iterator(d, (0..d).map(|_| StandardNormal.sample(rng)));
        let row = linalg::mul_lower(&l, &z);
        for j in 0..d {
            x[(i, j)] = row[j];
        }
    }
    let big_z = Normal::new(1.0, 3.0).unwrap();
    let beta = loop {
        let b: Vec<f64> = (1..=d)
            .map(|j| {
                let nonzero = rng.random::<f64>() < 0.05;
                let z = big_z.sample(rng);
                if nonzero {
                    if j % 2 == 0 { z } else { -z }
                } else {
                    0.0
                }
            })
            .collect();
        if b.iter().any(|v| *v != 0.0) {
            break b;
        }
    };
    let y = (0..n)
        .map(|i| {
            let noise: f64 = StandardNormal.sample(rng);
            (0..d).map(|j| x[(i, j)] * beta[j]).sum::<f64>() + noise
        })
        .collect();
    let mut params = BTreeMap::new();
    params.insert("sigma2".into(), 1.0);
    Dataset {
        x,
        y,
        meta: DatasetMeta {
            kind: "horseshoe".into(),
            seed: None,
            n,
            d,
            true_coefficients: Some(beta),
            params,
        },
    }
}

/// Posterior over `(beta, log lambda, log tau, log sigma^2)`, dimension `2D + 2`.
pub fn horseshoe_target(data: &Dataset) -> TargetDensity {
    let n = data.n();
    let d = data.d();
    let rows: Vec<f64> = (0..n).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| data.x[(i, j)]).collect();
    let y = data.y.clone();
    TargetDensity::new("horseshoe", 2 * d + 2, move |th: &[f64]| {
        let beta = &th[..d];
        let log_lambda = &th[d..2 * d];
        let log_tau = th[2 * d];
        let log_s2 = th[2 * d + 1];
        let s2 = log_s2.exp();
        let mut sse = 0.0;
        for (row, yi) in rows.chunks_exact(d).zip(&y) {
            let r = yi - row.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>();
            sse += r * r;
        }
        let mut lp = -0.5 * n as f64 * log_s2 - 0.5 * sse / s2;
        for (b, l) in beta.iter().zip(log_lambda) {
            let log_var = log_s2 + 2.0 * (log_tau + l);
            lp += -0.5 * log_var - 0.5 * b * b * (-log_var).exp();
            lp += log_half_cauchy_on_log(*l);
        }
        lp + log_half_cauchy_on_log(log_tau)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn half_cauchy_on_log_scale_at_zero() {
        assert!((log_half_cauchy_on_log(0.0) - (1.0 / std::f64::consts::PI).ln()).abs() < 1e-15);
    }

    #[test]
    fn half_cauchy_on_log_scale_integrates_to_one() {
        let h = 1e-3;
        let total: f64 = (-40_000..40_000).map(|i| log_half_cauchy_on_log(i as f64 * h).exp() * h).sum();
        assert!((total - 1.0).abs() < 1e-6, "{total}");
    }

    #[test]
    fn dimension_and_nonzero_truth() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = horseshoe_data(50, 20, &mut rng);
        assert_eq!(horseshoe_target(&data).dim(), 42);
        assert!(data.meta.true_coefficients.unwrap().iter().any(|b| *b != 0.0));
    }
}
