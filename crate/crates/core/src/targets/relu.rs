//! Logistic regression with a rectified linear predictor.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Normal, StandardNormal};

use super::dataset::{Dataset, DatasetMeta};
use crate::target::TargetDensity;

/// `log(1 + e^m)` for `m >= 0`.
fn softplus_nonneg(m: f64) -> f64 {
    m + (-m).exp().ln_1p()
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// `n` observations in `d` dimensions. Coefficients come from a `t_6` with
/// scale matrix `sqrt(2 log d) I`, covariates from `N(mu_x 1, I)` with
/// `mu_x ~ N(0, 0.25)`, responses from `Bernoulli(logistic(max(0, x^T beta)))`.
pub fn relu_data<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Dataset {
    let scale = (2.0 * (d as f64).ln()).max(0.0).sqrt().sqrt();
    let chi = ChiSquared::new(6.0).unwrap();
    let w = (6.0_f64 / chi.sample(rng)).sqrt();
    let beta: Vec<f64> = (0..d)
        .map(|_| scale * w * normal(rng))
        .collect();
    let mu_x = Normal::new(0.0, 0.5).unwrap().sample(rng);
    let x = DMatrix::from_fn(n, d, |_, _| mu_x + normal(rng));
    let y = (0..n)
        .map(|i| {
            let eta = (0..d).map(|j| x[(i, j)] * beta[j]).sum::<f64>().max(0.0);
            let p = 1.0 / (1.0 + (-eta).exp());
            if rng.random::<f64>() < p { 1.0 } else { 0.0 }
        })
        .collect();
    let mut params = BTreeMap::new();
    params.insert("mu_x".into(), mu_x);
    Dataset {
        x,
        y,
        meta: DatasetMeta {
            kind: "relu".into(),
            seed: None,
            n,
            d,
            true_coefficients: Some(beta),
            params,
        },
    }
}

/// Posterior of `beta` under an `N(0, I)` prior.
pub fn relu_target(data: &Dataset) -> TargetDensity {
    let n = data.n();
    let d = data.d();
    let rows: Vec<f64> = (0..n).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| data.x[(i, j)]).collect();
    let y = data.y.clone();
    TargetDensity::new("relu", d, move |beta: &[f64]| {
        let mut ll = -0.5 * beta.iter().map(|b| b * b).sum::<f64>();
        for (row, yi) in rows.chunks_exact(d).zip(&y) {
            let m = row.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>().max(0.0);
            ll += yi * m - softplus_nonneg(m);
        }
        ll
    })
}
