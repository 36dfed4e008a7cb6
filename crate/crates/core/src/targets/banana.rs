//! Banana and twin-banana posteriors of two location parameters.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::target::TargetDensity;

/// Prior means of `(theta_1, theta_2)` in the banana model; both prior
/// variances are 4.
pub const BANANA_PRIOR_MEAN: [f64; 2] = [0.0, 0.5];

struct Moments {
    n: f64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn of(y: &[f64]) -> Self {
        Moments {
            n: y.len() as f64,
            sum: y.iter().sum(),
            sum_sq: y.iter().map(|v| v * v).sum(),
        }
    }

    /// `sum_i (y_i - m)^2`.
    fn sse(&self, m: f64) -> f64 {
        self.sum_sq - 2.0 * m * self.sum + self.n * m * m
    }
}

/// `n` observations from `N(0.1, 1)`.
pub fn banana_data<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let d = Normal::new(0.1, 1.0).unwrap();
    (0..n).map(|_| d.sample(rng)).collect()
}

/// Nuisance offsets `(mu_1, mu_2)`, each from `N(0, 9)`.
pub fn banana_nuisance<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let d = Normal::new(0.0, 3.0).unwrap();
    (d.sample(rng), d.sample(rng))
}

/// `y_i ~ N((t1 - mu1) + (t2 - mu2)^2, 1)` with `t1 ~ N(0, 4)`, `t2 ~ N(0.5, 4)`.
pub fn banana_target(y: &[f64], mu1: f64, mu2: f64) -> TargetDensity {
    let mom = Moments::of(y);
    TargetDensity::new("banana", 2, move |t: &[f64]| {
        let m = (t[0] - mu1) + (t[1] - mu2).powi(2);
        let a = t[0] - BANANA_PRIOR_MEAN[0];
        let b = t[1] - BANANA_PRIOR_MEAN[1];
        -0.5 * mom.sse(m) - (a * a + b * b) / 8.0
    })
}

/// `n` observations from `N(100, 100)`.
pub fn twin_banana_data<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let d = Normal::new(100.0, 10.0).unwrap();
    (0..n).map(|_| d.sample(rng)).collect()
}

/// `y_i ~ N(0.1 a^2 - 0.5 b^4 - 10 a b, 100)` with `a = t1 - mu1`,
/// `b = t2 - mu2` and `N(0, 4)` priors on both parameters.
pub fn twin_banana_target(y: &[f64], mu1: f64, mu2: f64) -> TargetDensity {
    let mom = Moments::of(y);
    TargetDensity::new("twin_banana", 2, move |t: &[f64]| {
        let a = t[0] - mu1;
        let b = t[1] - mu2;
        let m = 0.1 * a * a - 0.5 * b.powi(4) - 10.0 * a * b;
        -mom.sse(m) / 200.0 - (t[0] * t[0] + t[1] * t[1]) / 8.0
    })
}
