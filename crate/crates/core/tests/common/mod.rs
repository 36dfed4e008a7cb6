//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Standard error of the mean from batch means with `sqrt(n)` batches.
pub fn batch_se(xs: &[f64]) -> f64 {
    let b = (xs.len() as f64).sqrt().floor() as usize;
    let a = xs.len() / b;
    let means: Vec<f64> = (0..a).map(|k| mean(&xs[k * b..(k + 1) * b])).collect();
    (variance(&means) / a as f64).sqrt()
}

/// Lag-`k` sample autocorrelation with the usual biased normalisation.
pub fn autocorr(xs: &[f64], k: usize) -> f64 {
    let m = mean(xs);
    let n = xs.len();
    let c0: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    let ck: f64 = (0..n - k).map(|i| (xs[i] - m) * (xs[i + k] - m)).sum();
    ck / c0
}

/// Asymptotic p-value of the two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j, mut d) = (0, 0, 0.0_f64);
    while i < n && j < m {
        let v = a[i].min(b[j]);
        while i < n && a[i] <= v {
            i += 1;
        }
        while j < m && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    kolmogorov_survival((ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d)
}

/// Asymptotic p-value of the one-sample statistic against `cdf`.
pub fn ks_one_sample(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = xs.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    kolmogorov_survival((n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d)
}

/// `P(K > t)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(t: f64) -> f64 {
    if t < 1e-3 {
        return 1.0;
    }
    let s: f64 = (1..200)
        .map(|k| {
            let k = k as f64;
            let sign = if k as i64 % 2 == 1 { 1.0 } else { -1.0 };
            sign * (-2.0 * k * k * t * t).exp()
        })
        .sum();
    (2.0 * s).clamp(0.0, 1.0)
}

/// Standard normal CDF via the complementary error function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// AR(1) series `x_t = rho x_{t-1} + sqrt(1 - rho^2) e_t` started in stationarity.
pub fn ar1(n: usize, rho: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut x = normal(rng);
    let s = (1.0 - rho * rho).sqrt();
    (0..n)
        .map(|_| {
            let out = x;
            x = rho * x + s * normal(rng);
            out
        })
        .collect()
}

/// Sample covariance of row vectors.
pub fn covariance(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let p = rows[0].len();
    let n = rows.len() as f64;
    let m: Vec<f64> = (0..p).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let mut c = vec![vec![0.0; p]; p];
    for r in rows {
        for a in 0..p {
            for b in 0..p {
                c[a][b] += (r[a] - m[a]) * (r[b] - m[b]);
            }
        }
    }
    for row in &mut c {
        for v in row.iter_mut() {
            *v /= n - 1.0;
        }
    }
    c
}

/// `||a - b||_F / ||b||_F`.
pub fn rel_frobenius(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (ra, rb) in a.iter().zip(b) {
        for (x, y) in ra.iter().zip(rb) {
            num += (x - y).powi(2);
            den += y * y;
        }
    }
    (num / den).sqrt()
}

/// Squared norm of each row.
pub fn sq_norms(rows: impl Iterator<Item = Vec<f64>>) -> Vec<f64> {
    rows.map(|r| r.iter().map(|v| v * v).sum()).collect()
}

/// Exact-in-the-limit draws from a two-dimensional density by inverting a
/// fine grid, with uniform jitter inside each cell.
pub struct GridSampler {
    cdf: Vec<f64>,
    x0: f64,
    y0: f64,
    hx: f64,
    hy: f64,
    ny: usize,
    pub mean: [f64; 2],
    pub second: [f64; 2],
}

impl GridSampler {
    pub fn new(f: impl Fn(f64, f64) -> f64, (x0, x1): (f64, f64), (y0, y1): (f64, f64), nx: usize, ny: usize) -> Self {
        let hx = (x1 - x0) / nx as f64;
        let hy = (y1 - y0) / ny as f64;
        let mut logs = Vec::with_capacity(nx * ny);
        for i in 0..nx {
            for k in 0..ny {
                logs.push(f(x0 + (i as f64 + 0.5) * hx, y0 + (k as f64 + 0.5) * hy));
            }
        }
        let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = w.iter().sum();
        let mut mean = [0.0; 2];
        let mut second = [0.0; 2];
        let mut cdf = Vec::with_capacity(w.len());
        let mut acc = 0.0;
        for (idx, wi) in w.iter().enumerate() {
            let p = wi / total;
            let (cx, cy) = (x0 + ((idx / ny) as f64 + 0.5) * hx, y0 + ((idx % ny) as f64 + 0.5) * hy);
            mean[0] += p * cx;
            mean[1] += p * cy;
            // Cell-uniform jitter adds h^2/12 to the second moment.
            second[0] += p * (cx * cx + hx * hx / 12.0);
            second[1] += p * (cy * cy + hy * hy / 12.0);
            acc += p;
            cdf.push(acc);
        }
        GridSampler { cdf, x0, y0, hx, hy, ny, mean, second }
    }

    pub fn draw(&self, r: &mut impl Rng) -> Vec<f64> {
        let u: f64 = r.random();
        let idx = self.cdf.partition_point(|c| *c < u).min(self.cdf.len() - 1);
        let (i, k) = (idx / self.ny, idx % self.ny);
        vec![
            self.x0 + (i as f64 + r.random::<f64>()) * self.hx,
            self.y0 + (k as f64 + r.random::<f64>()) * self.hy,
        ]
    }
}
