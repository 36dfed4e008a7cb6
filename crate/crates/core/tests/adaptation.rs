mod common;

use agess::adaptation::{
    background_update, commit_adaptation, run_agess, weight_exponent, AdaptConfig, AdaptVariant, AdaptiveEstimator,
    AirSchedule, SupportTransform,
};
use agess::elliptical::{EllipticalFamily, EllipticalParams};
use agess::kernels::KernelTag;
use agess::runners::{run_ess, run_fixed};
use agess::target::TargetDensity;
use agess::targets::{banana_data, banana_target, BANANA_PRIOR_MEAN};
use common::*;
use nalgebra::{DMatrix, DVector};

fn std_normal_target(p: usize) -> TargetDensity {
    TargetDensity::new("std_normal", p, |x: &[f64]| -0.5 * x.iter().map(|v| v * v).sum::<f64>())
}

/// `sum_{i<=j} floor(sqrt(i))` in closed form: with `k = floor(sqrt(j))`,
/// every `t < k` appears `2t + 1` times and `k` appears `j - k^2 + 1` times.
fn sqrt_schedule(j: u64) -> u64 {
    let k = (j as f64).sqrt().floor() as u64;
    let k = if (k + 1) * (k + 1) <= j { k + 1 } else if k * k > j { k - 1 } else { k };
    let km1 = k.saturating_sub(1);
    km1 * k * (2 * k - 1) / 3 + km1 * k / 2 + k * (j - k * k + 1)
}

/// Number of schedule points in `[2, n]`.
fn commits_up_to(n: u64) -> u64 {
    let (mut lo, mut hi) = (0u64, n);
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if sqrt_schedule(mid) <= n {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo - 1
}

#[test]
fn schedule_examples() {
    let half: Vec<u64> = AirSchedule::new(0.5).take(9).collect();
    assert_eq!(half, vec![1, 2, 3, 5, 7, 9, 11, 13, 16]);
    let one: Vec<u64> = AirSchedule::new(1.0).take(6).collect();
    assert_eq!(one, vec![1, 3, 6, 10, 15, 21]);
    let tri: Vec<u64> = AirSchedule::new(1.0).take(200).collect();
    for (j, v) in tri.iter().enumerate() {
        let j = j as u64 + 1;
        assert_eq!(*v, j * (j + 1) / 2);
    }
    for beta in [0.3, 0.5, 0.77, 1.0] {
        let s: Vec<u64> = AirSchedule::new(beta).take(2_000).collect();
        let gaps: Vec<u64> = s.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(gaps.windows(2).all(|g| g[1] >= g[0]), "beta {beta}");
        assert!(s.windows(2).all(|w| w[1] > w[0]));
    }
    let closed: Vec<u64> = (1..=5_000).map(sqrt_schedule).collect();
    assert_eq!(AirSchedule::new(0.5).take(5_000).collect::<Vec<_>>(), closed);
}

#[test]
fn weight_exponent_examples() {
    assert!((weight_exponent(1) - 2.0 / 3.0).abs() < 1e-15);
    assert!((weight_exponent(27) - 2.0 / 3.0).abs() < 1e-12);
    assert!((weight_exponent(1000) - 0.9).abs() < 1e-12);
    assert!((weight_exponent(8) - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn background_update_examples() {
    let mean = DVector::from_vec(vec![1.0, -2.0]);
    let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
    let mut est = AdaptiveEstimator::new(mean.clone(), cov.clone(), 2.0 / 3.0);
    let w = est.weight(5);
    assert!((w - 5f64.powf(-2.0 / 3.0)).abs() < 1e-15);
    background_update(&mut est, &[1.0, -2.0], 5);
    assert_eq!(est.mean, mean);
    for k in 0..4 {
        assert!((est.cov[k] - (1.0 - w) * cov[k]).abs() < 1e-15);
    }

    // Far along the schedule the weight vanishes.
    let mut late = AdaptiveEstimator::new(mean.clone(), cov.clone(), 2.0 / 3.0);
    background_update(&mut late, &[100.0, 100.0], usize::MAX);
    assert!((&late.mean - &mean).abs().max() < 1e-9);
    assert!((&late.cov - &cov).abs().max() < 1e-6);

    // Covariance uses the updated mean.
    let mut est = AdaptiveEstimator::new(DVector::zeros(1), DMatrix::from_element(1, 1, 1.0), 1.0);
    background_update(&mut est, &[4.0], 2);
    assert_eq!(est.mean[0], 2.0);
    assert_eq!(est.cov[(0, 0)], 0.5 * 1.0 + 0.5 * 4.0);
}

#[test]
fn background_estimate_is_consistent() {
    let m = [1.0, -0.5, 2.0];
    let s = [[2.0, 0.6, 0.0], [0.6, 1.0, -0.3], [0.0, -0.3, 0.5]];
    let l = DMatrix::from_row_slice(3, 3, &s.concat()).cholesky().unwrap().l();
    let mut est = AdaptiveEstimator::new(DVector::zeros(3), DMatrix::identity(3, 3), 2.0 / 3.0);
    let mut r = rng(1);
    let n = 100_000;
    for i in 2..=n + 1 {
        let eta = DVector::from_iterator(3, (0..3).map(|_| normal(&mut r)));
        let x: Vec<f64> = (0..3).map(|k| m[k] + (&l * &eta)[k]).collect();
        est.update(&x, i);
    }
    // The estimator behaves like exponential smoothing with weight w_n at
    // the end, whose variance is w / (2 - w) times the draw variance.
    let w = est.weight(n);
    for k in 0..3 {
        let se = (w / (2.0 - w) * s[k][k]).sqrt();
        assert!((est.mean[k] - m[k]).abs() < 4.0 * se, "{k}: {} vs {}", est.mean[k], m[k]);
    }
    let got: Vec<Vec<f64>> = (0..3).map(|a| (0..3).map(|b| est.cov[(a, b)]).collect()).collect();
    let want: Vec<Vec<f64>> = s.iter().map(|r| r.to_vec()).collect();
    assert!(rel_frobenius(&got, &want) < 0.05, "{got:?}");
    assert!((est.cov.clone() - est.cov.transpose()).abs().max() == 0.0);
}

#[test]
fn commit_examples() {
    let spd = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
    let est = AdaptiveEstimator::new(DVector::from_vec(vec![1.0, 2.0]), spd.clone(), 2.0 / 3.0);
    let mu0 = DVector::zeros(2);
    let (g, jitter) = commit_adaptation(&est, EllipticalFamily::t6(), AdaptVariant::FullCovariance, &mu0).unwrap();
    assert_eq!(jitter, 0.0);
    assert_eq!(g.scale(), &spd);
    assert_eq!(g.mean(), &est.mean);

    let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
    let est = AdaptiveEstimator::new(DVector::zeros(2), singular.clone(), 2.0 / 3.0);
    let (g, jitter) = commit_adaptation(&est, EllipticalFamily::t6(), AdaptVariant::FullCovariance, &mu0).unwrap();
    assert!(jitter > 0.0);
    assert!(jitter >= 1e-10 && jitter <= 1e-10 * 2f64.powi(10));
    assert_eq!(g.scale(), &(singular + DMatrix::identity(2, 2) * jitter));
    let l = g.chol();
    assert!((l * l.transpose() - g.scale()).norm() / g.scale().norm() < 1e-10);

    let diag = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 3.0]));
    let est = AdaptiveEstimator::new(DVector::from_vec(vec![5.0, 5.0]), diag, 2.0 / 3.0);
    let mu0 = DVector::from_vec(vec![-1.0, 1.0]);
    let (g, _) = commit_adaptation(&est, EllipticalFamily::Gaussian, AdaptVariant::ScalarScale, &mu0).unwrap();
    assert_eq!(g.mean(), &mu0);
    assert_eq!(g.scale(), &(DMatrix::identity(2, 2) * 2.0));
}

#[test]
fn adaptation_improves_on_the_fixed_reference_in_high_dimension() {
    // The t reference caps ESS/iter of ||x||^2 near 0.15 even when its scale
    // is exact, so the gain over the frozen 10 I start is bounded by about 3.
    let p = 100;
    let target = std_normal_target(p);
    let sigma0 = DMatrix::identity(p, p) * 10.0;
    let mu0 = DVector::zeros(p);
    let n = 100_000;
    let init = vec![0.1; p];
    let run = |adapt: bool| {
        let mut cfg = AdaptConfig::for_dim(p, n, n / 2);
        cfg.adapt = adapt;
        let mut r = rng(2);
        let tr = run_agess(&target, &SupportTransform::identity(), &init, &mu0, &sigma0, &cfg, &mut r).unwrap();
        let from = tr.final_fraction_start(0.4);
        let f = tr.functional_from(from, |x| x.iter().map(|v| v * v).sum());
        let b = (f.len() as f64).powf(2.0 / 3.0) as usize;
        let a = f.len() / b;
        let means: Vec<f64> = (0..a).map(|k| mean(&f[k * b..(k + 1) * b])).collect();
        (variance(&f) / (b as f64 * variance(&means)), tr)
    };
    let (adaptive, tr) = run(true);
    let (fixed, frozen) = run(false);
    assert!(adaptive >= 2.0 * fixed, "{adaptive} vs {fixed}");
    assert!(frozen.commits.is_empty());
    let last = tr.commits.last().unwrap();
    let avg = mean(&last.scale_diag);
    assert!((avg - 1.0).abs() < 0.2, "{avg}");
}

#[test]
fn all_non_adaptive_steps_reproduce_the_fixed_kernel() {
    let target = TargetDensity::new("skew", 3, |x: &[f64]| {
        -0.5 * x.iter().map(|v| v * v).sum::<f64>() + x[0].sin()
    });
    let mu0 = DVector::from_vec(vec![0.2, 0.0, -0.1]);
    let sigma0 = DMatrix::identity(3, 3) * 3.0;
    let gamma0 = EllipticalParams::new(EllipticalFamily::t6(), mu0.clone(), sigma0.clone()).unwrap();
    let init = [0.5, 0.5, 0.5];

    let mut cfg = AdaptConfig::for_dim(3, 3_000, 500);
    cfg.eps_a = 1.0;
    cfg.eps_b = 0.0;
    let a = run_agess(&target, &SupportTransform::identity(), &init, &mu0, &sigma0, &cfg, &mut rng(3)).unwrap();
    let b = run_fixed(&target, &gamma0, &init, 3_000, 500, &mut rng(3)).unwrap();
    assert!(a.rows().zip(b.rows()).all(|(x, y)| x == y));
    assert_eq!(a.count_kernel(KernelTag::NonAdaptiveFull), 2_999);
}

#[test]
fn switching_adaptation_off_reproduces_the_fixed_kernel() {
    for p in [3usize, 12] {
        let target = std_normal_target(p);
        let mu0 = DVector::zeros(p);
        let sigma0 = DMatrix::identity(p, p) * 2.0;
        let gamma0 = EllipticalParams::new(EllipticalFamily::t6(), mu0.clone(), sigma0.clone()).unwrap();
        let init = vec![0.3; p];
        let mut cfg = AdaptConfig::for_dim(p, 2_000, 500);
        cfg.adapt = false;
        cfg.eps_a = 0.0;
        cfg.eps_b = 0.0;
        cfg.burn_1d_fraction = 0.0;
        let a = run_agess(&target, &SupportTransform::identity(), &init, &mu0, &sigma0, &cfg, &mut rng(4)).unwrap();
        let b = run_fixed(&target, &gamma0, &init, 2_000, 500, &mut rng(4)).unwrap();
        assert!(a.rows().zip(b.rows()).all(|(x, y)| x == y), "P = {p}");
        assert!(a.commits.is_empty());
    }
}

#[test]
fn high_dimensional_burn_in_starts_with_sweeps() {
    let p = 12;
    let target = std_normal_target(p);
    let mut cfg = AdaptConfig::for_dim(p, 4_000, 2_000);
    cfg.burn_1d_fraction = 0.25;
    let tr = run_agess(
        &target,
        &SupportTransform::identity(),
        &vec![0.0; p],
        &DVector::zeros(p),
        &DMatrix::identity(p, p),
        &cfg,
        &mut rng(5),
    )
    .unwrap();
    // Iterations 2..=500 are forced sweeps.
    assert!(tr.stats()[..499].iter().all(|s| s.kernel == KernelTag::CoordSweep));
    let rest = &tr.stats()[499..];
    let sweeps = rest.iter().filter(|s| s.kernel == KernelTag::CoordSweep).count() as f64 / rest.len() as f64;
    let fixed = rest.iter().filter(|s| s.kernel == KernelTag::NonAdaptiveFull).count() as f64 / rest.len() as f64;
    assert!((sweeps - 0.05).abs() < 0.02, "{sweeps}");
    assert!((fixed - 0.05).abs() < 0.02, "{fixed}");
}

#[test]
fn low_dimensional_runs_never_sweep() {
    let target = std_normal_target(4);
    let cfg = AdaptConfig::for_dim(4, 20_000, 2_000);
    let tr = run_agess(
        &target,
        &SupportTransform::identity(),
        &[0.0; 4],
        &DVector::zeros(4),
        &DMatrix::identity(4, 4),
        &cfg,
        &mut rng(6),
    )
    .unwrap();
    assert_eq!(tr.count_kernel(KernelTag::CoordSweep), 0);
    let frac = tr.count_kernel(KernelTag::NonAdaptiveFull) as f64 / 19_999.0;
    assert!((frac - 0.1).abs() < 0.01, "{frac}");
}

#[test]
fn commit_count_follows_the_schedule() {
    let n = 1_000_000;
    let target = TargetDensity::new("normal", 1, |x: &[f64]| -0.5 * x[0] * x[0]);
    let cfg = AdaptConfig::for_dim(1, n, 1_000);
    let tr = run_agess(
        &target,
        &SupportTransform::identity(),
        &[0.0],
        &DVector::zeros(1),
        &DMatrix::identity(1, 1),
        &cfg,
        &mut rng(7),
    )
    .unwrap();
    let expected = commits_up_to(n as u64);
    let got = tr.commits.len() as u64;
    assert!(got.abs_diff(expected) <= 2, "{got} vs {expected}");
    // Theta(n^(1/(1 + beta))) with constant (3/2)^(2/3) to leading order.
    let ratio = got as f64 / (n as f64).powf(2.0 / 3.0);
    assert!((ratio - 1.5f64.powf(2.0 / 3.0)).abs() < 0.05, "{ratio}");
    let iters: Vec<usize> = tr.commits.iter().map(|c| c.iteration).collect();
    let sched: Vec<usize> = AirSchedule::new(0.5).skip(1).take(iters.len()).map(|v| v as usize).collect();
    assert_eq!(iters, sched);
}

#[test]
fn log_transform_recovers_a_lognormal_marginal() {
    // x_1 ~ LogNormal(0, 1) and x_2 ~ N(0, 1), independent.
    let target = TargetDensity::new("lognormal", 2, |x: &[f64]| {
        if x[0] <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let l = x[0].ln();
        -l - 0.5 * l * l - 0.5 * x[1] * x[1]
    });
    let transform = SupportTransform::log_positive(2, &[0]);
    let cfg = AdaptConfig::for_dim(2, 200_000, 20_000);
    let init = [2.0, 0.0];
    let mu0 = DVector::from_vec(transform.to_internal(&init).unwrap());
    let tr = run_agess(&target, &transform, &init, &mu0, &DMatrix::identity(2, 2), &cfg, &mut rng(8)).unwrap();
    assert!(tr.rows().all(|s| s[0] > 0.0));
    let xs: Vec<f64> = tr.coordinate_from(20_000, 0).into_iter().step_by(20).collect();
    let p = ks_one_sample(&xs, |v| if v <= 0.0 { 0.0 } else { normal_cdf(v.ln()) });
    assert!(p > 0.001, "{p}");

    // Jacobian: log |dx/du| = u on the log coordinate only.
    assert_eq!(transform.log_jacobian(&[0.7, 5.0]), 0.7);
    assert_eq!(transform.to_original(&[0.0, -1.0]), vec![1.0, -1.0]);
    assert!(transform.to_internal(&[-1.0, 0.0]).is_err());
}

#[test]
fn banana_moments_match_a_long_reference_run() {
    let y = banana_data(20, &mut rng(9));
    let target = banana_target(&y, 0.0, 0.0);

    let prior = EllipticalParams::new(
        EllipticalFamily::Gaussian,
        DVector::from_column_slice(&BANANA_PRIOR_MEAN),
        DMatrix::identity(2, 2) * 4.0,
    )
    .unwrap();
    let reference = run_ess(&target, &prior, &BANANA_PRIOR_MEAN, 10_000_000, 100_000, &mut rng(10)).unwrap();
    let cfg = AdaptConfig::for_dim(2, 200_000, 20_000);
    let tr = run_agess(
        &target,
        &SupportTransform::identity(),
        &BANANA_PRIOR_MEAN,
        &DVector::from_column_slice(&BANANA_PRIOR_MEAN),
        &(DMatrix::identity(2, 2) * 4.0),
        &cfg,
        &mut rng(11),
    )
    .unwrap();

    let stats = |f: &dyn Fn(&[f64]) -> f64| {
        let a = tr.functional_from(tr.burn_in, f);
        let b = reference.functional_from(reference.burn_in, f);
        let se = (batch_se(&a).powi(2) + batch_se(&b).powi(2)).sqrt();
        (mean(&a), mean(&b), se)
    };
    let fs: [(&str, Box<dyn Fn(&[f64]) -> f64>); 5] = [
        ("mean 1", Box::new(|x| x[0])),
        ("mean 2", Box::new(|x| x[1])),
        ("second 1", Box::new(|x| x[0] * x[0])),
        ("second 2", Box::new(|x| x[1] * x[1])),
        ("cross", Box::new(|x| x[0] * x[1])),
    ];
    for (name, f) in fs.iter() {
        let (a, b, se) = stats(f.as_ref());
        assert!((a - b).abs() < 4.0 * se, "{name}: {a} vs {b} (se {se})");
    }
}
