use agess::adaptation::{AdaptiveEstimator, AirSchedule};
use agess::diagnostics::{gaussian_kl_bound_quad, gelman_rubin, multivariate_ess};
use agess::elliptical::{EllipticalFamily, EllipticalParams};
use agess::shrinkage::{point_on_ellipse, shrink, EllipseProposal};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gaussian_rows(seed: u64, n: usize, p: usize) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = DMatrix::zeros(n, p);
    let mut prev = vec![0.0; p];
    for i in 0..n {
        for j in 0..p {
            // Mild autocorrelation so the batch means are not trivial.
            prev[j] = 0.5 * prev[j] + rng.sample::<f64, _>(StandardNormal);
            m[(i, j)] = prev[j];
        }
    }
    m
}

fn vec_strategy(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mess_is_affine_invariant(seed in any::<u64>(), a in vec_strategy(4), shift in vec_strategy(2)) {
        let data = gaussian_rows(seed, 400, 2);
        let mut t = DMatrix::from_row_slice(2, 2, &a);
        t[(0, 0)] += 6.0;
        t[(1, 1)] += 6.0;
        prop_assume!(t.determinant().abs() > 1.0);
        let mut moved = &data * t.transpose();
        for mut row in moved.row_iter_mut() {
            row[0] += shift[0];
            row[1] += shift[1];
        }
        let e0 = multivariate_ess(&data).unwrap();
        let e1 = multivariate_ess(&moved).unwrap();
        prop_assert!((e0 - e1).abs() <= 1e-8 * e0, "{} vs {}", e0, e1);
        prop_assert!(e0 > 0.0 && e0 <= 400.0);
    }

    #[test]
    fn gelman_rubin_is_at_least_one(seed in any::<u64>(), offset in -1.0f64..1.0) {
        let a = gaussian_rows(seed, 200, 3);
        let mut b = gaussian_rows(seed.wrapping_add(1), 200, 3);
        b.add_scalar_mut(offset);
        let r = gelman_rubin(&[a, b]).unwrap();
        prop_assert!(r >= 1.0 && r.is_finite());
    }

    #[test]
    fn ellipse_points_stay_in_the_bounding_ball(
        x in vec_strategy(3), z in vec_strategy(3), c in vec_strategy(3), theta in -10.0f64..10.0,
    ) {
        let p = point_on_ellipse(&x, &z, &c, theta);
        let dx: f64 = x.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum();
        let dz: f64 = z.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum();
        let dp: f64 = p.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum();
        prop_assert!(dp <= dx + dz + 1e-9);
        let at0 = point_on_ellipse(&x, &z, &c, 0.0);
        prop_assert!(at0.iter().zip(&x).all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + b.abs())));
    }

    #[test]
    fn shrinkage_returns_an_accepted_point(
        seed in any::<u64>(), x in vec_strategy(2), z in vec_strategy(2), dir in vec_strategy(2),
    ) {
        let c = [0.0, 0.0];
        let margin = x[0] * dir[0] + x[1] * dir[1];
        prop_assume!(margin > 1e-3);
        let inside = |y: &[f64]| y[0] * dir[0] + y[1] * dir[1] > 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let proposal = EllipseProposal { x: &x, z: &z, center: &c };
        let r = shrink(&proposal, inside, &mut rng, 10_000).unwrap();
        prop_assert!(inside(&r.point));
        prop_assert!(r.loop_count >= 1);
        prop_assert!(r.theta.abs() < std::f64::consts::TAU);
        prop_assert_eq!(r.point, point_on_ellipse(&x, &z, &c, r.theta));
    }

    #[test]
    fn schedule_gaps_never_shrink(beta in 0.05f64..2.0) {
        let points: Vec<u64> = AirSchedule::new(beta).take(300).collect();
        prop_assert_eq!(points[0], 1);
        let gaps: Vec<u64> = std::iter::once(points[0]).chain(points.windows(2).map(|w| w[1] - w[0])).collect();
        prop_assert!(gaps.iter().all(|&g| g >= 1));
        prop_assert!(gaps.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn conditional_covariance_is_affine_in_the_quadratic_form(
        diag in prop::collection::vec(0.1f64..5.0, 3), x in vec_strategy(3), y in vec_strategy(3),
    ) {
        let scale = DMatrix::from_diagonal(&DVector::from_vec(diag));
        let g = EllipticalParams::new(EllipticalFamily::t6(), DVector::zeros(3), scale.clone()).unwrap();
        let origin = g.conditional_covariance(&[0.0; 3]).unwrap();
        let cx = g.conditional_covariance(&x).unwrap();
        let cy = g.conditional_covariance(&y).unwrap();
        let (qx, qy) = (g.quadratic_form(&x), g.quadratic_form(&y));
        // (C(x) - C(0)) / q(x) is the same matrix for every state.
        let sx = (&cx - &origin) / qx.max(1e-12);
        let sy = (&cy - &origin) / qy.max(1e-12);
        prop_assume!(qx > 1e-6 && qy > 1e-6);
        prop_assert!((&sx - &sy).norm() <= 1e-9 * sx.norm().max(1.0));
        // The direction is always the scale matrix.
        let k = cx[(0, 0)] / scale[(0, 0)];
        prop_assert!((&cx - &scale * k).norm() <= 1e-9 * cx.norm());
    }

    #[test]
    fn background_update_keeps_the_covariance_symmetric_psd(
        seed in any::<u64>(), exponent in 0.3f64..1.0, steps in 2usize..60,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut est = AdaptiveEstimator::new(DVector::zeros(3), DMatrix::identity(3, 3), exponent);
        for i in 2..2 + steps {
            let x: Vec<f64> = (0..3).map(|_| 3.0 * rng.sample::<f64, _>(StandardNormal)).collect();
            est.update(&x, i);
        }
        prop_assert!((&est.cov - est.cov.transpose()).norm() <= 1e-12 * est.cov.norm());
        let eig = est.cov.clone().symmetric_eigen();
        prop_assert!(eig.eigenvalues.iter().all(|&l| l > -1e-10));
    }

    #[test]
    fn background_update_commutes_with_coordinate_swaps(seed in any::<u64>(), steps in 2usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = AdaptiveEstimator::new(DVector::from_vec(vec![1.0, -1.0]), DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]), 0.7);
        let mut b = AdaptiveEstimator::new(DVector::from_vec(vec![-1.0, 1.0]), DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]), 0.7);
        for i in 2..2 + steps {
            let x: [f64; 2] = [rng.sample(StandardNormal), rng.sample(StandardNormal)];
            a.update(&x, i);
            b.update(&[x[1], x[0]], i);
        }
        prop_assert!((a.mean[0] - b.mean[1]).abs() < 1e-12 && (a.mean[1] - b.mean[0]).abs() < 1e-12);
        prop_assert!((a.cov[(0, 0)] - b.cov[(1, 1)]).abs() < 1e-12);
        prop_assert!((a.cov[(0, 1)] - b.cov[(1, 0)]).abs() < 1e-12);
    }

    #[test]
    fn kl_bound_decreases_with_steps(q in 0.0f64..100.0, p in 1usize..50, n in 3u32..30) {
        let a = gaussian_kl_bound_quad(n, q, p).unwrap();
        let b = gaussian_kl_bound_quad(n + 1, q, p).unwrap();
        prop_assert!(b < a && b > 0.0);
    }
}
