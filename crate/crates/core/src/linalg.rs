//! Small dense linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

/// Smallest accepted squared pivot relative to the largest diagonal entry.
const PIVOT_FLOOR: f64 = 1e-14;

/// Lower Cholesky factor of a symmetric matrix, or `None` when the matrix is
/// not numerically positive definite.
pub fn cholesky_lower(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if !a.is_square() || a.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let max_diag = a.diagonal().iter().fold(0.0_f64, |m, v| m.max(*v));
    if max_diag <= 0.0 {
        return None;
    }
    let l = nalgebra::Cholesky::new(a.clone())?.unpack();
    let floor = (PIVOT_FLOOR * max_diag).sqrt();
    if l.diagonal().iter().any(|d| d.partial_cmp(&floor) != Some(std::cmp::Ordering::Greater)) {
        return None;
    }
    Some(l)
}

/// Cholesky factor with jitter repair: on failure add `delta * I`, where
/// `delta` starts at `1e-10 * mean(diag)` and doubles, at most `attempts`
/// times. Returns the factor, the repaired matrix and the jitter used.
pub fn cholesky_with_jitter(
    a: &DMatrix<f64>,
    attempts: usize,
) -> Option<(DMatrix<f64>, DMatrix<f64>, f64)> {
    if let Some(l) = cholesky_lower(a) {
        return Some((l, a.clone(), 0.0));
    }
    let n = a.nrows();
    if n == 0 || a.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mean_diag = a.diagonal().iter().map(|d| d.abs()).sum::<f64>() / n as f64;
    let mut delta = 1e-10 * if mean_diag > 0.0 { mean_diag } else { 1.0 };
    for _ in 0..attempts {
        let mut repaired = a.clone();
        for i in 0..n {
            repaired[(i, i)] += delta;
        }
        if let Some(l) = cholesky_lower(&repaired) {
            return Some((l, repaired, delta));
        }
        delta *= 2.0;
    }
    None
}

/// `log |A|` from a lower Cholesky factor of `A`.
pub fn log_det_from_chol(l: &DMatrix<f64>) -> f64 {
    2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

/// Solves `L w = v` for lower-triangular `L`.
pub fn solve_lower(l: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    let mut w = v.clone();
    let n = l.nrows();
    for i in 0..n {
        let mut s = w[i];
        for k in 0..i {
            s -= l[(i, k)] * w[k];
        }
        w[i] = s / l[(i, i)];
    }
    w
}

/// `L v` for lower-triangular `L`.
pub fn mul_lower(l: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    let n = l.nrows();
    let mut out = DVector::zeros(n);
    for i in 0..n {
        let mut s = 0.0;
        for k in 0..=i {
            s += l[(i, k)] * v[k];
        }
        out[i] = s;
    }
    out
}

/// `(A + A^T) / 2`.
pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Largest absolute asymmetry relative to the largest absolute entry.
pub fn relative_asymmetry(a: &DMatrix<f64>) -> f64 {
    let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0_f64;
    for i in 0..a.nrows() {
        for j in 0..i {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst / scale
}

/// Sample covariance with an `n - 1` denominator; rows are observations.
pub fn sample_covariance(data: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = data.nrows();
    let p = data.ncols();
    let mean = DVector::from_iterator(p, data.column_iter().map(|c| c.sum() / n as f64));
    let mut centered = data.clone();
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        col.add_scalar_mut(-mean[j]);
    }
    let denom = (n.max(2) - 1) as f64;
    let cov = (centered.transpose() * &centered) / denom;
    (mean, cov)
}
