use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

type LogDensityFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// An unnormalised log density on `R^P` with an evaluation counter.
///
/// Outside the support the function should return `-inf`; `NaN` is mapped to
/// `-inf` as well. Evaluation takes `&self` and is safe to call from several
/// threads.
pub struct TargetDensity {
    name: String,
    dim: usize,
    f: Arc<LogDensityFn>,
    evals: AtomicU64,
}

impl TargetDensity {
    pub fn new<F>(name: impl Into<String>, dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        TargetDensity { name: name.into(), dim, f: Arc::new(f), evals: AtomicU64::new(0) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim, "state has the wrong dimension for {}", self.name);
        self.evals.fetch_add(1, Ordering::Relaxed);
        let v = (self.f)(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }

    /// Number of evaluations so far.
    pub fn evals(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }

    pub fn reset_evals(&self) {
        self.evals.store(0, Ordering::Relaxed);
    }

    /// Same density with its own counter starting at zero.
    pub fn fork(&self) -> Self {
        TargetDensity {
            name: self.name.clone(),
            dim: self.dim,
            f: Arc::clone(&self.f),
            evals: AtomicU64::new(0),
        }
    }
}

impl fmt::Debug for TargetDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TargetDensity")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("evals", &self.evals())
            .finish()
    }
}
