use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::kernels::{KernelTag, StepStats};

/// Snapshot of the reference parameters taken at a commit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommitRecord {
    pub iteration: usize,
    pub mean: Vec<f64>,
    pub scale_diag: Vec<f64>,
    pub jitter: f64,
}

/// Wall-clock seconds spent before and after the burn-in boundary.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTiming {
    pub burn_in_secs: f64,
    pub sampling_secs: f64,
}

/// States of one chain (row `0` is the initial state) with per-step statistics.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    dim: usize,
    states: Vec<f64>,
    stats: Vec<StepStats>,
    pub commits: Vec<CommitRecord>,
    pub burn_in: usize,
    pub timing: PhaseTiming,
    pub target_evals: u64,
}

impl Trace {
    pub fn new(dim: usize, burn_in: usize, capacity: usize) -> Self {
        Trace {
            dim,
            states: Vec::with_capacity(capacity * dim),
            stats: Vec::with_capacity(capacity.saturating_sub(1)),
            burn_in,
            ..Default::default()
        }
    }

    /// Builds a trace from recorded rows; `stats` has one entry per transition.
    pub fn from_parts(dim: usize, states: Vec<f64>, stats: Vec<StepStats>, burn_in: usize) -> Self {
        assert_eq!(states.len() % dim.max(1), 0);
        Trace { dim, states, stats, burn_in, ..Default::default() }
    }

    pub fn push_initial(&mut self, x: &[f64]) {
        assert!(self.states.is_empty());
        self.states.extend_from_slice(x);
    }

    pub fn push(&mut self, x: &[f64], stats: StepStats) {
        debug_assert_eq!(x.len(), self.dim);
        self.states.extend_from_slice(x);
        self.stats.push(stats);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of recorded states.
    pub fn len(&self) -> usize {
        self.states.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn last(&self) -> Option<&[f64]> {
        if self.is_empty() {
            None
        } else {
            Some(self.state(self.len() - 1))
        }
    }

    pub fn stats(&self) -> &[StepStats] {
        &self.stats
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.states.chunks_exact(self.dim.max(1))
    }

    /// Rows `from..` as an `n x P` matrix.
    pub fn matrix_from(&self, from: usize) -> DMatrix<f64> {
        let n = self.len().saturating_sub(from);
        DMatrix::from_row_slice(n, self.dim, &self.states[from * self.dim..])
    }

    /// Rows after the burn-in.
    pub fn post_burn_in(&self) -> DMatrix<f64> {
        self.matrix_from(self.burn_in.min(self.len()))
    }

    /// The last `fraction` of the rows.
    pub fn final_fraction(&self, fraction: f64) -> DMatrix<f64> {
        self.matrix_from(self.final_fraction_start(fraction))
    }

    pub fn final_fraction_start(&self, fraction: f64) -> usize {
        let keep = ((self.len() as f64) * fraction.clamp(0.0, 1.0)).round() as usize;
        self.len() - keep.min(self.len())
    }

    /// Scalar functional of every row from `from` on.
    pub fn functional_from(&self, from: usize, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        self.rows().skip(from).map(f).collect()
    }

    /// Coordinate `j` from row `from` on.
    pub fn coordinate_from(&self, from: usize, j: usize) -> Vec<f64> {
        self.rows().skip(from).map(|r| r[j]).collect()
    }

    pub fn mean_loop_count(&self) -> f64 {
        if self.stats.is_empty() {
            return 0.0;
        }
        self.stats.iter().map(|s| s.loop_count as f64).sum::<f64>() / self.stats.len() as f64
    }

    pub fn kernel_counts(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for s in &self.stats {
            *out.entry(s.kernel.as_str().to_string()).or_insert(0) += 1;
        }
        out
    }

    pub fn count_kernel(&self, tag: KernelTag) -> usize {
        self.stats.iter().filter(|s| s.kernel == tag).count()
    }

    pub(crate) fn truncate_stats_to_states(&mut self) {
        let n = self.len();
        self.stats.truncate(n.saturating_sub(1));
    }
}
