//! Adaptive generalised elliptical slice sampling.
//!
//! The sampler draws an auxiliary point from an elliptical reference
//! distribution (Gaussian, Student-t or Pearson VII) fitted to the target,
//! then slices along the ellipse through the current state and that point.
//! The reference is re-estimated from the chain on a diminishing schedule.
//!
//! ```no_run
//! use agess::prelude::*;
//! use nalgebra::{DMatrix, DVector};
//! use rand::SeedableRng;
//!
//! let target = agess::targets::volcano_target(10);
//! let config = AdaptConfig::for_dim(10, 20_000, 10_000);
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
//! let trace = run_agess(
//!     &target,
//!     &SupportTransform::identity(),
//!     &[0.5; 10],
//!     &DVector::zeros(10),
//!     &(DMatrix::identity(10, 10) * 2.0),
//!     &config,
//!     &mut rng,
//! )
//! .unwrap();
//! println!("{}", trace.mean_loop_count());
//! ```

pub mod adaptation;
pub mod diagnostics;
pub mod elliptical;
pub mod error;
pub mod harness;
pub mod kernels;
pub mod linalg;
pub mod runners;
pub mod shrinkage;
pub mod target;
pub mod targets;
pub mod trace;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::adaptation::{run_agess, AdaptConfig, AdaptVariant, CoordTransform, SupportTransform};
    pub use crate::elliptical::{EllipticalFamily, EllipticalParams};
    pub use crate::error::{Error, Result};
    pub use crate::kernels::{agess_step, arw_step, coord_sweep, ess_step, ArwState, KernelTag, StepStats};
    pub use crate::runners::{run_arw, run_ess, run_fixed};
    pub use crate::target::TargetDensity;
    pub use crate::trace::Trace;
}
