//! Benchmark targets and their synthetic data generators.

mod banana;
mod dataset;
mod deep_gp;
mod gaussian;
mod horseshoe;
mod relu;

pub use banana::{
    banana_data, banana_nuisance, banana_target, twin_banana_data, twin_banana_target, BANANA_PRIOR_MEAN,
};
pub use dataset::{sidecar_path, Dataset, DatasetMeta};
pub use deep_gp::{deep_gp_data, deep_gp_target, student_t_marginal_loglik, DeepGpConfig};
pub use gaussian::{gaussian_target, volcano_target};
pub use horseshoe::{horseshoe_data, horseshoe_target};
pub use relu::{relu_data, relu_target};
