//! Experiment configuration, presets, multi-chain runs and trace files.

mod config;
pub mod io;
mod presets;
mod run;

pub use config::{AgessSettings, BuiltTarget, ExperimentConfig, SamplerSpec, TargetSpec, OUTPUT_DIR_ENV};
pub use presets::{preset, Study, BANANA_OBSERVATIONS, PRESET_NAMES};
pub use run::{
    chain_seed, diagnose, run_chain, run_experiment, splitmix64, ChainReport, DiagnoseReport, ErrorReport,
    ExperimentOutcome, ExperimentSummary,
};
