//! Named studies. Each is a list of experiments sized for a single desk machine.

use serde::{Deserialize, Serialize};

use super::config::{AgessSettings, ExperimentConfig, SamplerSpec, TargetSpec};
use crate::adaptation::AdaptVariant;
use crate::elliptical::EllipticalFamily;
use crate::error::{Error, Result};

pub const PRESET_NAMES: [&str; 7] = ["fig1", "volcano", "relu", "banana", "twinbanana", "horseshoe-desk", "deepgp"];

/// Observations per simulated banana or twin-banana dataset.
pub const BANANA_OBSERVATIONS: usize = 20;

/// A named group of experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Study {
    pub name: String,
    pub experiments: Vec<ExperimentConfig>,
}

fn experiment(
    preset: &str,
    name: String,
    target: TargetSpec,
    sampler: SamplerSpec,
    chains: usize,
    iterations: usize,
    burn_in: usize,
) -> ExperimentConfig {
    ExperimentConfig {
        name,
        target,
        sampler,
        chains,
        iterations,
        burn_in,
        base_seed: 20_240_601,
        output_dir: None,
        workers: None,
        preset: Some(preset.to_string()),
        init: None,
        max_lag: 50,
        gr_threshold: 1.01,
    }
}

fn agess(family: EllipticalFamily, variant: AdaptVariant, sigma0_variance: f64) -> SamplerSpec {
    SamplerSpec::Agess(AgessSettings { family, variant, sigma0_variance, ..AgessSettings::default() })
}

fn fig1() -> Vec<ExperimentConfig> {
    let mut out = Vec::new();
    for p in [2, 10, 50, 100, 250, 500] {
        let target = TargetSpec::Gaussian { dim: p, variance: 1.0 };
        // The reported window is the final 40% of each chain.
        let (n, burn) = (50_000, 30_000);
        let mut arms: Vec<(String, SamplerSpec)> = [0.0, 1.0, 9.0]
            .into_iter()
            .map(|alpha: f64| (format!("ess-alpha{alpha}"), SamplerSpec::Ess { prior_variance: 1.0 + alpha }))
            .collect();
        arms.push(("arw".into(), SamplerSpec::Arw { initial_variance: 10.0 }));
        arms.push(("agess-gaussian".into(), agess(EllipticalFamily::Gaussian, AdaptVariant::FullCovariance, 10.0)));
        arms.push(("agess-t".into(), agess(EllipticalFamily::t6(), AdaptVariant::FullCovariance, 10.0)));
        for (label, sampler) in arms {
            out.push(experiment("fig1", format!("fig1-p{p}-{label}"), target.clone(), sampler, 2, n, burn));
        }
    }
    out
}

fn volcano() -> Vec<ExperimentConfig> {
    let mut out = Vec::new();
    for p in [2, 10, 50, 100, 250, 500] {
        let target = TargetSpec::Volcano { dim: p };
        let optimal = 1.0 + 1.0 / (p as f64).sqrt();
        let arms = [
            ("arw", SamplerSpec::Arw { initial_variance: 2.0 }),
            ("ess-optimal", SamplerSpec::Ess { prior_variance: optimal }),
            ("ess-unit", SamplerSpec::Ess { prior_variance: 1.0 }),
            ("ess-suboptimal", SamplerSpec::Ess { prior_variance: 2.0 }),
            ("agess-t", agess(EllipticalFamily::t6(), AdaptVariant::FullCovariance, 2.0)),
            ("agess-scalar", SamplerSpec::AgessScalar(AgessSettings {
                family: EllipticalFamily::Gaussian,
                sigma0_variance: 2.0,
                ..AgessSettings::default()
            })),
        ];
        for (label, sampler) in arms {
            out.push(experiment("volcano", format!("volcano-p{p}-{label}"), target.clone(), sampler, 2, 50_000, 30_000));
        }
    }
    out
}

fn relu() -> Vec<ExperimentConfig> {
    let mut out = Vec::new();
    for d in [2, 10, 50] {
        let target = TargetSpec::Relu { n: 1000, d, data_seed: d as u64, dataset: None };
        let arms = [
            ("arw", SamplerSpec::Arw { initial_variance: 1.0 }, 30_000 * d),
            ("ess", SamplerSpec::Ess { prior_variance: 1.0 }, 10_000 * d),
            ("gess", SamplerSpec::Fixed { family: EllipticalFamily::t6(), sigma0_variance: 1.0 }, 10_000 * d),
            ("agess", agess(EllipticalFamily::t6(), AdaptVariant::FullCovariance, 1.0), 10_000 * d),
        ];
        for (label, sampler, n) in arms {
            out.push(experiment("relu", format!("relu-d{d}-{label}"), target.clone(), sampler, 3, n, 2_500 * d));
        }
    }
    out
}

fn banana(twin: bool) -> Vec<ExperimentConfig> {
    let (preset, n, burn) = if twin { ("twinbanana", 500_000, 250_000) } else { ("banana", 200_000, 100_000) };
    let mut out = Vec::new();
    for dataset in 0..10u64 {
        let target = if twin {
            TargetSpec::TwinBanana { n: BANANA_OBSERVATIONS, data_seed: dataset, offsets: None, dataset: None }
        } else {
            TargetSpec::Banana { n: BANANA_OBSERVATIONS, data_seed: dataset, offsets: None, dataset: None }
        };
        let arms = [
            ("ess", SamplerSpec::Ess { prior_variance: 4.0 }),
            ("gess", SamplerSpec::Fixed { family: EllipticalFamily::t6(), sigma0_variance: 4.0 }),
            ("agess", agess(EllipticalFamily::t6(), AdaptVariant::FullCovariance, 4.0)),
            ("arw", SamplerSpec::Arw { initial_variance: 4.0 }),
        ];
        for (label, sampler) in arms {
            out.push(experiment(preset, format!("{preset}-data{dataset}-{label}"), target.clone(), sampler, 1, n, burn));
        }
    }
    out
}

fn horseshoe() -> Vec<ExperimentConfig> {
    (0..10u64)
        .map(|dataset| {
            experiment(
                "horseshoe-desk",
                format!("horseshoe-desk-data{dataset}-agess"),
                TargetSpec::Horseshoe { n: 50, d: 20, data_seed: dataset, dataset: None },
                agess(EllipticalFamily::t6(), AdaptVariant::FullCovariance, 1.0),
                4,
                300_000,
                50_000,
            )
        })
        .collect()
}

fn deep_gp() -> Vec<ExperimentConfig> {
    vec![experiment(
        "deepgp",
        "deepgp-agess".into(),
        TargetSpec::DeepGp { dataset: None, config: None },
        agess(EllipticalFamily::t6(), AdaptVariant::FullCovariance, 1.0),
        3,
        50_000,
        25_000,
    )]
}

/// The named study, or a config error for an unknown name.
pub fn preset(name: &str) -> Result<Study> {
    let experiments = match name {
        "fig1" => fig1(),
        "volcano" => volcano(),
        "relu" => relu(),
        "banana" => banana(false),
        "twinbanana" => banana(true),
        "horseshoe-desk" => horseshoe(),
        "deepgp" => deep_gp(),
        _ => {
            return Err(Error::config(format!(
                "unknown preset {name:?}; known presets: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(Study { name: name.to_string(), experiments })
}
