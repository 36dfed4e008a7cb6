use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{BuiltTarget, ExperimentConfig, SamplerSpec};
use super::io;
use crate::adaptation::{run_agess, SupportTransform};
use crate::diagnostics::{gelman_rubin, DiagnosticsReport};
use crate::elliptical::{EllipticalFamily, EllipticalParams};
use crate::error::{Error, Result};
use crate::runners::{run_arw, run_ess, run_fixed};
use crate::trace::{CommitRecord, Trace};

/// SplitMix64 finaliser applied to `x + golden gamma`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of chain `c`'s random stream.
pub fn chain_seed(base_seed: u64, chain: usize) -> u64 {
    splitmix64(base_seed ^ chain as u64)
}

/// Per-chain JSON report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub chain: usize,
    pub seed: u64,
    pub sampler: String,
    pub trace_file: String,
    #[serde(flatten)]
    pub diagnostics: DiagnosticsReport,
    pub commits: Vec<CommitRecord>,
}

/// Pooled JSON summary over all chains of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub name: String,
    pub sampler: String,
    pub target: String,
    pub dim: usize,
    pub chains: usize,
    pub base_seed: u64,
    pub chain_seeds: Vec<u64>,
    /// States per chain, initial state included.
    pub iterations_per_chain: usize,
    pub burn_in: usize,
    pub total_iterations: usize,
    pub total_target_evals: u64,
    pub pooled_mess: f64,
    pub pooled_mess_per_second: Option<f64>,
    pub gelman_rubin: Option<f64>,
    pub gr_threshold: f64,
    pub converged: Option<bool>,
    pub mean_loop_count: f64,
    pub per_chain_mean_loop_count: Vec<f64>,
    pub total_sampling_secs: f64,
    pub total_burn_in_secs: f64,
    pub wall_clock_secs: f64,
}

/// Error report written when a chain aborts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorReport {
    pub chain: Option<usize>,
    pub iteration: Option<usize>,
    pub message: String,
    pub exit_code: i32,
}

/// Everything produced by one experiment.
#[derive(Debug)]
pub struct ExperimentOutcome {
    pub dir: PathBuf,
    pub summary: ExperimentSummary,
    pub reports: Vec<ChainReport>,
    pub traces: Vec<Trace>,
}

fn isotropic(dim: usize, v: f64) -> DMatrix<f64> {
    DMatrix::identity(dim, dim) * v
}

/// Runs chain `chain` of `cfg` on a fork of `built`.
pub fn run_chain(cfg: &ExperimentConfig, built: &BuiltTarget, chain: usize) -> Result<Trace> {
    let seed = chain_seed(cfg.base_seed, chain);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = built.density.fork();
    let p = target.dim();
    let init = match &cfg.init {
        Some(v) if v.len() != p => return Err(Error::config(format!("init must have {p} entries"))),
        Some(v) => v.clone(),
        None => built.default_init(&mut rng),
    };
    let (n, burn) = (cfg.iterations, cfg.burn_in);
    match &cfg.sampler {
        SamplerSpec::Ess { prior_variance } => {
            let prior = EllipticalParams::new(EllipticalFamily::Gaussian, built.mean.clone(), isotropic(p, *prior_variance))?;
            run_ess(&target, &prior, &init, n, burn, &mut rng)
        }
        SamplerSpec::Fixed { family, sigma0_variance } => {
            let gamma = EllipticalParams::new(*family, built.mean.clone(), isotropic(p, *sigma0_variance))?;
            run_fixed(&target, &gamma, &init, n, burn, &mut rng)
        }
        SamplerSpec::Arw { initial_variance } => run_arw(&target, &init, &isotropic(p, *initial_variance), n, burn, &mut rng),
        SamplerSpec::Agess(s) | SamplerSpec::AgessScalar(s) => {
            let mut config = cfg.sampler.adapt_config(p, n, burn).expect("adaptive sampler");
            config.seed = seed;
            let transform = s.transform.clone().unwrap_or_else(SupportTransform::identity);
            let mean: Vec<f64> = built.mean.iter().copied().collect();
            // The target's default mean may sit on the boundary of a
            // transformed coordinate; fall back to the starting state.
            let mu0 = transform.to_internal(&mean).or_else(|_| transform.to_internal(&init))?;
            let mu0 = DVector::from_vec(mu0);
            run_agess(&target, &transform, &init, &mu0, &isotropic(p, s.sigma0_variance), &config, &mut rng)
        }
    }
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn write_error(dir: &Path, report: &ErrorReport) -> Result<()> {
    io::write_json(report, &dir.join("error.json"))
}

/// Runs every chain of `cfg` and writes `config.json`, `chain_<c>.csv`,
/// `chain_<c>.json` and `summary.json` under the resolved output directory.
/// A chain abort keeps the partial trace, writes `error.json` and returns
/// the first error once all chains have finished.
pub fn run_experiment(cfg: &ExperimentConfig, out_override: Option<&Path>) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let built = cfg.target.build()?;
    let p = built.dim();
    if let Some(s) = cfg.sampler.agess_settings() {
        cfg.sampler.adapt_config(p, cfg.iterations, cfg.burn_in).expect("adaptive sampler").validate(p)?;
        if let Some(t) = &s.transform {
            if t.declared_len() > p {
                return Err(Error::config(format!("transform lists more than {p} coordinates")));
            }
        }
    }
    let dir = cfg.resolve_output_dir(out_override);
    std::fs::create_dir_all(&dir)?;
    io::write_json(cfg, &dir.join("config.json"))?;
    if let Some(ds) = &built.dataset {
        if cfg.target.dataset_path().is_none() {
            ds.save(&dir.join("dataset.csv"))?;
        }
    }

    let workers = cfg.workers.unwrap_or_else(|| cfg.chains.min(rayon::current_num_threads()).max(1));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config(format!("cannot start {workers} workers: {e}")))?;
    let start = Instant::now();
    let results: Vec<Result<Trace>> = pool.install(|| {
        (0..cfg.chains)
            .into_par_iter()
            .map(|c| {
                let result = run_chain(cfg, &built, c);
                let path = dir.join(format!("chain_{c}.csv"));
                match &result {
                    Ok(trace) => io::write_trace_file(trace, &path)?,
                    Err(Error::SamplingAbort { partial, .. }) => io::write_trace_file(partial, &path)?,
                    Err(_) => {}
                }
                result
            })
            .collect()
    });
    let wall = start.elapsed().as_secs_f64();

    let mut traces = Vec::with_capacity(cfg.chains);
    let mut first_error = None;
    for (c, r) in results.into_iter().enumerate() {
        match r {
            Ok(t) => traces.push(t),
            Err(e) => {
                if first_error.is_none() {
                    let iteration = match &e {
                        Error::SamplingAbort { iteration, .. } => Some(*iteration),
                        _ => None,
                    };
                    write_error(
                        &dir,
                        &ErrorReport { chain: Some(c), iteration, message: e.to_string(), exit_code: e.exit_code() },
                    )?;
                    first_error = Some(e);
                }
            }
        }
    }
    if let Some(e) = first_error {
        return Err(e);
    }

    let seeds: Vec<u64> = (0..cfg.chains).map(|c| chain_seed(cfg.base_seed, c)).collect();
    let mut reports = Vec::with_capacity(cfg.chains);
    for (c, trace) in traces.iter().enumerate() {
        let diagnostics = DiagnosticsReport::from_trace(trace, cfg.max_lag).inspect_err(|e| {
            let _ = write_error(&dir, &ErrorReport { chain: Some(c), iteration: None, message: e.to_string(), exit_code: 4 });
        })?;
        let report = ChainReport {
            chain: c,
            seed: seeds[c],
            sampler: cfg.sampler.label().into(),
            trace_file: file_name(&dir.join(format!("chain_{c}.csv"))),
            diagnostics,
            commits: trace.commits.clone(),
        };
        io::write_json(&report, &dir.join(format!("chain_{c}.json")))?;
        reports.push(report);
    }

    let gr = if traces.len() >= 2 {
        let windows: Vec<DMatrix<f64>> = traces.iter().map(Trace::post_burn_in).collect();
        Some(gelman_rubin(&windows).inspect_err(|e| {
            let _ = write_error(&dir, &ErrorReport { chain: None, iteration: None, message: e.to_string(), exit_code: 4 });
        })?)
    } else {
        None
    };
    let summary = summarize(cfg, built.density.name(), p, seeds, &reports, gr, wall);
    io::write_json(&summary, &dir.join("summary.json"))?;
    Ok(ExperimentOutcome { dir, summary, reports, traces })
}

fn summarize(
    cfg: &ExperimentConfig,
    target: &str,
    dim: usize,
    chain_seeds: Vec<u64>,
    reports: &[ChainReport],
    gr: Option<f64>,
    wall: f64,
) -> ExperimentSummary {
    let pooled_mess: f64 = reports.iter().map(|r| r.diagnostics.mess).sum();
    let sampling: f64 = reports.iter().map(|r| r.diagnostics.sampling_secs).sum();
    let total_iterations: usize = reports.iter().map(|r| r.diagnostics.iterations).sum();
    let transitions: usize = reports.iter().map(|r| r.diagnostics.iterations.saturating_sub(1)).sum();
    let loops: f64 = reports
        .iter()
        .map(|r| r.diagnostics.mean_loop_count * r.diagnostics.iterations.saturating_sub(1) as f64)
        .sum();
    ExperimentSummary {
        name: cfg.name.clone(),
        sampler: cfg.sampler.label().into(),
        target: target.into(),
        dim,
        chains: reports.len(),
        base_seed: cfg.base_seed,
        chain_seeds,
        iterations_per_chain: cfg.iterations,
        burn_in: cfg.burn_in,
        total_iterations,
        total_target_evals: reports.iter().map(|r| r.diagnostics.target_evals).sum(),
        pooled_mess,
        pooled_mess_per_second: if sampling > 0.0 { Some(pooled_mess / sampling) } else { None },
        gelman_rubin: gr,
        gr_threshold: cfg.gr_threshold,
        converged: gr.map(|g| g < cfg.gr_threshold),
        mean_loop_count: if transitions > 0 { loops / transitions as f64 } else { 0.0 },
        per_chain_mean_loop_count: reports.iter().map(|r| r.diagnostics.mean_loop_count).collect(),
        total_sampling_secs: sampling,
        total_burn_in_secs: reports.iter().map(|r| r.diagnostics.burn_in_secs).sum(),
        wall_clock_secs: wall,
    }
}

/// Reports recomputed from trace CSVs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseReport {
    pub files: Vec<String>,
    pub reports: Vec<DiagnosticsReport>,
    pub pooled_mess: f64,
    pub gelman_rubin: Option<f64>,
}

/// Diagnostics for every CSV matching `pattern`, discarding the first
/// `burn_in` states of each. The scale reduction factor is reported when at
/// least two traces of equal shape match.
pub fn diagnose(pattern: &str, burn_in: usize, max_lag: usize) -> Result<DiagnoseReport> {
    let paths = glob::glob(pattern).map_err(|e| Error::config(format!("bad glob {pattern:?}: {e}")))?;
    let mut files: Vec<PathBuf> = paths.filter_map(|p| p.ok()).collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Diagnostics(format!("no trace files match {pattern:?}")));
    }
    let mut traces = Vec::with_capacity(files.len());
    for f in &files {
        traces.push(io::read_trace_file(f, burn_in)?);
    }
    let reports = traces
        .iter()
        .map(|t| DiagnosticsReport::from_trace(t, max_lag))
        .collect::<Result<Vec<_>>>()?;
    let windows: Vec<DMatrix<f64>> = traces.iter().map(Trace::post_burn_in).collect();
    let same_shape = windows.windows(2).all(|w| w[0].shape() == w[1].shape());
    let gelman_rubin = if windows.len() >= 2 && same_shape { Some(gelman_rubin(&windows)?) } else { None };
    Ok(DiagnoseReport {
        files: files.iter().map(|p| p.display().to_string()).collect(),
        pooled_mess: reports.iter().map(|r| r.mess).sum(),
        reports,
        gelman_rubin,
    })
}
