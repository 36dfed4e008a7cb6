//! Command-line front end: run a config, run a preset study, or recompute
//! diagnostics from trace files.

use std::path::PathBuf;
use std::process::ExitCode;

use agess::harness::{self, ExperimentConfig, OUTPUT_DIR_ENV};
use agess::Result;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "agess", version, about = "Adaptive elliptical slice sampling experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `base_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `chains`.
        #[arg(long)]
        chains: Option<usize>,
        /// Overrides `workers`.
        #[arg(long)]
        workers: Option<usize>,
        /// Overrides `output_dir`.
        #[arg(long, env = OUTPUT_DIR_ENV)]
        out: Option<PathBuf>,
    },
    /// Run every experiment of a named study.
    Preset {
        name: String,
        #[arg(long, env = OUTPUT_DIR_ENV)]
        out: Option<PathBuf>,
        /// Print the study as JSON instead of running it.
        #[arg(long)]
        print: bool,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Recompute reports from trace CSVs.
    Diagnose {
        #[arg(long)]
        traces: String,
        /// States to discard at the start of each trace.
        #[arg(long, default_value_t = 0)]
        burn_in: usize,
        #[arg(long, default_value_t = 50)]
        max_lag: usize,
    },
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    use std::io::Write;
    let text = serde_json::to_string_pretty(value)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn run_one(cfg: &ExperimentConfig, out: Option<&std::path::Path>) -> Result<()> {
    let outcome = harness::run_experiment(cfg, out)?;
    let s = &outcome.summary;
    let gr = s.gelman_rubin.map(|g| format!("{g:.4}")).unwrap_or_else(|| "-".into());
    println!(
        "{}: chains={} mESS={:.1} mESS/s={} GR={} loops={:.2} -> {}",
        s.name,
        s.chains,
        s.pooled_mess,
        s.pooled_mess_per_second.map(|v| format!("{v:.1}")).unwrap_or_else(|| "-".into()),
        gr,
        s.mean_loop_count,
        outcome.dir.display()
    );
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, seed, chains, workers, out } => {
            let mut cfg = ExperimentConfig::from_json_file(&config)?;
            if let Some(v) = seed {
                cfg.base_seed = v;
            }
            if let Some(v) = chains {
                cfg.chains = v;
            }
            if let Some(v) = workers {
                cfg.workers = Some(v);
            }
            run_one(&cfg, out.as_deref())
        }
        Command::Preset { name, out, print, workers } => {
            let study = harness::preset(&name)?;
            if print {
                return print_json(&study);
            }
            let out = out.unwrap_or_else(|| PathBuf::from("agess-out")).join(&study.name);
            for mut cfg in study.experiments {
                if workers.is_some() {
                    cfg.workers = workers;
                }
                run_one(&cfg, Some(&out))?;
            }
            Ok(())
        }
        Command::Diagnose { traces, burn_in, max_lag } => print_json(&harness::diagnose(&traces, burn_in, max_lag)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
