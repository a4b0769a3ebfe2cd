//! `spectra-svi`: run seeded experiment grids, plot results, check invariants.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 numerical
//! failure in at least one run, 3 invariant-suite failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spectra_svi::harness::check::quick_suite;
use spectra_svi::harness::{read_csv, render_svg, run_grid, write_outputs, ExperimentConfig, HarnessError, Preset};

const SEED_ENV: &str = "SPECTRA_SVI_SEED";

#[derive(Parser, Debug)]
#[command(name = "spectra-svi", version, about = "Matrix stochastic mirror descent experiments on the MIMO throughput game")]
struct Cli {
    /// Experiment config file (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Worker threads, 0 = one per core.
    #[arg(long, global = true, value_name = "N", default_value_t = 0)]
    threads: usize,
    /// Built-in configuration: demo, paper-grid or stability.
    #[arg(long, global = true, value_name = "NAME", value_parser = ["demo", "paper-grid", "stability"])]
    preset: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment grid.
    Run {
        /// Config file; alternative to --config / --preset.
        #[arg(id = "config_file", value_name = "CONFIG")]
        config: Option<PathBuf>,
    },
    /// Run the invariant suites.
    Check {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Plot mean log gap against iteration from a gap CSV.
    Plot { csv: PathBuf, svg: PathBuf },
    /// Canonical seven-cell demo (m = n = 2, sigma = 1, T = 2000, 3 paths).
    Demo,
}

enum Failure {
    Config(String),
    Numerical(String),
    Invariant,
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn resolve_config(cli: &Cli, positional: Option<&Path>) -> Result<ExperimentConfig, Failure> {
    let cfg = match (positional.or(cli.config.as_deref()), cli.preset.as_deref()) {
        (Some(_), Some(_)) => return Err(Failure::Config("give either a config file or --preset, not both".into())),
        (Some(path), None) => ExperimentConfig::load(path)?,
        (None, Some(name)) => ExperimentConfig::preset(Preset::from_name(name).expect("validated by clap")),
        (None, None) => return Err(Failure::Config("no config: pass a file or --preset".into())),
    };
    seed_override(cfg)
}

fn seed_override(cfg: ExperimentConfig) -> Result<ExperimentConfig, Failure> {
    match std::env::var(SEED_ENV) {
        Ok(raw) => {
            let seed = raw.trim().parse().map_err(|_| Failure::Config(format!("{SEED_ENV}: `{raw}` is not an unsigned integer")))?;
            Ok(cfg.with_base_seed(seed))
        }
        Err(_) => Ok(cfg),
    }
}

fn execute(cli: &Cli, cfg: &ExperimentConfig) -> Result<(), Failure> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| Failure::Config(format!("--threads: {e}")))?;
    let out = pool.install(|| run_grid(cfg))?;
    let files = write_outputs(cfg, &out, &cli.out)?;
    println!("wrote {} ({} rows)", files.gaps.display(), out.records.len());
    println!("wrote {}", files.plot.display());
    if let Some(p) = &files.throughput {
        println!("wrote {}", p.display());
    }
    if out.failures.is_empty() {
        return Ok(());
    }
    for f in &out.failures {
        eprintln!("numerical failure: {} path {}: {}", f.cell, f.path, f.error);
    }
    Err(Failure::Numerical(format!("{} run(s) stopped early", out.failures.len())))
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Run { config } => execute(cli, &resolve_config(cli, config.as_deref())?),
        Command::Demo => {
            if cli.config.is_some() || cli.preset.is_some() {
                return Err(Failure::Config("demo takes no config".into()));
            }
            execute(cli, &seed_override(ExperimentConfig::preset(Preset::Demo))?)
        }
        Command::Check { seed } => {
            let outcomes = quick_suite(*seed);
            for o in &outcomes {
                println!("{}", o.line());
            }
            if outcomes.iter().all(|o| o.passed) {
                Ok(())
            } else {
                Err(Failure::Invariant)
            }
        }
        Command::Plot { csv, svg } => {
            let records = read_csv(csv)?;
            render_svg(&records, svg)?;
            println!("wrote {}", svg.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Invariant) => {
            eprintln!("error: invariant suite failed");
            ExitCode::from(3)
        }
    }
}
