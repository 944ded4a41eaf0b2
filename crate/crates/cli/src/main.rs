mod commands;
mod config;
mod output;
mod verify;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::{ConfigError, ExperimentConfig};

/// Thread count for parameter sweeps; results never depend on it.
const THREADS_ENV: &str = "Z2LGT_THREADS";

#[derive(Parser)]
#[command(name = "z2lgt", version, about = "Z2 lattice gauge theory experiments: spectra, Trotter circuits, observables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment config (defaults to a 4-site periodic chain, h = J = m = 1)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Write every stage of the matter-elimination pipeline to stages.txt
    #[arg(long, global = true)]
    dump_stages: bool,
    /// Comma-separated frames: fermionic, hardcore, gauge_eliminated, matter_eliminated, all
    #[arg(long, global = true, value_delimiter = ',')]
    frames: Option<Vec<String>>,
    /// Trotter scheme: matter_eliminated, gauge_eliminated, hybrid
    #[arg(long, global = true)]
    scheme: Option<String>,
    /// Factor ordering such as GM,m,E, or `all` for every permutation
    #[arg(long, global = true)]
    ordering: Option<String>,
    /// Flip the sign of the matter-eliminated interaction term (self-test of verify)
    #[arg(long, global = true, hide = true)]
    inject_fault: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Sector-restricted spectra in each frame
    Spectrum,
    /// Exact and Trotterized time evolution of observables
    Evolve,
    /// Measured Trotter error against the analytic bound
    TrotterError,
    /// Generate the matter-eliminated Hamiltonian of a square lattice
    Derive2d {
        /// Term specification file (defaults to the bundled one)
        #[arg(long)]
        term_spec: Option<PathBuf>,
    },
    /// Observable expectations across frames and via Hadamard tests
    Observables,
    /// Run the invariant suite and write verify.json
    Verify,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", p.display())))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(f) = &cli.frames {
        cfg.frames = Some(f.clone());
    }
    if let Some(s) = &cli.scheme {
        cfg.scheme = Some(s.clone());
    }
    if let Some(o) = &cli.ordering {
        cfg.ordering = Some(o.clone());
    }
    Ok(cfg)
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.parse().map_err(|_| ConfigError(format!("{THREADS_ENV}={v} is not a thread count")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<bool> {
    init_threads()?;
    let cfg = load_config(cli)?;
    cfg.validate()?;
    let out: &Path = &cli.out;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    match &cli.command {
        Command::Spectrum => commands::spectrum(&cfg, out, cli.dump_stages)?,
        Command::Evolve => commands::evolve(&cfg, out)?,
        Command::TrotterError => commands::trotter_error(&cfg, out)?,
        Command::Derive2d { term_spec } => commands::derive2d(&cfg, out, term_spec.as_deref(), cli.dump_stages)?,
        Command::Observables => commands::observables(&cfg, out)?,
        Command::Verify => return verify::verify(&cfg, out, cli.inject_fault),
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
