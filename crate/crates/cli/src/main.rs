use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use ntklab::harness::{run, ExperimentKind, SweepConfig};

#[derive(Parser)]
#[command(name = "ntklab", version, about = "Finite-width NTK sweeps with CSV output")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dispersion of the diagonal kernel over a (σw², L) grid
    Dispersion(Common),
    /// Off-diagonal to diagonal kernel ratio over input cosines
    Nondiag(Common),
    /// Relative kernel change after one gradient step
    GdStep(Common),
    /// Kernel class structure during training on synthetic blobs
    Structure(Common),
    /// Closed-form predictions only, including width schedules
    Theory(Common),
}

#[derive(Args)]
struct Common {
    /// TOML sweep configuration; defaults for the subcommand when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path; stdout when neither this nor the config sets one
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed, overriding the config
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Initializations per cell, overriding the config
    #[arg(long)]
    samples: Option<usize>,
}

fn load(kind: ExperimentKind, args: &Common) -> Result<SweepConfig> {
    let mut cfg = match &args.config {
        Some(path) => SweepConfig::from_file(path)?,
        None => SweepConfig::default_for(kind),
    };
    if cfg.kind != kind {
        bail!("config is for experiment '{}' but subcommand runs '{}'", cfg.kind.name(), kind.name());
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(n) = args.samples {
        cfg.samples = n;
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.display().to_string());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::Dispersion(a) => (ExperimentKind::Dispersion, a),
        Command::Nondiag(a) => (ExperimentKind::Nondiag, a),
        Command::GdStep(a) => (ExperimentKind::GdStep, a),
        Command::Structure(a) => (ExperimentKind::Structure, a),
        Command::Theory(a) => (ExperimentKind::TheoryOnly, a),
    };
    let cfg = load(kind, args)?;
    info!("running {} with {} worker(s)", kind.name(), args.workers);
    let table = run(&cfg, args.workers)?;
    match &cfg.out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {path}"))?;
            let mut w = BufWriter::new(file);
            table.write_csv(&mut w)?;
            w.flush()?;
            info!("wrote {} rows to {path}", table.rows.len());
        }
        None => table.write_csv(io::stdout().lock())?,
    }
    Ok(())
}
