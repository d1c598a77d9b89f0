use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod cmd;
mod config;
mod output;
mod units;

/// Bad user input; exits with code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct Invalid(pub String);

/// The dense oracle and the momentum pipeline disagree; exits with code 4.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct Disagreement(pub String);

#[derive(Parser)]
#[command(name = "kzsim", version, about = "Landau-Zener and Kibble-Zurek quench simulations")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
pub struct Global {
    /// JSON file with settings for the subcommand; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Integrator tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Worker threads (0 = one per core). Never changes results.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Single Landau-Zener crossing.
    #[command(subcommand)]
    Lz(cmd::lz::LzCommand),
    /// Adiabatic-impulse scans and alpha fits.
    #[command(subcommand)]
    Ai(cmd::ai::AiCommand),
    /// Ising-chain quench scans and power-law fits.
    #[command(subcommand)]
    Kzm(cmd::kzm::KzmCommand),
    /// Dense full-chain cross-check.
    #[command(subcommand)]
    Oracle(cmd::oracle::OracleCommand),
    /// Pulse plans and IQ waveforms.
    #[command(subcommand)]
    Pulse(cmd::pulse::PulseCommand),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    rayon::ThreadPoolBuilder::new().num_threads(cli.global.threads).build_global()?;
    let file = cli.global.config.as_deref().map(config::load).transpose()?;
    let ctx = cmd::Context { file, out: cli.global.out, tol: cli.global.tol };
    match cli.command {
        Command::Lz(c) => cmd::lz::run(c, &ctx),
        Command::Ai(c) => cmd::ai::run(c, &ctx),
        Command::Kzm(c) => cmd::kzm::run(c, &ctx),
        Command::Oracle(c) => cmd::oracle::run(c, &ctx),
        Command::Pulse(c) => cmd::pulse::run(c, &ctx),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Disagreement>().is_some() {
        return 4;
    }
    if err.downcast_ref::<Invalid>().is_some() {
        return 2;
    }
    if let Some(e) = err.downcast_ref::<kzsim::Error>() {
        return if e.is_validation() { 2 } else { 3 };
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
