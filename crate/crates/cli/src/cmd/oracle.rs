use anyhow::Result;
use clap::Subcommand;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use kzsim::lz::DEFAULT_TOL;
use kzsim::oracle::{decomposition_check, DecompositionCheck, OracleConfig};
use kzsim::tfim::DEFAULT_G_START;

use super::Context;
use crate::output::Sink;
use crate::{row, Disagreement};

#[derive(Subcommand)]
pub enum OracleCommand {
    /// Compare dense full-chain and per-mode kink densities.
    Check(CheckArgs),
}

#[derive(clap::Args, Serialize)]
pub struct CheckArgs {
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    n_spins: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    tau_q: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    g_start: Option<f64>,
    /// Largest accepted |n_dense - n_momentum|.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    n_spins: Vec<usize>,
    tau_q: Vec<f64>,
    g_start: f64,
    threshold: f64,
    tol: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            n_spins: vec![4, 6, 8],
            tau_q: vec![0.5, 1.0, 2.0],
            g_start: DEFAULT_G_START,
            threshold: 1e-3,
            tol: DEFAULT_TOL,
        }
    }
}

pub fn run(cmd: OracleCommand, ctx: &Context) -> Result<()> {
    let OracleCommand::Check(args) = cmd;
    let cfg: CheckConfig = ctx.resolve(&args)?;
    let configs = cfg
        .n_spins
        .iter()
        .flat_map(|&n| cfg.tau_q.iter().map(move |&t| (n, t)))
        .map(|(n, t)| OracleConfig::new(n, t)?.with_g_start(cfg.g_start)?.with_tol(cfg.tol))
        .collect::<kzsim::Result<Vec<_>>>()?;
    let sink = Sink::new(&ctx.out, "oracle check", &cfg)?;
    let checks = configs
        .par_iter()
        .map(decomposition_check)
        .collect::<kzsim::Result<Vec<DecompositionCheck>>>()?;
    let rows = checks.iter().map(|c| {
        row![c.config.n_spins, c.config.tau_q, c.config.g_start, c.n_dense, c.n_momentum, c.diff]
    });
    let path = sink.csv("oracle_check.csv", &["n_spins", "tau_q", "g_start", "n_dense", "n_momentum", "diff"], rows)?;
    for c in &checks {
        println!(
            "N = {:2}, tau_q = {:.3e}: dense {:.10e}, momentum {:.10e}, diff {:.2e}",
            c.config.n_spins, c.config.tau_q, c.n_dense, c.n_momentum, c.diff
        );
    }
    println!("wrote {}", path.display());
    let worst = checks.iter().map(|c| c.diff).fold(0.0, f64::max);
    if worst > cfg.threshold || worst.is_nan() {
        return Err(Disagreement(format!("largest difference {worst:.3e} exceeds {:.1e}", cfg.threshold)).into());
    }
    Ok(())
}
