use std::path::PathBuf;

use anyhow::Result;
use clap::Subcommand;
use serde::{Deserialize, Serialize};
use serde_json::json;

use kzsim::fit::{fit_power_law, FitResult, FitWindow, Sample};
use kzsim::lz::DEFAULT_TOL;
use kzsim::tfim::{dziarmaga_density, kink_density, kzm_estimate, ChainSpec, QuenchResult, DEFAULT_G_START};

use super::{parse_bounds, parse_grid, read_samples, values_or_grid, window, Context, LogGrid};
use crate::output::Sink;
use crate::{row, Invalid};

#[derive(Subcommand)]
pub enum KzmCommand {
    /// Kink density and mode populations over a quench-time grid, with a power-law fit.
    Scan(ScanArgs),
    /// Power-law fit to an existing `x,y[,w]` sample file.
    Fit(FitArgs),
}

#[derive(clap::Args, Serialize)]
pub struct ScanArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n_spins: Option<usize>,
    /// Explicit quench times J tau_q / hbar.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    tau_q: Option<Vec<f64>>,
    /// Log grid `lo,hi,points` of quench times.
    #[arg(long, value_parser = parse_grid)]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<LogGrid>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    g_start: Option<f64>,
    /// Restrict the power-law fit to `lo,hi` in tau_q.
    #[arg(long, value_parser = parse_bounds)]
    #[serde(skip_serializing_if = "Option::is_none")]
    fit_window: Option<[f64; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    n_spins: usize,
    tau_q: Option<Vec<f64>>,
    grid: Option<LogGrid>,
    g_start: f64,
    fit_window: Option<[f64; 2]>,
    tol: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self { n_spins: 50, tau_q: None, grid: None, g_start: DEFAULT_G_START, fit_window: None, tol: DEFAULT_TOL }
    }
}

const DEFAULT_GRID: LogGrid = LogGrid(0.35, 1.85, 12);

#[derive(clap::Args, Serialize)]
pub struct FitArgs {
    /// CSV with columns x = tau_q, y = kink density, optional weight.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<PathBuf>,
    #[arg(long, value_parser = parse_bounds)]
    #[serde(skip_serializing_if = "Option::is_none")]
    fit_window: Option<[f64; 2]>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    input: Option<PathBuf>,
    fit_window: Option<[f64; 2]>,
}

fn fit_record(fit: &FitResult, window: FitWindow) -> serde_json::Value {
    json!({
        "model": "n_ex = A * tau_q^(-beta)",
        "params": fit.params,
        "stderr": fit.stderr,
        "residual_norm": fit.residual_norm,
        "n_samples": fit.n_samples,
        "window": window,
    })
}

fn report(fit: &FitResult) {
    let (a, sa) = fit.get("A").expect("prefactor");
    let (b, sb) = fit.get("beta").expect("exponent");
    println!("A = {a:.6} +- {sa:.2e}, beta = {b:.6} +- {sb:.2e}");
}

pub fn run(cmd: KzmCommand, ctx: &Context) -> Result<()> {
    match cmd {
        KzmCommand::Scan(args) => scan(args, ctx),
        KzmCommand::Fit(args) => fit(args, ctx),
    }
}

fn scan(args: ScanArgs, ctx: &Context) -> Result<()> {
    let cfg: ScanConfig = ctx.resolve(&args)?;
    let taus = values_or_grid(&cfg.tau_q, &cfg.grid, DEFAULT_GRID)?;
    let chains = taus
        .iter()
        .map(|&t| ChainSpec::new(cfg.n_spins, t)?.with_g_start(cfg.g_start)?.with_tol(cfg.tol))
        .collect::<kzsim::Result<Vec<_>>>()?;
    let w = window(&cfg.fit_window, &taus)?;
    let sink = Sink::new(&ctx.out, "kzm scan", &cfg)?;

    let results = chains.iter().map(kink_density).collect::<kzsim::Result<Vec<QuenchResult>>>()?;
    sink.csv(
        "kzm_scan.csv",
        &["tau_q", "n_ex", "kzm_estimate", "asymptotic_density"],
        results.iter().map(|r| {
            let t = r.chain.tau_q;
            row![t, r.n_ex, kzm_estimate(t), dziarmaga_density(t)]
        }),
    )?;
    sink.csv(
        "kzm_modes.csv",
        &["tau_q", "k", "ka", "delta_k", "tau_k_final", "p_k"],
        results.iter().flat_map(|r| {
            r.modes.iter().map(move |m| row![r.chain.tau_q, m.k, m.ka, m.delta_k, m.tau_k_final, m.p])
        }),
    )?;
    for r in &results {
        println!("tau_q = {:.6e}: n_ex = {:.6e}", r.chain.tau_q, r.n_ex);
    }

    let samples: Vec<Sample> = results.iter().map(|r| Sample::new(r.chain.tau_q, r.n_ex)).collect();
    let selected = w.select(&samples);
    if selected.len() < 3 {
        eprintln!("note: {} quench times in the fit window; power-law fit skipped", selected.len());
        return Ok(());
    }
    let fit = fit_power_law(&selected)?;
    let path = sink.json("kzm_fit.json", fit_record(&fit, w))?;
    report(&fit);
    println!("wrote {}", path.display());
    Ok(())
}

fn fit(args: FitArgs, ctx: &Context) -> Result<()> {
    let cfg: FitConfig = ctx.resolve(&args)?;
    let input = cfg.input.as_ref().ok_or_else(|| Invalid("kzm fit needs --input".into()))?;
    let samples = read_samples(input)?;
    let xs: Vec<f64> = samples.iter().map(|s| s.x).collect();
    let w = window(&cfg.fit_window, &xs)?;
    let fit = fit_power_law(&w.select(&samples))?;
    let sink = Sink::new(&ctx.out, "kzm fit", &cfg)?;
    let path = sink.json("kzm_fit.json", fit_record(&fit, w))?;
    report(&fit);
    println!("wrote {}", path.display());
    Ok(())
}
