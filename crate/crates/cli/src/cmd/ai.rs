use std::path::PathBuf;

use anyhow::Result;
use clap::Subcommand;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use kzsim::ai::{excitation_ai, excitation_exact, AiScheme, DEFAULT_SCAN_WINDOW};
use kzsim::fit::{fit_alpha, FitResult, FitWindow, Sample};
use kzsim::lz::DEFAULT_TOL;

use super::{parse_bounds, parse_grid, read_samples, values_or_grid, window, Context, LogGrid};
use crate::output::Sink;
use crate::{row, Invalid};

#[derive(Subcommand)]
pub enum AiCommand {
    /// Simulate excitation probabilities over a quench-time grid and fit alpha.
    ScanFit(ScanArgs),
    /// Fit alpha to an existing `x,y[,w]` sample file.
    Fit(FitArgs),
}

#[derive(clap::Args, Serialize)]
pub struct ScanArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    scheme: Option<AiScheme>,
    /// Explicit tau_q / tau0 values.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    tau_ratio: Option<Vec<f64>>,
    /// Log grid `lo,hi,points` of tau_q / tau0.
    #[arg(long, value_parser = parse_grid)]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<LogGrid>,
    /// Detuning half-width |delta * tau| of each simulation.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    window: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    scheme: AiScheme,
    tau_ratio: Option<Vec<f64>>,
    grid: Option<LogGrid>,
    window: f64,
    tol: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self { scheme: AiScheme::A, tau_ratio: None, grid: None, window: DEFAULT_SCAN_WINDOW, tol: DEFAULT_TOL }
    }
}

const DEFAULT_GRID: LogGrid = LogGrid(0.05, 0.5, 8);

#[derive(clap::Args, Serialize)]
pub struct FitArgs {
    /// CSV with columns x = tau_q / tau0, y = excitation probability, optional weight.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    scheme: Option<AiScheme>,
    /// Restrict the fit to `lo,hi` in x.
    #[arg(long, value_parser = parse_bounds)]
    #[serde(skip_serializing_if = "Option::is_none")]
    fit_window: Option<[f64; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    input: Option<PathBuf>,
    scheme: AiScheme,
    fit_window: Option<[f64; 2]>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { input: None, scheme: AiScheme::A, fit_window: None }
    }
}

fn fit_record(scheme: AiScheme, fit: &FitResult, window: FitWindow) -> serde_json::Value {
    json!({
        "scheme": scheme,
        "params": fit.params,
        "stderr": fit.stderr,
        "residual_norm": fit.residual_norm,
        "n_samples": fit.n_samples,
        "window": window,
        "theory_alpha": scheme.theory_alpha(),
    })
}

fn report(scheme: AiScheme, fit: &FitResult) {
    let (a, s) = fit.get("alpha").expect("alpha fit");
    println!("scheme {scheme}: alpha = {a:.6} +- {s:.2e} (theory {:.6})", scheme.theory_alpha());
}

pub fn run(cmd: AiCommand, ctx: &Context) -> Result<()> {
    match cmd {
        AiCommand::ScanFit(args) => scan_fit(args, ctx),
        AiCommand::Fit(args) => fit(args, ctx),
    }
}

fn scan_fit(args: ScanArgs, ctx: &Context) -> Result<()> {
    let cfg: ScanConfig = ctx.resolve(&args)?;
    let xs = values_or_grid(&cfg.tau_ratio, &cfg.grid, DEFAULT_GRID)?;
    if xs.len() < 3 {
        return Err(Invalid(format!("alpha fit needs at least 3 quench times, got {}", xs.len())).into());
    }
    let sink = Sink::new(&ctx.out, "ai scan-fit", &cfg)?;
    let ds = xs
        .par_iter()
        .map(|&x| excitation_exact(cfg.scheme, x, cfg.window, cfg.tol))
        .collect::<kzsim::Result<Vec<f64>>>()?;
    let samples: Vec<Sample> = xs.iter().zip(&ds).map(|(&x, &d)| Sample::new(x, d)).collect();
    let fit = fit_alpha(cfg.scheme, &samples)?;
    let alpha = fit.params["alpha"];
    let theory = cfg.scheme.theory_alpha();
    let rows = samples.iter().map(|s| {
        row![s.x, s.y, excitation_ai(cfg.scheme, theory * s.x), excitation_ai(cfg.scheme, alpha * s.x)]
    });
    let s = cfg.scheme;
    sink.csv(&format!("ai_scan_{s}.csv"), &["tau_ratio", "d_exact", "d_ai_theory", "d_ai_fit"], rows)?;
    let w = window(&None, &xs)?;
    let path = sink.json(&format!("ai_fit_{s}.json"), fit_record(s, &fit, w))?;
    report(s, &fit);
    println!("wrote {}", path.display());
    Ok(())
}

fn fit(args: FitArgs, ctx: &Context) -> Result<()> {
    let cfg: FitConfig = ctx.resolve(&args)?;
    let input = cfg.input.as_ref().ok_or_else(|| Invalid("ai fit needs --input".into()))?;
    let samples = read_samples(input)?;
    let xs: Vec<f64> = samples.iter().map(|s| s.x).collect();
    let w = window(&cfg.fit_window, &xs)?;
    let fit = fit_alpha(cfg.scheme, &w.select(&samples))?;
    let sink = Sink::new(&ctx.out, "ai fit", &cfg)?;
    let path = sink.json(&format!("ai_fit_{}.json", cfg.scheme), fit_record(cfg.scheme, &fit, w))?;
    report(cfg.scheme, &fit);
    println!("wrote {}", path.display());
    Ok(())
}
