use std::f64::consts::TAU;
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use anyhow::{Context as _, Result};
use clap::{Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use kzsim::pulse::{compile_kzm_experiment, render_iq, write_bin, write_csv, CarrierConfig, PulsePlan};
use kzsim::tfim::{ChainSpec, DEFAULT_G_START};

use super::Context;
use crate::output::Sink;
use crate::{units, Invalid};

#[derive(Subcommand)]
pub enum PulseCommand {
    /// Derive segment timings for a plan file, or build per-mode plans for a chain quench.
    Compile(CompileArgs),
    /// Sample a plan into I/Q waveforms.
    Render(RenderArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Bin,
}

#[derive(clap::Args, Serialize)]
pub struct CarrierArgs {
    /// Carrier offset (omega_0 - omega_c) / 2pi, e.g. 2MHz.
    #[arg(long, value_parser = units::hz)]
    #[serde(skip_serializing_if = "Option::is_none")]
    offset_hz: Option<f64>,
    /// Rabi frequency Omega_0 / 2pi, e.g. 20kHz.
    #[arg(long, value_parser = units::hz)]
    #[serde(skip_serializing_if = "Option::is_none")]
    rabi_hz: Option<f64>,
    /// e.g. 50MS/s.
    #[arg(long, value_parser = units::samples_per_s)]
    #[serde(skip_serializing_if = "Option::is_none")]
    sample_rate: Option<f64>,
}

#[derive(clap::Args, Serialize)]
pub struct CompileArgs {
    /// Plan JSON: `{"segments": [...]}`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    plan: Option<PathBuf>,
    /// Build one plan per mode of this chain instead of reading a file.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n_spins: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    tau_q: Option<f64>,
    /// Detuning below resonance at which each sweep starts, e.g. 2MHz.
    #[arg(long, value_parser = units::hz)]
    #[serde(skip_serializing_if = "Option::is_none")]
    start_detuning_hz: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    carrier: CarrierArgs,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompileConfig {
    plan: Option<PathBuf>,
    n_spins: Option<usize>,
    tau_q: Option<f64>,
    start_detuning_hz: f64,
    offset_hz: f64,
    rabi_hz: f64,
    sample_rate: f64,
}

impl Default for CompileConfig {
    fn default() -> Self {
        let c = CarrierConfig::default();
        Self {
            plan: None,
            n_spins: None,
            tau_q: None,
            start_detuning_hz: 2.0e6,
            offset_hz: c.resonance_offset / TAU,
            rabi_hz: c.rabi / TAU,
            sample_rate: c.sample_rate,
        }
    }
}

#[derive(clap::Args, Serialize)]
pub struct RenderArgs {
    /// Plan JSON, either a bare plan or the output of `pulse compile`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    plan: Option<PathBuf>,
    /// Which plan to render from a compiled file.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    index: Option<usize>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    format: Option<Format>,
    #[command(flatten)]
    #[serde(flatten)]
    carrier: CarrierArgs,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    plan: Option<PathBuf>,
    index: usize,
    format: Format,
    offset_hz: f64,
    rabi_hz: f64,
    sample_rate: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        let c = CompileConfig::default();
        Self {
            plan: None,
            index: 0,
            format: Format::Csv,
            offset_hz: c.offset_hz,
            rabi_hz: c.rabi_hz,
            sample_rate: c.sample_rate,
        }
    }
}

fn carrier(offset_hz: f64, rabi_hz: f64, sample_rate: f64) -> Result<CarrierConfig> {
    let c = CarrierConfig { resonance_offset: TAU * offset_hz, rabi: TAU * rabi_hz, sample_rate, amplitude: 1.0 };
    c.validate()?;
    Ok(c)
}

fn read_json(path: &PathBuf) -> Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| Invalid(format!("{}: {e}", path.display())).into())
}

fn parse_plan(v: Value) -> Result<PulsePlan> {
    let plan: PulsePlan = serde_json::from_value(v).map_err(|e| Invalid(format!("plan: {e}")))?;
    plan.validate()?;
    Ok(plan)
}

fn describe(k: Option<f64>, plan: &PulsePlan, c: &CarrierConfig) -> Value {
    let starts = plan.segment_starts(c);
    let segments: Vec<Value> = plan
        .segments
        .iter()
        .zip(starts)
        .map(|(s, t0)| {
            let mut v = serde_json::to_value(s).expect("segment serializes");
            v["start_s"] = t0.into();
            v["duration_s"] = s.duration(c).into();
            v
        })
        .collect();
    json!({
        "k": k,
        "total_duration_s": plan.total_duration(c),
        "max_offset_hz": plan.max_offset_hz(c),
        "warnings": c.lint(plan),
        "segments": segments,
    })
}

pub fn run(cmd: PulseCommand, ctx: &Context) -> Result<()> {
    match cmd {
        PulseCommand::Compile(args) => compile(args, ctx),
        PulseCommand::Render(args) => render(args, ctx),
    }
}

fn compile(args: CompileArgs, ctx: &Context) -> Result<()> {
    let cfg: CompileConfig = ctx.resolve(&args)?;
    let c = carrier(cfg.offset_hz, cfg.rabi_hz, cfg.sample_rate)?;
    let plans: Vec<(Option<f64>, PulsePlan)> = match (&cfg.plan, cfg.n_spins, cfg.tau_q) {
        (Some(path), None, None) => vec![(None, parse_plan(read_json(path)?)?)],
        (None, Some(n), Some(t)) => {
            let chain = ChainSpec::new(n, t)?.with_g_start(DEFAULT_G_START)?;
            compile_kzm_experiment(&chain, &c, TAU * cfg.start_detuning_hz)?
                .into_iter()
                .map(|(k, p)| (Some(k), p))
                .collect()
        }
        _ => return Err(Invalid("give either --plan, or both --n-spins and --tau-q".into()).into()),
    };
    for (_, p) in &plans {
        for w in c.lint(p) {
            eprintln!("warning: {w}");
        }
    }
    let sink = Sink::new(&ctx.out, "pulse compile", &cfg)?;
    let body: Vec<Value> = plans.iter().map(|(k, p)| describe(*k, p, &c)).collect();
    let path = sink.json("pulse_plan.json", json!({ "carrier": c, "plans": body }))?;
    println!("compiled {} plan(s); wrote {}", plans.len(), path.display());
    Ok(())
}

fn render(args: RenderArgs, ctx: &Context) -> Result<()> {
    let cfg: RenderConfig = ctx.resolve(&args)?;
    let c = carrier(cfg.offset_hz, cfg.rabi_hz, cfg.sample_rate)?;
    let path = cfg.plan.as_ref().ok_or_else(|| Invalid("pulse render needs --plan".into()))?;
    let v = read_json(path)?;
    let plan_value = match v.get("plans") {
        Some(Value::Array(plans)) => plans
            .get(cfg.index)
            .cloned()
            .ok_or_else(|| Invalid(format!("plan index {} out of range ({} plans)", cfg.index, plans.len())))?,
        _ => v,
    };
    let plan = parse_plan(plan_value)?;
    for w in c.lint(&plan) {
        eprintln!("warning: {w}");
    }
    let wave = render_iq(&plan, &c)?;
    let sink = Sink::new(&ctx.out, "pulse render", &cfg)?;
    let out = match cfg.format {
        Format::Csv => {
            let out = sink.path("waveform.csv");
            write_csv(BufWriter::new(File::create(&out)?), &wave, &sink.header_for_waveform())?;
            out
        }
        Format::Bin => {
            let out = sink.path("waveform.bin");
            write_bin(BufWriter::new(File::create(&out)?), &wave)?;
            sink.json(
                "waveform.json",
                json!({ "samples": wave.len(), "sample_rate": wave.sample_rate, "segment_starts": wave.segment_starts }),
            )?;
            out
        }
    };
    println!("rendered {} samples; wrote {}", wave.len(), out.display());
    Ok(())
}
