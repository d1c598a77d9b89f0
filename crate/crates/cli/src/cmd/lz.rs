use std::f64::consts::TAU;

use anyhow::Result;
use clap::Subcommand;
use serde::{Deserialize, Serialize};

use kzsim::ai::AiScheme;
use kzsim::lz::{excitation_probability, instantaneous_eigensystem, trajectory, DEFAULT_TOL};

use super::Context;
use crate::output::Sink;
use crate::{row, units, Invalid};

#[derive(Subcommand)]
pub enum LzCommand {
    /// Time-resolved excited-state population across one crossing.
    Run(RunArgs),
}

#[derive(clap::Args, Serialize)]
pub struct RunArgs {
    /// A: ground state far before the crossing. B: ground state at the crossing.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    scheme: Option<AiScheme>,
    /// Dimensionless sweep rate (tau0 / tau_q).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
    /// Detuning half-width |delta * tau| for the default start and end.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    window: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    tau_start: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    tau_end: Option<f64>,
    /// Output rows, evenly spaced in time.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    samples: Option<usize>,
    /// Rabi frequency Omega_0 / 2pi, e.g. 18.3kHz.
    #[arg(long, value_parser = units::hz)]
    #[serde(skip_serializing_if = "Option::is_none")]
    rabi_hz: Option<f64>,
    /// Frequency sweep rate v / 2pi, e.g. 2.0GHz/s.
    #[arg(long, value_parser = units::hz_per_s)]
    #[serde(skip_serializing_if = "Option::is_none")]
    rate_hz_per_s: Option<f64>,
    /// Lab start time relative to the crossing, e.g. -500us.
    #[arg(long, value_parser = units::seconds, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    start_s: Option<f64>,
    /// Lab end time relative to the crossing.
    #[arg(long, value_parser = units::seconds, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    end_s: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    scheme: AiScheme,
    delta: Option<f64>,
    window: f64,
    tau_start: Option<f64>,
    tau_end: Option<f64>,
    samples: usize,
    rabi_hz: Option<f64>,
    rate_hz_per_s: Option<f64>,
    start_s: Option<f64>,
    end_s: Option<f64>,
    tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scheme: AiScheme::A,
            delta: None,
            window: 100.0,
            tau_start: None,
            tau_end: None,
            samples: 1001,
            rabi_hz: None,
            rate_hz_per_s: None,
            start_s: None,
            end_s: None,
            tol: DEFAULT_TOL,
        }
    }
}

/// Dimensionless run derived from a [`RunConfig`].
#[derive(Debug, Serialize)]
struct Resolved {
    delta: f64,
    tau_start: f64,
    tau_end: f64,
    /// Omega_0 in rad/s when lab units were given.
    rabi: Option<f64>,
}

fn pick(name: &str, dimless: Option<f64>, lab: Option<f64>) -> Result<Option<f64>, Invalid> {
    match (dimless, lab) {
        (Some(_), Some(_)) => Err(Invalid(format!("{name} given both dimensionless and in lab units"))),
        (a, b) => Ok(a.or(b)),
    }
}

impl RunConfig {
    fn resolve(&self) -> Result<Resolved, Invalid> {
        let rabi = self.rabi_hz.map(|f| TAU * f);
        let need_rabi = |what: &str| Invalid(format!("{what} in lab units needs --rabi-hz"));
        let lab_delta = match (self.rate_hz_per_s, rabi) {
            (Some(v), Some(om)) => Some(TAU * v / (om * om)),
            (Some(_), None) => return Err(need_rabi("sweep rate")),
            (None, _) => None,
        };
        let delta = pick("sweep rate", self.delta, lab_delta)?.unwrap_or(1.0);
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Invalid(format!("sweep rate must be positive, got {delta}")));
        }
        if !(self.window.is_finite() && self.window > 0.0) {
            return Err(Invalid(format!("window must be positive, got {}", self.window)));
        }
        let to_tau = |t: Option<f64>, what: &str| match (t, rabi) {
            (Some(t), Some(om)) => Ok(Some(om * t)),
            (Some(_), None) => Err(need_rabi(what)),
            (None, _) => Ok(None),
        };
        let start = pick("start time", self.tau_start, to_tau(self.start_s, "start time")?)?;
        let end = pick("end time", self.tau_end, to_tau(self.end_s, "end time")?)?;
        let tau_start = match (self.scheme, start) {
            (AiScheme::A, s) => s.unwrap_or(-self.window / delta),
            (AiScheme::B, None | Some(0.0)) => 0.0,
            (AiScheme::B, Some(s)) => {
                return Err(Invalid(format!("scheme B starts at the crossing; got start {s}")))
            }
        };
        let tau_end = end.unwrap_or(self.window / delta);
        if !(tau_start.is_finite() && tau_end.is_finite() && tau_end >= tau_start) {
            return Err(Invalid(format!("end {tau_end} precedes start {tau_start}")));
        }
        if self.samples < 2 && tau_end > tau_start {
            return Err(Invalid("need at least 2 samples".into()));
        }
        Ok(Resolved { delta, tau_start, tau_end, rabi })
    }
}

pub fn run(cmd: LzCommand, ctx: &Context) -> Result<()> {
    let LzCommand::Run(args) = cmd;
    let cfg: RunConfig = ctx.resolve(&args)?;
    let r = cfg.resolve()?;
    let sink = Sink::new(&ctx.out, "lz run", &serde_json::json!({ "input": &cfg, "resolved": &r }))?;

    let taus: Vec<f64> = if r.tau_end > r.tau_start {
        let n = cfg.samples;
        (0..n)
            .map(|i| match i {
                _ if i == n - 1 => r.tau_end,
                _ => r.tau_start + (r.tau_end - r.tau_start) * i as f64 / (n - 1) as f64,
            })
            .collect()
    } else {
        Vec::new()
    };
    let ground = instantaneous_eigensystem(r.tau_start, r.delta).ground;
    let states = trajectory(&ground, r.delta, &taus, cfg.tol)?;
    let mut columns = vec!["tau", "p_excited", "p_up"];
    if r.rabi.is_some() {
        columns.insert(1, "t_s");
    }
    let rows = taus.iter().zip(&states).map(|(&tau, s)| {
        let mut cells = row![tau, excitation_probability(s, tau, r.delta), s.up.norm_sqr()];
        if let Some(om) = r.rabi {
            cells.insert(1, (tau / om).into());
        }
        cells
    });
    let path = sink.csv("lz_run.csv", &columns, rows)?;
    if let (Some(s), Some(&tau)) = (states.last(), taus.last()) {
        println!("final excitation probability {:.6e}", excitation_probability(s, tau, r.delta));
    }
    println!("wrote {}", path.display());
    Ok(())
}
