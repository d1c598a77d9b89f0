//! Pulse plans (frequency sweeps and resonant rotations) compiled to a
//! continuous phase `phi(t)` and sampled IQ waveforms `I = cos phi`,
//! `Q = sin phi`.
//!
//! Phases are measured against the carrier `omega_c`. Every segment runs on
//! its own local clock and starts from the phase accumulated so far, so
//! `phi` is continuous except for the `+pi/2` axis offset that selects a
//! Y rotation instead of an X rotation.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::io::{self, BufRead, Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tfim::{momentum_grid, plan_mode_sequence, ChainSpec, DEFAULT_START_DETUNING};

pub const WAVE_MAGIC: &[u8; 8] = b"IQWAVE01";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PulseSegment {
    /// Linear chirp. `start_offset` is `omega_1 - omega_c` (rad/s), `rate` in rad/s^2.
    Sweep { start_offset: f64, rate: f64, duration: f64 },
    /// Resonant rotation about Y.
    RotY { angle: f64 },
    /// Resonant rotation about X.
    RotX { angle: f64 },
}

impl PulseSegment {
    pub fn duration(&self, config: &CarrierConfig) -> f64 {
        match *self {
            PulseSegment::Sweep { duration, .. } => duration,
            PulseSegment::RotY { angle } | PulseSegment::RotX { angle } => angle / config.rabi,
        }
    }

    /// Instantaneous offset `omega(t) - omega_c` at local time `t`, rad/s.
    pub fn offset_at(&self, t: f64, config: &CarrierConfig) -> f64 {
        match *self {
            PulseSegment::Sweep { start_offset, rate, .. } => start_offset + rate * t,
            _ => config.resonance_offset,
        }
    }

    fn local_phase(&self, t: f64, config: &CarrierConfig) -> f64 {
        match *self {
            PulseSegment::Sweep { start_offset, rate, .. } => 0.5 * rate * t * t + start_offset * t,
            _ => config.resonance_offset * t,
        }
    }

    fn axis_offset(&self) -> f64 {
        match self {
            PulseSegment::RotY { .. } => FRAC_PI_2,
            _ => 0.0,
        }
    }

    fn max_abs_offset(&self, config: &CarrierConfig) -> f64 {
        let d = self.duration(config);
        self.offset_at(0.0, config).abs().max(self.offset_at(d, config).abs())
    }

    fn validate(&self) -> Result<()> {
        match *self {
            PulseSegment::Sweep { start_offset, rate, duration } => {
                if !(start_offset.is_finite() && rate.is_finite()) {
                    return Err(Error::invalid("sweep offset and rate must be finite"));
                }
                if !(duration.is_finite() && duration > 0.0) {
                    return Err(Error::invalid(format!("sweep duration must be positive, got {duration}")));
                }
            }
            PulseSegment::RotY { angle } | PulseSegment::RotX { angle } => {
                if !(angle > 0.0 && angle <= TAU) {
                    return Err(Error::invalid(format!("rotation angle must lie in (0, 2pi], got {angle}")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarrierConfig {
    /// `omega_0 - omega_c`, rad/s.
    pub resonance_offset: f64,
    /// Rabi frequency `Omega_0`, rad/s.
    pub rabi: f64,
    /// Samples per second.
    pub sample_rate: f64,
    pub amplitude: f64,
}

impl Default for CarrierConfig {
    fn default() -> Self {
        Self { resonance_offset: TAU * 2.0e6, rabi: TAU * 20.0e3, sample_rate: 50.0e6, amplitude: 1.0 }
    }
}

impl CarrierConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("resonance_offset", self.resonance_offset),
            ("rabi", self.rabi),
            ("sample_rate", self.sample_rate),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.amplitude > 0.0 && self.amplitude <= 1.0) {
            return Err(Error::invalid(format!("amplitude must lie in (0, 1], got {}", self.amplitude)));
        }
        Ok(())
    }

    /// Soft warnings about the plan under this carrier.
    pub fn lint(&self, plan: &PulsePlan) -> Vec<String> {
        let mut out = Vec::new();
        if self.resonance_offset < 50.0 * self.rabi {
            out.push(format!(
                "resonance offset {:.4e} rad/s is less than 50x the Rabi frequency {:.4e} rad/s",
                self.resonance_offset, self.rabi
            ));
        }
        let f_max = plan.max_offset_hz(self);
        if self.sample_rate < 10.0 * f_max {
            out.push(format!(
                "sample rate {:.4e} S/s is below 10x the largest offset frequency {:.4e} Hz",
                self.sample_rate, f_max
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PulsePlan {
    pub segments: Vec<PulseSegment>,
}

impl PulsePlan {
    pub fn new(segments: Vec<PulseSegment>) -> Result<Self> {
        let plan = Self { segments };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::invalid("plan has no segments"));
        }
        self.segments.iter().try_for_each(PulseSegment::validate)
    }

    pub fn total_duration(&self, config: &CarrierConfig) -> f64 {
        self.segments.iter().map(|s| s.duration(config)).sum()
    }

    /// Start time of every segment.
    pub fn segment_starts(&self, config: &CarrierConfig) -> Vec<f64> {
        self.segments
            .iter()
            .scan(0.0, |t, s| {
                let start = *t;
                *t += s.duration(config);
                Some(start)
            })
            .collect()
    }

    /// Largest `|omega - omega_c| / 2 pi` reached anywhere in the plan, Hz.
    pub fn max_offset_hz(&self, config: &CarrierConfig) -> f64 {
        self.segments.iter().map(|s| s.max_abs_offset(config)).fold(0.0, f64::max) / TAU
    }
}

/// A plan with its segment start times and carried phases precomputed.
#[derive(Debug, Clone)]
pub struct PhaseFunction {
    segments: Vec<PulseSegment>,
    config: CarrierConfig,
    starts: Vec<f64>,
    carried: Vec<f64>,
    total: f64,
}

impl PhaseFunction {
    pub fn new(plan: &PulsePlan, config: &CarrierConfig) -> Result<Self> {
        plan.validate()?;
        config.validate()?;
        let starts = plan.segment_starts(config);
        let mut carried = Vec::with_capacity(plan.segments.len());
        let mut acc = 0.0;
        for s in &plan.segments {
            carried.push(acc);
            acc += s.local_phase(s.duration(config), config);
        }
        Ok(Self {
            segments: plan.segments.clone(),
            config: *config,
            starts,
            carried,
            total: plan.total_duration(config),
        })
    }

    pub fn total_duration(&self) -> f64 {
        self.total
    }

    pub fn segment_starts(&self) -> &[f64] {
        &self.starts
    }

    fn segment_index(&self, t: f64) -> Result<usize> {
        if !(0.0..=self.total).contains(&t) {
            return Err(Error::OutsidePlan { t, duration: self.total });
        }
        Ok(self.starts.partition_point(|&s| s <= t).saturating_sub(1))
    }

    fn phase_in(&self, i: usize, t: f64) -> f64 {
        let seg = &self.segments[i];
        self.carried[i] + seg.local_phase(t - self.starts[i], &self.config) + seg.axis_offset()
    }

    /// `phi(t)`. A time on a boundary belongs to the later segment.
    pub fn phase(&self, t: f64) -> Result<f64> {
        let i = self.segment_index(t)?;
        Ok(self.phase_in(i, t))
    }

    /// Instantaneous offset frequency `d phi / dt`, rad/s.
    pub fn offset(&self, t: f64) -> Result<f64> {
        let i = self.segment_index(t)?;
        Ok(self.segments[i].offset_at(t - self.starts[i], &self.config))
    }

    /// `(phi(t_b^-), phi(t_b^+))` at every interior boundary `t_b`.
    pub fn boundary_limits(&self) -> Vec<(f64, f64)> {
        (1..self.segments.len())
            .map(|i| {
                let prev = &self.segments[i - 1];
                let left = self.carried[i - 1]
                    + prev.local_phase(prev.duration(&self.config), &self.config)
                    + prev.axis_offset();
                (left, self.phase_in(i, self.starts[i]))
            })
            .collect()
    }

    /// Jump in axis offset at each interior boundary.
    pub fn axis_jumps(&self) -> Vec<f64> {
        self.segments.windows(2).map(|w| w[1].axis_offset() - w[0].axis_offset()).collect()
    }
}

/// `phi(t)` for a single query; see [`PhaseFunction`] for repeated use.
pub fn phase_function(plan: &PulsePlan, config: &CarrierConfig, t: f64) -> Result<f64> {
    PhaseFunction::new(plan, config)?.phase(t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IqWaveform {
    pub i_samples: Vec<f64>,
    pub q_samples: Vec<f64>,
    pub sample_rate: f64,
    /// Index of the first sample of each segment.
    pub segment_starts: Vec<usize>,
}

impl IqWaveform {
    pub fn len(&self) -> usize {
        self.i_samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.i_samples.is_empty()
    }

    pub fn time(&self, index: usize) -> f64 {
        index as f64 / self.sample_rate
    }
}

/// Samples `I(t) = A cos phi(t)`, `Q(t) = A sin phi(t)` at `t_j = j / sample_rate`
/// for every `t_j` inside the plan.
pub fn render_iq(plan: &PulsePlan, config: &CarrierConfig) -> Result<IqWaveform> {
    let phase = PhaseFunction::new(plan, config)?;
    let f_max = plan.max_offset_hz(config);
    if 2.0 * f_max > config.sample_rate {
        return Err(Error::Nyquist { sample_rate: config.sample_rate, max_offset_hz: f_max });
    }
    let rate = config.sample_rate;
    let n = (phase.total_duration() * rate).floor() as usize + 1;
    let mut i_samples = Vec::with_capacity(n);
    let mut q_samples = Vec::with_capacity(n);
    for j in 0..n {
        let t = (j as f64 / rate).min(phase.total_duration());
        let (s, c) = phase.phase(t)?.sin_cos();
        i_samples.push(config.amplitude * c);
        q_samples.push(config.amplitude * s);
    }
    let segment_starts = phase.segment_starts().iter().map(|&t| first_sample_at(t, rate)).collect();
    Ok(IqWaveform { i_samples, q_samples, sample_rate: rate, segment_starts })
}

// smallest j with j / rate >= t
fn first_sample_at(t: f64, rate: f64) -> usize {
    let mut j = (t * rate).ceil() as usize;
    while j > 0 && (j - 1) as f64 / rate >= t {
        j -= 1;
    }
    while (j as f64 / rate) < t {
        j += 1;
    }
    j
}

/// One pulse plan per positive pseudo-momentum: sweep the drive down through
/// resonance from `resonance_offset + start_detuning` to the detuning
/// equivalent of `tau_k_final`, then `R_Y(theta_k)`, then `R_X(pi)`.
///
/// `theta_k` is reduced into `(0, 2 pi]`; the Y rotation is left out when
/// `theta_k` vanishes. Modes at `-k` share the plan of `+k`.
pub fn compile_kzm_experiment(
    chain: &ChainSpec,
    config: &CarrierConfig,
    start_detuning: f64,
) -> Result<Vec<(f64, PulsePlan)>> {
    config.validate()?;
    let ks: Vec<f64> = momentum_grid(chain.n_spins, chain.lattice_spacing)?
        .into_iter()
        .filter(|&k| k > 0.0)
        .collect();
    ks.par_iter()
        .map(|&k| {
            let wrap = |e: Error| Error::Mode { k, source: Box::new(e) };
            let mp = plan_mode_sequence(k, chain, config.rabi, start_detuning).map_err(wrap)?;
            let mut segments = vec![PulseSegment::Sweep {
                start_offset: config.resonance_offset - mp.start_detuning_lab,
                rate: -mp.sweep_rate_lab,
                duration: mp.sweep_duration_lab,
            }];
            if mp.theta_k.abs() > 1e-12 {
                let angle = mp.theta_k.rem_euclid(TAU);
                segments.push(PulseSegment::RotY { angle: if angle == 0.0 { TAU } else { angle } });
            }
            segments.push(PulseSegment::RotX { angle: std::f64::consts::PI });
            Ok((k, PulsePlan::new(segments).map_err(wrap)?))
        })
        .collect()
}

/// [`compile_kzm_experiment`] with the default 2 MHz start detuning.
pub fn compile_kzm_experiment_default(
    chain: &ChainSpec,
    config: &CarrierConfig,
) -> Result<Vec<(f64, PulsePlan)>> {
    compile_kzm_experiment(chain, config, DEFAULT_START_DETUNING)
}

/// Writes `t,I,Q` rows after `#`-prefixed `header` lines.
pub fn write_csv<W: Write>(mut w: W, wave: &IqWaveform, header: &[String]) -> io::Result<()> {
    for line in header {
        writeln!(w, "# {line}")?;
    }
    writeln!(w, "t,I,Q")?;
    for (j, (i, q)) in wave.i_samples.iter().zip(&wave.q_samples).enumerate() {
        writeln!(w, "{:.16e},{:.16e},{:.16e}", wave.time(j), i, q)?;
    }
    Ok(())
}

/// Reads the rows written by [`write_csv`]; segment starts are not stored.
pub fn read_csv<R: BufRead>(r: R, sample_rate: f64) -> io::Result<IqWaveform> {
    let bad = |m: String| io::Error::new(io::ErrorKind::InvalidData, m);
    let mut wave = IqWaveform { i_samples: vec![], q_samples: vec![], sample_rate, segment_starts: vec![] };
    for line in r.lines() {
        let line = line?;
        if line.starts_with('#') || line.trim().is_empty() || line.starts_with("t,") {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(bad(format!("expected 3 columns: {line}")));
        }
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| bad(format!("{e}: {s}")));
        wave.i_samples.push(parse(cols[1])?);
        wave.q_samples.push(parse(cols[2])?);
    }
    Ok(wave)
}

/// Magic, sample rate, then interleaved `I, Q` pairs, all little-endian f64.
pub fn write_bin<W: Write>(mut w: W, wave: &IqWaveform) -> io::Result<()> {
    w.write_all(WAVE_MAGIC)?;
    w.write_all(&wave.sample_rate.to_le_bytes())?;
    for (i, q) in wave.i_samples.iter().zip(&wave.q_samples) {
        w.write_all(&i.to_le_bytes())?;
        w.write_all(&q.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_bin<R: Read>(mut r: R) -> io::Result<IqWaveform> {
    let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < 16 || &bytes[..8] != WAVE_MAGIC {
        return Err(bad("missing IQWAVE01 header"));
    }
    if (bytes.len() - 16) % 16 != 0 {
        return Err(bad("truncated sample pair"));
    }
    let f = |c: &[u8]| f64::from_le_bytes(c.try_into().expect("8-byte chunk"));
    let sample_rate = f(&bytes[8..16]);
    let (mut i_samples, mut q_samples) = (Vec::new(), Vec::new());
    for pair in bytes[16..].chunks_exact(16) {
        i_samples.push(f(&pair[..8]));
        q_samples.push(f(&pair[8..]));
    }
    Ok(IqWaveform { i_samples, q_samples, sample_rate, segment_starts: vec![] })
}
