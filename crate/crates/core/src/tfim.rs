//! Momentum-space solution of the linearly quenched transverse-field Ising
//! chain. After Jordan-Wigner and Fourier transforms each pair `(k, -k)` is an
//! independent Landau-Zener problem in the rescaled time
//! `tau_k = 4 tau_q sin(ka) (t/tau_q + cos(ka))` with rate
//! `delta_k = 1 / (4 tau_q sin^2(ka))`. The quench runs from
//! `g = g_start` (`t = -g_start tau_q`) to `g = 0` (`t = 0`).
//!
//! Units: hbar = J = 1, times in hbar/J.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lz::{self, excitation_probability, instantaneous_eigensystem, DEFAULT_TOL};

pub const DEFAULT_G_START: f64 = 10.0;

/// Default start detuning of the experimental sweep, 2 MHz in rad/s.
pub const DEFAULT_START_DETUNING: f64 = TAU * 2.0e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub n_spins: usize,
    pub lattice_spacing: f64,
    pub tau_q: f64,
    pub g_start: f64,
    pub tol: f64,
}

impl ChainSpec {
    pub fn new(n_spins: usize, tau_q: f64) -> Result<Self> {
        let spec = Self {
            n_spins,
            lattice_spacing: 1.0,
            tau_q,
            g_start: DEFAULT_G_START,
            tol: DEFAULT_TOL,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_g_start(self, g_start: f64) -> Result<Self> {
        let s = Self { g_start, ..self };
        s.validate()?;
        Ok(s)
    }

    pub fn with_tol(self, tol: f64) -> Result<Self> {
        let s = Self { tol, ..self };
        s.validate()?;
        Ok(s)
    }

    pub fn with_lattice_spacing(self, lattice_spacing: f64) -> Result<Self> {
        let s = Self { lattice_spacing, ..self };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        check_grid(self.n_spins, self.lattice_spacing)?;
        if !(self.tau_q.is_finite() && self.tau_q > 0.0) {
            return Err(Error::invalid(format!("tau_q must be positive, got {}", self.tau_q)));
        }
        if !(self.g_start.is_finite() && self.g_start > 1.0) {
            return Err(Error::invalid(format!(
                "g_start must exceed the critical field 1, got {}",
                self.g_start
            )));
        }
        lz::check_tol(self.tol)
    }
}

fn check_grid(n_spins: usize, a: f64) -> Result<()> {
    if n_spins < 2 || n_spins % 2 != 0 {
        return Err(Error::invalid(format!("n_spins must be even and >= 2, got {n_spins}")));
    }
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::invalid(format!("lattice spacing must be positive, got {a}")));
    }
    Ok(())
}

/// Per-mode Landau-Zener parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeParams {
    pub k: f64,
    pub delta_k: f64,
    pub tau_k_final: f64,
    pub tau_k_start: f64,
}

impl ModeParams {
    /// Rotation angle `delta_k * tau_k_final`, equal to `cot(ka)`.
    pub fn theta(&self) -> f64 {
        self.delta_k * self.tau_k_final
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeResult {
    pub k: f64,
    pub ka: f64,
    pub delta_k: f64,
    pub tau_k_final: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuenchResult {
    pub chain: ChainSpec,
    /// All N modes in ascending `k`.
    pub modes: Vec<ModeResult>,
    /// Kink density per site.
    pub n_ex: f64,
}

/// Lab-frame control parameters for measuring one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModePlan {
    pub k: f64,
    pub ka: f64,
    pub delta_k: f64,
    /// `delta_k * rabi^2`, rad/s^2.
    pub sweep_rate_lab: f64,
    /// Signed detuning at the start of the sweep (negative: before the crossing), rad/s.
    pub start_detuning_lab: f64,
    /// Detuning equivalent of `tau_k_final`, rad/s.
    pub end_detuning_lab: f64,
    pub sweep_duration_lab: f64,
    pub theta_k: f64,
    pub rabi_lab: f64,
}

impl ModePlan {
    pub fn rotation_duration(&self, angle: f64) -> f64 {
        angle.abs() / self.rabi_lab
    }
}

/// The N pseudo-momenta `+-(m - 1/2) 2 pi / (N a)` in ascending order.
pub fn momentum_grid(n_spins: usize, lattice_spacing: f64) -> Result<Vec<f64>> {
    check_grid(n_spins, lattice_spacing)?;
    let step = TAU / (n_spins as f64 * lattice_spacing);
    let half = n_spins / 2;
    let positive = (1..=half).map(|m| (m as f64 - 0.5) * step);
    let mut grid: Vec<f64> = positive.clone().rev().map(|k| -k).collect();
    grid.extend(positive);
    Ok(grid)
}

fn positive_modes(chain: &ChainSpec) -> Vec<f64> {
    let step = TAU / (chain.n_spins as f64 * chain.lattice_spacing);
    (1..=chain.n_spins / 2).map(|m| (m as f64 - 0.5) * step).collect()
}

pub fn mode_params(k: f64, chain: &ChainSpec) -> Result<ModeParams> {
    let ka = k * chain.lattice_spacing;
    let (s, c) = ka.sin_cos();
    if s == 0.0 || !s.is_finite() {
        return Err(Error::invalid(format!("mode k = {k} has sin(ka) = 0")));
    }
    Ok(ModeParams {
        k,
        delta_k: 1.0 / (4.0 * chain.tau_q * s * s),
        tau_k_final: 2.0 * chain.tau_q * (2.0 * ka).sin(),
        tau_k_start: 4.0 * chain.tau_q * s * (c - chain.g_start),
    })
}

/// Rescaled Landau-Zener time of mode `k` at physical time `t`.
pub fn bdg_time(t: f64, k: f64, chain: &ChainSpec) -> f64 {
    let ka = k * chain.lattice_spacing;
    4.0 * chain.tau_q * ka.sin() * (t / chain.tau_q + ka.cos())
}

/// Excitation probability of mode `k` at the end of the quench. Computed for
/// `|k|`; `p(-k) = p(k)` exactly.
pub fn excitation_probability_mode(k: f64, chain: &ChainSpec) -> Result<f64> {
    chain.validate()?;
    mode_probability(k.abs(), chain).map_err(|e| Error::Mode { k, source: Box::new(e) })
}

fn mode_probability(k: f64, chain: &ChainSpec) -> Result<f64> {
    let mp = mode_params(k, chain)?;
    let start = instantaneous_eigensystem(mp.tau_k_start, mp.delta_k).ground;
    let end = lz::propagate_between(&start, mp.delta_k, mp.tau_k_start, mp.tau_k_final, chain.tol)?;
    Ok(excitation_probability(&end, mp.tau_k_final, mp.delta_k))
}

/// Asymptotic Zener estimate `exp(-2 pi tau_q sin^2(ka))` for one mode.
pub fn zener_mode_probability(ka: f64, tau_q: f64) -> f64 {
    (-TAU * tau_q * ka.sin().powi(2)).exp()
}

/// Integrates every mode and sums the kink density. Modes run in parallel;
/// the reduction runs in ascending `|k|`, pairing `+k` with `-k`.
pub fn kink_density(chain: &ChainSpec) -> Result<QuenchResult> {
    chain.validate()?;
    let ks = positive_modes(chain);
    let outcomes: Vec<Result<f64>> = ks.par_iter().map(|&k| mode_probability(k, chain)).collect();

    let mut failures = Vec::new();
    let mut probs = Vec::with_capacity(ks.len());
    for (&k, r) in ks.iter().zip(outcomes) {
        match r {
            Ok(p) => probs.push(p),
            Err(e) => failures.push(Error::Mode { k, source: Box::new(e) }),
        }
    }
    if failures.len() == 1 {
        return Err(failures.remove(0));
    } else if !failures.is_empty() {
        return Err(Error::Aggregate(failures));
    }

    let mut total = 0.0;
    for &p in &probs {
        total += p + p;
    }
    let n_ex = total / chain.n_spins as f64;

    let a = chain.lattice_spacing;
    let mut modes = Vec::with_capacity(chain.n_spins);
    for sign in [-1.0, 1.0] {
        let ordered: Box<dyn Iterator<Item = (&f64, &f64)>> = if sign < 0.0 {
            Box::new(ks.iter().zip(&probs).rev())
        } else {
            Box::new(ks.iter().zip(&probs))
        };
        for (&k, &p) in ordered {
            let mp = mode_params(sign * k, chain)?;
            modes.push(ModeResult {
                k: sign * k,
                ka: sign * k * a,
                delta_k: mp.delta_k,
                tau_k_final: mp.tau_k_final,
                p,
            });
        }
    }
    Ok(QuenchResult { chain: *chain, modes, n_ex })
}

/// Kibble-Zurek estimate `sqrt(1 / (2 tau_q))`.
pub fn kzm_estimate(tau_q: f64) -> f64 {
    (0.5 / tau_q).sqrt()
}

/// Exact asymptotic kink density `sqrt(1 / (2 tau_q)) / (2 pi)`.
pub fn dziarmaga_density(tau_q: f64) -> f64 {
    kzm_estimate(tau_q) / (2.0 * PI)
}

/// Converts a mode's dimensionless sweep into lab-frame control parameters.
///
/// The dimensionless rate is rescaled by `rabi` once for the time axis and
/// once for the detuning axis, so `v_k = delta_k * rabi^2` in rad/s^2. The
/// sweep starts at detuning `-start_detuning` and ends at the detuning
/// equivalent of `tau_k_final`, `rabi * cot(ka)`.
pub fn plan_mode_sequence(
    k: f64,
    chain: &ChainSpec,
    rabi: f64,
    start_detuning: f64,
) -> Result<ModePlan> {
    chain.validate()?;
    if !(rabi.is_finite() && rabi > 0.0) {
        return Err(Error::invalid(format!("Rabi frequency must be positive, got {rabi}")));
    }
    if !(start_detuning.is_finite() && start_detuning > 0.0) {
        return Err(Error::invalid(format!(
            "start detuning must be positive, got {start_detuning}"
        )));
    }
    let mp = mode_params(k, chain)?;
    let theta = mp.theta();
    let sweep_rate = mp.delta_k * rabi * rabi;
    let start = -start_detuning;
    let end = rabi * theta;
    if end <= start {
        return Err(Error::invalid(format!(
            "mode k = {k}: start detuning {start_detuning} rad/s does not precede the sweep endpoint {end} rad/s"
        )));
    }
    Ok(ModePlan {
        k,
        ka: k * chain.lattice_spacing,
        delta_k: mp.delta_k,
        sweep_rate_lab: sweep_rate,
        start_detuning_lab: start,
        end_detuning_lab: end,
        sweep_duration_lab: (end - start) / sweep_rate,
        theta_k: theta,
        rabi_lab: rabi,
    })
}
