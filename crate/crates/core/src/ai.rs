//! Adiabatic-impulse closed forms for a single Landau-Zener crossing.
//!
//! Times here are in whatever unit `tau0` and `tau_q` share; only the ratio
//! `x_alpha = alpha * tau_q / tau0` enters the excitation probabilities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lz::{
    check_tol, excitation_probability, instantaneous_eigensystem, propagate_between,
};

/// Where the evolution starts relative to the anticrossing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AiScheme {
    /// Ground state prepared far before the anticrossing.
    A,
    /// Ground state prepared at the anticrossing center.
    B,
}

impl AiScheme {
    /// Freeze-out matching parameter predicted for this scheme.
    pub fn theory_alpha(self) -> f64 {
        match self {
            AiScheme::A => std::f64::consts::FRAC_PI_2,
            AiScheme::B => std::f64::consts::FRAC_PI_4,
        }
    }
}

impl std::str::FromStr for AiScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(AiScheme::A),
            "B" | "b" => Ok(AiScheme::B),
            other => Err(Error::invalid(format!("unknown scheme {other:?}, expected A or B"))),
        }
    }
}

impl std::fmt::Display for AiScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AiScheme::A => "A",
            AiScheme::B => "B",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AiParams {
    /// Inverse Rabi frequency.
    pub tau0: f64,
    /// Quench time, the inverse sweep rate.
    pub tau_q: f64,
    pub alpha: f64,
}

impl AiParams {
    pub fn new(tau0: f64, tau_q: f64, alpha: f64) -> Result<Self> {
        for (name, v) in [("tau0", tau0), ("tau_q", tau_q), ("alpha", alpha)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self { tau0, tau_q, alpha })
    }

    pub fn x_alpha(&self) -> f64 {
        self.alpha * self.tau_q / self.tau0
    }
}

/// Inverse instantaneous gap `tau0 / sqrt(1 + (t/tau_q)^2)`.
pub fn relaxation_time(t: f64, params: &AiParams) -> f64 {
    params.tau0 / (t / params.tau_q).hypot(1.0)
}

// u = (t_hat / tau_q)^2 solves u^2 + u = 1/x^2; the rationalized form avoids
// cancellation for large x.
fn freeze_out_u(x: f64) -> f64 {
    let r = 4.0 / (x * x);
    0.5 * r / (1.0 + (1.0 + r).sqrt())
}

/// Positive root of `relaxation_time(t) = alpha * t`.
pub fn freeze_out_time(params: &AiParams) -> f64 {
    params.tau_q * freeze_out_u(params.x_alpha()).sqrt()
}

/// Same root by bisection on the defining equation; independent of the
/// closed form above.
pub fn freeze_out_time_bisect(params: &AiParams) -> f64 {
    let f = |t: f64| relaxation_time(t, params) - params.alpha * t;
    // f(0) = tau0 > 0 and f(tau0/alpha) <= 0
    let (mut lo, mut hi) = (0.0, params.tau0 / params.alpha);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `P(x) = x^2 + x sqrt(x^2 + 4) + 2`.
pub fn p_helper(x_alpha: f64) -> f64 {
    let x = x_alpha;
    x * x + x * (x * x + 4.0).sqrt() + 2.0
}

/// Final-time excitation probability predicted by the adiabatic-impulse picture.
pub fn excitation_ai(scheme: AiScheme, x_alpha: f64) -> f64 {
    let two_over_p = 2.0 / p_helper(x_alpha);
    match scheme {
        AiScheme::A => two_over_p,
        AiScheme::B => 0.5 * (1.0 - (1.0 - two_over_p).max(0.0).sqrt()),
    }
}

/// Derivative of [`excitation_ai`] with respect to `x_alpha` (for `x > 0`).
pub(crate) fn excitation_ai_slope(scheme: AiScheme, x: f64) -> f64 {
    let root = (x * x + 4.0).sqrt();
    let p = p_helper(x);
    let dp = 2.0 * x + root + x * x / root;
    match scheme {
        AiScheme::A => -2.0 * dp / (p * p),
        AiScheme::B => -dp / (2.0 * p * p * (1.0 - 2.0 / p).sqrt()),
    }
}

/// Excitation probability built from the frozen-state picture: the state at
/// the start of the impulse region is carried unchanged to `+t_hat` and
/// projected onto the instantaneous excited state there.
///
/// Scheme A freezes the ground state at `-t_hat`; scheme B freezes the ground
/// state at the anticrossing, where the evolution starts.
pub fn excitation_ai_overlap(params: &AiParams, scheme: AiScheme) -> f64 {
    let t_hat = freeze_out_time(params);
    // lab time -> dimensionless: tau = t / tau0, delta = tau0 / tau_q
    let delta = params.tau0 / params.tau_q;
    let tau_hat = t_hat / params.tau0;
    let frozen_at = match scheme {
        AiScheme::A => -tau_hat,
        AiScheme::B => 0.0,
    };
    let frozen = instantaneous_eigensystem(frozen_at, delta).ground;
    let excited = instantaneous_eigensystem(tau_hat, delta).excited;
    excited.fidelity(&frozen)
}

/// Detuning half-width `|Delta tau|` used by [`excitation_exact`] scans.
pub const DEFAULT_SCAN_WINDOW: f64 = 100.0;

/// Quench times `tau_q / tau0` of the default alpha-fit scan: 8 log-spaced
/// points over `[0.05, 0.5]`.
pub fn default_scan_grid() -> Vec<f64> {
    log_grid(0.05, 0.5, 8)
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| match i {
                    0 => lo,
                    _ if i == n - 1 => hi,
                    _ => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
                })
                .collect()
        }
    }
}

/// Excitation probability from integrating the Landau-Zener equation.
///
/// `tau_ratio = tau_q / tau0`, so the dimensionless sweep rate is
/// `1 / tau_ratio`. The evolution ends at detuning `+window` and starts in
/// the ground state at `-window` (scheme A) or at the anticrossing
/// (scheme B).
pub fn excitation_exact(scheme: AiScheme, tau_ratio: f64, window: f64, tol: f64) -> Result<f64> {
    if !(tau_ratio.is_finite() && tau_ratio > 0.0) {
        return Err(Error::invalid(format!("tau_q/tau0 must be positive, got {tau_ratio}")));
    }
    if !(window.is_finite() && window > 0.0) {
        return Err(Error::invalid(format!("window must be positive, got {window}")));
    }
    check_tol(tol)?;
    let delta = tau_ratio.recip();
    let tau_end = window / delta;
    let tau_start = match scheme {
        AiScheme::A => -tau_end,
        AiScheme::B => 0.0,
    };
    let ground = instantaneous_eigensystem(tau_start, delta).ground;
    let fin = propagate_between(&ground, delta, tau_start, tau_end, tol)?;
    Ok(excitation_probability(&fin, tau_end, delta))
}
