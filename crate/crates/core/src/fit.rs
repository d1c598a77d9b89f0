//! Power-law and alpha fits with one-sigma uncertainties.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ai::{excitation_ai, excitation_ai_slope, AiScheme};
use crate::error::{Error, Result};

fn unit_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: f64,
    pub y: f64,
    /// Inverse variance; only relative values matter.
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

impl Sample {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y, weight: 1.0 }
    }

    pub fn weighted(x: f64, y: f64, weight: f64) -> Self {
        Self { x, y, weight }
    }
}

/// Inclusive abscissa range a fit is restricted to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub lo: f64,
    pub hi: f64,
}

impl FitWindow {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::invalid(format!("bad fit window [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.lo..=self.hi).contains(&x)
    }

    pub fn select(&self, samples: &[Sample]) -> Vec<Sample> {
        samples.iter().filter(|s| self.contains(s.x)).copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: BTreeMap<String, f64>,
    pub stderr: BTreeMap<String, f64>,
    /// `sqrt(sum w r^2)` in the space the fit was done in.
    pub residual_norm: f64,
    pub n_samples: usize,
}

impl FitResult {
    /// `(value, stderr)` of a named parameter.
    pub fn get(&self, name: &str) -> Option<(f64, f64)> {
        Some((*self.params.get(name)?, *self.stderr.get(name)?))
    }

    fn from_named(named: &[(&str, f64, f64)], residual_norm: f64, n_samples: usize) -> Self {
        Self {
            params: named.iter().map(|(n, v, _)| (n.to_string(), *v)).collect(),
            stderr: named.iter().map(|(n, _, s)| (n.to_string(), *s)).collect(),
            residual_norm,
            n_samples,
        }
    }
}

fn check_samples(samples: &[Sample], min: usize) -> Result<()> {
    if samples.len() < min {
        return Err(Error::invalid(format!("need at least {min} samples, got {}", samples.len())));
    }
    for s in samples {
        if !(s.weight.is_finite() && s.weight > 0.0) {
            return Err(Error::invalid(format!("weights must be positive, got {}", s.weight)));
        }
        if !(s.x.is_finite() && s.y.is_finite()) {
            return Err(Error::invalid(format!("non-finite sample ({}, {})", s.x, s.y)));
        }
    }
    Ok(())
}

/// Fits `y = A x^(-beta)` by weighted least squares on `(ln x, ln y)`.
///
/// Parameters are named `"A"` and `"beta"`. Standard errors come from the
/// linear-fit covariance scaled by the reduced chi-square; the error on `A`
/// is propagated from the intercept.
pub fn fit_power_law(samples: &[Sample]) -> Result<FitResult> {
    check_samples(samples, 3)?;
    if let Some(s) = samples.iter().find(|s| s.x <= 0.0 || s.y <= 0.0) {
        return Err(Error::invalid(format!(
            "power-law fit needs positive samples, got ({}, {})",
            s.x, s.y
        )));
    }
    let pts: Vec<(f64, f64, f64)> = samples.iter().map(|s| (s.x.ln(), s.y.ln(), s.weight)).collect();
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let mx = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let my = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    let spread = pts.iter().map(|p| (p.0 - mx).abs()).fold(0.0, f64::max);
    if spread <= 1e-12 * mx.abs().max(1.0) {
        return Err(Error::invalid("abscissas are degenerate; cannot fit a slope"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let chi2: f64 = pts.iter().map(|p| p.2 * (p.1 - intercept - slope * p.0).powi(2)).sum();
    let dof = (pts.len() - 2) as f64;
    let sigma2 = chi2 / dof;
    let var_slope = sigma2 / sxx;
    let var_intercept = sigma2 * (1.0 / sw + mx * mx / sxx);
    let a = intercept.exp();
    Ok(FitResult::from_named(
        &[("A", a, a * var_intercept.sqrt()), ("beta", -slope, var_slope.sqrt())],
        chi2.sqrt(),
        pts.len(),
    ))
}

const ALPHA_SCAN: (f64, f64, usize) = (1e-3, 1e3, 301);

struct AlphaObjective<'a> {
    scheme: AiScheme,
    samples: &'a [Sample],
}

impl AlphaObjective<'_> {
    fn value(&self, alpha: f64) -> f64 {
        self.samples
            .iter()
            .map(|s| s.weight * (s.y - excitation_ai(self.scheme, alpha * s.x)).powi(2))
            .sum()
    }

    fn slope(&self, alpha: f64) -> f64 {
        self.samples
            .iter()
            .map(|s| {
                let r = s.y - excitation_ai(self.scheme, alpha * s.x);
                -2.0 * s.weight * r * excitation_ai_slope(self.scheme, alpha * s.x) * s.x
            })
            .sum()
    }
}

/// Fits the freeze-out parameter `alpha` to samples of `(tau_q / tau0, D)`.
///
/// Minimizes `sum w (D - excitation_ai(scheme, alpha x))^2`: a log-spaced
/// scan over `alpha` in `[1e-3, 1e3]` brackets the minimum, then bisection
/// on the analytic derivative narrows it to 1e-12 relative. The standard
/// error uses the residual curvature and the reduced chi-square.
pub fn fit_alpha(scheme: AiScheme, samples: &[Sample]) -> Result<FitResult> {
    check_samples(samples, 3)?;
    if let Some(s) = samples.iter().find(|s| s.x <= 0.0 || !(0.0 < s.y && s.y < 1.0)) {
        return Err(Error::invalid(format!(
            "alpha fit needs x > 0 and D in (0, 1), got ({}, {})",
            s.x, s.y
        )));
    }
    let obj = AlphaObjective { scheme, samples };
    let (lo, hi, n) = ALPHA_SCAN;
    let grid = crate::ai::log_grid(lo, hi, n);
    let values: Vec<f64> = grid.iter().map(|&a| obj.value(a)).collect();
    let (best, &s_best) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty scan");
    let s_max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if s_max - s_best <= 1e-14 * s_max.max(f64::MIN_POSITIVE) {
        return Err(Error::Fit("residual is flat in alpha; no minimum to bracket".into()));
    }
    if best == 0 || best == n - 1 {
        return Err(Error::Fit(format!(
            "no bracket: residual keeps decreasing toward alpha = {}",
            grid[best]
        )));
    }

    let (mut a, mut b) = (grid[best - 1], grid[best + 1]);
    if obj.slope(a) >= 0.0 || obj.slope(b) <= 0.0 {
        // the minimum sits on a grid node or the slope is numerically flat there
        let (sa, sb) = (obj.slope(a), obj.slope(b));
        if !(sa <= 0.0 && sb >= 0.0) {
            return Err(Error::Fit(format!("no sign change of the residual slope in [{a}, {b}]")));
        }
    }
    while (b - a) > 1e-12 * b {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if obj.slope(mid) < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let alpha = 0.5 * (a + b);

    let h = 1e-5 * alpha;
    let curvature = (obj.slope(alpha + h) - obj.slope(alpha - h)) / (2.0 * h);
    let s_min = obj.value(alpha);
    let sigma2 = s_min / (samples.len() - 1) as f64;
    let stderr = if curvature > 0.0 { (2.0 * sigma2 / curvature).sqrt() } else { f64::INFINITY };
    Ok(FitResult::from_named(&[("alpha", alpha, stderr)], s_min.sqrt(), samples.len()))
}
