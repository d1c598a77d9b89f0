//! The driven two-level (Landau-Zener) system in units hbar = J = 1:
//!
//! ```text
//! H(tau) = 1/2 [[delta * tau, 1], [1, -delta * tau]]
//! ```
//!
//! Propagation integrates the Schrodinger equation in the adiabatic frame with
//! the dynamical phase removed analytically. Writing
//! `psi = a_g e^{iF/2} |g(tau)> + a_e e^{-iF/2} |e(tau)>` with
//! `F(tau) = int_0^tau gap` gives
//!
//! ```text
//! da_g/dtau = -(beta'/2) a_e e^{-iF}
//! da_e/dtau = +(beta'/2) a_g e^{+iF}
//! ```
//!
//! where `beta = atan2(1, delta*tau)` is the mixing angle. The coupling
//! `beta' = -delta / gap^2` decays in the far-detuned tails, so the
//! adaptive stepper only works hard near the anticrossing. The transformation
//! is exact; no adiabatic approximation is made.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::DormandPrince;

/// Default relative integration tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

const NORM_SLACK: f64 = 1e-9;

/// Real symmetric 2x2 matrix, row-major.
pub type Mat2 = [[f64; 2]; 2];

/// Normalized two-level state in the sigma_z basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelState {
    /// sigma_z = +1 amplitude.
    pub up: C64,
    /// sigma_z = -1 amplitude.
    pub down: C64,
}

impl TwoLevelState {
    /// Builds a state, rejecting amplitudes whose norm is off by more than 1e-9.
    pub fn new(up: C64, down: C64) -> Result<Self> {
        let state = Self { up, down };
        let n = state.norm_sqr();
        if !n.is_finite() || (n - 1.0).abs() > NORM_SLACK {
            return Err(Error::invalid(format!("two-level state has norm^2 {n}, expected 1")));
        }
        Ok(state)
    }

    /// Rescales arbitrary non-zero amplitudes to unit norm.
    pub fn normalized(up: C64, down: C64) -> Result<Self> {
        let n = (up.norm_sqr() + down.norm_sqr()).sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::invalid("cannot normalize a zero or non-finite state"));
        }
        Ok(Self { up: up / n, down: down / n })
    }

    pub fn spin_up() -> Self {
        Self { up: C64::new(1.0, 0.0), down: C64::new(0.0, 0.0) }
    }

    pub fn spin_down() -> Self {
        Self { up: C64::new(0.0, 0.0), down: C64::new(1.0, 0.0) }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.up.norm_sqr() + self.down.norm_sqr()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.up.conj() * other.up + self.down.conj() * other.down
    }

    pub fn fidelity(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Removes the global phase: the first component of largest magnitude
    /// becomes real and non-negative. Magnitudes equal to 1e-12 count as tied.
    pub fn canonicalized(&self) -> Self {
        let (mu, md) = (self.up.norm(), self.down.norm());
        let pivot = if md > mu * (1.0 + 1e-12) { self.down } else { self.up };
        if pivot.norm() == 0.0 {
            return *self;
        }
        let rot = pivot.conj() / pivot.norm();
        Self { up: self.up * rot, down: self.down * rot }
    }
}

/// Parameters of one Landau-Zener sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LzParams {
    pub delta: f64,
    pub tau_start: f64,
    pub tau_end: f64,
    pub tol: f64,
}

impl LzParams {
    pub fn new(delta: f64, tau_start: f64, tau_end: f64, tol: f64) -> Result<Self> {
        let p = Self { delta, tau_start, tau_end, tol };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_delta(self.delta)?;
        if !(self.tau_start.is_finite() && self.tau_end.is_finite()) {
            return Err(Error::invalid("sweep window must be finite"));
        }
        if self.tau_start > self.tau_end {
            return Err(Error::invalid(format!(
                "tau_start {} exceeds tau_end {}",
                self.tau_start, self.tau_end
            )));
        }
        check_tol(self.tol)
    }
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::invalid(format!("sweep rate delta must be positive, got {delta}")));
    }
    Ok(())
}

pub(crate) fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol <= 1e-4) {
        return Err(Error::invalid(format!("tolerance must lie in (0, 1e-4], got {tol}")));
    }
    Ok(())
}

pub fn hamiltonian_lz(tau: f64, delta: f64) -> Mat2 {
    let d = 0.5 * delta * tau;
    [[d, 0.5], [0.5, -d]]
}

/// Instantaneous eigenbasis of [`hamiltonian_lz`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigensystem {
    pub ground: TwoLevelState,
    pub excited: TwoLevelState,
    /// Level splitting `sqrt(1 + (delta*tau)^2)`.
    pub gap: f64,
}

pub fn instantaneous_eigensystem(tau: f64, delta: f64) -> Eigensystem {
    let (c, s) = half_angles(delta * tau);
    let excited = TwoLevelState { up: C64::new(c, 0.0), down: C64::new(s, 0.0) };
    let ground = TwoLevelState { up: C64::new(-s, 0.0), down: C64::new(c, 0.0) }.canonicalized();
    Eigensystem { ground, excited, gap: gap(delta * tau) }
}

/// `|<excited(tau)|state>|^2`, clamped to [0, 1].
pub fn excitation_probability(state: &TwoLevelState, tau: f64, delta: f64) -> f64 {
    let (c, s) = half_angles(delta * tau);
    let amp = c * state.up + s * state.down;
    (amp.norm_sqr() / state.norm_sqr()).clamp(0.0, 1.0)
}

/// Asymptotic Zener excitation probability `exp(-pi / (2 delta))`.
pub fn zener_probability(delta: f64) -> f64 {
    (-std::f64::consts::PI / (2.0 * delta)).exp()
}

/// Propagates `state` across the window in `params`.
pub fn propagate(state: &TwoLevelState, params: &LzParams) -> Result<TwoLevelState> {
    params.validate()?;
    propagate_between(state, params.delta, params.tau_start, params.tau_end, params.tol)
}

/// Like [`propagate`] but accepts either time direction.
pub fn propagate_between(
    state: &TwoLevelState,
    delta: f64,
    from: f64,
    to: f64,
    tol: f64,
) -> Result<TwoLevelState> {
    check_delta(delta)?;
    check_tol(tol)?;
    if from == to {
        return Ok(*state);
    }
    let frame = AdiabaticFrame { delta };
    let mut amps = frame.to_adiabatic(state, from);
    frame.integrate(&mut amps, from, to, tol)?;
    Ok(frame.from_adiabatic(&amps, to))
}

/// Samples the state at every time in `taus` (which must be monotone),
/// starting from `state` at `taus[0]`.
pub fn trajectory(
    state: &TwoLevelState,
    delta: f64,
    taus: &[f64],
    tol: f64,
) -> Result<Vec<TwoLevelState>> {
    check_delta(delta)?;
    check_tol(tol)?;
    let Some(&first) = taus.first() else {
        return Ok(Vec::new());
    };
    let frame = AdiabaticFrame { delta };
    let mut amps = frame.to_adiabatic(state, first);
    let mut out = Vec::with_capacity(taus.len());
    out.push(*state);
    for w in taus.windows(2) {
        frame.integrate(&mut amps, w[0], w[1], tol)?;
        out.push(frame.from_adiabatic(&amps, w[1]));
    }
    Ok(out)
}

fn gap(x: f64) -> f64 {
    x.hypot(1.0)
}

// (cos(beta/2), sin(beta/2)) with beta = atan2(1, x) in (0, pi)
fn half_angles(x: f64) -> (f64, f64) {
    let (s, c) = (0.5 * 1f64.atan2(x)).sin_cos();
    (c, s)
}

struct AdiabaticFrame {
    delta: f64,
}

impl AdiabaticFrame {
    // F(tau) = int_0^tau sqrt(1 + (delta s)^2) ds
    fn dynamic_phase(&self, tau: f64) -> f64 {
        let x = self.delta * tau;
        0.5 * (tau * gap(x) + x.asinh() / self.delta)
    }

    fn to_adiabatic(&self, state: &TwoLevelState, tau: f64) -> [C64; 2] {
        let (c, s) = half_angles(self.delta * tau);
        let half = C64::from_polar(1.0, -0.5 * self.dynamic_phase(tau));
        let on_ground = -s * state.up + c * state.down;
        let on_excited = c * state.up + s * state.down;
        [on_ground * half, on_excited * half.conj()]
    }

    fn from_adiabatic(&self, amps: &[C64; 2], tau: f64) -> TwoLevelState {
        let (c, s) = half_angles(self.delta * tau);
        let half = C64::from_polar(1.0, 0.5 * self.dynamic_phase(tau));
        let g = amps[0] * half;
        let e = amps[1] * half.conj();
        TwoLevelState { up: -s * g + c * e, down: c * g + s * e }
    }

    fn integrate(&self, amps: &mut [C64; 2], from: f64, to: f64, tol: f64) -> Result<()> {
        let delta = self.delta;
        let rhs = |tau: f64, a: &[C64], da: &mut [C64]| {
            let x = delta * tau;
            let half_beta_dot = -0.5 * delta / (1.0 + x * x);
            let rot = C64::from_polar(half_beta_dot, self.dynamic_phase(tau));
            da[0] = -a[1] * rot.conj();
            da[1] = a[0] * rot;
        };
        DormandPrince::new(tol, 1e-2 * tol)
            .integrate(rhs, from, to, amps)
            .map(|_| ())
            .map_err(Error::from_ode)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn ground_at(tau: f64, delta: f64) -> TwoLevelState {
        instantaneous_eigensystem(tau, delta).ground
    }

    // Direct RK integration of the bare sigma_z-basis equation, used as an
    // independent check on the adiabatic-frame transformation.
    fn propagate_lab_frame(state: &TwoLevelState, delta: f64, from: f64, to: f64) -> TwoLevelState {
        let mut y = [state.up, state.down];
        let rhs = |tau: f64, y: &[C64], dy: &mut [C64]| {
            let h = hamiltonian_lz(tau, delta);
            let mi = C64::new(0.0, -1.0);
            dy[0] = mi * (h[0][0] * y[0] + h[0][1] * y[1]);
            dy[1] = mi * (h[1][0] * y[0] + h[1][1] * y[1]);
        };
        DormandPrince::new(1e-12, 1e-14).integrate(rhs, from, to, &mut y).unwrap();
        TwoLevelState { up: y[0], down: y[1] }
    }

    #[test]
    fn hamiltonian_examples() {
        assert_eq!(hamiltonian_lz(0.0, 1.0), [[0.0, 0.5], [0.5, 0.0]]);
        assert_eq!(hamiltonian_lz(2.0, 0.5), [[0.5, 0.5], [0.5, -0.5]]);
        let neg = hamiltonian_lz(-2.0, 0.5);
        assert_eq!(neg, [[-0.5, 0.5], [0.5, 0.5]]);
        let h = hamiltonian_lz(1.3, 0.7);
        assert_eq!(h[0][1], h[1][0]);
        assert_eq!(h[0][0] + h[1][1], 0.0);
    }

    #[test]
    fn eigensystem_at_crossing() {
        for delta in [0.01, 1.0, 40.0] {
            let es = instantaneous_eigensystem(0.0, delta);
            assert_abs_diff_eq!(es.gap, 1.0);
            let r = std::f64::consts::FRAC_1_SQRT_2;
            assert_abs_diff_eq!(es.ground.up.re, r, epsilon = 1e-15);
            assert_abs_diff_eq!(es.ground.down.re, -r, epsilon = 1e-15);
        }
    }

    #[test]
    fn eigensystem_values() {
        let es = instantaneous_eigensystem(3.0, 1.0);
        assert_abs_diff_eq!(es.gap, 10f64.sqrt(), epsilon = 1e-14);
        // H e = +gap/2 e and H g = -gap/2 g
        let h = hamiltonian_lz(3.0, 1.0);
        for (v, lam) in [(es.excited, 0.5 * es.gap), (es.ground, -0.5 * es.gap)] {
            let hv0 = h[0][0] * v.up + h[0][1] * v.down;
            let hv1 = h[1][0] * v.up + h[1][1] * v.down;
            assert!((hv0 - lam * v.up).norm() < 1e-14);
            assert!((hv1 - lam * v.down).norm() < 1e-14);
        }
        assert!(es.ground.inner(&es.excited).norm() < 1e-15);

        let far = instantaneous_eigensystem(1e8, 1.0);
        assert!(far.ground.fidelity(&TwoLevelState::spin_down()) > 1.0 - 1e-12);
    }

    #[test]
    fn canonical_phase() {
        let s = TwoLevelState::normalized(C64::new(0.0, -0.3), C64::new(0.0, 0.9)).unwrap();
        let c = s.canonicalized();
        assert!(c.down.im.abs() < 1e-15 && c.down.re > 0.0);
        assert_abs_diff_eq!(c.fidelity(&s), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_unnormalized_and_bad_params() {
        assert!(TwoLevelState::new(C64::new(1.0, 0.0), C64::new(0.1, 0.0)).is_err());
        assert!(LzParams::new(0.0, -1.0, 1.0, 1e-10).is_err());
        assert!(LzParams::new(1.0, 1.0, -1.0, 1e-10).is_err());
        assert!(LzParams::new(1.0, -1.0, 1.0, 1e-3).is_err());
        assert!(LzParams::new(1.0, 2.0, 2.0, 1e-10).is_ok());
    }

    #[test]
    fn excitation_probability_examples() {
        let es = instantaneous_eigensystem(0.7, 1.9);
        assert_abs_diff_eq!(excitation_probability(&es.excited, 0.7, 1.9), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(excitation_probability(&es.ground, 0.7, 1.9), 0.0, epsilon = 1e-14);
        let sup = TwoLevelState::normalized(
            es.ground.up + es.excited.up,
            es.ground.down + es.excited.down,
        )
        .unwrap();
        assert_abs_diff_eq!(excitation_probability(&sup, 0.7, 1.9), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn zener_examples() {
        assert_abs_diff_eq!(zener_probability(1e12), 1.0, epsilon = 1e-11);
        let half = std::f64::consts::PI / (2.0 * std::f64::consts::LN_2);
        assert_abs_diff_eq!(zener_probability(half), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(zener_probability(0.25), 1.8674427317079893e-3, epsilon = 1e-15);
    }

    #[test]
    fn zener_limit_reproduced() {
        let p = LzParams::new(1.0, -200.0, 200.0, DEFAULT_TOL).unwrap();
        let out = propagate(&ground_at(-200.0, 1.0), &p).unwrap();
        let pe = excitation_probability(&out, 200.0, 1.0);
        assert!((pe - (-std::f64::consts::FRAC_PI_2).exp()).abs() < 1e-3, "{pe}");
    }

    #[test]
    fn adiabatic_limit() {
        let p = LzParams::new(0.01, -200.0, 200.0, DEFAULT_TOL).unwrap();
        let out = propagate(&ground_at(-200.0, 0.01), &p).unwrap();
        assert!(excitation_probability(&out, 200.0, 0.01) < 1e-4);
    }

    #[test]
    fn zero_window_is_identity() {
        let s = ground_at(-3.0, 0.5);
        let p = LzParams::new(0.5, 4.0, 4.0, DEFAULT_TOL).unwrap();
        assert_eq!(propagate(&s, &p).unwrap(), s);
    }

    #[test]
    fn agrees_with_lab_frame_integration() {
        let start = TwoLevelState::normalized(C64::new(0.3, 0.2), C64::new(-0.5, 0.7)).unwrap();
        for (delta, a, b) in [(0.4, -30.0, 25.0), (3.0, -5.0, 8.0), (1.0, 2.0, -6.0)] {
            let ours = propagate_between(&start, delta, a, b, 1e-11).unwrap();
            let lab = propagate_lab_frame(&start, delta, a, b);
            assert!((ours.up - lab.up).norm() < 1e-8, "delta={delta}");
            assert!((ours.down - lab.down).norm() < 1e-8, "delta={delta}");
        }
    }

    #[test]
    fn trajectory_endpoints_match_propagate() {
        let s = ground_at(-50.0, 0.8);
        let taus: Vec<f64> = (0..=20).map(|i| -50.0 + 5.0 * i as f64).collect();
        let traj = trajectory(&s, 0.8, &taus, DEFAULT_TOL).unwrap();
        assert_eq!(traj.len(), taus.len());
        assert_eq!(traj[0], s);
        let direct = propagate_between(&s, 0.8, -50.0, 50.0, DEFAULT_TOL).unwrap();
        assert!(traj.last().unwrap().fidelity(&direct) > 1.0 - 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn norm_is_conserved(
            delta in 0.05f64..8.0,
            a in -60.0f64..0.0,
            len in 0.0f64..120.0,
            th in 0.0f64..std::f64::consts::PI,
            ph in 0.0f64..std::f64::consts::TAU,
        ) {
            let tol = DEFAULT_TOL;
            let s = TwoLevelState::new(
                C64::new((th / 2.0).cos(), 0.0),
                C64::from_polar((th / 2.0).sin(), ph),
            ).unwrap();
            let p = LzParams::new(delta, a, a + len, tol).unwrap();
            let out = propagate(&s, &p).unwrap();
            prop_assert!((out.norm_sqr().sqrt() - 1.0).abs() <= 10.0 * tol);
        }

        #[test]
        fn forward_then_backward_returns(
            delta in 0.05f64..8.0,
            a in -60.0f64..0.0,
            len in 0.0f64..120.0,
        ) {
            let tol = DEFAULT_TOL;
            let s = ground_at(a, delta);
            let fwd = propagate_between(&s, delta, a, a + len, tol).unwrap();
            let back = propagate_between(&fwd, delta, a + len, a, tol).unwrap();
            prop_assert!(back.fidelity(&s) >= 1.0 - 100.0 * tol);
        }
    }
}
