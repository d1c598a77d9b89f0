//! Brute-force state-vector evolution of the full periodic Ising chain
//!
//! ```text
//! H(g) = -sum_n [ g sigma^x_n + sigma^z_n sigma^z_{n+1} ],   sigma_{N+1} = sigma_1
//! ```
//!
//! used to check the momentum-space decomposition. Basis index bit `n` set
//! means spin `n` points down (`sigma^z_n = -1`). Nothing here relies on the
//! Jordan-Wigner mapping.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lz::{check_tol, DEFAULT_TOL};
use crate::ode::{DormandPrince, OdeFailure};
use crate::tfim::{kink_density, ChainSpec, DEFAULT_G_START};

/// Largest chain the oracle accepts (Hilbert space 4096).
pub const MAX_SPINS: usize = 12;

const LANCZOS_DIM: usize = 80;
const LANCZOS_RESTARTS: usize = 200;
const EIGEN_RESIDUAL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    pub amplitudes: Vec<C64>,
    pub n_spins: usize,
}

impl DenseState {
    pub fn from_amplitudes(n_spins: usize, amplitudes: Vec<C64>) -> Result<Self> {
        check_spins(n_spins)?;
        if amplitudes.len() != 1 << n_spins {
            return Err(Error::invalid(format!(
                "expected {} amplitudes for {n_spins} spins, got {}",
                1usize << n_spins,
                amplitudes.len()
            )));
        }
        let state = Self { amplitudes, n_spins };
        let n = state.norm();
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("dense state has norm {n}")));
        }
        Ok(state)
    }

    /// Computational basis state; bit `n` of `index` set means spin `n` down.
    pub fn basis(n_spins: usize, index: usize) -> Result<Self> {
        check_spins(n_spins)?;
        let mut amplitudes = vec![C64::default(); 1 << n_spins];
        let slot = amplitudes
            .get_mut(index)
            .ok_or_else(|| Error::invalid(format!("basis index {index} out of range")))?;
        *slot = C64::new(1.0, 0.0);
        Ok(Self { amplitudes, n_spins })
    }

    pub fn all_up(n_spins: usize) -> Result<Self> {
        Self::basis(n_spins, 0)
    }

    /// Alternating `up, down, up, ...`.
    pub fn neel(n_spins: usize) -> Result<Self> {
        let index = (0..n_spins).filter(|i| i % 2 == 1).fold(0, |acc, i| acc | (1 << i));
        Self::basis(n_spins, index)
    }

    /// Product of sigma^x = +1 eigenstates.
    pub fn paramagnet(n_spins: usize) -> Result<Self> {
        check_spins(n_spins)?;
        let dim = 1usize << n_spins;
        let amp = C64::new((dim as f64).sqrt().recip(), 0.0);
        Ok(Self { amplitudes: vec![amp; dim], n_spins })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    /// `<prod_n sigma^x_n>`; global spin flip maps index `x` to `x ^ (2^N - 1)`.
    pub fn parity(&self) -> f64 {
        let mask = self.dim() - 1;
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(x, a)| (a.conj() * self.amplitudes[x ^ mask]).re)
            .sum()
    }
}

fn check_spins(n_spins: usize) -> Result<()> {
    if n_spins < 2 || n_spins % 2 != 0 || n_spins > MAX_SPINS {
        return Err(Error::invalid(format!(
            "oracle chains need an even N in [2, {MAX_SPINS}], got {n_spins}"
        )));
    }
    Ok(())
}

// sum_n s_n s_{n+1} for basis index x: N minus twice the number of broken bonds
fn bond_sum(x: usize, n: usize) -> f64 {
    n as f64 - 2.0 * broken_bonds(x, n) as f64
}

fn broken_bonds(x: usize, n: usize) -> u32 {
    let mask = (1usize << n) - 1;
    let rotated = ((x >> 1) | (x << (n - 1))) & mask;
    (x ^ rotated).count_ones()
}

struct Hamiltonian {
    n: usize,
    diag: Vec<f64>,
}

impl Hamiltonian {
    fn new(n: usize) -> Self {
        let diag = (0..1usize << n).map(|x| -bond_sum(x, n)).collect();
        Self { n, diag }
    }

    fn apply<T>(&self, g: f64, psi: &[T], out: &mut [T])
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Sub<Output = T>,
    {
        for (x, o) in out.iter_mut().enumerate() {
            let mut acc = psi[x] * self.diag[x];
            for bit in 0..self.n {
                acc = acc - psi[x ^ (1 << bit)] * g;
            }
            *o = acc;
        }
    }
}

/// `H(g) psi` without materializing the matrix.
pub fn apply_hamiltonian(state: &DenseState, g: f64) -> Vec<C64> {
    let h = Hamiltonian::new(state.n_spins);
    let mut out = vec![C64::default(); state.dim()];
    h.apply(g, &state.amplitudes, &mut out);
    out
}

/// `<psi|H(g)|psi>`.
pub fn energy(state: &DenseState, g: f64) -> f64 {
    let h_psi = apply_hamiltonian(state, g);
    state.amplitudes.iter().zip(&h_psi).map(|(a, b)| (a.conj() * b).re).sum()
}

fn project_even(v: &mut [f64]) {
    let mask = v.len() - 1;
    for x in 0..v.len() {
        let y = x ^ mask;
        if x < y {
            let avg = 0.5 * (v[x] + v[y]);
            v[x] = avg;
            v[y] = avg;
        }
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.iter_mut().for_each(|a| *a /= n);
    n
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lowest even-parity eigenvector of `H(g)` by restarted Lanczos.
///
/// The start vector is the sigma^x product state, which is even and has
/// positive overlap with the (stoquastic) ground state. Even-sector
/// projection at each restart picks the even member of the ferromagnetic
/// doublet for `g < 1`. The returned vector has its largest amplitude real
/// and positive; its residual `||H psi - E psi||` is below 1e-10.
pub fn ground_state(n_spins: usize, g: f64) -> Result<DenseState> {
    check_spins(n_spins)?;
    if !(g.is_finite() && g >= 0.0) {
        return Err(Error::invalid(format!("field g must be non-negative, got {g}")));
    }
    let h = Hamiltonian::new(n_spins);
    let dim = 1usize << n_spins;
    let krylov = LANCZOS_DIM.min(dim / 2 + 1);

    let mut x = vec![(dim as f64).sqrt().recip(); dim];
    let mut hx = vec![0.0; dim];
    for _ in 0..LANCZOS_RESTARTS {
        let mut basis: Vec<Vec<f64>> = vec![x.clone()];
        let mut alphas = Vec::with_capacity(krylov);
        let mut betas: Vec<f64> = Vec::with_capacity(krylov);
        let mut w = vec![0.0; dim];
        for j in 0..krylov {
            h.apply(g, &basis[j], &mut w);
            let alpha = dot(&w, &basis[j]);
            alphas.push(alpha);
            // full reorthogonalization, twice
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(&w, b);
                    w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= c * bi);
                }
            }
            let beta = w.iter().map(|a| a * a).sum::<f64>().sqrt();
            if j + 1 == krylov || beta < 1e-12 {
                break;
            }
            betas.push(beta);
            basis.push(w.iter().map(|a| a / beta).collect());
        }

        let m = alphas.len();
        let t = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                alphas[i]
            } else if i + 1 == j {
                betas[i]
            } else if j + 1 == i {
                betas[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let lowest = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .expect("non-empty Krylov space");
        let coeffs = eig.eigenvectors.column(lowest);

        x.iter_mut().for_each(|a| *a = 0.0);
        for (c, b) in coeffs.iter().zip(&basis) {
            x.iter_mut().zip(b).for_each(|(xi, bi)| *xi += c * bi);
        }
        project_even(&mut x);
        normalize(&mut x);

        h.apply(g, &x, &mut hx);
        let e = dot(&x, &hx);
        let residual = hx.iter().zip(&x).map(|(a, b)| (a - e * b).powi(2)).sum::<f64>().sqrt();
        if residual <= EIGEN_RESIDUAL {
            let pivot = x.iter().copied().max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap_or(1.0);
            let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
            let amplitudes = x.iter().map(|&a| C64::new(sign * a, 0.0)).collect();
            return Ok(DenseState { amplitudes, n_spins });
        }
    }
    Err(Error::invalid(format!(
        "Lanczos did not reach residual {EIGEN_RESIDUAL} for N = {n_spins}, g = {g}"
    )))
}

/// Per-site expectation of the kink projector `(1 - sigma^z_n sigma^z_{n+1}) / 2`.
pub fn kink_density_dense(state: &DenseState) -> f64 {
    let n = state.n_spins;
    let total: f64 = state
        .amplitudes
        .iter()
        .enumerate()
        .map(|(x, a)| a.norm_sqr() * broken_bonds(x, n) as f64)
        .sum();
    total / n as f64
}

/// Kink probability of every bond `(n, n+1)` separately.
pub fn bond_kink_probabilities(state: &DenseState) -> Vec<f64> {
    let n = state.n_spins;
    (0..n)
        .map(|bond| {
            let next = (bond + 1) % n;
            state
                .amplitudes
                .iter()
                .enumerate()
                .filter(|(x, _)| ((x >> bond) ^ (x >> next)) & 1 == 1)
                .map(|(_, a)| a.norm_sqr())
                .sum()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub n_spins: usize,
    pub g_start: f64,
    pub tau_q: f64,
    pub tol: f64,
}

impl OracleConfig {
    pub fn new(n_spins: usize, tau_q: f64) -> Result<Self> {
        let c = Self { n_spins, g_start: DEFAULT_G_START, tau_q, tol: DEFAULT_TOL };
        c.validate()?;
        Ok(c)
    }

    pub fn with_g_start(self, g_start: f64) -> Result<Self> {
        let c = Self { g_start, ..self };
        c.validate()?;
        Ok(c)
    }

    pub fn with_tol(self, tol: f64) -> Result<Self> {
        let c = Self { tol, ..self };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        check_spins(self.n_spins)?;
        if !(self.g_start.is_finite() && self.g_start > 1.0) {
            return Err(Error::invalid(format!("g_start must exceed 1, got {}", self.g_start)));
        }
        if !(self.tau_q.is_finite() && self.tau_q > 0.0) {
            return Err(Error::invalid(format!("tau_q must be positive, got {}", self.tau_q)));
        }
        check_tol(self.tol)
    }

    pub fn t_start(&self) -> f64 {
        -self.g_start * self.tau_q
    }

    pub fn field_at(&self, t: f64) -> f64 {
        -t / self.tau_q
    }
}

/// Quenches `g` linearly from `g_start` to 0 starting in the ground state.
pub fn evolve_quench(config: &OracleConfig) -> Result<DenseState> {
    let mut out = evolve_quench_checkpoints(config, 1)?;
    Ok(out.pop().expect("one checkpoint").1)
}

/// As [`evolve_quench`], also returning the state at `checkpoints` evenly
/// spaced times after the start (the last one at `t = 0`).
pub fn evolve_quench_checkpoints(
    config: &OracleConfig,
    checkpoints: usize,
) -> Result<Vec<(f64, DenseState)>> {
    config.validate()?;
    if checkpoints == 0 {
        return Err(Error::invalid("need at least one checkpoint"));
    }
    let h = Hamiltonian::new(config.n_spins);
    let mut psi = ground_state(config.n_spins, config.g_start)?.amplitudes;
    let stepper = DormandPrince::new(1e-2 * config.tol, 1e-4 * config.tol);
    let tau_q = config.tau_q;
    let rhs = |t: f64, y: &[C64], dy: &mut [C64]| {
        h.apply(-t / tau_q, y, dy);
        dy.iter_mut().for_each(|d| *d = C64::new(d.im, -d.re));
    };

    let t0 = config.t_start();
    let mut out = Vec::with_capacity(checkpoints);
    let mut t = t0;
    for i in 1..=checkpoints {
        let next = if i == checkpoints { 0.0 } else { t0 * (1.0 - i as f64 / checkpoints as f64) };
        stepper.integrate(rhs, t, next, &mut psi).map_err(|f| {
            let (at, reason) = match f {
                OdeFailure::StepUnderflow { t } => (t, "step size underflow"),
                OdeFailure::StepBudget { t } => (t, "step budget exhausted"),
            };
            Error::QuenchFailure { t: at, g: config.field_at(at), reason: reason.into() }
        })?;
        t = next;
        out.push((t, DenseState { amplitudes: psi.clone(), n_spins: config.n_spins }));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionCheck {
    pub config: OracleConfig,
    pub n_dense: f64,
    pub n_momentum: f64,
    pub diff: f64,
}

/// Runs the dense oracle and the momentum-space pipeline on the same quench.
pub fn decomposition_check(config: &OracleConfig) -> Result<DecompositionCheck> {
    config.validate()?;
    let n_dense = kink_density_dense(&evolve_quench(config)?);
    let chain = ChainSpec::new(config.n_spins, config.tau_q)?
        .with_g_start(config.g_start)?
        .with_tol(config.tol)?;
    let n_momentum = kink_density(&chain)?.n_ex;
    Ok(DecompositionCheck { config: *config, n_dense, n_momentum, diff: (n_dense - n_momentum).abs() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_matrix(n: usize, g: f64) -> DMatrix<f64> {
        let dim = 1usize << n;
        let mut m = DMatrix::zeros(dim, dim);
        for x in 0..dim {
            let mut bonds = 0.0;
            for i in 0..n {
                let si = if (x >> i) & 1 == 0 { 1.0 } else { -1.0 };
                let sj = if (x >> ((i + 1) % n)) & 1 == 0 { 1.0 } else { -1.0 };
                bonds += si * sj;
                m[(x ^ (1 << i), x)] -= g;
            }
            m[(x, x)] -= bonds;
        }
        m
    }

    fn random_state(n: usize, rng: &mut ChaCha8Rng) -> DenseState {
        let amps: Vec<C64> =
            (0..1 << n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        DenseState::from_amplitudes(n, amps.into_iter().map(|a| a / norm).collect()).unwrap()
    }

    #[test]
    fn two_site_ferromagnet_energy() {
        let s = DenseState::all_up(2).unwrap();
        let hs = apply_hamiltonian(&s, 0.0);
        assert_eq!(hs[0], C64::new(-2.0, 0.0));
        assert!(hs[1..].iter().all(|a| *a == C64::default()));
    }

    #[test]
    fn field_term_dominates() {
        let s = DenseState::paramagnet(4).unwrap();
        let g = 1e6;
        let e = energy(&s, g);
        assert!(((e + 4.0 * g) / (4.0 * g)).abs() < 1e-9);
    }

    #[test]
    fn matches_explicit_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [2, 4, 6] {
            let s = random_state(n, &mut rng);
            let m = dense_matrix(n, 0.7);
            let ours = apply_hamiltonian(&s, 0.7);
            for x in 0..s.dim() {
                let expect: C64 = (0..s.dim()).map(|y| s.amplitudes[y] * m[(x, y)]).sum();
                assert!((ours[x] - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn hamiltonian_is_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in [4, 8] {
            let phi = random_state(n, &mut rng);
            let psi = random_state(n, &mut rng);
            let h_psi = DenseState { amplitudes: apply_hamiltonian(&psi, 1.3), n_spins: n };
            let h_phi = DenseState { amplitudes: apply_hamiltonian(&phi, 1.3), n_spins: n };
            let lhs = phi.inner(&h_psi);
            let rhs = psi.inner(&h_phi).conj();
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn ground_state_at_zero_field() {
        let gs = ground_state(4, 0.0).unwrap();
        assert_abs_diff_eq!(energy(&gs, 0.0), -4.0, epsilon = 1e-10);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(gs.amplitudes[0].re, r, epsilon = 1e-10);
        assert_abs_diff_eq!(gs.amplitudes[15].re, r, epsilon = 1e-10);
        assert_abs_diff_eq!(gs.parity(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn ground_state_paramagnetic_limit() {
        let g = 1e4;
        let gs = ground_state(6, g).unwrap();
        let para = DenseState::paramagnet(6).unwrap();
        assert!(gs.inner(&para).norm_sqr() > 1.0 - 1e-6);
        assert!(((energy(&gs, g) + 6.0 * g) / g).abs() < 1e-6);
    }

    #[test]
    fn ground_state_matches_direct_eigensolve() {
        for (n, g) in [(2, 1.0), (4, 0.5), (6, 1.0), (6, 3.0)] {
            let gs = ground_state(n, g).unwrap();
            let eig = SymmetricEigen::new(dense_matrix(n, g));
            let e_min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
            assert_abs_diff_eq!(energy(&gs, g), e_min, epsilon = 1e-9);
            let h_psi = apply_hamiltonian(&gs, g);
            let e = energy(&gs, g);
            let res: f64 =
                h_psi.iter().zip(&gs.amplitudes).map(|(a, b)| (a - e * b).norm_sqr()).sum::<f64>().sqrt();
            assert!(res <= 1e-10);
            assert_abs_diff_eq!(gs.parity(), 1.0, epsilon = 1e-10);
        }
        // N = 2 closed form: E = -sqrt(4 + 4 g^2) in the even sector
        let gs = ground_state(2, 1.0).unwrap();
        assert_abs_diff_eq!(energy(&gs, 1.0), -8f64.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn kink_operator_examples() {
        assert_eq!(kink_density_dense(&DenseState::all_up(6).unwrap()), 0.0);
        assert_eq!(kink_density_dense(&DenseState::neel(6).unwrap()), 1.0);
        assert_abs_diff_eq!(kink_density_dense(&DenseState::paramagnet(8).unwrap()), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn rejects_large_or_odd_chains() {
        assert!(OracleConfig::new(14, 1.0).is_err());
        assert!(OracleConfig::new(5, 1.0).is_err());
        assert!(ground_state(14, 1.0).is_err());
        assert!(OracleConfig::new(4, 1.0).unwrap().with_g_start(0.5).is_err());
    }

    #[test]
    fn quench_preserves_norm_parity_translation() {
        let cfg = OracleConfig::new(6, 1.0).unwrap();
        for (_, s) in evolve_quench_checkpoints(&cfg, 5).unwrap() {
            assert!((s.norm() - 1.0).abs() <= 10.0 * cfg.tol);
            assert!((s.parity() - 1.0).abs() <= 1e-8);
            let bonds = bond_kink_probabilities(&s);
            let mean = bonds.iter().sum::<f64>() / bonds.len() as f64;
            assert!(bonds.iter().all(|b| (b - mean).abs() <= 1e-8));
        }
    }

    #[test]
    fn slow_quench_is_nearly_adiabatic() {
        let cfg = OracleConfig::new(4, 50.0).unwrap();
        let s = evolve_quench(&cfg).unwrap();
        assert!(kink_density_dense(&s) < 1e-2);
        let target = ground_state(4, 0.0).unwrap();
        assert!(s.inner(&target).norm_sqr() > 0.97);
    }

    #[test]
    fn sudden_quench_freezes_state() {
        let cfg = OracleConfig::new(6, 1e-4).unwrap();
        let s = evolve_quench(&cfg).unwrap();
        let initial = ground_state(6, cfg.g_start).unwrap();
        assert!(s.inner(&initial).norm_sqr() > 1.0 - 1e-3);
        // finite g_start: 1/2 - 1/(4 g) to leading order
        assert!((kink_density_dense(&s) - 0.475).abs() < 2e-3);
    }

    #[test]
    fn decomposition_small_chain() {
        let chk = decomposition_check(&OracleConfig::new(4, 0.5).unwrap()).unwrap();
        assert!(chk.diff <= 1e-3, "{chk:?}");
    }
}
