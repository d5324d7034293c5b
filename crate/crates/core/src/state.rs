//! Pure-state representations shared by the teleportation and readout engines.
//!
//! Basis conventions: `|0⟩` is the atomic ground state, `|1⟩` the excited
//! state. Joint states live on atom A ⊗ atom B ⊗ cavity Fock `{0, 1, 2}` and
//! are always enumerated in `(a, b, n)` lexicographic order.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use thiserror::Error;

/// Complex probability amplitude.
pub type Amplitude = Complex64;

/// Tolerance used when checking that a state is normalized.
pub const NORM_TOL: f64 = 1e-9;

/// Below this modulus the relative phase of a qubit is undefined.
pub const DEGENERATE_PHASE_EPS: f64 = 1e-12;

/// Highest cavity Fock number represented.
pub const MAX_PHOTONS: usize = 2;

const FOCK_DIM: usize = MAX_PHOTONS + 1;
const PAIR_DIM: usize = 2 * FOCK_DIM;
const JOINT_DIM: usize = 2 * PAIR_DIM;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("state has zero norm")]
    ZeroNorm,
    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),
    #[error("non-finite amplitude")]
    NonFinite,
    #[error("outcome {outcome} of atom {atom} has zero probability")]
    ImpossibleOutcome { atom: Atom, outcome: u8 },
    #[error("invalid outcome {0}, expected 0 or 1")]
    InvalidOutcome(u8),
    #[error("Bloch angles out of range: theta = {theta}, phi = {phi}")]
    AnglesOutOfRange { theta: f64, phi: f64 },
}

/// Which atom a measurement acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Atom {
    A,
    B,
}

impl std::fmt::Display for Atom {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Atom::A => f.write_str("A"),
            Atom::B => f.write_str("B"),
        }
    }
}

/// Polar parametrization `cos(θ/2)|0⟩ + sin(θ/2)e^{iφ}|1⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochAngles {
    pub theta: f64,
    pub phi: f64,
}

impl BlochAngles {
    /// Builds angles, wrapping `phi` into `(−π, π]` and zeroing it at the poles.
    pub fn new(theta: f64, phi: f64) -> Result<Self, StateError> {
        if !theta.is_finite() || !phi.is_finite() || !(0.0..=PI).contains(&theta) {
            return Err(StateError::AnglesOutOfRange { theta, phi });
        }
        let phi = if theta == 0.0 || theta == PI {
            0.0
        } else {
            wrap_phase(phi)
        };
        Ok(Self { theta, phi })
    }
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_phase(phi: f64) -> f64 {
    let mut w = phi.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// A two-level atomic state `c0|0⟩ + c1|1⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    pub c0: Amplitude,
    pub c1: Amplitude,
}

impl QubitState {
    pub const GROUND: QubitState = QubitState {
        c0: Complex64::new(1.0, 0.0),
        c1: Complex64::new(0.0, 0.0),
    };
    pub const EXCITED: QubitState = QubitState {
        c0: Complex64::new(0.0, 0.0),
        c1: Complex64::new(1.0, 0.0),
    };

    /// Unchecked constructor; amplitudes are taken as given.
    pub fn from_amplitudes(c0: Amplitude, c1: Amplitude) -> Self {
        Self { c0, c1 }
    }

    /// Normalizing constructor.
    pub fn normalized(c0: Amplitude, c1: Amplitude) -> Result<Self, StateError> {
        if !(c0.is_finite() && c1.is_finite()) {
            return Err(StateError::NonFinite);
        }
        let n = (c0.norm_sqr() + c1.norm_sqr()).sqrt();
        if n == 0.0 {
            return Err(StateError::ZeroNorm);
        }
        Ok(Self {
            c0: c0 / n,
            c1: c1 / n,
        })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c0.norm_sqr() + self.c1.norm_sqr()
    }

    /// Removes the global phase so that `c0` is real and non-negative.
    /// When `c0` vanishes, `c1` is made real and non-negative instead.
    pub fn canonical(&self) -> Self {
        let reference = if self.c0.norm() > DEGENERATE_PHASE_EPS {
            self.c0
        } else {
            self.c1
        };
        if reference.norm() == 0.0 {
            return *self;
        }
        let rot = reference.conj() / reference.norm();
        Self {
            c0: self.c0 * rot,
            c1: self.c1 * rot,
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &QubitState) -> Amplitude {
        self.c0.conj() * other.c0 + self.c1.conj() * other.c1
    }
}

/// `c0 = cos(θ/2)`, `c1 = sin(θ/2)·e^{iφ}`.
pub fn bloch_to_qubit(angles: BlochAngles) -> QubitState {
    let half = 0.5 * angles.theta;
    QubitState {
        c0: Complex64::new(half.cos(), 0.0),
        c1: Complex64::from_polar(half.sin(), angles.phi),
    }
}

/// Result of [`qubit_to_bloch`]; `degenerate_phase` is set when `|c1|` is
/// too small for `φ` to carry meaning (φ is then reported as 0). The
/// `θ = π` pole has no such flag since `c0` vanishing is handled by the
/// canonical phase choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochReading {
    pub angles: BlochAngles,
    pub degenerate_phase: bool,
}

/// Inverse of [`bloch_to_qubit`] up to global phase.
pub fn qubit_to_bloch(state: &QubitState) -> Result<BlochReading, StateError> {
    let n2 = state.norm_sqr();
    if !n2.is_finite() {
        return Err(StateError::NonFinite);
    }
    if (n2 - 1.0).abs() > NORM_TOL {
        return Err(StateError::NotNormalized(n2));
    }
    let s = state.canonical();
    let r0 = s.c0.norm();
    let r1 = s.c1.norm();
    let theta = 2.0 * r1.atan2(r0);
    if r1 < DEGENERATE_PHASE_EPS || r0 < DEGENERATE_PHASE_EPS {
        return Ok(BlochReading {
            angles: BlochAngles::new(theta.clamp(0.0, PI), 0.0)?,
            degenerate_phase: r1 < DEGENERATE_PHASE_EPS,
        });
    }
    Ok(BlochReading {
        angles: BlochAngles::new(theta.clamp(0.0, PI), s.c1.arg())?,
        degenerate_phase: false,
    })
}

/// `|⟨a|b⟩|²`, clamped to `[0, 1]`.
pub fn fidelity(a: &QubitState, b: &QubitState) -> f64 {
    a.inner(b).norm_sqr().clamp(0.0, 1.0)
}

/// State of atom B and the cavity mode, indexed by `(b, n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairState {
    amps: [Amplitude; PAIR_DIM],
}

impl Default for PairState {
    fn default() -> Self {
        Self {
            amps: [Complex64::new(0.0, 0.0); PAIR_DIM],
        }
    }
}

impl PairState {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn basis(b: u8, n: u8) -> Self {
        let mut s = Self::zero();
        s.set(b, n, Complex64::new(1.0, 0.0));
        s
    }

    fn index(b: u8, n: u8) -> usize {
        assert!(b < 2 && (n as usize) < FOCK_DIM, "basis label out of range");
        b as usize * FOCK_DIM + n as usize
    }

    pub fn get(&self, b: u8, n: u8) -> Amplitude {
        self.amps[Self::index(b, n)]
    }

    pub fn set(&mut self, b: u8, n: u8, value: Amplitude) {
        self.amps[Self::index(b, n)] = value;
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn scaled(&self, k: f64) -> Self {
        let mut out = *self;
        out.amps.iter_mut().for_each(|a| *a *= k);
        out
    }

    /// Unnormalized qubit of atom B paired with cavity Fock state `n`.
    pub fn b_component(&self, n: u8) -> QubitState {
        QubitState::from_amplitudes(self.get(0, n), self.get(1, n))
    }

    /// Reduced density matrix of atom B (cavity traced out).
    pub fn reduced_b(&self) -> [[Amplitude; 2]; 2] {
        let mut rho = [[Complex64::new(0.0, 0.0); 2]; 2];
        for n in 0..FOCK_DIM as u8 {
            let v = [self.get(0, n), self.get(1, n)];
            for i in 0..2 {
                for j in 0..2 {
                    rho[i][j] += v[i] * v[j].conj();
                }
            }
        }
        rho
    }

    /// Largest `n` with non-negligible weight.
    pub fn max_photon_number(&self, eps: f64) -> usize {
        (0..FOCK_DIM)
            .rev()
            .find(|&n| self.get(0, n as u8).norm() > eps || self.get(1, n as u8).norm() > eps)
            .unwrap_or(0)
    }
}

/// Amplitudes over atom A ⊗ atom B ⊗ cavity `{0,1,2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointState {
    amps: [Amplitude; JOINT_DIM],
}

impl Default for JointState {
    fn default() -> Self {
        Self {
            amps: [Complex64::new(0.0, 0.0); JOINT_DIM],
        }
    }
}

impl JointState {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn basis(a: u8, b: u8, n: u8) -> Self {
        let mut s = Self::zero();
        s.set(a, b, n, Complex64::new(1.0, 0.0));
        s
    }

    pub fn index(a: u8, b: u8, n: u8) -> usize {
        assert!(a < 2 && b < 2 && (n as usize) < FOCK_DIM, "basis label out of range");
        a as usize * PAIR_DIM + b as usize * FOCK_DIM + n as usize
    }

    /// Basis labels in serialization order.
    pub fn labels() -> impl Iterator<Item = (u8, u8, u8)> {
        (0..2u8).flat_map(|a| (0..2u8).flat_map(move |b| (0..FOCK_DIM as u8).map(move |n| (a, b, n))))
    }

    pub fn get(&self, a: u8, b: u8, n: u8) -> Amplitude {
        self.amps[Self::index(a, b, n)]
    }

    pub fn set(&mut self, a: u8, b: u8, n: u8, value: Amplitude) {
        self.amps[Self::index(a, b, n)] = value;
    }

    pub fn amplitudes(&self) -> &[Amplitude; JOINT_DIM] {
        &self.amps
    }

    pub fn from_amplitudes(amps: [Amplitude; JOINT_DIM]) -> Self {
        Self { amps }
    }

    /// `atom_a ⊗ pair`.
    pub fn product(atom_a: &QubitState, pair: &PairState) -> Self {
        let mut s = Self::zero();
        for (a, ca) in [(0u8, atom_a.c0), (1u8, atom_a.c1)] {
            for b in 0..2u8 {
                for n in 0..FOCK_DIM as u8 {
                    s.set(a, b, n, ca * pair.get(b, n));
                }
            }
        }
        s
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOL
    }

    /// The `(b, n)` block for a fixed atom-A label.
    pub fn pair_block(&self, a: u8) -> PairState {
        let mut p = PairState::zero();
        for b in 0..2u8 {
            for n in 0..FOCK_DIM as u8 {
                p.set(b, n, self.get(a, b, n));
            }
        }
        p
    }

    /// Sum of `|amp|²` over labels where `atom` reads `outcome`.
    pub fn outcome_probability(&self, atom: Atom, outcome: u8) -> f64 {
        Self::labels()
            .filter(|&(a, b, _)| match atom {
                Atom::A => a == outcome,
                Atom::B => b == outcome,
            })
            .map(|(a, b, n)| self.get(a, b, n).norm_sqr())
            .sum()
    }

    /// Writes `a b n re im` lines in fixed basis order.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (a, b, n) in Self::labels() {
            let z = self.get(a, b, n);
            let _ = writeln!(out, "{a} {b} {n} {:.11e} {:.11e}", z.re, z.im);
        }
        out
    }
}

/// Projects `atom` onto `outcome`, returning the renormalized surviving block
/// together with the outcome probability.
pub fn project_joint(
    state: &JointState,
    atom: Atom,
    outcome: u8,
) -> Result<(JointState, f64), StateError> {
    if outcome > 1 {
        return Err(StateError::InvalidOutcome(outcome));
    }
    let n2 = state.norm_sqr();
    if !n2.is_finite() {
        return Err(StateError::NonFinite);
    }
    if (n2 - 1.0).abs() > NORM_TOL {
        return Err(StateError::NotNormalized(n2));
    }
    let probability = state.outcome_probability(atom, outcome);
    if probability <= f64::MIN_POSITIVE {
        return Err(StateError::ImpossibleOutcome { atom, outcome });
    }
    let scale = probability.sqrt().recip();
    let mut out = JointState::zero();
    for (a, b, n) in JointState::labels() {
        let keep = match atom {
            Atom::A => a == outcome,
            Atom::B => b == outcome,
        };
        if keep {
            out.set(a, b, n, state.get(a, b, n) * scale);
        }
    }
    Ok((out, probability))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, FRAC_PI_6, FRAC_PI_8};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn bloch_examples() {
        let q = bloch_to_qubit(BlochAngles::new(FRAC_PI_4, -FRAC_PI_6).unwrap());
        assert!((q.c0 - c(FRAC_PI_8.cos(), 0.0)).norm() < 1e-15);
        assert!((q.c1 - Complex64::from_polar(FRAC_PI_8.sin(), -FRAC_PI_6)).norm() < 1e-15);

        let q = bloch_to_qubit(BlochAngles::new(0.0, 0.0).unwrap());
        assert_eq!(q, QubitState::GROUND);
        let q = bloch_to_qubit(BlochAngles::new(PI, 0.0).unwrap());
        assert!(q.c0.norm() < 1e-16 && (q.c1 - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn inverse_examples() {
        let q = QubitState::from_amplitudes(
            c(FRAC_PI_8.cos(), 0.0),
            Complex64::from_polar(FRAC_PI_8.sin(), -FRAC_PI_6),
        );
        let r = qubit_to_bloch(&q).unwrap();
        assert!((r.angles.theta - FRAC_PI_4).abs() < 1e-12);
        assert!((r.angles.phi + FRAC_PI_6).abs() < 1e-12);

        let r = qubit_to_bloch(&QubitState::GROUND).unwrap();
        assert_eq!(r.angles, BlochAngles { theta: 0.0, phi: 0.0 });
        assert!(r.degenerate_phase);

        let q = QubitState::from_amplitudes(c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2));
        let r = qubit_to_bloch(&q).unwrap();
        assert!((r.angles.theta - FRAC_PI_2).abs() < 1e-12);
        assert!((r.angles.phi - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn inverse_removes_global_phase() {
        let g = Complex64::from_polar(1.0, 2.1);
        let q = bloch_to_qubit(BlochAngles::new(1.0, 0.3).unwrap());
        let r = qubit_to_bloch(&QubitState::from_amplitudes(q.c0 * g, q.c1 * g)).unwrap();
        assert!((r.angles.theta - 1.0).abs() < 1e-12);
        assert!((r.angles.phi - 0.3).abs() < 1e-12);
    }

    #[test]
    fn inverse_rejects_unnormalized() {
        let q = QubitState::from_amplitudes(c(1.0, 0.0), c(1.0, 0.0));
        assert!(matches!(qubit_to_bloch(&q), Err(StateError::NotNormalized(_))));
    }

    #[test]
    fn fidelity_examples() {
        let x = bloch_to_qubit(BlochAngles::new(0.7, -2.0).unwrap());
        assert!((fidelity(&x, &x) - 1.0).abs() < 1e-15);
        assert_eq!(fidelity(&QubitState::GROUND, &QubitState::EXCITED), 0.0);
        let plus = QubitState::normalized(c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        assert!((fidelity(&QubitState::GROUND, &plus) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn project_product_state() {
        let psi = QubitState::normalized(c(0.3, 0.1), c(-0.2, 0.9)).unwrap();
        let mut pair = PairState::zero();
        pair.set(0, 0, psi.c0);
        pair.set(1, 0, psi.c1);
        let joint = JointState::product(&QubitState::EXCITED, &pair);
        let (post, p) = project_joint(&joint, Atom::A, 1).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
        let block = post.pair_block(1);
        assert!((block.get(0, 0) - psi.c0).norm() < 1e-12);
        assert!((block.get(1, 0) - psi.c1).norm() < 1e-12);
    }

    #[test]
    fn project_bell_like() {
        let mut s = JointState::zero();
        s.set(0, 1, 0, c(FRAC_1_SQRT_2, 0.0));
        s.set(1, 0, 0, c(FRAC_1_SQRT_2, 0.0));
        let (post, p) = project_joint(&s, Atom::A, 1).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        assert!((post.get(1, 0, 0) - c(1.0, 0.0)).norm() < 1e-12);
        assert!((post.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn project_impossible_outcome() {
        let s = JointState::basis(0, 1, 0);
        assert_eq!(
            project_joint(&s, Atom::A, 1),
            Err(StateError::ImpossibleOutcome { atom: Atom::A, outcome: 1 })
        );
        assert_eq!(project_joint(&s, Atom::B, 2), Err(StateError::InvalidOutcome(2)));
    }

    #[test]
    fn dump_is_in_fixed_order() {
        let dump = JointState::basis(1, 0, 2).dump();
        let lines: Vec<_> = dump.lines().collect();
        assert_eq!(lines.len(), 12);
        assert!(lines[0].starts_with("0 0 0 "));
        assert!(lines[8].starts_with("1 0 2 1.00000000000e0"));
        assert!(lines[11].starts_with("1 1 2 "));
    }

    #[test]
    fn reduced_density_matrix_traces_cavity() {
        let mut p = PairState::zero();
        p.set(0, 0, c(0.6, 0.0));
        p.set(0, 1, c(0.0, 0.8));
        let rho = p.reduced_b();
        assert!((rho[0][0].re - 1.0).abs() < 1e-12);
        assert!(rho[1][1].norm() < 1e-15);
        assert_eq!(p.max_photon_number(1e-12), 1);
    }

    #[test]
    fn wrap_phase_range() {
        assert!((wrap_phase(PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
    }
}
