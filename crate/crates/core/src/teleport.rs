//! Conditional teleportation through a single-mode cavity.
//!
//! Stage 1 entangles atom B (entering excited) with the empty cavity. Stage 2
//! sends atom A, carrying the unknown state, through the same mode while B is
//! already far away. Stage 3 measures atom A; on the excited outcome the state
//! of B approximates the input of A.
//!
//! Under the resonant Jaynes–Cummings coupling `g(t)(a†σ₋ + aσ₊)` the
//! interaction Hamiltonian is `g(t)` times a fixed operator, so the evolution
//! depends on the trajectory only through the pulse area `G = ∫ g dt`. Within
//! each manifold `{|1⟩_A|n⟩, |0⟩_A|n+1⟩}` the state rotates by `√(n+1)·G`.
//! [`evolve_stage2_ode`] integrates the same Hamiltonian numerically and is
//! kept as an independent check of that closed form.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::ode::{self, OdeError, Tolerances};
use crate::profile::{
    calibrate_g0, pulse_area, render_model, CouplingTrace, PhysicalParams, ProfileError,
    ProfileModel, SampledProfile, Transit, DEFAULT_SAMPLES_PER_A,
};
use crate::state::{
    fidelity, project_joint, Atom, JointState, PairState, QubitState, StateError, NORM_TOL,
};

/// Pulse area atom B accumulates on its way to the injection point.
pub const TARGET_AREA_B: f64 = 9.0 * PI / 4.0;
/// Pulse area atom A accumulates on its way to the detector.
pub const TARGET_AREA_A: f64 = 7.0 * PI / 4.0;

/// Largest relative field allowed at the detector of atom A and after the
/// injection point on the path of atom B.
pub const HANDOFF_FRACTION: f64 = 0.01;

#[derive(Debug, Error)]
pub enum TeleportError {
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error("integration failed: {0}")]
    Ode(#[from] OdeError),
    #[error("detector at {position}a sees {fraction:.4} of the peak field (limit {limit})")]
    DetectorInsideCavity {
        position: f64,
        fraction: f64,
        limit: f64,
    },
    #[error("amplitude on |1⟩_A|2⟩ would leave the truncated Fock space")]
    TruncationViolated,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Geometry, timing and calibration targets of the teleportation circuit.
/// Positions are in lattice constants along each atom's own trajectory.
#[derive(Debug, Clone)]
pub struct TeleportConfig {
    pub params: PhysicalParams,
    pub cavity_profile: SampledProfile,
    pub b_entry: f64,
    /// Position of atom B when atom A is injected (defines `t₁`).
    pub injection_position: f64,
    pub a_entry: f64,
    /// Position of atom A's detector (defines `t₂`).
    pub detector_position: f64,
    /// Position along B's path where the readout circuit begins (defines `t₃`).
    pub readout_entry: f64,
    pub target_area_b: f64,
    pub target_area_a: f64,
    /// Sampling interval of the emitted stage traces, in seconds.
    pub trace_resolution: f64,
}

impl TeleportConfig {
    /// Default chip: B is entangled over the first 18a, A is detected when B
    /// reaches 31a, and B enters the readout at 43a.
    pub fn with_profile(params: PhysicalParams, cavity_profile: SampledProfile) -> Self {
        let injection_position = 18.0;
        let handoff = 31.0;
        let detector_position = (handoff - injection_position) * params.v_a / params.v_b;
        Self {
            params,
            cavity_profile,
            b_entry: 0.0,
            injection_position,
            a_entry: 0.0,
            detector_position,
            readout_entry: 43.0,
            target_area_b: TARGET_AREA_B,
            target_area_a: TARGET_AREA_A,
            trace_resolution: 0.1e-6,
        }
    }

    pub fn chip_default() -> Result<Self, TeleportError> {
        let profile = render_model(&ProfileModel::default_cavity(), DEFAULT_SAMPLES_PER_A)?;
        Ok(Self::with_profile(PhysicalParams::default(), profile))
    }

    pub fn validate(&self) -> Result<(), TeleportError> {
        self.params.validate()?;
        let ordered = self.injection_position > self.b_entry
            && self.detector_position > self.a_entry
            && self.readout_entry >= self.injection_position;
        if !ordered {
            return Err(TeleportError::InvalidConfig(
                "positions must satisfy b_entry < injection ≤ readout_entry and a_entry < detector".into(),
            ));
        }
        for (name, v) in [
            ("target_area_b", self.target_area_b),
            ("target_area_a", self.target_area_a),
            ("trace_resolution", self.trace_resolution),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(TeleportError::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        let fraction = self.cavity_profile.eval(self.detector_position) / self.cavity_profile.peak();
        if fraction > HANDOFF_FRACTION {
            return Err(TeleportError::DetectorInsideCavity {
                position: self.detector_position,
                fraction,
                limit: HANDOFF_FRACTION,
            });
        }
        Ok(())
    }

    pub fn timeline(&self) -> Timeline {
        let tb = self.params.transit_b();
        let ta = self.params.transit_a();
        let t1 = tb.duration(self.injection_position - self.b_entry);
        let t2 = ta.duration(self.detector_position - self.a_entry);
        let b_at_detection = self.b_entry + tb.distance(t1 + t2);
        let t3 = tb.duration(self.readout_entry - b_at_detection).max(0.0);
        Timeline {
            t1,
            t2,
            t3,
            b_position_at_detection: b_at_detection,
        }
    }

    /// Peak couplings for both atoms. A user-supplied `g0` is shared by both
    /// atoms; otherwise each atom's coupling is calibrated to its own target.
    pub fn calibrate(&self) -> Result<Calibration, TeleportError> {
        let tb = self.params.transit_b();
        let ta = self.params.transit_a();
        let p = &self.cavity_profile;
        let (g0_b, g0_a) = match self.params.g0 {
            Some(g) => (g, g),
            None => (
                calibrate_g0(p, &tb, self.target_area_b, self.b_entry, self.injection_position)?,
                calibrate_g0(p, &ta, self.target_area_a, self.a_entry, self.detector_position)?,
            ),
        };
        Ok(Calibration {
            g0_b,
            g0_a,
            area_b: pulse_area(p, &tb, g0_b, self.b_entry, self.injection_position),
            area_a: pulse_area(p, &ta, g0_a, self.a_entry, self.detector_position),
            area_a_shared_g0: pulse_area(p, &ta, g0_b, self.a_entry, self.detector_position),
            handoff_fraction: self.handoff_fraction(),
        })
    }

    /// Largest field on B's path after the injection point, relative to the peak.
    pub fn handoff_fraction(&self) -> f64 {
        let p = &self.cavity_profile;
        let beyond = p
            .positions()
            .iter()
            .zip(p.magnitudes())
            .filter(|(&x, _)| x >= self.injection_position)
            .map(|(_, &m)| m)
            .fold(p.eval(self.injection_position), f64::max);
        beyond / p.peak()
    }
}

/// Protocol timestamps in seconds, measured from atom B's cavity entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timeline {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub b_position_at_detection: f64,
}

impl Timeline {
    pub fn detection_time(&self) -> f64 {
        self.t1 + self.t2
    }

    pub fn readout_entry_time(&self) -> f64 {
        self.t1 + self.t2 + self.t3
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub g0_b: f64,
    pub g0_a: f64,
    pub area_b: f64,
    pub area_a: f64,
    /// Area atom A would collect if it shared atom B's calibrated coupling.
    pub area_a_shared_g0: f64,
    pub handoff_fraction: f64,
}

/// Atom B ⊗ cavity after a resonant pulse of area `area`, starting from `|1⟩_B|0⟩`.
pub fn stage1_state(area: f64) -> PairState {
    let mut s = PairState::zero();
    s.set(1, 0, Complex64::new(area.cos(), 0.0));
    s.set(0, 1, Complex64::new(0.0, -area.sin()));
    s
}

/// Stage-1 state at time `t` after atom B entered at `x_entry`.
pub fn evolve_stage1(
    profile: &SampledProfile,
    transit: &Transit,
    g0: f64,
    x_entry: f64,
    t: f64,
) -> PairState {
    let area = pulse_area(profile, transit, g0, x_entry, x_entry + transit.distance(t));
    stage1_state(area)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Stage2Options {
    /// Drops the surviving `|1⟩_A|1⟩` amplitude of the two-photon manifold
    /// and renormalizes, giving the ideal teleportation limit.
    pub suppress_two_photon_survival: bool,
}

/// Applies the atom-A/cavity rotation of pulse area `area` to a joint state.
/// Atom B is a spectator.
pub fn rotate_atom_a(state: &JointState, area: f64, options: Stage2Options) -> Result<JointState, TeleportError> {
    let mut out = *state;
    for b in 0..2u8 {
        if state.get(1, b, 2).norm() > 0.0 {
            return Err(TeleportError::TruncationViolated);
        }
        for n in 0..2u8 {
            let angle = ((n + 1) as f64).sqrt() * area;
            let (s, mut c) = angle.sin_cos();
            let excited = state.get(1, b, n);
            let photon = state.get(0, b, n + 1);
            let minus_i_s = Complex64::new(0.0, -s);
            let photon_out = photon * c + excited * minus_i_s;
            if n == 1 && options.suppress_two_photon_survival {
                c = 0.0;
            }
            out.set(1, b, n, excited * c + photon * minus_i_s);
            out.set(0, b, n + 1, photon_out);
        }
    }
    if options.suppress_two_photon_survival {
        let n2 = out.norm_sqr();
        if n2 == 0.0 {
            return Err(StateError::ZeroNorm.into());
        }
        let k = n2.sqrt().recip();
        out = JointState::from_amplitudes(out.amplitudes().map(|z| z * k));
    }
    Ok(out)
}

/// Closed-form joint state once atom A has collected pulse area `area_a`.
pub fn evolve_stage2(
    input_a: &QubitState,
    entangled: &PairState,
    area_a: f64,
    options: Stage2Options,
) -> Result<JointState, TeleportError> {
    rotate_atom_a(&JointState::product(input_a, entangled), area_a, options)
}

/// `-i H(t) y` for atom A coupled to the cavity with strength `g`.
fn jc_rhs(g: f64, y: &[Complex64; 12]) -> [Complex64; 12] {
    let mut dy = [Complex64::new(0.0, 0.0); 12];
    let minus_i = Complex64::new(0.0, -1.0);
    for b in 0..2u8 {
        for n in 0..2u8 {
            let k = g * ((n + 1) as f64).sqrt();
            let hi = JointState::index(1, b, n);
            let lo = JointState::index(0, b, n + 1);
            dy[hi] += minus_i * k * y[lo];
            dy[lo] += minus_i * k * y[hi];
        }
    }
    dy
}

/// Numerical integration of the interaction-picture Schrödinger equation for
/// stage 2, with `g(t)` linearly interpolated from `trace`, up to time `t2`.
pub fn evolve_stage2_ode(
    input_a: &QubitState,
    entangled: &PairState,
    trace: &CouplingTrace,
    t2: f64,
    tol: &Tolerances,
) -> Result<JointState, TeleportError> {
    let mut y = *JointState::product(input_a, entangled).amplitudes();
    let mut breakpoints: Vec<f64> = trace
        .times
        .iter()
        .copied()
        .filter(|&t| t > 0.0 && t < t2)
        .collect();
    breakpoints.push(t2);
    let mut t = 0.0;
    for &next in &breakpoints {
        if next <= t {
            continue;
        }
        let (y_next, _) = ode::integrate(|s, y| jc_rhs(trace.eval(s), y), t, next, y, tol)?;
        y = y_next;
        t = next;
    }
    Ok(JointState::from_amplitudes(y))
}

/// Labelled complex amplitude time series.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeSeries {
    pub label: &'static str,
    pub values: Vec<Complex64>,
}

/// Coupling and amplitude traces of one protocol stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StageTrace {
    pub coupling: CouplingTrace,
    pub series: Vec<AmplitudeSeries>,
}

#[derive(Debug, Clone)]
pub struct TeleportOutcome {
    pub input: QubitState,
    pub calibration: Calibration,
    pub timeline: Timeline,
    /// Joint state right before atom A is measured.
    pub pre_measurement: JointState,
    pub detected_outcome: u8,
    pub outcome_probability: f64,
    /// Probability of finding atom A excited.
    pub success_probability: f64,
    /// Normalized atom B ⊗ cavity state after the measurement.
    pub conditional_state: PairState,
    /// `⟨ψ|ρ_B|ψ⟩` with the cavity traced out.
    pub fidelity_vs_input: f64,
    /// Overlap with the cavity-vacuum branch only; photon leakage counts as loss.
    pub fidelity_leak_as_loss: f64,
    /// Overlap after discarding runs that leave a photon in the cavity.
    pub fidelity_postselected: f64,
    /// Fig. 2 style trace (atom B) and Fig. 3 style trace (atom A).
    pub stage_traces: [StageTrace; 2],
}

/// Fidelity figures of a B ⊗ cavity state against the intended qubit.
pub fn conditional_fidelities(pair: &PairState, target: &QubitState) -> (f64, f64, f64) {
    let rho = pair.reduced_b();
    let v = [target.c0, target.c1];
    let mut traced = Complex64::new(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            traced += v[i].conj() * rho[i][j] * v[j];
        }
    }
    let vacuum = pair.b_component(0);
    let overlap = target.inner(&vacuum).norm_sqr();
    let vac_norm = vacuum.norm_sqr();
    let post = if vac_norm > 0.0 {
        fidelity(target, &QubitState::from_amplitudes(vacuum.c0, vacuum.c1)) / vac_norm
    } else {
        0.0
    };
    (traced.re.clamp(0.0, 1.0), overlap.clamp(0.0, 1.0), post.clamp(0.0, 1.0))
}

/// `P(atom A excited)` from the norm of the unnormalized conditional branch:
/// `[|c0|² sin²G + |c1|² cos²G + |c1|² cos²(√2 G)] / 2`.
pub fn success_probability_closed_form(input: &QubitState, area_a: f64) -> f64 {
    let (s, c) = area_a.sin_cos();
    let c2 = (2f64.sqrt() * area_a).cos();
    0.5 * (input.c0.norm_sqr() * s * s + input.c1.norm_sqr() * (c * c + c2 * c2))
}

fn stage_traces(config: &TeleportConfig, cal: &Calibration, input: &QubitState, tl: &Timeline) -> [StageTrace; 2] {
    let p = &config.cavity_profile;
    let tb = config.params.transit_b();
    let ta = config.params.transit_a();

    let coupling_b = CouplingTrace::sample(p, &tb, cal.g0_b, config.b_entry, tl.t1, config.trace_resolution);
    let mut excited = Vec::with_capacity(coupling_b.times.len());
    let mut photon = Vec::with_capacity(coupling_b.times.len());
    for &t in &coupling_b.times {
        let s = evolve_stage1(p, &tb, cal.g0_b, config.b_entry, t);
        excited.push(s.get(1, 0));
        photon.push(s.get(0, 1));
    }
    let fig2 = StageTrace {
        coupling: coupling_b,
        series: vec![
            AmplitudeSeries { label: "1B0", values: excited },
            AmplitudeSeries { label: "0B1", values: photon },
        ],
    };

    let coupling_a = CouplingTrace::sample(p, &ta, cal.g0_a, config.a_entry, tl.t2, config.trace_resolution);
    let mut vac0 = Vec::new();
    let mut vac1 = Vec::new();
    let mut leak = Vec::new();
    for &t in &coupling_a.times {
        let g = pulse_area(p, &ta, cal.g0_a, config.a_entry, config.a_entry + ta.distance(t));
        vac0.push(-input.c0 * g.sin());
        vac1.push(input.c1 * g.cos());
        leak.push(Complex64::new(0.0, -1.0) * input.c1 * (2f64.sqrt() * g).cos());
    }
    let fig3 = StageTrace {
        coupling: coupling_a,
        series: vec![
            AmplitudeSeries { label: "0B0", values: vac0 },
            AmplitudeSeries { label: "1B0", values: vac1 },
            AmplitudeSeries { label: "0B1", values: leak },
        ],
    };
    [fig2, fig3]
}

/// Runs stages 1–3. Without `forced_outcome` the success branch (atom A
/// excited) is reported.
pub fn run_teleport(
    config: &TeleportConfig,
    input_a: &QubitState,
    forced_outcome: Option<u8>,
) -> Result<TeleportOutcome, TeleportError> {
    run_teleport_with(config, input_a, forced_outcome, Stage2Options::default())
}

pub fn run_teleport_with(
    config: &TeleportConfig,
    input_a: &QubitState,
    forced_outcome: Option<u8>,
    options: Stage2Options,
) -> Result<TeleportOutcome, TeleportError> {
    config.validate()?;
    let input = QubitState::normalized(input_a.c0, input_a.c1)?;
    if (input_a.norm_sqr() - 1.0).abs() > NORM_TOL {
        return Err(StateError::NotNormalized(input_a.norm_sqr()).into());
    }
    let cal = config.calibrate()?;
    let timeline = config.timeline();

    let entangled = stage1_state(cal.area_b);
    let joint = evolve_stage2(&input, &entangled, cal.area_a, options)?;
    let outcome = forced_outcome.unwrap_or(1);
    let (post, outcome_probability) = project_joint(&joint, Atom::A, outcome)?;
    let conditional_state = post.pair_block(outcome);
    let (traced, loss, post_sel) = conditional_fidelities(&conditional_state, &input);

    Ok(TeleportOutcome {
        input,
        calibration: cal,
        timeline,
        pre_measurement: joint,
        detected_outcome: outcome,
        outcome_probability,
        success_probability: joint.outcome_probability(Atom::A, 1),
        conditional_state,
        fidelity_vs_input: traced,
        fidelity_leak_as_loss: loss,
        fidelity_postselected: post_sel,
        stage_traces: stage_traces(config, &cal, &input, &timeline),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{bloch_to_qubit, BlochAngles};
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, FRAC_PI_6};

    fn worked_input() -> QubitState {
        bloch_to_qubit(BlochAngles::new(FRAC_PI_4, -FRAC_PI_6).unwrap())
    }

    #[test]
    fn stage1_examples() {
        let s = stage1_state(0.0);
        assert_eq!(s.get(1, 0), Complex64::new(1.0, 0.0));
        assert_eq!(s.get(0, 1).norm(), 0.0);

        let s = stage1_state(TARGET_AREA_B);
        assert!((s.get(1, 0) - Complex64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((s.get(0, 1) - Complex64::new(0.0, -FRAC_1_SQRT_2)).norm() < 1e-15);

        let s = stage1_state(FRAC_PI_2);
        assert!(s.get(1, 0).norm() < 1e-15);
        assert!((s.get(0, 1) - Complex64::new(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn stage2_zero_area_is_identity() {
        let pair = stage1_state(TARGET_AREA_B);
        let input = worked_input();
        let joint = evolve_stage2(&input, &pair, 0.0, Stage2Options::default()).unwrap();
        assert_eq!(joint, JointState::product(&input, &pair));
    }

    #[test]
    fn stage2_ground_input_never_reaches_two_photons() {
        let pair = stage1_state(TARGET_AREA_B);
        for area in [0.3, 1.7, TARGET_AREA_A, 9.1] {
            let joint = evolve_stage2(&QubitState::GROUND, &pair, area, Stage2Options::default()).unwrap();
            for b in 0..2 {
                assert_eq!(joint.get(0, b, 2).norm(), 0.0);
                assert_eq!(joint.get(1, b, 1).norm(), 0.0);
            }
            assert!((joint.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn stage2_matches_written_out_amplitudes() {
        // Direct trig evaluation of every branch at G = 7π/4.
        let input = worked_input();
        let (c0, c1) = (input.c0, input.c1);
        let g = TARGET_AREA_A;
        let r = FRAC_1_SQRT_2;
        let i = Complex64::new(0.0, 1.0);
        let s2 = 2f64.sqrt();
        let joint = evolve_stage2(&input, &stage1_state(TARGET_AREA_B), g, Stage2Options::default()).unwrap();
        let expect = [
            ((0, 1, 0), r * c0),
            ((0, 0, 1), -i * r * c0 * g.cos()),
            ((1, 0, 0), -i * r * c0 * (-i * g.sin())),
            ((1, 1, 0), r * c1 * g.cos()),
            ((0, 1, 1), r * c1 * (-i * g.sin())),
            ((1, 0, 1), -i * r * c1 * (s2 * g).cos()),
            ((0, 0, 2), -i * r * c1 * (-i * (s2 * g).sin())),
        ];
        let mut covered = 0.0;
        for ((a, b, n), amp) in expect {
            assert!((joint.get(a, b, n) - amp).norm() < 1e-12, "({a},{b},{n})");
            covered += amp.norm_sqr();
        }
        assert!((covered - 1.0).abs() < 1e-12);
        assert!((g.cos() - r).abs() < 1e-15 && (g.sin() + r).abs() < 1e-15);
        assert!(((s2 * g).cos() - 0.078_854_542_6).abs() < 1e-9);
        assert!(((s2 * g).sin() - 0.996_886_132_5).abs() < 1e-9);
    }

    #[test]
    fn ode_zero_coupling_is_identity() {
        let pair = stage1_state(TARGET_AREA_B);
        let input = worked_input();
        let trace = CouplingTrace::constant(0.0, 1e-5);
        let joint = evolve_stage2_ode(&input, &pair, &trace, 1e-5, &Tolerances::default()).unwrap();
        let exact = JointState::product(&input, &pair);
        for (x, y) in joint.amplitudes().iter().zip(exact.amplitudes()) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn ode_constant_quarter_rabi() {
        let t = 4e-5;
        let g = FRAC_PI_2 / t;
        let mut pair = PairState::zero();
        pair.set(0, 0, Complex64::new(1.0, 0.0));
        let joint = evolve_stage2_ode(
            &QubitState::EXCITED,
            &pair,
            &CouplingTrace::constant(g, t),
            t,
            &Tolerances::default(),
        )
        .unwrap();
        assert!(joint.get(1, 0, 0).norm() < 1e-8);
        assert!((joint.get(0, 0, 1) - Complex64::new(0.0, -1.0)).norm() < 1e-8);
    }

    #[test]
    fn hypothetical_quarter_pulse_on_excited_input() {
        let pair = stage1_state(TARGET_AREA_B);
        let joint = evolve_stage2(&QubitState::EXCITED, &pair, FRAC_PI_2, Stage2Options::default()).unwrap();
        let (post, p) = project_joint(&joint, Atom::A, 1).unwrap();
        let leak = (2f64.sqrt() * FRAC_PI_2).cos();
        assert!((p - 0.5 * leak * leak).abs() < 1e-12);
        let block = post.pair_block(1);
        assert!(block.get(0, 0).norm() < 1e-12);
        assert!(block.get(1, 0).norm() < 1e-12);
        assert!((block.get(0, 1).norm() - 1.0).abs() < 1e-12);
        // phase −i relative to a real positive leak coefficient
        let expected_phase = Complex64::new(0.0, -leak.signum());
        assert!((block.get(0, 1) - expected_phase).norm() < 1e-12);
    }

    #[test]
    fn worked_example_outcome() {
        let cfg = TeleportConfig::chip_default().unwrap();
        let out = run_teleport(&cfg, &worked_input(), None).unwrap();
        assert!((out.calibration.area_b - TARGET_AREA_B).abs() < 1e-9);
        assert!((out.calibration.area_a - TARGET_AREA_A).abs() < 1e-9);
        assert!((0.24..=0.26).contains(&out.success_probability));
        assert!(out.fidelity_vs_input >= 0.99);
        assert!((out.fidelity_postselected - 1.0).abs() < 1e-9);
        assert!((out.conditional_state.norm_sqr() - 1.0).abs() < 1e-12);
        assert_eq!(out.detected_outcome, 1);
        assert!((out.outcome_probability - out.success_probability).abs() < 1e-15);
        let closed = success_probability_closed_form(&out.input, out.calibration.area_a);
        assert!((closed - out.success_probability).abs() < 1e-12);
    }

    #[test]
    fn idealized_limit_is_perfect() {
        let cfg = TeleportConfig::chip_default().unwrap();
        let opts = Stage2Options {
            suppress_two_photon_survival: true,
        };
        let out = run_teleport_with(&cfg, &worked_input(), None, opts).unwrap();
        assert!((out.fidelity_vs_input - 1.0).abs() < 1e-9);
        assert!(out.conditional_state.get(0, 1).norm() < 1e-12);
    }

    #[test]
    fn failure_branch_can_be_forced() {
        let cfg = TeleportConfig::chip_default().unwrap();
        let out = run_teleport(&cfg, &worked_input(), Some(0)).unwrap();
        assert_eq!(out.detected_outcome, 0);
        assert!((out.outcome_probability + out.success_probability - 1.0).abs() < 1e-12);
    }

    #[test]
    fn detector_inside_cavity_is_rejected() {
        let mut cfg = TeleportConfig::chip_default().unwrap();
        cfg.detector_position = 10.0;
        assert!(matches!(
            run_teleport(&cfg, &worked_input(), None),
            Err(TeleportError::DetectorInsideCavity { .. })
        ));
    }

    #[test]
    fn timeline_matches_chip_geometry() {
        let cfg = TeleportConfig::chip_default().unwrap();
        let tl = cfg.timeline();
        assert!((tl.t1 / 51.6e-6 - 1.0).abs() < 5e-3);
        assert!((tl.detection_time() / 88.9e-6 - 1.0).abs() < 5e-3);
        assert!((tl.readout_entry_time() / 123.3e-6 - 1.0).abs() < 5e-3);
        assert!((tl.b_position_at_detection - 31.0).abs() < 1e-9);
        assert!(cfg.handoff_fraction() < HANDOFF_FRACTION);
    }

    #[test]
    fn truncation_guard() {
        let mut pair = PairState::zero();
        pair.set(0, 2, Complex64::new(1.0, 0.0));
        assert!(matches!(
            evolve_stage2(&QubitState::EXCITED, &pair, 1.0, Stage2Options::default()),
            Err(TeleportError::TruncationViolated)
        ));
    }
}
