//! Two-zone readout of atom B and linear-inversion tomography.
//!
//! A drive of Rabi frequency `Ω` and frequency `ω_m = ω + Δ` acting for `dt`
//! maps the amplitudes as
//!
//! ```text
//! c0' = {[i cosΘ s + c] c0 + i sinΘ s e^{iω_m t} c1} e^{iω_m dt/2}
//! c1' = {i sinΘ s e^{-iω_m t} c0 + [-i cosΘ s + c] c1} e^{-iω_m dt/2}
//! ```
//!
//! with `Λ = √(Δ² + Ω²)`, `cosΘ = (ω − ω_m)/Λ = −Δ/Λ`, `sinΘ = −Ω/Λ`,
//! `s = sin(Λdt/2)`, `c = cos(Λdt/2)`. Inside the readout the amplitudes are
//! carried in the frame rotating at `ω_m`, where the phase factors drop out and
//! the map no longer depends on the absolute time `t`.
//!
//! ## Cross term of the excitation probability
//!
//! With `P₁ = |c0·c01 + c1·c11|²`, write `z = c0·c1*` and `w = c01·c11*`.
//! Then `P₁ = |c0|²|c01|² + |c1|²|c11|² + 2 Re(z w)` and
//! `2 Re(z w) = x3 · 2 Re(w) + x4 · 2 Im(w)` with
//! `x3 = c0ʳc1ʳ + c0ⁱc1ⁱ = Re z` and `x4 = c0ʳc1ⁱ − c0ⁱc1ʳ = −Im z`.
//! The minus sign in `x4` follows from the derivation; for
//! `c0 = cos(θ/2)`, `c1 = sin(θ/2)e^{iφ}` it gives `x4 = cos(θ/2) sin(θ/2) sin φ`,
//! so `φ = atan2(x4, x3)`.

use nalgebra::{DMatrix, DVector, Matrix4};
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::profile::{
    calibrate_g0, render_model, ProfileError, ProfileModel, SampledProfile, Transit,
    DEFAULT_SAMPLES_PER_A,
};
use crate::state::{Amplitude, PairState, QubitState};

/// Longest time step used when stepping through a nonuniform zone (a/65 of travel at 767.7 m/s).
pub const MAX_READOUT_STEP: f64 = 44e-9;
/// Systems with a larger 2-norm condition number are treated as degenerate.
pub const DEFAULT_CONDITION_LIMIT: f64 = 1e8;
/// Slack allowed on the populations `x1`, `x2` before a fit is rejected.
pub const DEFAULT_POPULATION_SLACK: f64 = 0.05;

#[derive(Debug, Error)]
pub enum ReadoutError {
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("tomography needs at least 4 distinct detunings, got {0}")]
    TooFewMeasurements(usize),
    #[error("detunings are degenerate: condition number {condition:.3e} exceeds {limit:.1e}")]
    DegenerateDetunings { condition: f64, limit: f64 },
    #[error("inconsistent measurements: populations x1 = {x1}, x2 = {x2}")]
    InconsistentMeasurements { x1: f64, x2: f64 },
    #[error("detuning search range must be positive, got {0}")]
    EmptyRange(f64),
    #[error("no detuning set in range is well conditioned (best {best:.3e})")]
    NoWellConditionedSet { best: f64 },
    #[error("invalid readout zone: {0}")]
    InvalidZone(String),
}

/// Amplitudes `c_ij` for entering in `|i⟩` and leaving in `|j⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    pub c00: Amplitude,
    pub c01: Amplitude,
    pub c10: Amplitude,
    pub c11: Amplitude,
}

impl TransferMatrix {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self {
            c00: one,
            c01: zero,
            c10: zero,
            c11: one,
        }
    }

    /// Evolution through `self` followed by `next`.
    pub fn then(&self, next: &TransferMatrix) -> Self {
        Self {
            c00: self.c00 * next.c00 + self.c01 * next.c10,
            c01: self.c00 * next.c01 + self.c01 * next.c11,
            c10: self.c10 * next.c00 + self.c11 * next.c10,
            c11: self.c10 * next.c01 + self.c11 * next.c11,
        }
    }

    /// Inverse of a unitary transfer matrix.
    pub fn adjoint(&self) -> Self {
        Self {
            c00: self.c00.conj(),
            c01: self.c10.conj(),
            c10: self.c01.conj(),
            c11: self.c11.conj(),
        }
    }

    pub fn apply(&self, state: &QubitState) -> QubitState {
        QubitState::from_amplitudes(
            state.c0 * self.c00 + state.c1 * self.c10,
            state.c0 * self.c01 + state.c1 * self.c11,
        )
    }

    /// Largest deviation of the rows `(c_i0, c_i1)` from an orthonormal pair.
    pub fn unitarity_defect(&self) -> f64 {
        let r0 = self.c00.norm_sqr() + self.c01.norm_sqr() - 1.0;
        let r1 = self.c10.norm_sqr() + self.c11.norm_sqr() - 1.0;
        let x = self.c00 * self.c10.conj() + self.c01 * self.c11.conj();
        r0.abs().max(r1.abs()).max(x.norm())
    }

    pub fn max_abs_diff(&self, other: &TransferMatrix) -> f64 {
        [
            self.c00 - other.c00,
            self.c01 - other.c01,
            self.c10 - other.c10,
            self.c11 - other.c11,
        ]
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
    }

    /// Row of the tomography design matrix:
    /// `[|c01|², |c11|², 2 Re(c01 c11*), 2 Im(c01 c11*)]`.
    pub fn design_row(&self) -> [f64; 4] {
        let w = self.c01 * self.c11.conj();
        [self.c01.norm_sqr(), self.c11.norm_sqr(), 2.0 * w.re, 2.0 * w.im]
    }
}

/// Drive seen during one step. `frame_frequency` is the angular frequency of
/// the frame the amplitudes are expressed in: `ω_m` for the laboratory form,
/// zero for amplitudes already rotating with the drive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drive {
    pub rabi: f64,
    pub detuning: f64,
    pub frame_frequency: f64,
}

impl Drive {
    pub fn rotating(rabi: f64, detuning: f64) -> Self {
        Self {
            rabi,
            detuning,
            frame_frequency: 0.0,
        }
    }
}

/// `(i cosΘ s + c, i sinΘ s, −i cosΘ s + c)` for one constant-drive step.
fn step_coefficients(rabi: f64, detuning: f64, dt: f64) -> (Complex64, Complex64, Complex64) {
    let lambda = detuning.hypot(rabi);
    if lambda == 0.0 {
        let one = Complex64::new(1.0, 0.0);
        return (one, Complex64::new(0.0, 0.0), one);
    }
    let cos_theta = -detuning / lambda;
    let sin_theta = -rabi / lambda;
    let (s, c) = (0.5 * lambda * dt).sin_cos();
    (
        Complex64::new(c, cos_theta * s),
        Complex64::new(0.0, sin_theta * s),
        Complex64::new(c, -cos_theta * s),
    )
}

/// Closed-form propagation of `(c0, c1)` from `t` to `t + dt` under a constant drive.
pub fn step_amplitudes(
    c0: Amplitude,
    c1: Amplitude,
    drive: &Drive,
    dt: f64,
    t: f64,
) -> (Amplitude, Amplitude) {
    let (d0, off, d1) = step_coefficients(drive.rabi, drive.detuning, dt);
    let wm = drive.frame_frequency;
    if wm == 0.0 {
        return (d0 * c0 + off * c1, off * c0 + d1 * c1);
    }
    let phase_t = Complex64::from_polar(1.0, wm * t);
    let phase_dt = Complex64::from_polar(1.0, 0.5 * wm * dt);
    (
        (d0 * c0 + off * phase_t * c1) * phase_dt,
        (off * phase_t.conj() * c0 + d1 * c1) * phase_dt.conj(),
    )
}

/// Rotating-frame transfer matrix of one constant-drive step.
pub fn step_matrix(rabi: f64, detuning: f64, dt: f64) -> TransferMatrix {
    let (d0, off, d1) = step_coefficients(rabi, detuning, dt);
    TransferMatrix {
        c00: d0,
        c01: off,
        c10: off,
        c11: d1,
    }
}

/// One waveguide interaction region.
#[derive(Debug, Clone, PartialEq)]
pub struct RamseyZone {
    pub profile: SampledProfile,
    /// Atomic transition frequency `ω`.
    pub omega: f64,
    /// `Δ = ω_m − ω`.
    pub detuning: f64,
    /// Rabi frequency at the field maximum.
    pub peak_rabi: f64,
}

impl RamseyZone {
    pub fn omega_m(&self) -> f64 {
        self.omega + self.detuning
    }

    pub fn duration(&self, transit: &Transit) -> f64 {
        transit.duration(self.profile.end() - self.profile.start())
    }

    pub fn rabi_at(&self, x: f64) -> f64 {
        self.peak_rabi * self.profile.eval(x)
    }
}

/// Midpoint positions and durations of the steps used to cross a zone. Every
/// grid interval of the profile is split into equal steps no longer than
/// `step`, so no step straddles a sample of the profile.
fn step_plan(profile: &SampledProfile, transit: &Transit, step: f64) -> Vec<(f64, f64)> {
    let mut plan = Vec::new();
    for w in profile.positions().windows(2) {
        let duration = transit.duration(w[1] - w[0]);
        let n = ((duration / step) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let dt = duration / n as f64;
        let dx = (w[1] - w[0]) / n as f64;
        plan.extend((0..n).map(|k| (w[0] + (k as f64 + 0.5) * dx, dt)));
    }
    plan
}

/// Piecewise-constant propagation across the zone with `Ω` sampled at each
/// step's midpoint. Steps never exceed `step`.
pub fn propagate_zone(zone: &RamseyZone, transit: &Transit, step: f64) -> TransferMatrix {
    step_plan(&zone.profile, transit, step)
        .into_iter()
        .fold(TransferMatrix::identity(), |m, (x, dt)| {
            m.then(&step_matrix(zone.rabi_at(x), zone.detuning, dt))
        })
}

/// Same stepping as [`propagate_zone`] applied to a state, in the laboratory
/// frame, for an atom entering the zone at absolute time `t_entry`.
pub fn propagate_zone_lab(
    zone: &RamseyZone,
    transit: &Transit,
    step: f64,
    state: &QubitState,
    t_entry: f64,
) -> QubitState {
    let (mut c0, mut c1) = (state.c0, state.c1);
    let mut elapsed = 0.0;
    for (x, dt) in step_plan(&zone.profile, transit, step) {
        let drive = Drive {
            rabi: zone.rabi_at(x),
            detuning: zone.detuning,
            frame_frequency: zone.omega_m(),
        };
        (c0, c1) = step_amplitudes(c0, c1, &drive, dt, t_entry + elapsed);
        elapsed += dt;
    }
    QubitState::from_amplitudes(c0, c1)
}

/// Matrix for the first zone followed by the second.
pub fn compose_zones(first: &TransferMatrix, second: &TransferMatrix) -> TransferMatrix {
    first.then(second)
}

/// `P₁ = |c0·c01 + c1·c11|²`.
pub fn excitation_probability(input: &QubitState, composite: &TransferMatrix) -> f64 {
    (input.c0 * composite.c01 + input.c1 * composite.c11)
        .norm_sqr()
        .clamp(0.0, 1.0)
}

/// Four-term expansion of [`excitation_probability`] in terms of the
/// tomography unknowns.
pub fn excitation_probability_expanded(input: &QubitState, composite: &TransferMatrix) -> f64 {
    let x = state_unknowns(input);
    let row = composite.design_row();
    row.iter().zip(&x).map(|(r, v)| r * v).sum()
}

/// `[|c0|², |c1|², c0ʳc1ʳ + c0ⁱc1ⁱ, c0ʳc1ⁱ − c0ⁱc1ʳ]`.
pub fn state_unknowns(s: &QubitState) -> [f64; 4] {
    [
        s.c0.norm_sqr(),
        s.c1.norm_sqr(),
        s.c0.re * s.c1.re + s.c0.im * s.c1.im,
        s.c0.re * s.c1.im - s.c0.im * s.c1.re,
    ]
}

/// Excitation probability of atom B when it is still correlated with the
/// cavity photon number; each Fock branch contributes incoherently.
pub fn excitation_probability_pair(pair: &PairState, composite: &TransferMatrix) -> f64 {
    (0..3u8)
        .map(|n| {
            let v = pair.b_component(n);
            (v.c0 * composite.c01 + v.c1 * composite.c11).norm_sqr()
        })
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

/// Both waveguide zones and the beam that crosses them.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutCircuit {
    pub zones: Vec<SampledProfile>,
    pub omega: f64,
    pub peak_rabi: f64,
    pub transit: Transit,
    pub step: f64,
}

impl ReadoutCircuit {
    /// Circuit whose first zone delivers `zone_area` at resonance.
    pub fn calibrated(
        zones: Vec<SampledProfile>,
        omega: f64,
        transit: Transit,
        zone_area: f64,
        step: f64,
    ) -> Result<Self, ReadoutError> {
        if zones.is_empty() {
            return Err(ReadoutError::InvalidZone("no zones".into()));
        }
        for w in zones.windows(2) {
            if w[1].start() < w[0].end() {
                return Err(ReadoutError::InvalidZone(format!(
                    "zone starting at {}a overlaps the previous zone ending at {}a",
                    w[1].start(),
                    w[0].end()
                )));
            }
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(ReadoutError::InvalidZone(format!("step must be positive, got {step}")));
        }
        let first = &zones[0];
        let peak_rabi = calibrate_g0(first, &transit, zone_area, first.start(), first.end())?;
        Ok(Self {
            zones,
            omega,
            peak_rabi,
            transit,
            step,
        })
    }

    /// Two default 18a zones at 43a and 61a, each a π/2 pulse at resonance.
    pub fn chip_default(omega: f64, transit: Transit) -> Result<Self, ReadoutError> {
        let zones = [43.0, 61.0]
            .iter()
            .map(|&s| render_model(&ProfileModel::default_waveguide(s), DEFAULT_SAMPLES_PER_A))
            .collect::<Result<Vec<_>, _>>()?;
        Self::calibrated(zones, omega, transit, std::f64::consts::FRAC_PI_2, MAX_READOUT_STEP)
    }

    pub fn zone(&self, index: usize, detuning: f64) -> RamseyZone {
        RamseyZone {
            profile: self.zones[index].clone(),
            omega: self.omega,
            detuning,
            peak_rabi: self.peak_rabi,
        }
    }

    /// Per-zone matrices; any field-free gap between zones is folded into the
    /// following zone's matrix.
    pub fn zone_transfers(&self, detuning: f64) -> Vec<TransferMatrix> {
        let mut out = Vec::with_capacity(self.zones.len());
        for (i, profile) in self.zones.iter().enumerate() {
            let zone = self.zone(i, detuning);
            let mut m = propagate_zone(&zone, &self.transit, self.step);
            if i > 0 {
                let gap = profile.start() - self.zones[i - 1].end();
                if gap > 0.0 {
                    m = step_matrix(0.0, detuning, self.transit.duration(gap)).then(&m);
                }
            }
            out.push(m);
        }
        out
    }

    pub fn transfer(&self, detuning: f64) -> TransferMatrix {
        self.zone_transfers(detuning)
            .iter()
            .fold(TransferMatrix::identity(), |acc, m| compose_zones(&acc, m))
    }

    /// Time-averaged Rabi frequency over the first zone.
    pub fn mean_rabi(&self) -> f64 {
        let z = &self.zones[0];
        self.peak_rabi * z.integral(z.start(), z.end()) / (z.end() - z.start())
    }

    /// `[−4Ω̄, 4Ω̄]` half-width.
    pub fn default_search_half_width(&self) -> f64 {
        4.0 * self.mean_rabi()
    }

    pub fn total_span(&self) -> f64 {
        self.zones.iter().map(|z| z.end() - z.start()).sum()
    }
}

/// One point of a detuning sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub delta: f64,
    pub p1: f64,
    pub transfer: TransferMatrix,
}

impl SweepPoint {
    pub fn c01_abs2(&self) -> f64 {
        self.transfer.c01.norm_sqr()
    }

    pub fn c11_abs2(&self) -> f64 {
        self.transfer.c11.norm_sqr()
    }

    /// `2 (c01 c11*)`.
    pub fn cross(&self) -> Complex64 {
        self.transfer.c01 * self.transfer.c11.conj() * 2.0
    }
}

/// Evaluates the forward model at each detuning. Points are computed
/// independently, so the result does not depend on thread scheduling.
pub fn sweep(circuit: &ReadoutCircuit, input: &QubitState, deltas: &[f64]) -> Vec<SweepPoint> {
    deltas
        .par_iter()
        .map(|&delta| {
            let transfer = circuit.transfer(delta);
            SweepPoint {
                delta,
                p1: excitation_probability(input, &transfer),
                transfer,
            }
        })
        .collect()
}

/// `n` evenly spaced detunings on `[−half_width, half_width]`.
pub fn detuning_grid(half_width: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| -half_width + 2.0 * half_width * i as f64 / (n - 1) as f64)
        .map(|d| if d.abs() < 1e-12 * half_width { 0.0 } else { d })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub delta: f64,
    pub p1: f64,
    pub transfer: TransferMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TomographyResult {
    /// `|c0|²`.
    pub x1: f64,
    /// `|c1|²`.
    pub x2: f64,
    /// `c0ʳc1ʳ + c0ⁱc1ⁱ`.
    pub x3: f64,
    /// `c0ʳc1ⁱ − c0ⁱc1ʳ`.
    pub x4: f64,
    pub theta_hat: f64,
    pub phi_hat: f64,
    /// Euclidean norm of the (weighted) fit residual.
    pub residual: f64,
    /// `x1 + x2 − 1`.
    pub normalization_defect: f64,
    /// 2-norm condition number of the (weighted) design matrix.
    pub condition_number: f64,
    /// `(AᵀWA)⁻¹`, the covariance of `x` when `W` holds inverse variances.
    pub covariance: [[f64; 4]; 4],
}

impl TomographyResult {
    pub fn unknowns(&self) -> [f64; 4] {
        [self.x1, self.x2, self.x3, self.x4]
    }

    /// `x3² + x4² − x1·x2`, non-positive for a physical state.
    pub fn coherence_excess(&self) -> f64 {
        self.x3 * self.x3 + self.x4 * self.x4 - self.x1 * self.x2
    }

    /// Gradients of `θ̂` and `φ̂` with respect to `(x1, x2, x3, x4)`.
    pub fn angle_gradients(&self) -> ([f64; 4], [f64; 4]) {
        let s = self.x1.max(0.0).sqrt();
        let u = self.x2.max(0.0).sqrt();
        let r2 = s * s + u * u;
        let dtheta = if s > 0.0 && u > 0.0 && r2 > 0.0 {
            [-u / (s * r2), s / (u * r2), 0.0, 0.0]
        } else {
            [0.0; 4]
        };
        let q = self.x3 * self.x3 + self.x4 * self.x4;
        let dphi = if q > 0.0 {
            [0.0, 0.0, -self.x4 / q, self.x3 / q]
        } else {
            [0.0; 4]
        };
        (dtheta, dphi)
    }

    /// Standard deviations of `(θ̂, φ̂)` by linear propagation of `covariance`.
    pub fn angle_sigmas(&self) -> (f64, f64) {
        let (gt, gp) = self.angle_gradients();
        let quad = |g: &[f64; 4]| {
            let mut v = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    v += g[i] * self.covariance[i][j] * g[j];
                }
            }
            v.max(0.0).sqrt()
        };
        (quad(&gt), quad(&gp))
    }
}

/// Tuning knobs of the inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionLimits {
    pub condition_limit: f64,
    pub population_slack: f64,
}

impl Default for InversionLimits {
    fn default() -> Self {
        Self {
            condition_limit: DEFAULT_CONDITION_LIMIT,
            population_slack: DEFAULT_POPULATION_SLACK,
        }
    }
}

/// Angles from the tomography unknowns.
pub fn angles_from_unknowns(x: &[f64; 4]) -> (f64, f64) {
    let theta = 2.0 * x[1].max(0.0).sqrt().atan2(x[0].max(0.0).sqrt());
    let phi = if x[2] == 0.0 && x[3] == 0.0 {
        0.0
    } else {
        x[3].atan2(x[2])
    };
    (theta, phi)
}

fn distinct_count(deltas: impl Iterator<Item = f64>) -> usize {
    let mut v: Vec<f64> = deltas.collect();
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup();
    v.len()
}

/// Unweighted inversion of at least four detunings.
pub fn tomography_invert(measurements: &[Measurement]) -> Result<TomographyResult, ReadoutError> {
    let weights = vec![1.0; measurements.len()];
    tomography_invert_weighted(measurements, &weights, &InversionLimits::default())
}

/// Weighted least squares in `(x1, x2, x3, x4)`; exactly determined for four rows.
pub fn tomography_invert_weighted(
    measurements: &[Measurement],
    weights: &[f64],
    limits: &InversionLimits,
) -> Result<TomographyResult, ReadoutError> {
    let distinct = distinct_count(measurements.iter().map(|m| m.delta));
    if measurements.len() < 4 || distinct < 4 {
        return Err(ReadoutError::TooFewMeasurements(distinct));
    }
    assert_eq!(weights.len(), measurements.len(), "one weight per measurement");
    let n = measurements.len();
    let mut a = DMatrix::<f64>::zeros(n, 4);
    let mut b = DVector::<f64>::zeros(n);
    for (i, (m, &w)) in measurements.iter().zip(weights).enumerate() {
        let sw = w.sqrt();
        for (j, v) in m.transfer.design_row().iter().enumerate() {
            a[(i, j)] = sw * v;
        }
        b[i] = sw * m.p1;
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= limits.condition_limit) {
        return Err(ReadoutError::DegenerateDetunings {
            condition,
            limit: limits.condition_limit,
        });
    }
    let x = svd
        .solve(&b, 0.0)
        .map_err(|e| ReadoutError::InvalidZone(e.to_string()))?;
    let residual = (&a * &x - &b).norm();
    let ata = a.transpose() * &a;
    let cov = ata.try_inverse().ok_or(ReadoutError::DegenerateDetunings {
        condition,
        limit: limits.condition_limit,
    })?;

    let xs = [x[0], x[1], x[2], x[3]];
    let slack = limits.population_slack;
    let in_range = |v: f64| (-slack..=1.0 + slack).contains(&v);
    if !(in_range(xs[0]) && in_range(xs[1])) {
        return Err(ReadoutError::InconsistentMeasurements { x1: xs[0], x2: xs[1] });
    }
    let (theta_hat, phi_hat) = angles_from_unknowns(&xs);
    let mut covariance = [[0.0; 4]; 4];
    for (i, row) in covariance.iter_mut().enumerate() {
        for (j, c) in row.iter_mut().enumerate() {
            *c = cov[(i, j)];
        }
    }
    Ok(TomographyResult {
        x1: xs[0],
        x2: xs[1],
        x3: xs[2],
        x4: xs[3],
        theta_hat,
        phi_hat,
        residual,
        normalization_defect: xs[0] + xs[1] - 1.0,
        condition_number: condition,
        covariance,
    })
}

/// 2-norm condition number of the design matrix built from `rows`.
pub fn condition_number_4(rows: [&[f64; 4]; 4]) -> f64 {
    let m = Matrix4::from_fn(|i, j| rows[i][j]);
    let sv = m.singular_values();
    let smin = sv.min();
    if smin > 0.0 {
        sv.max() / smin
    } else {
        f64::INFINITY
    }
}

fn condition_number_rows(rows: &[[f64; 4]]) -> f64 {
    let a = DMatrix::from_fn(rows.len(), 4, |i, j| rows[i][j]);
    let sv = a.singular_values();
    let smin = sv.min();
    if smin > 0.0 {
        sv.max() / smin
    } else {
        f64::INFINITY
    }
}

/// Exhaustive search over a grid of `grid_points` detunings in
/// `[−half_width, half_width]` for the four-element subset with the smallest
/// condition number (ties keep the lexicographically first subset). Counts
/// above four are filled greedily.
pub fn choose_detunings(
    circuit: &ReadoutCircuit,
    count: usize,
    half_width: f64,
    grid_points: usize,
    condition_limit: f64,
) -> Result<Vec<f64>, ReadoutError> {
    if !(half_width.is_finite() && half_width > 0.0) {
        return Err(ReadoutError::EmptyRange(half_width));
    }
    if count < 4 || grid_points < count {
        return Err(ReadoutError::TooFewMeasurements(count.min(grid_points)));
    }
    let grid = detuning_grid(half_width, grid_points);
    let rows: Vec<[f64; 4]> = grid
        .par_iter()
        .map(|&d| circuit.transfer(d).design_row())
        .collect();

    let best = (0..grid_points)
        .into_par_iter()
        .map(|i| {
            let mut local: Option<(f64, [usize; 4])> = None;
            for j in i + 1..grid_points {
                for k in j + 1..grid_points {
                    for l in k + 1..grid_points {
                        let c = condition_number_4([&rows[i], &rows[j], &rows[k], &rows[l]]);
                        if local.is_none_or(|(bc, _)| c < bc) {
                            local = Some((c, [i, j, k, l]));
                        }
                    }
                }
            }
            local
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .fold(None::<(f64, [usize; 4])>, |acc, cand| match acc {
            Some(a) if a.0 <= cand.0 => Some(a),
            _ => Some(cand),
        });

    let Some((cond, idx)) = best else {
        return Err(ReadoutError::NoWellConditionedSet { best: f64::INFINITY });
    };
    if !(cond <= condition_limit) {
        return Err(ReadoutError::NoWellConditionedSet { best: cond });
    }
    let mut chosen: Vec<usize> = idx.to_vec();
    while chosen.len() < count {
        let mut pick: Option<(f64, usize)> = None;
        for cand in (0..grid_points).filter(|c| !chosen.contains(c)) {
            let mut sel: Vec<[f64; 4]> = chosen.iter().map(|&c| rows[c]).collect();
            sel.push(rows[cand]);
            let c = condition_number_rows(&sel);
            if pick.is_none_or(|(bc, _)| c < bc) {
                pick = Some((c, cand));
            }
        }
        chosen.push(pick.expect("grid has spare points").1);
    }
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|i| grid[i]).collect())
}
