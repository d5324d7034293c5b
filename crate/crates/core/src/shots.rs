//! Monte Carlo detector statistics for the full teleport-and-readout experiment.
//!
//! Each shot draws its random numbers from a ChaCha stream keyed by
//! `(seed, delta_index)` at a word offset fixed by the shot index, so every
//! shot is reproducible on its own and the record list does not depend on
//! how shots are spread over worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::readout::{
    excitation_probability_pair, tomography_invert_weighted, InversionLimits, Measurement,
    ReadoutCircuit, ReadoutError, TomographyResult, TransferMatrix,
};
use crate::state::{PairState, QubitState};
use crate::teleport::{run_teleport, TeleportConfig, TeleportError};

/// 32-bit words reserved per shot in its random stream (16 uniforms).
const WORDS_PER_SHOT: u128 = 32;
const MAX_ZONES: usize = 12;
const CHUNK: usize = 1 << 14;

#[derive(Debug, Error)]
pub enum ShotError {
    #[error(transparent)]
    Teleport(#[from] TeleportError),
    #[error(transparent)]
    Readout(#[from] ReadoutError),
    #[error("no accepted shots at detuning {delta} rad/s")]
    InsufficientData { delta: f64 },
    #[error("need at least 4 detunings with data, got {0}")]
    TooFewDetunings(usize),
    #[error("acceptance probability {0:e} is too small to reach the requested count")]
    NoAcceptance(f64),
    #[error("invalid shot options: {0}")]
    InvalidOptions(String),
}

/// How many shots to take per detuning.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShotBudget {
    /// Fixed number of atom pairs per detuning.
    PerDelta(usize),
    /// Keep going until this many pairs pass the atom-A condition.
    AcceptedPerDelta(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotOptions {
    /// Probability that either ionization detector registers an excited atom.
    pub detector_efficiency: f64,
    /// Probability of a spontaneous emission event while crossing one zone.
    pub emission_loss_per_zone: f64,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl Default for ShotOptions {
    fn default() -> Self {
        Self {
            detector_efficiency: 1.0,
            emission_loss_per_zone: 0.0,
            workers: None,
        }
    }
}

/// One atom pair. `atom_b_excited` is `None` when the pair was discarded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotRecord {
    pub delta: f64,
    pub delta_index: usize,
    pub atom_a_excited: bool,
    pub atom_b_excited: Option<bool>,
    pub shot_index: u64,
}

/// Exact probabilities driving the Bernoulli draws at one detuning.
#[derive(Debug, Clone, PartialEq)]
struct DeltaModel {
    delta: f64,
    /// `p_excited[k]`: excitation probability when the last emission happened
    /// in zone `k - 1` (`k = 0`: no emission).
    p_excited: Vec<f64>,
}

fn delta_model(circuit: &ReadoutCircuit, pair: &PairState, delta: f64) -> DeltaModel {
    let zones = circuit.zone_transfers(delta);
    let tail = |from: usize| {
        zones[from..]
            .iter()
            .fold(TransferMatrix::identity(), |acc, m| acc.then(m))
    };
    let mut p_excited = vec![excitation_probability_pair(pair, &tail(0))];
    for k in 0..zones.len() {
        p_excited.push(tail(k + 1).c01.norm_sqr());
    }
    DeltaModel { delta, p_excited }
}

fn draw_shot(
    rng: &mut ChaCha8Rng,
    shot_index: u64,
    delta_index: usize,
    model: &DeltaModel,
    p_a: f64,
    options: &ShotOptions,
) -> ShotRecord {
    rng.set_word_pos(shot_index as u128 * WORDS_PER_SHOT);
    let mut u = [0.0f64; 16];
    for v in u.iter_mut() {
        *v = rng.random::<f64>();
    }
    let eta = options.detector_efficiency;
    let a_excited = u[0] < p_a;
    let a_registered = a_excited && u[1] < eta;
    let atom_b_excited = a_registered.then(|| {
        let zones = model.p_excited.len() - 1;
        let last_emission = (0..zones)
            .rev()
            .find(|&k| u[4 + k] < options.emission_loss_per_zone)
            .map_or(0, |k| k + 1);
        u[2] < model.p_excited[last_emission] && u[3] < eta
    });
    ShotRecord {
        delta: model.delta,
        delta_index,
        atom_a_excited: a_registered,
        atom_b_excited,
        shot_index,
    }
}

fn run_range(
    seed: u64,
    delta_index: usize,
    model: &DeltaModel,
    p_a: f64,
    options: &ShotOptions,
    range: std::ops::Range<u64>,
) -> Vec<ShotRecord> {
    let starts: Vec<u64> = range.clone().step_by(CHUNK).collect();
    starts
        .par_iter()
        .map(|&start| {
            let end = (start + CHUNK as u64).min(range.end);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(delta_index as u64);
            (start..end)
                .map(|i| draw_shot(&mut rng, i, delta_index, model, p_a, options))
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .concat()
}

fn validate_options(options: &ShotOptions, zones: usize) -> Result<(), ShotError> {
    if !(0.0..=1.0).contains(&options.detector_efficiency) {
        return Err(ShotError::InvalidOptions(format!(
            "detector_efficiency {} outside [0, 1]",
            options.detector_efficiency
        )));
    }
    if !(0.0..=1.0).contains(&options.emission_loss_per_zone) {
        return Err(ShotError::InvalidOptions(format!(
            "emission_loss_per_zone {} outside [0, 1]",
            options.emission_loss_per_zone
        )));
    }
    if options.workers == Some(0) {
        return Err(ShotError::InvalidOptions("workers must be at least 1".into()));
    }
    if zones > MAX_ZONES {
        return Err(ShotError::InvalidOptions(format!("at most {MAX_ZONES} zones supported")));
    }
    Ok(())
}

/// Simulates the experiment shot by shot for every detuning.
///
/// Records are ordered by detuning index, then shot index.
#[allow(clippy::too_many_arguments)]
pub fn simulate_shots(
    teleport: &TeleportConfig,
    circuit: &ReadoutCircuit,
    input: &QubitState,
    deltas: &[f64],
    budget: ShotBudget,
    seed: u64,
    options: &ShotOptions,
) -> Result<Vec<ShotRecord>, ShotError> {
    validate_options(options, circuit.zones.len())?;
    let outcome = run_teleport(teleport, input, Some(1))?;
    let p_a = outcome.success_probability;
    let pair = outcome.conditional_state;

    let work = || -> Result<Vec<ShotRecord>, ShotError> {
        let mut records = Vec::new();
        for (di, &delta) in deltas.iter().enumerate() {
            let model = delta_model(circuit, &pair, delta);
            match budget {
                ShotBudget::PerDelta(n) => {
                    records.extend(run_range(seed, di, &model, p_a, options, 0..n as u64));
                }
                ShotBudget::AcceptedPerDelta(target) => {
                    let p_accept = p_a * options.detector_efficiency;
                    if target > 0 && p_accept < 1e-9 {
                        return Err(ShotError::NoAcceptance(p_accept));
                    }
                    let mut accepted = 0usize;
                    let mut next = 0u64;
                    while accepted < target {
                        let batch = (((target - accepted) as f64 / p_accept) * 1.1) as u64 + CHUNK as u64;
                        let chunk = run_range(seed, di, &model, p_a, options, next..next + batch);
                        next += batch;
                        for r in chunk {
                            if accepted == target {
                                break;
                            }
                            accepted += r.atom_a_excited as usize;
                            records.push(r);
                        }
                    }
                }
            }
        }
        Ok(records)
    };

    match options.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| ShotError::InvalidOptions(e.to_string()))?
            .install(work),
        None => work(),
    }
}

/// Counts and binomial estimate at one detuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaEstimate {
    pub delta: f64,
    pub n_total: usize,
    pub n_accepted: usize,
    pub n_b_excited: usize,
    pub p1_hat: f64,
    pub standard_error: f64,
}

impl DeltaEstimate {
    /// Estimate with `p1_hat` fixed to `p1` and binomial error for `n` accepted shots.
    pub fn exact(delta: f64, p1: f64, n: usize) -> Self {
        Self {
            delta,
            n_total: n,
            n_accepted: n,
            n_b_excited: (p1 * n as f64).round() as usize,
            p1_hat: p1,
            standard_error: (p1 * (1.0 - p1) / n as f64).sqrt(),
        }
    }

    /// Inverse-variance weight; the variance is floored at `1/(4N²)` so a
    /// detuning with `p̂ ∈ {0, 1}` keeps a finite weight.
    pub fn weight(&self) -> f64 {
        let n = self.n_accepted as f64;
        let var = (self.p1_hat * (1.0 - self.p1_hat) / n).max(0.25 / (n * n));
        1.0 / var
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationReport {
    pub per_delta: Vec<DeltaEstimate>,
    pub tomography: TomographyResult,
    /// One-sigma half-width of `θ̂`.
    pub theta_ci: f64,
    /// One-sigma half-width of `φ̂`.
    pub phi_ci: f64,
}

impl EstimationReport {
    pub fn acceptance_fraction(&self) -> f64 {
        let total: usize = self.per_delta.iter().map(|d| d.n_total).sum();
        let acc: usize = self.per_delta.iter().map(|d| d.n_accepted).sum();
        if total == 0 {
            0.0
        } else {
            acc as f64 / total as f64
        }
    }
}

/// Tallies records per detuning. Only records whose atom A was registered
/// excited contribute to the `P₁` counts.
pub fn tally(records: &[ShotRecord], deltas: &[f64]) -> Result<Vec<DeltaEstimate>, ShotError> {
    deltas
        .iter()
        .map(|&delta| {
            let mut n_total = 0;
            let mut n_accepted = 0;
            let mut n_b = 0;
            for r in records.iter().filter(|r| r.delta.to_bits() == delta.to_bits()) {
                n_total += 1;
                if r.atom_a_excited {
                    n_accepted += 1;
                    n_b += (r.atom_b_excited == Some(true)) as usize;
                }
            }
            if n_accepted == 0 {
                return Err(ShotError::InsufficientData { delta });
            }
            let p = n_b as f64 / n_accepted as f64;
            Ok(DeltaEstimate {
                delta,
                n_total,
                n_accepted,
                n_b_excited: n_b,
                p1_hat: p,
                standard_error: (p * (1.0 - p) / n_accepted as f64).sqrt(),
            })
        })
        .collect()
}

/// Weighted-least-squares tomography from per-detuning estimates.
pub fn estimate_from_tallies(
    per_delta: Vec<DeltaEstimate>,
    transfers: &[(f64, TransferMatrix)],
    limits: &InversionLimits,
) -> Result<EstimationReport, ShotError> {
    if per_delta.len() < 4 {
        return Err(ShotError::TooFewDetunings(per_delta.len()));
    }
    let mut measurements = Vec::with_capacity(per_delta.len());
    let mut weights = Vec::with_capacity(per_delta.len());
    for d in &per_delta {
        let Some(&(_, transfer)) = transfers.iter().find(|(delta, _)| delta.to_bits() == d.delta.to_bits()) else {
            return Err(ShotError::InsufficientData { delta: d.delta });
        };
        measurements.push(Measurement {
            delta: d.delta,
            p1: d.p1_hat,
            transfer,
        });
        weights.push(d.weight());
    }
    let tomography = tomography_invert_weighted(&measurements, &weights, limits)?;
    let (theta_ci, phi_ci) = tomography.angle_sigmas();
    Ok(EstimationReport {
        per_delta,
        tomography,
        theta_ci,
        phi_ci,
    })
}

/// Tallies `records` at each detuning in `transfers` and inverts.
pub fn estimate(
    records: &[ShotRecord],
    transfers: &[(f64, TransferMatrix)],
    limits: &InversionLimits,
) -> Result<EstimationReport, ShotError> {
    let deltas: Vec<f64> = transfers.iter().map(|(d, _)| *d).collect();
    estimate_from_tallies(tally(records, &deltas)?, transfers, limits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::PhysicalParams;
    use crate::readout::tomography_invert;
    use crate::state::{bloch_to_qubit, BlochAngles};
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_6};

    fn setup() -> (TeleportConfig, ReadoutCircuit, QubitState, Vec<f64>) {
        let cfg = TeleportConfig::chip_default().unwrap();
        let p = PhysicalParams::default();
        let circuit = ReadoutCircuit::chip_default(p.omega(), p.transit_b()).unwrap();
        let input = bloch_to_qubit(BlochAngles::new(FRAC_PI_4, -FRAC_PI_6).unwrap());
        let hw = circuit.default_search_half_width();
        let deltas = vec![-0.75 * hw, -0.5 * hw, 0.0, 0.5 * hw];
        (cfg, circuit, input, deltas)
    }

    #[test]
    fn same_seed_same_records() {
        let (cfg, c, input, deltas) = setup();
        let opts = ShotOptions::default();
        let a = simulate_shots(&cfg, &c, &input, &deltas, ShotBudget::PerDelta(2000), 7, &opts).unwrap();
        let b = simulate_shots(&cfg, &c, &input, &deltas, ShotBudget::PerDelta(2000), 7, &opts).unwrap();
        assert_eq!(a, b);
        let c2 = simulate_shots(&cfg, &c, &input, &deltas, ShotBudget::PerDelta(2000), 8, &opts).unwrap();
        assert_ne!(a, c2);
    }

    #[test]
    fn discarded_iff_atom_a_not_excited() {
        let (cfg, c, input, deltas) = setup();
        let recs = simulate_shots(&cfg, &c, &input, &deltas, ShotBudget::PerDelta(3000), 1, &ShotOptions::default()).unwrap();
        assert_eq!(recs.len(), 4 * 3000);
        assert!(recs.iter().all(|r| r.atom_b_excited.is_some() == r.atom_a_excited));
    }

    #[test]
    fn accepted_budget_is_exact() {
        let (cfg, c, input, deltas) = setup();
        let recs = simulate_shots(&cfg, &c, &input, &deltas, ShotBudget::AcceptedPerDelta(500), 3, &ShotOptions::default()).unwrap();
        for d in &deltas {
            let acc = recs.iter().filter(|r| r.delta == *d && r.atom_a_excited).count();
            assert_eq!(acc, 500);
        }
        // the last record of each detuning is an accepted one
        let last: Vec<_> = recs.windows(2).filter(|w| w[0].delta_index != w[1].delta_index).map(|w| w[0]).collect();
        assert!(last.iter().all(|r| r.atom_a_excited));
    }

    #[test]
    fn prefix_of_larger_run_matches() {
        let (cfg, c, input, deltas) = setup();
        let opts = ShotOptions::default();
        let small = simulate_shots(&cfg, &c, &input, &deltas[..1], ShotBudget::PerDelta(100), 5, &opts).unwrap();
        let big = simulate_shots(&cfg, &c, &input, &deltas[..1], ShotBudget::PerDelta(40_000), 5, &opts).unwrap();
        assert_eq!(small[..], big[..100]);
    }

    #[test]
    fn all_discarded_is_insufficient() {
        let recs = vec![
            ShotRecord {
                delta: 0.0,
                delta_index: 0,
                atom_a_excited: false,
                atom_b_excited: None,
                shot_index: 0,
            };
            10
        ];
        let t = (0.0, TransferMatrix::identity());
        assert!(matches!(
            estimate(&recs, &[t], &InversionLimits::default()),
            Err(ShotError::InsufficientData { delta }) if delta == 0.0
        ));
    }

    #[test]
    fn noiseless_tallies_reduce_to_plain_inversion() {
        let (_, c, input, deltas) = setup();
        let transfers: Vec<_> = deltas.iter().map(|&d| (d, c.transfer(d))).collect();
        let exact: Vec<_> = transfers
            .iter()
            .map(|(d, m)| DeltaEstimate::exact(*d, crate::readout::excitation_probability(&input, m), 100_000))
            .collect();
        let meas: Vec<_> = exact
            .iter()
            .zip(&transfers)
            .map(|(e, (_, m))| Measurement {
                delta: e.delta,
                p1: e.p1_hat,
                transfer: *m,
            })
            .collect();
        let plain = tomography_invert(&meas).unwrap();
        let rep = estimate_from_tallies(exact, &transfers, &InversionLimits::default()).unwrap();
        for (a, b) in plain.unknowns().iter().zip(rep.tomography.unknowns()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((rep.tomography.theta_hat - FRAC_PI_4).abs() < 1e-6);
    }

    #[test]
    fn emission_loss_lowers_excitation_and_efficiency_discards() {
        let (cfg, c, input, deltas) = setup();
        let lossy = ShotOptions {
            detector_efficiency: 0.5,
            emission_loss_per_zone: 1.0,
            workers: Some(2),
        };
        let recs = simulate_shots(&cfg, &c, &input, &deltas, ShotBudget::PerDelta(20_000), 9, &lossy).unwrap();
        let frac = recs.iter().filter(|r| r.atom_a_excited).count() as f64 / recs.len() as f64;
        assert!((frac - 0.125).abs() < 0.01);
        // emission in the last zone leaves the atom in |0⟩
        assert!(recs.iter().all(|r| r.atom_b_excited != Some(true)));
    }

    #[test]
    fn invalid_options_rejected() {
        let (cfg, c, input, deltas) = setup();
        let bad = ShotOptions {
            detector_efficiency: 1.5,
            ..ShotOptions::default()
        };
        assert!(matches!(
            simulate_shots(&cfg, &c, &input, &deltas, ShotBudget::PerDelta(1), 0, &bad),
            Err(ShotError::InvalidOptions(_))
        ));
    }
}
