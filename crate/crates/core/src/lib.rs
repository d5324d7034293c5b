//! Simulation of a photonic-crystal chip that teleports an atomic qubit
//! through a shared cavity mode and reads it out with two waveguide drive
//! zones.
//!
//! * [`state`]: qubit and atom–atom–cavity state vectors.
//! * [`profile`]: field profiles, pulse areas and coupling calibration.
//! * [`teleport`]: the three-stage conditional teleportation protocol.
//! * [`readout`]: two-zone propagation and four-detuning tomography.
//! * [`shots`]: Monte Carlo detector statistics and estimation.

pub mod ode;
pub mod profile;
pub mod readout;
pub mod shots;
pub mod state;
pub mod teleport;

pub use profile::{PhysicalParams, ProfileModel, SampledProfile};
pub use readout::{ReadoutCircuit, TomographyResult, TransferMatrix};
pub use state::{BlochAngles, JointState, PairState, QubitState};
pub use teleport::{TeleportConfig, TeleportOutcome};
