//! Simulation of two-photon population inversion between the ground
//! hyperfine levels of an alkali atom driven by one linearly chirped,
//! nanosecond Gaussian pulse.
//!
//! - [`model`]: pulse envelope, atom constants, four- and three-level Hamiltonians
//! - [`propagator`]: adaptive Schrödinger propagation and trajectory diagnostics
//! - [`dressed`]: continuity-tracked instantaneous eigenbasis and nonadiabatic couplings
//! - [`lambda`]: reduction of the excited doublet to a single Λ level
//! - [`sweep`]: parallel (FWHM, chirp) parameter maps

pub mod model;
pub mod dressed;
pub mod lambda;
pub mod propagator;
pub mod sweep;
mod rk;

pub use model::{
    AmplitudeVector, AtomSystem, FrequencyUnits, FwhmReference, HermitianMatrix, LevelModel, ModelError, PulseParams,
};
pub use propagator::{IntegrationSettings, PropagationError, Trajectory};
