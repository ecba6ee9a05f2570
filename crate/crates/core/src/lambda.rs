//! Reduction of the four-level system to a three-level Λ system.
//!
//! With Δ = 0 the two excited levels couple to the ground doublet with equal
//! strength, so only the bright combination a₊ = (a₃ + a₄)/√2 is driven. The
//! dark combination a₋ = (a₃ − a₄)/√2 is sourced solely through ω₄₃; when
//! ω₄₃ is small against Ω_R it stays frozen and the dynamics closes on
//! (a₁, a₂, a₊) with coupling −Ω_R/√2.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use thiserror::Error;

use crate::model::{hamiltonian_builder, AmplitudeVector, AtomSystem, LevelModel, ModelError, PulseParams};
use crate::propagator::{default_window, propagate, IntegrationSettings, PropagationError, Trajectory};

/// Ratio taken to mean "much greater than" in the validity conditions.
pub const DEFAULT_DOMINANCE: f64 = 5.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReductionError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Propagation(#[from] PropagationError),
}

/// Maps (a₁, a₂, a₃, a₄) to (a₁, a₂, a₊, a₋).
pub fn to_pm_basis(state: &AmplitudeVector) -> Result<AmplitudeVector, ModelError> {
    let [a1, a2, a3, a4] = four(state)?;
    Ok(AmplitudeVector::new(vec![a1, a2, (a3 + a4) * FRAC_1_SQRT_2, (a3 - a4) * FRAC_1_SQRT_2]))
}

/// Inverse of [`to_pm_basis`].
pub fn from_pm_basis(state: &AmplitudeVector) -> Result<AmplitudeVector, ModelError> {
    let [a1, a2, ap, am] = four(state)?;
    Ok(AmplitudeVector::new(vec![a1, a2, (ap + am) * FRAC_1_SQRT_2, (ap - am) * FRAC_1_SQRT_2]))
}

fn four(state: &AmplitudeVector) -> Result<[Complex64; 4], ModelError> {
    match state.components.as_slice() {
        &[a, b, c, d] => Ok([a, b, c, d]),
        other => Err(ModelError::Dimension { expected: 4, got: other.len() }),
    }
}

/// max over t of ||a₋(t)| − |a₋(t₀)|| for a trajectory of the four-level model.
pub fn aminus_drift_of(traj: &Trajectory) -> Result<f64, ModelError> {
    let mut start = None;
    let mut worst = 0.0_f64;
    for s in &traj.states {
        let am = to_pm_basis(s)?.components[3].norm();
        let a0 = *start.get_or_insert(am);
        worst = worst.max((am - a0).abs());
    }
    Ok(worst)
}

/// Propagates the four-level model from |1⟩ over the default window and
/// reports how far |a₋| wanders.
pub fn aminus_drift(pulse: &PulseParams, atom: &AtomSystem) -> Result<f64, ReductionError> {
    aminus_drift_with(pulse, atom, &default_window(pulse))
}

pub fn aminus_drift_with(
    pulse: &PulseParams,
    atom: &AtomSystem,
    settings: &IntegrationSettings,
) -> Result<f64, ReductionError> {
    crate::model::require_resonant(pulse)?;
    let h = hamiltonian_builder(LevelModel::Four, *pulse, atom.clone())?;
    let traj = propagate(h, &AmplitudeVector::basis(4, 0), settings)?;
    Ok(aminus_drift_of(&traj)?)
}

/// Where the population sits at the end of the pulse, coarse grained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndState {
    Initial,
    Target,
    Excited,
}

impl EndState {
    /// Classifies (P₁, P₂, P_excited) by the largest entry.
    fn of(p1: f64, p2: f64, excited: f64) -> Self {
        if p1 >= p2 && p1 >= excited {
            EndState::Initial
        } else if p2 >= excited {
            EndState::Target
        } else {
            EndState::Excited
        }
    }
}

/// Four-level versus three-level comparison on matched samples.
#[derive(Debug, Clone)]
pub struct ReductionReport {
    /// |α/2π|·τ₀ (GHz), compared against ω₄₃.
    pub chirp_value: f64,
    pub validity_chirp: bool,
    /// Ω_R (GHz), compared against ω₄₃.
    pub rabi_value: f64,
    pub validity_rabi: bool,
    pub omega43: f64,
    pub dominance: f64,
    /// max over t of ||a₋(t)| − |a₋(t₀)||.
    pub aminus_drift: f64,
    /// max over samples of the largest of |ΔP₁|, |ΔP₂|, |(P₃+P₄) − P₃'|.
    pub population_gap: f64,
    /// |P₂ − P₂'| at the end of the pulse.
    pub final_p2_gap: f64,
    pub end_four: EndState,
    pub end_three: EndState,
    pub four: Trajectory,
    pub three: Trajectory,
}

impl ReductionReport {
    /// The two models end with their population in different places.
    pub fn qualitative_discrepancy(&self) -> bool {
        self.end_four != self.end_three
    }

    /// Final (P₁, P₂, P_excited) of the four- and three-level runs.
    pub fn final_summary(&self) -> ([f64; 3], [f64; 3]) {
        let f = self.four.populations.last().expect("non-empty trajectory");
        let t = self.three.populations.last().expect("non-empty trajectory");
        ([f[0], f[1], f[2] + f[3]], [t[0], t[1], t[2]])
    }
}

pub fn compare_models(pulse: &PulseParams, atom: &AtomSystem) -> Result<ReductionReport, ReductionError> {
    compare_models_with(pulse, atom, &default_window(pulse), DEFAULT_DOMINANCE)
}

pub fn compare_models_with(
    pulse: &PulseParams,
    atom: &AtomSystem,
    settings: &IntegrationSettings,
    dominance: f64,
) -> Result<ReductionReport, ReductionError> {
    crate::model::require_resonant(pulse)?;
    let h4 = hamiltonian_builder(LevelModel::Four, *pulse, atom.clone())?;
    let h3 = hamiltonian_builder(LevelModel::Three, *pulse, atom.clone())?;
    let (four, three) = rayon::join(
        || propagate(h4, &AmplitudeVector::basis(4, 0), settings),
        || propagate(h3, &AmplitudeVector::basis(3, 0), settings),
    );
    let (four, three) = (four?, three?);

    let population_gap = four
        .populations
        .iter()
        .zip(&three.populations)
        .map(|(p, q)| (p[0] - q[0]).abs().max((p[1] - q[1]).abs()).max((p[2] + p[3] - q[2]).abs()))
        .fold(0.0, f64::max);
    let f = four.populations.last().ok_or(PropagationError::EmptyTrajectory)?;
    let t = three.populations.last().ok_or(PropagationError::EmptyTrajectory)?;
    let chirp_value = pulse.chirp_rate.abs() * pulse.tau0();
    Ok(ReductionReport {
        chirp_value,
        validity_chirp: chirp_value > dominance * atom.omega43,
        rabi_value: pulse.peak_rabi,
        validity_rabi: pulse.peak_rabi > dominance * atom.omega43,
        omega43: atom.omega43,
        dominance,
        aminus_drift: aminus_drift_of(&four)?,
        population_gap,
        final_p2_gap: (f[1] - t[1]).abs(),
        end_four: EndState::of(f[0], f[1], f[2] + f[3]),
        end_three: EndState::of(t[0], t[1], t[2]),
        four,
        three,
    })
}
