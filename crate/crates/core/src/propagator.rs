//! Time-dependent Schrödinger propagation `i dC/dt = s·H(t)·C`.
//!
//! The state is never renormalized; norm drift is reported by
//! [`Trajectory::max_norm_drift`] so integrator defects stay visible.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AmplitudeVector, FrequencyUnits, HermitianMatrix, ModelError, PulseParams};
use crate::rk::DormandPrince;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PropagationError {
    #[error("invalid integration settings: {0}")]
    InvalidSettings(String),
    #[error("invalid initial state: {0}")]
    InvalidInitial(#[from] ModelError),
    #[error("step size underflow at t = {t} ns (h = {h:e} ns)")]
    StepUnderflow { t: f64, h: f64 },
    #[error("Hamiltonian has dimension {got}, initial state has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("state index {index} out of range for a {dim}-level trajectory")]
    InvalidIndex { index: usize, dim: usize },
}

/// Time window, step control, and output decimation for one propagation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationSettings {
    pub t_start: f64,
    pub t_end: f64,
    /// Upper bound on the integrator step (ns).
    pub max_step: f64,
    /// Local error target, applied as both absolute and relative tolerance.
    pub tolerance: f64,
    /// Samples are recorded every `record_stride · max_step` ns, plus `t_end`.
    pub record_stride: usize,
    #[serde(default)]
    pub units: FrequencyUnits,
}

/// Number of samples [`default_window`] aims for.
pub const DEFAULT_SAMPLES: usize = 2000;
/// Half-width of the default window in envelope 1/e widths.
pub const WINDOW_WIDTHS: f64 = 5.0;

impl IntegrationSettings {
    pub fn validate(&self) -> Result<(), PropagationError> {
        let bad = |m: String| Err(PropagationError::InvalidSettings(m));
        if !(self.t_start.is_finite() && self.t_end.is_finite()) || self.t_start >= self.t_end {
            return bad(format!("need t_start < t_end, got [{}, {}]", self.t_start, self.t_end));
        }
        if !(self.max_step > 0.0) || !self.max_step.is_finite() {
            return bad(format!("max_step must be positive, got {}", self.max_step));
        }
        if !(self.tolerance > 0.0) || !self.tolerance.is_finite() {
            return bad(format!("tolerance must be positive, got {}", self.tolerance));
        }
        if self.record_stride == 0 {
            return bad("record_stride must be at least 1".into());
        }
        Ok(())
    }

    /// Output sample times: uniform spacing, always ending exactly at `t_end`.
    pub fn sample_times(&self) -> Vec<f64> {
        let dt = self.record_stride as f64 * self.max_step;
        let span = self.t_end - self.t_start;
        let n = ((span / dt) * (1.0 - 1e-12)).floor() as usize;
        let mut times: Vec<f64> = (0..=n).map(|k| self.t_start + k as f64 * dt).collect();
        if self.t_end - times[n] > 1e-9 * dt {
            times.push(self.t_end);
        } else {
            times[n] = self.t_end;
        }
        times
    }

    pub fn with_tolerance(self, tolerance: f64) -> Self {
        IntegrationSettings { tolerance, ..self }
    }

    pub fn with_units(self, units: FrequencyUnits) -> Self {
        IntegrationSettings { units, ..self }
    }

    /// Halves both `max_step` and `tolerance`, keeping the same sample times.
    pub fn refined(self) -> Self {
        IntegrationSettings {
            max_step: self.max_step / 2.0,
            tolerance: self.tolerance / 2.0,
            record_stride: self.record_stride * 2,
            ..self
        }
    }
}

/// Window of ±5 envelope widths around the pulse center, where the Rabi
/// envelope is below exp(−25) of its peak.
pub fn default_window(pulse: &PulseParams) -> IntegrationSettings {
    let half = WINDOW_WIDTHS * pulse.envelope_width();
    let max_step = pulse.tau0() / 2000.0;
    let steps = 2.0 * half / max_step;
    let record_stride = ((steps / DEFAULT_SAMPLES as f64).round() as usize).max(1);
    IntegrationSettings {
        t_start: pulse.center - half,
        t_end: pulse.center + half,
        max_step,
        tolerance: 1e-12,
        record_stride,
        units: FrequencyUnits::default(),
    }
}

/// Sampled solution of the Schrödinger equation.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<AmplitudeVector>,
    pub populations: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn from_states(times: Vec<f64>, states: Vec<AmplitudeVector>) -> Self {
        let populations = states.iter().map(AmplitudeVector::populations).collect();
        Trajectory { times, states, populations }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, AmplitudeVector::dim)
    }

    /// max over samples of |Σ|cᵢ|² − 1|.
    pub fn max_norm_drift(&self) -> f64 {
        self.states.iter().map(|s| (s.norm_sqr() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Summed population of `states` at every sample.
    pub fn summed(&self, states: &[usize]) -> Result<Vec<f64>, PropagationError> {
        let dim = self.dim();
        if let Some(&index) = states.iter().find(|&&i| i >= dim) {
            return Err(PropagationError::InvalidIndex { index, dim });
        }
        Ok(self.populations.iter().map(|p| states.iter().map(|&i| p[i]).sum()).collect())
    }
}

/// Integrates `i dC/dt = s·H(t)·C` from `initial` over the settings window.
pub fn propagate<H>(
    hamiltonian: H,
    initial: &AmplitudeVector,
    settings: &IntegrationSettings,
) -> Result<Trajectory, PropagationError>
where
    H: Fn(f64) -> HermitianMatrix,
{
    settings.validate()?;
    initial.check_normalized()?;
    let dim = initial.dim();
    let got = hamiltonian(settings.t_start).dim();
    if got != dim {
        return Err(PropagationError::DimensionMismatch { expected: dim, got });
    }

    let scale = settings.units.angular_factor();
    let mut rhs = |t: f64, y: &[Complex64], dy: &mut [Complex64]| {
        hamiltonian(t).mul_vec(y, dy);
        for d in dy.iter_mut() {
            // -i·s·(H y)
            *d = Complex64::new(scale * d.im, -scale * d.re);
        }
    };

    let times = settings.sample_times();
    let mut stepper = DormandPrince::new(dim, settings.tolerance, settings.max_step);
    let mut y = initial.components.clone();
    let mut states = Vec::with_capacity(times.len());
    states.push(initial.clone());
    for w in times.windows(2) {
        stepper
            .advance(&mut rhs, w[0], w[1], &mut y)
            .map_err(|e| PropagationError::StepUnderflow { t: e.t, h: e.h })?;
        states.push(AmplitudeVector::new(y.clone()));
    }
    Ok(Trajectory::from_states(times, states))
}

/// Populations at the last sample.
pub fn final_populations(traj: &Trajectory) -> Result<Vec<f64>, PropagationError> {
    traj.populations.last().cloned().ok_or(PropagationError::EmptyTrajectory)
}

/// Largest summed population of `states` over the trajectory.
pub fn transient_max(traj: &Trajectory, states: &[usize]) -> Result<f64, PropagationError> {
    if traj.is_empty() {
        return Err(PropagationError::EmptyTrajectory);
    }
    Ok(traj.summed(states)?.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// Number of strict interior local maxima of a sampled curve.
pub fn count_local_maxima(values: &[f64]) -> usize {
    values.windows(3).filter(|w| w[1] > w[0] && w[1] > w[2]).count()
}
