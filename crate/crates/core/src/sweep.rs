//! Parameter maps over (FWHM, chirp rate).
//!
//! Every grid cell is an independent propagation from |1⟩ over the default
//! window of its own pulse. Cells are evaluated in parallel and collected by
//! index, so the output does not depend on the number of workers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dressed::AnalyticConditions;
use crate::model::{
    hamiltonian_builder, rb85_d1_preset, AmplitudeVector, AtomSystem, FrequencyUnits, FwhmReference, LevelModel,
    PulseParams,
};
use crate::propagator::{default_window, propagate};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("invalid sweep spec: {0}")]
    InvalidSpec(String),
    #[error("threshold must lie in (0, 1), got {0}")]
    InvalidThreshold(f64),
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

/// `points` evenly spaced samples from `start` to `end` inclusive.
pub fn linspace(start: f64, end: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        n => (0..n).map(|k| start + (end - start) * k as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// FWHM samples (ns), strictly monotone.
    pub fwhm_axis: Vec<f64>,
    /// Chirp rate samples α/2π (GHz/ns), strictly monotone.
    pub chirp_axis: Vec<f64>,
    pub peak_rabi: f64,
    pub detuning: f64,
    pub atom: AtomSystem,
    pub model: LevelModel,
    pub fwhm_of: FwhmReference,
    pub units: FrequencyUnits,
    /// Overrides the integrator tolerance of the default window.
    pub tolerance: Option<f64>,
}

impl Default for SweepSpec {
    /// 64×64 cells over FWHM ∈ [0.5, 4.5] ns and α/2π ∈ [−4, 0] GHz/ns.
    fn default() -> Self {
        SweepSpec {
            fwhm_axis: linspace(0.5, 4.5, 64),
            chirp_axis: linspace(-4.0, 0.0, 64),
            peak_rabi: 3.035,
            detuning: 0.0,
            atom: rb85_d1_preset(),
            model: LevelModel::Four,
            fwhm_of: FwhmReference::default(),
            units: FrequencyUnits::default(),
            tolerance: None,
        }
    }
}

fn strictly_monotone(axis: &[f64]) -> bool {
    let up = axis.windows(2).all(|w| w[1] > w[0]);
    let down = axis.windows(2).all(|w| w[1] < w[0]);
    up || down
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), SweepError> {
        let bad = |m: String| Err(SweepError::InvalidSpec(m));
        for (name, axis) in [("fwhm_axis", &self.fwhm_axis), ("chirp_axis", &self.chirp_axis)] {
            if axis.is_empty() {
                return bad(format!("{name} is empty"));
            }
            if axis.iter().any(|v| !v.is_finite()) {
                return bad(format!("{name} has a non-finite entry"));
            }
            if !strictly_monotone(axis) {
                return bad(format!("{name} is not strictly monotone"));
            }
        }
        if let Some(tol) = self.tolerance {
            if !(tol > 0.0 && tol.is_finite()) {
                return bad(format!("tolerance must be positive, got {tol}"));
            }
        }
        if self.model == LevelModel::Three && self.detuning != 0.0 {
            return bad(format!("three-level model needs zero detuning, got {}", self.detuning));
        }
        self.atom.validate().or_else(|e| bad(e.to_string()))?;
        for &fwhm in &self.fwhm_axis {
            self.pulse(fwhm, self.chirp_axis[0]).validate().or_else(|e| bad(e.to_string()))?;
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.fwhm_axis.len()
    }

    pub fn cols(&self) -> usize {
        self.chirp_axis.len()
    }

    pub fn cells(&self) -> usize {
        self.rows() * self.cols()
    }

    /// Cells are numbered row-major: FWHM index major, chirp index minor.
    pub fn cell_index(&self, fwhm_index: usize, chirp_index: usize) -> usize {
        fwhm_index * self.cols() + chirp_index
    }

    pub fn cell_coords(&self, cell: usize) -> (usize, usize) {
        (cell / self.cols(), cell % self.cols())
    }

    pub fn pulse(&self, fwhm: f64, chirp_rate: f64) -> PulseParams {
        PulseParams {
            peak_rabi: self.peak_rabi,
            fwhm,
            chirp_rate,
            detuning: self.detuning,
            center: 0.0,
            fwhm_of: self.fwhm_of,
        }
    }

    pub fn cell_pulse(&self, cell: usize) -> PulseParams {
        let (i, j) = self.cell_coords(cell);
        self.pulse(self.fwhm_axis[i], self.chirp_axis[j])
    }

    /// Same grid with the sign of every chirp rate flipped.
    pub fn mirrored(&self) -> Self {
        SweepSpec { chirp_axis: self.chirp_axis.iter().map(|a| -a).collect(), ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub cell: usize,
    pub fwhm: f64,
    pub chirp_rate: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub spec: SweepSpec,
    /// Final populations per cell (row-major); failed cells hold NaN.
    pub final_pops: Vec<Vec<f64>>,
    pub flags: Vec<AnalyticConditions>,
    pub failures: Vec<CellFailure>,
}

impl SweepResult {
    pub fn population(&self, fwhm_index: usize, chirp_index: usize, state: usize) -> f64 {
        self.final_pops[self.spec.cell_index(fwhm_index, chirp_index)][state]
    }

    pub fn is_failed(&self, cell: usize) -> bool {
        self.final_pops[cell].iter().any(|p| p.is_nan())
    }
}

fn run_cell(spec: &SweepSpec, cell: usize) -> Result<Vec<f64>, String> {
    let pulse = spec.cell_pulse(cell);
    let mut settings = default_window(&pulse).with_units(spec.units);
    if let Some(tol) = spec.tolerance {
        settings = settings.with_tolerance(tol);
    }
    let h = hamiltonian_builder(spec.model, pulse, spec.atom.clone()).map_err(|e| e.to_string())?;
    let traj = propagate(h, &AmplitudeVector::basis(spec.model.dim(), 0), &settings).map_err(|e| e.to_string())?;
    traj.populations.last().cloned().ok_or_else(|| "empty trajectory".to_string())
}

fn assemble(spec: &SweepSpec, outcomes: Vec<Result<Vec<f64>, String>>) -> SweepResult {
    let dim = spec.model.dim();
    let mut final_pops = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    for (cell, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(p) => final_pops.push(p),
            Err(message) => {
                let pulse = spec.cell_pulse(cell);
                failures.push(CellFailure { cell, fwhm: pulse.fwhm, chirp_rate: pulse.chirp_rate, message });
                final_pops.push(vec![f64::NAN; dim]);
            }
        }
    }
    let flags = (0..spec.cells()).map(|c| AnalyticConditions::evaluate(&spec.cell_pulse(c), &spec.atom)).collect();
    SweepResult { spec: spec.clone(), final_pops, flags, failures }
}

/// Evaluates every cell on the global rayon pool.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult, SweepError> {
    use rayon::prelude::*;
    spec.validate()?;
    let outcomes = (0..spec.cells()).into_par_iter().map(|c| run_cell(spec, c)).collect();
    Ok(assemble(spec, outcomes))
}

/// Evaluates every cell on a private pool of `threads` workers.
pub fn run_sweep_with_threads(spec: &SweepSpec, threads: usize) -> Result<SweepResult, SweepError> {
    if threads == 0 {
        return Err(SweepError::InvalidSpec("thread count must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| SweepError::Pool(e.to_string()))?;
    pool.install(|| run_sweep(spec))
}

/// Empirical inversion map next to the analytic one.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMap {
    pub threshold: f64,
    /// Final P₂ ≥ threshold; `None` for failed cells.
    pub inverted: Vec<Option<bool>>,
    /// Both analytic conditions hold.
    pub analytic: Vec<bool>,
    /// Fraction of non-failed cells on which the two maps agree.
    pub agreement: f64,
    /// Fraction of non-failed cells that are inverted.
    pub inverted_fraction: f64,
}

pub fn classify_region(result: &SweepResult, threshold: f64) -> Result<RegionMap, SweepError> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(SweepError::InvalidThreshold(threshold));
    }
    let inverted: Vec<Option<bool>> = result
        .final_pops
        .iter()
        .map(|p| if p[1].is_nan() { None } else { Some(p[1] >= threshold) })
        .collect();
    let analytic: Vec<bool> = result.flags.iter().map(|f| f.both()).collect();
    let (mut valid, mut agree, mut inv) = (0usize, 0usize, 0usize);
    for (e, a) in inverted.iter().zip(&analytic) {
        if let Some(e) = e {
            valid += 1;
            agree += usize::from(e == a);
            inv += usize::from(*e);
        }
    }
    let frac = |n: usize| if valid == 0 { f64::NAN } else { n as f64 / valid as f64 };
    Ok(RegionMap { threshold, inverted, analytic, agreement: frac(agree), inverted_fraction: frac(inv) })
}

/// Cells whose inversion verdict changes when the chirp sign is flipped.
/// `mirror` must come from `result.spec.mirrored()`.
pub fn sign_sensitive_cells(result: &SweepResult, mirror: &SweepResult, threshold: f64) -> Result<Vec<usize>, SweepError> {
    if mirror.spec != result.spec.mirrored() {
        return Err(SweepError::InvalidSpec("mirror result does not match the mirrored spec".into()));
    }
    let a = classify_region(result, threshold)?;
    let b = classify_region(mirror, threshold)?;
    Ok((0..a.inverted.len())
        .filter(|&c| matches!((a.inverted[c], b.inverted[c]), (Some(x), Some(y)) if x != y))
        .collect())
}
