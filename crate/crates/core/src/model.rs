//! Pulse envelope, level-structure constants, and the interaction
//! Hamiltonians of the four-level system and its three-level Λ reduction.
//!
//! Matrix entries are plain rates in the units the parameters are quoted in
//! (GHz for frequencies, GHz/ns for the chirp, ns for time). How those
//! numerals become an angular generator is decided by [`FrequencyUnits`] at
//! propagation time, so the builders here never carry a 2π.

use std::f64::consts::{LN_2, SQRT_2};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest Hilbert space handled by the fixed-size matrix type.
pub const MAX_DIM: usize = 4;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid pulse: {0}")]
    InvalidPulse(String),
    #[error("invalid atom constants: {0}")]
    InvalidAtom(String),
    #[error("three-level reduction requires zero one-photon detuning, got {0} GHz")]
    NonzeroDetuning(f64),
    #[error("state vector must be normalized, |c|^2 sums to {0}")]
    NotNormalized(f64),
    #[error("expected a {expected}-component state, got {got}")]
    Dimension { expected: usize, got: usize },
}

/// Which intensity-like profile the quoted FWHM refers to.
///
/// `Intensity`: the field intensity Ω_R(t)² has FWHM = 2√ln2·τ₀, so the Rabi
/// envelope is `exp(-(t-T)²/(2τ₀²))`. `Amplitude`: the Rabi envelope itself
/// is `exp(-(t-T)²/τ₀²)` and has that FWHM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FwhmReference {
    #[default]
    Intensity,
    Amplitude,
}

/// How the numerals of a Hamiltonian enter `i dC/dt = s·H·C`.
///
/// `Angular` uses `s = 1` (the quoted values are rates in rad/ns), `Cyclic`
/// uses `s = 2π` (the quoted values are ordinary frequencies).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrequencyUnits {
    #[default]
    Angular,
    Cyclic,
}

impl FrequencyUnits {
    pub fn angular_factor(self) -> f64 {
        match self {
            FrequencyUnits::Angular => 1.0,
            FrequencyUnits::Cyclic => 2.0 * std::f64::consts::PI,
        }
    }
}

/// Number of bare levels kept in the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LevelModel {
    /// Two ground and two excited hyperfine levels.
    #[default]
    Four,
    /// Λ system with the excited doublet merged into one level.
    Three,
}

impl LevelModel {
    pub fn dim(self) -> usize {
        match self {
            LevelModel::Four => 4,
            LevelModel::Three => 3,
        }
    }
}

impl fmt::Display for LevelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LevelModel::Four => f.write_str("four"),
            LevelModel::Three => f.write_str("three"),
        }
    }
}

/// Linearly chirped Gaussian pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseParams {
    /// Peak Rabi frequency Ω_R (GHz).
    pub peak_rabi: f64,
    /// Full width at half maximum (ns).
    pub fwhm: f64,
    /// Chirp rate α/2π (GHz/ns), signed.
    pub chirp_rate: f64,
    /// One-photon detuning Δ (GHz).
    pub detuning: f64,
    /// Pulse center T (ns).
    pub center: f64,
    #[serde(default)]
    pub fwhm_of: FwhmReference,
}

impl PulseParams {
    pub fn new(peak_rabi: f64, fwhm: f64, chirp_rate: f64, detuning: f64, center: f64) -> Result<Self, ModelError> {
        let p = PulseParams { peak_rabi, fwhm, chirp_rate, detuning, center, fwhm_of: FwhmReference::default() };
        p.validate()?;
        Ok(p)
    }

    /// The adiabatic-passage parameters of the reference run:
    /// Ω_R = 3.035 GHz, FWHM = 2.995 ns, α/2π = −2.947 GHz/ns, Δ = 0.
    pub fn reference() -> Self {
        PulseParams {
            peak_rabi: 3.035,
            fwhm: 2.995,
            chirp_rate: -2.947,
            detuning: 0.0,
            center: 0.0,
            fwhm_of: FwhmReference::default(),
        }
    }

    pub fn with_chirp(self, chirp_rate: f64) -> Self {
        PulseParams { chirp_rate, ..self }
    }

    pub fn with_fwhm_of(self, fwhm_of: FwhmReference) -> Self {
        PulseParams { fwhm_of, ..self }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let finite = [self.peak_rabi, self.fwhm, self.chirp_rate, self.detuning, self.center]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(ModelError::InvalidPulse("non-finite parameter".into()));
        }
        if self.peak_rabi < 0.0 {
            return Err(ModelError::InvalidPulse(format!("peak_rabi = {} < 0", self.peak_rabi)));
        }
        if self.fwhm <= 0.0 || self.tau0() <= 0.0 {
            return Err(ModelError::InvalidPulse(format!("fwhm = {} must be positive", self.fwhm)));
        }
        Ok(())
    }

    /// Pulse duration τ₀ = FWHM / (2√ln2).
    pub fn tau0(&self) -> f64 {
        self.fwhm / (2.0 * LN_2.sqrt())
    }

    /// Time over which the Rabi envelope falls by 1/e.
    pub fn envelope_width(&self) -> f64 {
        match self.fwhm_of {
            FwhmReference::Intensity => SQRT_2 * self.tau0(),
            FwhmReference::Amplitude => self.tau0(),
        }
    }

    /// Chirp detuning α(t−T) at time `t`.
    pub fn sweep(&self, t: f64) -> f64 {
        self.chirp_rate * (t - self.center)
    }
}

/// Rabi frequency Ω_R(t) of the Gaussian envelope.
pub fn envelope(t: f64, pulse: &PulseParams) -> f64 {
    let x = (t - pulse.center) / pulse.envelope_width();
    pulse.peak_rabi * (-x * x).exp()
}

/// Spectral bandwidth estimate 1/τ₀ (GHz). Diagnostic only.
pub fn bandwidth(pulse: &PulseParams) -> f64 {
    1.0 / pulse.tau0()
}

/// Hyperfine level structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomSystem {
    /// Ground-state hyperfine splitting ω₂₁ (GHz).
    pub omega21: f64,
    /// Excited-state hyperfine splitting ω₄₃ (GHz).
    pub omega43: f64,
    pub labels: [String; 4],
}

impl AtomSystem {
    pub fn new(omega21: f64, omega43: f64) -> Result<Self, ModelError> {
        let atom = AtomSystem { omega21, omega43, labels: default_labels() };
        atom.validate()?;
        Ok(atom)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.omega21.is_finite() && self.omega43.is_finite()) {
            return Err(ModelError::InvalidAtom("non-finite splitting".into()));
        }
        if self.omega21 <= 0.0 || self.omega43 < 0.0 {
            return Err(ModelError::InvalidAtom(format!(
                "need omega21 > 0 and omega43 >= 0 (omega21 = {}, omega43 = {})",
                self.omega21, self.omega43
            )));
        }
        if self.omega21 <= self.omega43 {
            return Err(ModelError::InvalidAtom(format!(
                "omega21 = {} must exceed omega43 = {}",
                self.omega21, self.omega43
            )));
        }
        Ok(())
    }

    /// Copy with the excited doublet collapsed (ω₄₃ = 0). Not a physical
    /// preset: it makes the three-level reduction exact and is used to check it.
    pub fn without_excited_splitting(&self) -> Self {
        AtomSystem { omega43: 0.0, ..self.clone() }
    }
}

fn default_labels() -> [String; 4] {
    ["|1>".into(), "|2>".into(), "|3>".into(), "|4>".into()]
}

/// ⁸⁵Rb D1 line: ω₂₁ = 3.035 GHz (5S₁/₂ F=2,3), ω₄₃ = 0.362 GHz (5P₁/₂ F'=2,3).
pub fn rb85_d1_preset() -> AtomSystem {
    AtomSystem {
        omega21: 3.035,
        omega43: 0.362,
        labels: [
            "5S1/2 F=2".into(),
            "5S1/2 F=3".into(),
            "5P1/2 F'=2".into(),
            "5P1/2 F'=3".into(),
        ],
    }
}

/// Looks up a named atom preset.
pub fn preset(name: &str) -> Option<AtomSystem> {
    match name.to_ascii_lowercase().as_str() {
        "rb85-d1" | "rb85_d1" | "85rb-d1" => Some(rb85_d1_preset()),
        _ => None,
    }
}

/// Dense Hermitian matrix of dimension ≤ 4, stored row-major.
#[derive(Clone, Copy, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    entries: [Complex64; MAX_DIM * MAX_DIM],
}

impl HermitianMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension {dim} out of range");
        HermitianMatrix { dim, entries: [ZERO; MAX_DIM * MAX_DIM] }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, Complex64::new(d, 0.0));
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * MAX_DIM + j]
    }

    /// Sets entry (i, j) and its mirror (j, i) to the conjugate.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: Complex64) {
        self.entries[i * MAX_DIM + j] = value;
        self.entries[j * MAX_DIM + i] = value.conj();
    }

    /// Adds `shift` to every diagonal entry.
    pub fn shifted(mut self, shift: f64) -> Self {
        for i in 0..self.dim {
            self.entries[i * MAX_DIM + i] += shift;
        }
        self
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        for e in self.entries.iter_mut() {
            *e *= factor;
        }
        self
    }

    /// Largest |H_ij − conj(H_ji)|.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += self.get(i, j).norm_sqr();
            }
        }
        s.sqrt()
    }

    #[inline]
    pub fn mul_vec(&self, x: &[Complex64], out: &mut [Complex64]) {
        let n = self.dim;
        for i in 0..n {
            let row = &self.entries[i * MAX_DIM..i * MAX_DIM + n];
            let mut acc = ZERO;
            for (h, c) in row.iter().zip(x) {
                acc += h * c;
            }
            out[i] = acc;
        }
    }

    pub fn to_nalgebra(&self) -> nalgebra::DMatrix<Complex64> {
        nalgebra::DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }
}

impl fmt::Debug for HermitianMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<Complex64>> =
            (0..self.dim).map(|i| (0..self.dim).map(|j| self.get(i, j)).collect()).collect();
        f.debug_struct("HermitianMatrix").field("dim", &self.dim).field("rows", &rows).finish()
    }
}

/// Complex probability amplitudes over the bare states.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeVector {
    pub components: Vec<Complex64>,
}

impl AmplitudeVector {
    pub const NORM_TOLERANCE: f64 = 1e-8;

    pub fn new(components: Vec<Complex64>) -> Self {
        AmplitudeVector { components }
    }

    /// All population in bare state `index` (zero based).
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut components = vec![ZERO; dim];
        components[index] = Complex64::new(1.0, 0.0);
        AmplitudeVector { components }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.components.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn check_normalized(&self) -> Result<(), ModelError> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() > Self::NORM_TOLERANCE || !n.is_finite() {
            return Err(ModelError::NotNormalized(n));
        }
        Ok(())
    }
}

/// Four-level interaction Hamiltonian at time `t`.
///
/// Basis order |1⟩, |2⟩ (ground doublet), |3⟩, |4⟩ (excited doublet). Both
/// ground levels couple to both excited levels with −Ω_R(t)/2.
pub fn hamiltonian4(t: f64, pulse: &PulseParams, atom: &AtomSystem) -> HermitianMatrix {
    let sweep = pulse.sweep(t);
    let shift = pulse.detuning + atom.omega43 + sweep;
    let mut h = HermitianMatrix::from_real_diagonal(&[shift, shift + atom.omega21, 0.0, atom.omega43]);
    let c = Complex64::new(-0.5 * envelope(t, pulse), 0.0);
    for g in 0..2 {
        for e in 2..4 {
            h.set(g, e, c);
        }
    }
    h
}

/// Three-level Λ Hamiltonian at time `t`. Only defined for Δ = 0.
pub fn hamiltonian3(t: f64, pulse: &PulseParams, atom: &AtomSystem) -> Result<HermitianMatrix, ModelError> {
    require_resonant(pulse)?;
    Ok(lambda_hamiltonian(t, pulse, atom))
}

pub(crate) fn require_resonant(pulse: &PulseParams) -> Result<(), ModelError> {
    if pulse.detuning != 0.0 {
        return Err(ModelError::NonzeroDetuning(pulse.detuning));
    }
    Ok(())
}

fn lambda_hamiltonian(t: f64, pulse: &PulseParams, atom: &AtomSystem) -> HermitianMatrix {
    let sweep = pulse.sweep(t);
    let mut h = HermitianMatrix::from_real_diagonal(&[sweep, atom.omega21 + sweep, 0.0]);
    let c = Complex64::new(-envelope(t, pulse) / SQRT_2, 0.0);
    h.set(0, 2, c);
    h.set(1, 2, c);
    h
}

/// Time-dependent Hamiltonian of either model, validated once up front.
pub fn hamiltonian_builder(
    model: LevelModel,
    pulse: PulseParams,
    atom: AtomSystem,
) -> Result<impl Fn(f64) -> HermitianMatrix + Send + Sync + Clone, ModelError> {
    if model == LevelModel::Three {
        require_resonant(&pulse)?;
    }
    Ok(move |t: f64| match model {
        LevelModel::Four => hamiltonian4(t, &pulse, &atom),
        LevelModel::Three => lambda_hamiltonian(t, &pulse, &atom),
    })
}
