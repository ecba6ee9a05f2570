//! Instantaneous eigenbasis ("dressed states") of a time-dependent Hamiltonian.
//!
//! Eigenvectors are followed along the sample grid by maximal overlap with
//! the previous sample, so labels stay attached to a continuous state rather
//! than to an energy rank. The gauge is fixed once at the first sample
//! (largest component real and positive) and then transported by making each
//! overlap with the previous sample real and positive. The columns of
//! `T(t)` are the tracked eigenvectors, `C = T·C_d`, and the dressed
//! amplitudes obey
//!
//! ```text
//! i dC_d/dt = s·Λ(t)·C_d − i·K(t)·C_d,    K = T†·dT/dt
//! ```

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

use crate::model::{AmplitudeVector, AtomSystem, FrequencyUnits, HermitianMatrix, PulseParams};
use crate::propagator::{PropagationError, Trajectory};
use crate::rk::DormandPrince;

/// Smallest first-sample level spacing for which labels are well defined (GHz).
pub const DEGENERACY_TOLERANCE: f64 = 1e-10;
/// Tracking gives up when the best overlap with the previous sample drops below this.
pub const MIN_TRACKING_OVERLAP: f64 = 0.5;
/// Default ratio between the active-pair coupling and the median of the others.
pub const DEFAULT_SUBSET_FACTOR: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DressedError {
    #[error("invalid sample grid: {0}")]
    InvalidGrid(String),
    #[error("degenerate eigenvalues at the first sample t = {t} ns (spacing {gap:e} GHz)")]
    Degenerate { t: f64, gap: f64 },
    #[error("eigenvector tracking failed at t = {t} ns (overlap {overlap:.3})")]
    TrackingFailure { t: f64, overlap: f64 },
    #[error("no active dressed subset: strongest coupling {peak:e} does not exceed the threshold {threshold:e}")]
    NoActiveSubset { peak: f64, threshold: f64 },
    #[error("index {index} out of range for {dim} dressed states")]
    InvalidIndex { index: usize, dim: usize },
    #[error(transparent)]
    Propagation(#[from] PropagationError),
}

/// Tracked eigensystem on a sample grid.
#[derive(Debug, Clone)]
pub struct DressedFrame {
    pub times: Vec<f64>,
    /// `energies[n][J]`: eigenvalue of dressed state J at sample n.
    pub energies: Vec<Vec<f64>>,
    /// Columns are the tracked, gauge-fixed eigenvectors.
    pub transforms: Vec<DMatrix<Complex64>>,
    /// `K = T†·dT/dt` (1/ns), projected onto its antihermitian part.
    pub couplings: Vec<DMatrix<Complex64>>,
    /// max‖K + K†‖ / max‖K‖ of the finite-difference estimate before projection.
    pub raw_antihermitian_defect: f64,
    /// Diagonals of H at each sample, for bare reference curves.
    pub bare_energies: Vec<Vec<f64>>,
    pub units: FrequencyUnits,
}

struct RawEigen {
    values: Vec<f64>,
    vectors: DMatrix<Complex64>,
}

fn diagonalize(h: &HermitianMatrix) -> RawEigen {
    let eig = SymmetricEigen::new(h.to_nalgebra());
    RawEigen { values: eig.eigenvalues.iter().copied().collect(), vectors: eig.eigenvectors }
}

/// Builds the tracked dressed frame of `hamiltonian` on `times`.
pub fn dressed_frame<H>(hamiltonian: H, times: &[f64]) -> Result<DressedFrame, DressedError>
where
    H: Fn(f64) -> HermitianMatrix,
{
    if times.len() < 3 {
        return Err(DressedError::InvalidGrid(format!("need at least 3 samples, got {}", times.len())));
    }
    if !times.windows(2).all(|w| w[1] > w[0]) || !times.iter().all(|t| t.is_finite()) {
        return Err(DressedError::InvalidGrid("times must be finite and strictly increasing".into()));
    }
    let mut bare_energies = Vec::with_capacity(times.len());
    let raw: Vec<RawEigen> = times
        .iter()
        .map(|&t| {
            let h = hamiltonian(t);
            bare_energies.push((0..h.dim()).map(|i| h.get(i, i).re).collect());
            diagonalize(&h)
        })
        .collect();
    let mut frame = track(times, raw)?;
    frame.bare_energies = bare_energies;
    Ok(frame)
}

fn track(times: &[f64], raw: Vec<RawEigen>) -> Result<DressedFrame, DressedError> {
    let n = raw[0].values.len();

    let first = &raw[0];
    let mut sorted = first.values.clone();
    sorted.sort_by(f64::total_cmp);
    let gap = sorted.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    if gap < DEGENERACY_TOLERANCE {
        return Err(DressedError::Degenerate { t: times[0], gap });
    }

    // dressed label J starts on the eigenvector with the most bare-J character
    let weight: Vec<Vec<f64>> =
        (0..n).map(|j| (0..n).map(|k| first.vectors[(j, k)].norm_sqr()).collect()).collect();
    let (order, _) = best_assignment(&weight);
    let mut vectors = DMatrix::zeros(n, n);
    let mut values = vec![0.0; n];
    for (label, &k) in order.iter().enumerate() {
        let mut col = first.vectors.column(k).into_owned();
        let (imax, _) = col.iter().enumerate().fold((0, -1.0), |acc, (i, c)| {
            if c.norm() > acc.1 {
                (i, c.norm())
            } else {
                acc
            }
        });
        let phase = col[imax] / col[imax].norm();
        col *= phase.conj();
        vectors.set_column(label, &col);
        values[label] = first.values[k];
    }

    let mut energies = Vec::with_capacity(times.len());
    let mut transforms = Vec::with_capacity(times.len());
    energies.push(values);
    transforms.push(vectors);

    for (idx, eig) in raw.iter().enumerate().skip(1) {
        let prev = &transforms[idx - 1];
        let overlap: Vec<Vec<Complex64>> = (0..n)
            .map(|j| (0..n).map(|k| prev.column(j).dotc(&eig.vectors.column(k))).collect())
            .collect();
        let score: Vec<Vec<f64>> = overlap.iter().map(|row| row.iter().map(|c| c.norm()).collect()).collect();
        let (order, _) = best_assignment(&score);
        let mut vectors = DMatrix::zeros(n, n);
        let mut values = vec![0.0; n];
        for (label, &k) in order.iter().enumerate() {
            let o = overlap[label][k];
            if o.norm() < MIN_TRACKING_OVERLAP {
                return Err(DressedError::TrackingFailure { t: times[idx], overlap: o.norm() });
            }
            let col = eig.vectors.column(k) * (o.conj() / o.norm());
            vectors.set_column(label, &col);
            values[label] = eig.values[k];
        }
        energies.push(values);
        transforms.push(vectors);
    }

    let derivs = matrix_derivative(times, &transforms);
    let raw: Vec<DMatrix<Complex64>> = transforms.iter().zip(&derivs).map(|(t, dt)| t.adjoint() * dt).collect();
    let peak = raw.iter().map(|k| k.norm()).fold(0.0, f64::max);
    let raw_defect = if peak > 0.0 {
        raw.iter().map(|k| (k + k.adjoint()).norm()).fold(0.0, f64::max) / peak
    } else {
        0.0
    };
    let couplings = raw.into_iter().map(|k| (&k - k.adjoint()) * Complex64::new(0.5, 0.0)).collect();

    Ok(DressedFrame {
        times: times.to_vec(),
        energies,
        transforms,
        couplings,
        raw_antihermitian_defect: raw_defect,
        bare_energies: Vec::new(),
        units: FrequencyUnits::default(),
    })
}

/// Permutation `p` maximizing Σ_j score[j][p[j]]; dimension ≤ 4 so brute force.
fn best_assignment(score: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let n = score.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = (perm.clone(), f64::NEG_INFINITY);
    permute(&mut perm, 0, &mut |p| {
        let s: f64 = p.iter().enumerate().map(|(j, &k)| score[j][k]).sum();
        if s > best.1 {
            best = (p.to_vec(), s);
        }
    });
    best
}

fn permute(p: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        visit(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, visit);
        p.swap(k, i);
    }
}

/// Points in the derivative stencil (fourth order in the sample spacing).
const STENCIL: usize = 5;

/// Derivative weights at sample `at` from the Lagrange interpolant through
/// `STENCIL` neighbouring samples, centred where possible and one-sided at
/// the ends. Works on non-uniform grids.
fn stencil(times: &[f64], at: usize) -> (usize, Vec<f64>) {
    let width = STENCIL.min(times.len());
    let i0 = at.saturating_sub(width / 2).min(times.len() - width);
    let nodes = &times[i0..i0 + width];
    let x = times[at];
    let weights = (0..width)
        .map(|j| {
            let denom: f64 = (0..width).filter(|&m| m != j).map(|m| nodes[j] - nodes[m]).product();
            let numer: f64 = (0..width)
                .filter(|&k| k != j)
                .map(|k| (0..width).filter(|&m| m != j && m != k).map(|m| x - nodes[m]).product::<f64>())
                .sum();
            numer / denom
        })
        .collect();
    (i0, weights)
}

fn matrix_derivative(times: &[f64], values: &[DMatrix<Complex64>]) -> Vec<DMatrix<Complex64>> {
    (0..times.len())
        .map(|i| {
            let (i0, w) = stencil(times, i);
            let mut acc = DMatrix::zeros(values[i].nrows(), values[i].ncols());
            for (k, wk) in w.iter().enumerate() {
                acc += values[i0 + k].map(|c| c * *wk);
            }
            acc
        })
        .collect()
}

fn vector_derivative(times: &[f64], values: &[Vec<f64>]) -> Vec<Vec<f64>> {
    (0..times.len())
        .map(|i| {
            let (i0, w) = stencil(times, i);
            (0..values[i].len())
                .map(|j| w.iter().enumerate().map(|(k, wk)| wk * values[i0 + k][j]).sum())
                .collect()
        })
        .collect()
}

impl DressedFrame {
    pub fn dim(&self) -> usize {
        self.energies.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn with_units(mut self, units: FrequencyUnits) -> Self {
        self.units = units;
        self
    }

    /// Replaces every coupling matrix with zero (adiabatic approximation).
    pub fn without_coupling(mut self) -> Self {
        for k in self.couplings.iter_mut() {
            k.fill(Complex64::new(0.0, 0.0));
        }
        self
    }

    /// Largest ‖T†HT − Λ‖ / ‖H‖ over the grid.
    pub fn diagonalization_residual<H>(&self, hamiltonian: H) -> f64
    where
        H: Fn(f64) -> HermitianMatrix,
    {
        self.times
            .iter()
            .zip(&self.transforms)
            .zip(&self.energies)
            .map(|((&t, tr), lam)| {
                let h = hamiltonian(t);
                let mut d = tr.adjoint() * h.to_nalgebra() * tr;
                for (j, l) in lam.iter().enumerate() {
                    d[(j, j)] -= l;
                }
                d.norm() / h.frobenius_norm().max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max)
    }

    /// Largest ‖K + K†‖ relative to ‖K‖ over the grid.
    pub fn antihermitian_defect(&self) -> f64 {
        self.couplings
            .iter()
            .filter(|k| k.norm() > 0.0)
            .map(|k| (k + k.adjoint()).norm() / k.norm())
            .fold(0.0, f64::max)
    }

    /// Peak over time of |K_IJ|.
    pub fn peak_coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings.iter().map(|k| k[(i, j)].norm()).fold(0.0, f64::max)
    }

    /// Index of the dressed state with the largest weight on `bare` at the first sample.
    pub fn dressed_of_bare(&self, bare: usize) -> usize {
        let t = &self.transforms[0];
        (0..self.dim()).max_by(|&a, &b| t[(bare, a)].norm_sqr().total_cmp(&t[(bare, b)].norm_sqr())).unwrap_or(0)
    }
}

/// `weights[n][i][J] = |T_iJ|²`: population of bare state i inside dressed state J.
pub fn bare_weights(frame: &DressedFrame) -> Vec<Vec<Vec<f64>>> {
    frame
        .transforms
        .iter()
        .map(|t| (0..t.nrows()).map(|i| (0..t.ncols()).map(|j| t[(i, j)].norm_sqr()).collect()).collect())
        .collect()
}

/// Result of integrating in the dressed basis.
#[derive(Debug, Clone)]
pub struct DressedTrajectory {
    /// Dressed amplitudes C_d on the frame grid.
    pub dressed: Trajectory,
    /// The same state mapped back to the bare basis, C = T·C_d.
    pub bare: Trajectory,
}

/// Integrates the dressed-basis equation including the nonadiabatic term.
///
/// Energies and couplings between samples come from cubic Hermite
/// interpolation, so accuracy follows the sample density of the frame.
/// `initial` is given in the bare basis.
pub fn propagate_dressed(
    frame: &DressedFrame,
    initial: &AmplitudeVector,
    tolerance: f64,
) -> Result<DressedTrajectory, DressedError> {
    initial.check_normalized().map_err(PropagationError::from)?;
    let dim = frame.dim();
    if initial.dim() != dim {
        return Err(PropagationError::DimensionMismatch { expected: initial.dim(), got: dim }.into());
    }
    if !(tolerance > 0.0) {
        return Err(PropagationError::InvalidSettings(format!("tolerance must be positive, got {tolerance}")).into());
    }
    let scale = frame.units.angular_factor();
    let energy_slopes = vector_derivative(&frame.times, &frame.energies);
    let coupling_slopes = matrix_derivative(&frame.times, &frame.couplings);

    let c0 = DMatrix::from_column_slice(dim, 1, &initial.components);
    let y0 = frame.transforms[0].adjoint() * c0;
    let mut y: Vec<Complex64> = y0.iter().copied().collect();

    let max_interval = frame.times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let mut stepper = DormandPrince::new(dim, tolerance, max_interval);
    let mut dressed_states = Vec::with_capacity(frame.len());
    dressed_states.push(AmplitudeVector::new(y.clone()));

    let mut lam = vec![0.0; dim];
    let mut k = DMatrix::<Complex64>::zeros(dim, dim);
    for n in 0..frame.len() - 1 {
        let (ta, tb) = (frame.times[n], frame.times[n + 1]);
        let h = tb - ta;
        let (ea, eb) = (&frame.energies[n], &frame.energies[n + 1]);
        let (sa, sb) = (&energy_slopes[n], &energy_slopes[n + 1]);
        let (ka, kb) = (&frame.couplings[n], &frame.couplings[n + 1]);
        let (dka, dkb) = (&coupling_slopes[n], &coupling_slopes[n + 1]);
        let mut rhs = |t: f64, c: &[Complex64], dc: &mut [Complex64]| {
            let u = (t - ta) / h;
            let (h00, h10, h01, h11) = hermite_basis(u);
            for j in 0..dim {
                lam[j] = h00 * ea[j] + h10 * h * sa[j] + h01 * eb[j] + h11 * h * sb[j];
            }
            for (idx, kv) in k.iter_mut().enumerate() {
                *kv = ka[idx] * h00 + dka[idx] * (h10 * h) + kb[idx] * h01 + dkb[idx] * (h11 * h);
            }
            for i in 0..dim {
                let mut acc = Complex64::new(0.0, -scale * lam[i]) * c[i];
                for j in 0..dim {
                    acc -= k[(i, j)] * c[j];
                }
                dc[i] = acc;
            }
        };
        stepper
            .advance(&mut rhs, ta, tb, &mut y)
            .map_err(|e| PropagationError::StepUnderflow { t: e.t, h: e.h })?;
        dressed_states.push(AmplitudeVector::new(y.clone()));
    }

    let bare_states = dressed_states
        .iter()
        .zip(&frame.transforms)
        .map(|(cd, t)| {
            let v = t * DMatrix::from_column_slice(dim, 1, &cd.components);
            AmplitudeVector::new(v.iter().copied().collect())
        })
        .collect();
    Ok(DressedTrajectory {
        dressed: Trajectory::from_states(frame.times.clone(), dressed_states),
        bare: Trajectory::from_states(frame.times.clone(), bare_states),
    })
}

fn hermite_basis(u: f64) -> (f64, f64, f64, f64) {
    let u2 = u * u;
    let u3 = u2 * u;
    (2.0 * u3 - 3.0 * u2 + 1.0, u3 - 2.0 * u2 + u, -2.0 * u3 + 3.0 * u2, u3 - u2)
}

/// The pair of dressed states that exchanges population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActiveSubset {
    /// Dressed state carrying the initial bare state at the first sample.
    pub initial: usize,
    /// Dressed state it is most strongly coupled to.
    pub partner: usize,
    /// Peak |K| between the two (1/ns).
    pub peak_coupling: f64,
    /// Sample time of the smallest energy gap between them (ns).
    pub crossing_time: f64,
    /// Smallest |λ_initial − λ_partner| on the grid (GHz).
    pub min_gap: f64,
}

/// Finds the active pair using [`DEFAULT_SUBSET_FACTOR`].
pub fn active_subset(frame: &DressedFrame, initial_bare: usize) -> Result<ActiveSubset, DressedError> {
    active_subset_with(frame, initial_bare, DEFAULT_SUBSET_FACTOR)
}

/// The strongest partner qualifies when its peak coupling exceeds `factor`
/// times the median peak coupling of all other pairs.
pub fn active_subset_with(frame: &DressedFrame, initial_bare: usize, factor: f64) -> Result<ActiveSubset, DressedError> {
    let pair = strongest_pair(frame, initial_bare)?;
    let mut others: Vec<f64> = Vec::new();
    for i in 0..frame.dim() {
        for j in i + 1..frame.dim() {
            if (i, j) != (pair.initial.min(pair.partner), pair.initial.max(pair.partner)) {
                others.push(frame.peak_coupling(i, j));
            }
        }
    }
    others.sort_by(f64::total_cmp);
    let median = match others.len() {
        0 => 0.0,
        m if m % 2 == 1 => others[m / 2],
        m => 0.5 * (others[m / 2 - 1] + others[m / 2]),
    };
    let threshold = (factor * median).max(1e-12);
    if !(pair.peak_coupling > threshold) {
        return Err(DressedError::NoActiveSubset { peak: pair.peak_coupling, threshold });
    }
    Ok(pair)
}

fn strongest_pair(frame: &DressedFrame, initial_bare: usize) -> Result<ActiveSubset, DressedError> {
    let dim = frame.dim();
    if initial_bare >= dim {
        return Err(DressedError::InvalidIndex { index: initial_bare, dim });
    }
    let initial = frame.dressed_of_bare(initial_bare);
    let partner = (0..dim)
        .filter(|&j| j != initial)
        .max_by(|&a, &b| frame.peak_coupling(initial, a).total_cmp(&frame.peak_coupling(initial, b)))
        .ok_or(DressedError::InvalidIndex { index: 1, dim })?;
    let (n_min, min_gap) = frame
        .energies
        .iter()
        .map(|e| (e[initial] - e[partner]).abs())
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (n, g)| if g < acc.1 { (n, g) } else { acc });
    Ok(ActiveSubset {
        initial,
        partner,
        peak_coupling: frame.peak_coupling(initial, partner),
        crossing_time: frame.times[n_min],
        min_gap,
    })
}

/// Analytic adiabaticity conditions plus frame-derived metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct AdiabaticityReport {
    /// |α/2π|·τ₀ (GHz), compared against ω₂₁.
    pub sweep_value: f64,
    pub sweep_threshold: f64,
    pub condition_sweep: bool,
    /// |α/2π| (GHz/ns), compared against Ω_R² (GHz²).
    pub lz_value: f64,
    pub lz_threshold: f64,
    pub condition_lz: bool,
    /// Ω_R² / |α/2π| (GHz·ns); infinite for an unchirped pulse.
    pub lz_ratio: f64,
    /// Pair used for the metrics below and whether it passed the subset threshold.
    pub pair: (usize, usize),
    pub pair_is_active: bool,
    pub crossing_time: f64,
    /// Smallest gap of the pair (GHz).
    pub min_gap: f64,
    /// max_t |K_IJ| / (s·|λ_I − λ_J|) for the pair.
    pub coupling_ratio: f64,
}

/// The two analytic conditions on their own; no frame needed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AnalyticConditions {
    pub sweep: bool,
    pub landau_zener: bool,
}

impl AnalyticConditions {
    pub fn evaluate(pulse: &PulseParams, atom: &AtomSystem) -> Self {
        let rate = pulse.chirp_rate.abs();
        AnalyticConditions {
            sweep: rate * pulse.tau0() > atom.omega21,
            landau_zener: rate < pulse.peak_rabi * pulse.peak_rabi,
        }
    }

    pub fn both(self) -> bool {
        self.sweep && self.landau_zener
    }
}

pub fn adiabaticity_report(pulse: &PulseParams, atom: &AtomSystem, frame: &DressedFrame) -> AdiabaticityReport {
    let rate = pulse.chirp_rate.abs();
    let sweep_value = rate * pulse.tau0();
    let lz_threshold = pulse.peak_rabi * pulse.peak_rabi;
    let active = active_subset(frame, 0);
    let pair = active.clone().or_else(|_| strongest_pair(frame, 0)).ok();
    let scale = frame.units.angular_factor();
    let (pair_idx, crossing_time, min_gap, coupling_ratio) = match pair {
        Some(p) => {
            let ratio = frame
                .couplings
                .iter()
                .zip(&frame.energies)
                .map(|(k, e)| {
                    let gap = scale * (e[p.initial] - e[p.partner]).abs();
                    let c = k[(p.initial, p.partner)].norm();
                    if c == 0.0 {
                        0.0
                    } else {
                        c / gap
                    }
                })
                .fold(0.0, f64::max);
            ((p.initial, p.partner), p.crossing_time, p.min_gap, ratio)
        }
        None => ((0, 0), f64::NAN, 0.0, 0.0),
    };
    AdiabaticityReport {
        sweep_value,
        sweep_threshold: atom.omega21,
        condition_sweep: sweep_value > atom.omega21,
        lz_value: rate,
        lz_threshold,
        condition_lz: rate < lz_threshold,
        lz_ratio: lz_threshold / rate,
        pair: pair_idx,
        pair_is_active: active.is_ok(),
        crossing_time,
        min_gap,
        coupling_ratio,
    }
}

/// Roman numeral label of a zero-based dressed index.
pub fn dressed_label(index: usize) -> &'static str {
    ["I", "II", "III", "IV", "V", "VI"].get(index).copied().unwrap_or("?")
}
