//! Run configuration: TOML with `[pulse]`, `[atom]`, `[settings]`, `[output]`
//! and an optional `[sweep]` grid.

use std::path::{Path, PathBuf};

use arp_core::model::{preset, AtomSystem, FrequencyUnits, FwhmReference, LevelModel, PulseParams};
use arp_core::propagator::{default_window, IntegrationSettings};
use arp_core::sweep::{linspace, SweepSpec};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Output directory used when neither the flag, the environment nor the
/// config names one.
pub const DEFAULT_OUT_DIR: &str = "arp-output";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: LevelModel,
    pub pulse: PulseConfig,
    pub atom: AtomConfig,
    pub settings: SettingsOverrides,
    pub output: OutputConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<GridConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseConfig {
    /// Ω_R (GHz).
    pub peak_rabi: f64,
    /// ns.
    pub fwhm: f64,
    /// α/2π (GHz/ns).
    pub chirp_rate: f64,
    /// Δ (GHz).
    pub detuning: f64,
    /// ns.
    pub center: f64,
    pub fwhm_of: FwhmReference,
}

impl Default for PulseConfig {
    fn default() -> Self {
        PulseConfig::from(PulseParams::reference())
    }
}

impl From<PulseParams> for PulseConfig {
    fn from(p: PulseParams) -> Self {
        PulseConfig {
            peak_rabi: p.peak_rabi,
            fwhm: p.fwhm,
            chirp_rate: p.chirp_rate,
            detuning: p.detuning,
            center: p.center,
            fwhm_of: p.fwhm_of,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AtomConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Overrides the preset's ω₂₁ (GHz).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega21: Option<f64>,
    /// Overrides the preset's ω₄₃ (GHz).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega43: Option<f64>,
}

impl Default for AtomConfig {
    fn default() -> Self {
        AtomConfig { preset: Some("rb85-d1".into()), omega21: None, omega43: None }
    }
}

/// Overrides on top of the default window of the pulse.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SettingsOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record_stride: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub units: Option<FrequencyUnits>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    pub format: OutputFormat,
}

/// One sweep axis, either evenly spaced or listed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Range { start: f64, end: f64, points: usize },
    Values(Vec<f64>),
}

impl Axis {
    pub fn samples(&self) -> Vec<f64> {
        match self {
            Axis::Range { start, end, points } => linspace(*start, *end, *points),
            Axis::Values(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// FWHM axis (ns).
    pub fwhm: Axis,
    /// Chirp axis α/2π (GHz/ns).
    pub chirp: Axis,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            fwhm: Axis::Range { start: 0.5, end: 4.5, points: 64 },
            chirp: Axis::Range { start: -4.0, end: 0.0, points: 64 },
        }
    }
}

/// A standalone grid file holds a single `[sweep]` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    pub sweep: GridConfig,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

pub fn parse_run_config(text: &str) -> Result<RunConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

pub fn load_run_config(path: &Path) -> Result<RunConfig, CliError> {
    parse_run_config(&read(path)?).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn load_grid(path: &Path) -> Result<GridConfig, CliError> {
    toml::from_str::<GridFile>(&read(path)?)
        .map(|g| g.sweep)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

impl RunConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn pulse(&self) -> Result<PulseParams, CliError> {
        let p = &self.pulse;
        let pulse = PulseParams {
            peak_rabi: p.peak_rabi,
            fwhm: p.fwhm,
            chirp_rate: p.chirp_rate,
            detuning: p.detuning,
            center: p.center,
            fwhm_of: p.fwhm_of,
        };
        pulse.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(pulse)
    }

    pub fn atom(&self) -> Result<AtomSystem, CliError> {
        let a = &self.atom;
        let mut atom = match (&a.preset, a.omega21, a.omega43) {
            (Some(name), _, _) => {
                preset(name).ok_or_else(|| CliError::Config(format!("unknown atom preset {name:?}")))?
            }
            (None, Some(w21), Some(w43)) => AtomSystem::new(w21, w43).map_err(|e| CliError::Config(e.to_string()))?,
            (None, _, _) => return Err(CliError::Config("[atom] needs a preset or both omega21 and omega43".into())),
        };
        if let Some(w) = a.omega21 {
            atom.omega21 = w;
        }
        if let Some(w) = a.omega43 {
            atom.omega43 = w;
        }
        atom.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(atom)
    }

    pub fn settings(&self, pulse: &PulseParams) -> Result<IntegrationSettings, CliError> {
        let o = &self.settings;
        let d = default_window(pulse);
        let s = IntegrationSettings {
            t_start: o.t_start.unwrap_or(d.t_start),
            t_end: o.t_end.unwrap_or(d.t_end),
            max_step: o.max_step.unwrap_or(d.max_step),
            tolerance: o.tolerance.unwrap_or(d.tolerance),
            record_stride: o.record_stride.unwrap_or(d.record_stride),
            units: o.units.unwrap_or(d.units),
        };
        s.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(s)
    }

    /// Grid from `grid` if given, else from `[sweep]`, else the default map.
    pub fn sweep_spec(&self, grid: Option<&GridConfig>) -> Result<SweepSpec, CliError> {
        let grid = grid.or(self.sweep.as_ref()).cloned().unwrap_or_default();
        let pulse = self.pulse()?;
        let spec = SweepSpec {
            fwhm_axis: grid.fwhm.samples(),
            chirp_axis: grid.chirp.samples(),
            peak_rabi: pulse.peak_rabi,
            detuning: pulse.detuning,
            atom: self.atom()?,
            model: self.model,
            fwhm_of: pulse.fwhm_of,
            units: self.settings.units.unwrap_or_default(),
            tolerance: self.settings.tolerance,
        };
        spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(spec)
    }

    /// The `--out` flag (or its environment variable) wins over `[output] dir`.
    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.output.dir.clone())
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }
}
