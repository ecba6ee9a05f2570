//! `arp`: batch front end for the chirped-pulse adiabatic passage library.
//!
//! Subcommands `propagate`, `dressed`, `sweep` and `compare` each read a
//! [`RunConfig`], compute, and then write their outputs in one go.

pub mod config;
pub mod error;
pub mod output;

use std::path::{Path, PathBuf};

use arp_core::dressed::{active_subset, adiabaticity_report, dressed_frame, dressed_label, DressedError};
use arp_core::lambda::{compare_models_with, DEFAULT_DOMINANCE};
use arp_core::model::{hamiltonian_builder, AmplitudeVector, LevelModel};
use arp_core::propagator::{final_populations, propagate};
use arp_core::sweep::{classify_region, run_sweep};
use clap::{Parser, Subcommand, ValueEnum};

pub use config::{GridConfig, RunConfig};
pub use error::CliError;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "ARP_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "arp", version, about = "Chirped-pulse two-photon adiabatic passage simulations")]
pub struct Cli {
    /// TOML run configuration; defaults to the reference adiabatic run.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", env = OUT_DIR_ENV)]
    pub out: Option<PathBuf>,
    /// Atom preset, replacing the config's [atom] section.
    #[arg(long, global = true, value_name = "NAME")]
    pub preset: Option<String>,
    #[arg(long, global = true, value_enum)]
    pub model: Option<ModelArg>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long, global = true)]
    pub dump_config: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Three,
    Four,
}

impl From<ModelArg> for LevelModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Three => LevelModel::Three,
            ModelArg::Four => LevelModel::Four,
        }
    }
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Population dynamics from |1>: trajectory.csv, populations.plt.
    Propagate,
    /// Dressed-state energies, bare weights, couplings, adiabaticity report.
    Dressed,
    /// End-of-pulse populations over a (FWHM, chirp) grid.
    Sweep {
        /// TOML file with a [sweep] table; overrides the config's grid.
        #[arg(long, value_name = "PATH")]
        grid: Option<PathBuf>,
    },
    /// Four-level versus three-level comparison: reduction.txt.
    Compare,
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// Short human-readable result, printed on standard output.
    pub summary: String,
}

/// Applies `--preset` and `--model` on top of the loaded configuration.
pub fn effective_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => config::load_run_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(name) = &cli.preset {
        cfg.atom = config::AtomConfig { preset: Some(name.clone()), omega21: None, omega43: None };
    }
    if let Some(m) = cli.model {
        cfg.model = m.into();
    }
    if let Command::Sweep { grid: Some(path) } = &cli.command {
        cfg.sweep = Some(config::load_grid(path)?);
    }
    // surface config errors before anything runs
    let pulse = cfg.pulse()?;
    cfg.atom()?;
    cfg.settings(&pulse)?;
    if matches!(cli.command, Command::Sweep { .. }) {
        cfg.sweep_spec(None)?;
    }
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let cfg = effective_config(cli)?;
    if cli.dump_config {
        return Ok(Outcome { files: Vec::new(), summary: cfg.to_toml() });
    }
    let out = cfg.output_dir(cli.out.as_deref());
    let work = || match &cli.command {
        Command::Propagate => cmd_propagate(&cfg, &out),
        Command::Dressed => cmd_dressed(&cfg, &out),
        Command::Sweep { .. } => cmd_sweep(&cfg, &out),
        Command::Compare => cmd_compare(&cfg, &out),
    };
    match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build()
            .map_err(|e| CliError::Config(format!("cannot start {n} worker threads: {e}")))?
            .install(work),
        None => work(),
    }
}

pub fn cmd_propagate(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let pulse = cfg.pulse()?;
    let settings = cfg.settings(&pulse)?;
    let h = hamiltonian_builder(cfg.model, pulse, cfg.atom()?)?;
    let traj = propagate(h, &AmplitudeVector::basis(cfg.model.dim(), 0), &settings)?;
    let files = vec![
        ("trajectory.csv".to_string(), output::trajectory_csv(&traj)),
        ("populations.plt".to_string(), output::populations_plt(traj.dim())),
    ];
    let finals = final_populations(&traj)?;
    let summary = format!(
        "{} samples, final populations [{}], max norm drift {:.1e}",
        traj.len(),
        finals.iter().map(|p| format!("{p:.4}")).collect::<Vec<_>>().join(", "),
        traj.max_norm_drift()
    );
    Ok(Outcome { files: output::write_outputs(out, &files)?, summary })
}

pub fn cmd_dressed(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let pulse = cfg.pulse()?;
    let atom = cfg.atom()?;
    let settings = cfg.settings(&pulse)?;
    let h = hamiltonian_builder(cfg.model, pulse, atom.clone())?;
    let frame = dressed_frame(h, &settings.sample_times())?.with_units(settings.units);
    let active = match active_subset(&frame, 0) {
        Ok(a) => Some(a),
        Err(DressedError::NoActiveSubset { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let report = adiabaticity_report(&pulse, &atom, &frame);
    let files = vec![
        ("dressed_energies.csv".to_string(), output::dressed_energies_csv(&frame)),
        ("bare_weights.csv".to_string(), output::bare_weights_csv(&frame)),
        ("coupling.csv".to_string(), output::coupling_csv(&frame)),
        ("dressed.plt".to_string(), output::dressed_plt(frame.dim())),
        ("adiabaticity.txt".to_string(), output::adiabaticity_txt(&report, &frame, active.as_ref())),
    ];
    let pair = match &active {
        Some(a) => format!("active pair ({}, {})", dressed_label(a.initial), dressed_label(a.partner)),
        None => "no active pair".to_string(),
    };
    let summary = format!(
        "sweep condition {} ({:.3} vs {:.3} GHz), Landau-Zener condition {}, {pair}",
        report.condition_sweep, report.sweep_value, report.sweep_threshold, report.condition_lz
    );
    Ok(Outcome { files: output::write_outputs(out, &files)?, summary })
}

pub fn cmd_sweep(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let spec = cfg.sweep_spec(None)?;
    let result = run_sweep(&spec)?;
    let map = classify_region(&result, output::INVERSION_THRESHOLD)?;
    let mut files: Vec<(String, String)> = (0..spec.model.dim())
        .map(|k| (format!("sweep_p{}.csv", k + 1), output::sweep_matrix_csv(&result, k)))
        .collect();
    files.push(("flags.csv".into(), output::flags_csv(&result, &map)));
    files.push(("failures.csv".into(), output::failures_csv(&result)));
    let summary = format!(
        "{}×{} cells, {} failed, inverted fraction {:.4}, agreement with analytic conditions {:.4}",
        spec.rows(),
        spec.cols(),
        result.failures.len(),
        map.inverted_fraction,
        map.agreement
    );
    Ok(Outcome { files: output::write_outputs(out, &files)?, summary })
}

pub fn cmd_compare(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let pulse = cfg.pulse()?;
    let atom = cfg.atom()?;
    let settings = cfg.settings(&pulse)?;
    let report = compare_models_with(&pulse, &atom, &settings, DEFAULT_DOMINANCE)?;
    let files = vec![("reduction.txt".to_string(), output::reduction_txt(&report))];
    let summary = format!(
        "population gap {:.4}, final P2 gap {:.4}, a- drift {:.4}, validity ({}, {})",
        report.population_gap, report.final_p2_gap, report.aminus_drift, report.validity_chirp, report.validity_rabi
    );
    Ok(Outcome { files: output::write_outputs(out, &files)?, summary })
}

