//! Text renderings of results and the atomic file writer.
//!
//! Every table starts with a `# arp <kind> v<N>` schema line followed by a
//! mandatory header row. Numbers use 17 significant digits.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use arp_core::dressed::{bare_weights, dressed_label, ActiveSubset, AdiabaticityReport, DressedFrame};
use arp_core::lambda::ReductionReport;
use arp_core::propagator::Trajectory;
use arp_core::sweep::{RegionMap, SweepResult};
use tempfile::NamedTempFile;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Threshold on final P₂ used for the `inverted` column of `flags.csv`.
pub const INVERSION_THRESHOLD: f64 = 0.9;

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn schema(kind: &str) -> String {
    format!("# arp {kind} v{SCHEMA_VERSION}\n")
}

fn row(out: &mut String, first: f64, rest: impl IntoIterator<Item = f64>) {
    out.push_str(&num(first));
    for v in rest {
        out.push(',');
        out.push_str(&num(v));
    }
    out.push('\n');
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let n = traj.dim();
    let mut out = schema("trajectory");
    let mut header = vec!["time_ns".to_string()];
    for k in 1..=n {
        header.push(format!("re_c{k}"));
        header.push(format!("im_c{k}"));
    }
    header.extend((1..=n).map(|k| format!("p{k}")));
    header.push("norm".into());
    out.push_str(&header.join(","));
    out.push('\n');
    for ((t, s), p) in traj.times.iter().zip(&traj.states).zip(&traj.populations) {
        let amps = s.components.iter().flat_map(|c| [c.re, c.im]);
        let norm = p.iter().sum::<f64>().sqrt();
        row(&mut out, *t, amps.chain(p.iter().copied()).chain([norm]));
    }
    out
}

pub fn populations_plt(dim: usize) -> String {
    let first = 2 + 2 * dim;
    format!(
        "# gnuplot script for trajectory.csv\n\
         set datafile separator ','\n\
         set key autotitle columnheader\n\
         set xlabel 'time (ns)'\n\
         set ylabel 'population'\n\
         set yrange [0:1.05]\n\
         plot for [k={first}:{last}] 'trajectory.csv' skip 1 using 1:k with lines\n",
        last = first + dim - 1
    )
}

pub fn dressed_energies_csv(frame: &DressedFrame) -> String {
    let n = frame.dim();
    let mut out = schema("dressed_energies");
    let mut header = vec!["time_ns".to_string()];
    header.extend((0..n).map(|j| format!("lambda_{}", dressed_label(j))));
    header.extend((1..=n).map(|k| format!("bare_{k}")));
    out.push_str(&header.join(","));
    out.push('\n');
    for ((t, e), b) in frame.times.iter().zip(&frame.energies).zip(&frame.bare_energies) {
        row(&mut out, *t, e.iter().chain(b).copied());
    }
    out
}

pub fn bare_weights_csv(frame: &DressedFrame) -> String {
    let n = frame.dim();
    let mut out = schema("bare_weights");
    let mut header = vec!["time_ns".to_string()];
    for i in 1..=n {
        header.extend((0..n).map(|j| format!("w_{i}_{}", dressed_label(j))));
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for (t, w) in frame.times.iter().zip(bare_weights(frame)) {
        row(&mut out, *t, w.into_iter().flatten());
    }
    out
}

pub fn coupling_csv(frame: &DressedFrame) -> String {
    let n = frame.dim();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut out = schema("coupling");
    let mut header = vec!["time_ns".to_string()];
    header.extend(pairs.iter().map(|&(i, j)| format!("k_{}_{}", dressed_label(i), dressed_label(j))));
    out.push_str(&header.join(","));
    out.push('\n');
    for (t, k) in frame.times.iter().zip(&frame.couplings) {
        row(&mut out, *t, pairs.iter().map(|&(i, j)| k[(i, j)].norm()));
    }
    out
}

pub fn dressed_plt(dim: usize) -> String {
    format!(
        "# gnuplot script for dressed_energies.csv\n\
         set datafile separator ','\n\
         set key autotitle columnheader\n\
         set xlabel 'time (ns)'\n\
         set ylabel 'energy (GHz)'\n\
         plot for [k=2:{d1}] 'dressed_energies.csv' skip 1 using 1:k with lines lw 2, \\\n     \
         for [k={b0}:{b1}] 'dressed_energies.csv' skip 1 using 1:k with lines dt 2 lc rgb 'gray'\n",
        d1 = dim + 1,
        b0 = dim + 2,
        b1 = 2 * dim + 1
    )
}

pub fn adiabaticity_txt(report: &AdiabaticityReport, frame: &DressedFrame, active: Option<&ActiveSubset>) -> String {
    let mut out = schema("adiabaticity");
    let w = bare_weights(frame);
    let last = w.len() - 1;
    let (i, j) = report.pair;
    let _ = writeln!(out, "sweep_value_ghz = {}", num(report.sweep_value));
    let _ = writeln!(out, "sweep_threshold_ghz = {}", num(report.sweep_threshold));
    let _ = writeln!(out, "condition_sweep = {}", report.condition_sweep);
    let _ = writeln!(out, "lz_value_ghz_per_ns = {}", num(report.lz_value));
    let _ = writeln!(out, "lz_threshold_ghz2 = {}", num(report.lz_threshold));
    let _ = writeln!(out, "condition_lz = {}", report.condition_lz);
    let _ = writeln!(out, "lz_ratio = {}", num(report.lz_ratio));
    let _ = writeln!(out, "pair = {}, {}", dressed_label(i), dressed_label(j));
    let _ = writeln!(out, "pair_is_active = {}", report.pair_is_active);
    if let Some(a) = active {
        let _ = writeln!(out, "active_pair = {}, {}", dressed_label(a.initial), dressed_label(a.partner));
        let _ = writeln!(out, "active_peak_coupling_per_ns = {}", num(a.peak_coupling));
    } else {
        let _ = writeln!(out, "active_pair = none");
    }
    let _ = writeln!(out, "crossing_time_ns = {}", num(report.crossing_time));
    let _ = writeln!(out, "min_gap_ghz = {}", num(report.min_gap));
    let _ = writeln!(out, "coupling_ratio = {}", num(report.coupling_ratio));
    let _ = writeln!(out, "raw_antihermitian_defect = {}", num(frame.raw_antihermitian_defect));
    for (label, n) in [("initial", 0), ("final", last)] {
        for (k, state) in [(i, "pair_first"), (j, "pair_second")] {
            let weights: Vec<String> = (0..frame.dim()).map(|b| format!("{:.6}", w[n][b][k])).collect();
            let _ = writeln!(out, "{label}_bare_weights_{state} = [{}]", weights.join(", "));
        }
    }
    out
}

pub fn sweep_matrix_csv(result: &SweepResult, state: usize) -> String {
    let spec = &result.spec;
    let mut out = schema(&format!("sweep_p{}", state + 1));
    out.push_str("fwhm_ns\\chirp_ghz_per_ns");
    for c in &spec.chirp_axis {
        out.push(',');
        out.push_str(&num(*c));
    }
    out.push('\n');
    for (i, f) in spec.fwhm_axis.iter().enumerate() {
        row(&mut out, *f, (0..spec.cols()).map(|j| result.population(i, j, state)));
    }
    out
}

pub fn flags_csv(result: &SweepResult, map: &RegionMap) -> String {
    let spec = &result.spec;
    let mut out = schema("sweep_flags");
    out.push_str("fwhm_ns,chirp_ghz_per_ns,condition_sweep,condition_lz,analytic,inverted\n");
    for cell in 0..spec.cells() {
        let p = spec.cell_pulse(cell);
        let f = result.flags[cell];
        let inverted = match map.inverted[cell] {
            Some(b) => b.to_string(),
            None => "failed".into(),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            num(p.fwhm),
            num(p.chirp_rate),
            f.sweep,
            f.landau_zener,
            f.both(),
            inverted
        );
    }
    out
}

pub fn failures_csv(result: &SweepResult) -> String {
    let mut out = schema("sweep_failures");
    out.push_str("cell,fwhm_ns,chirp_ghz_per_ns,message\n");
    for f in &result.failures {
        let msg = f.message.replace('"', "\"\"");
        let _ = writeln!(out, "{},{},{},\"{}\"", f.cell, num(f.fwhm), num(f.chirp_rate), msg);
    }
    out
}

pub fn reduction_txt(r: &ReductionReport) -> String {
    let mut out = schema("reduction");
    let (f, t) = r.final_summary();
    let _ = writeln!(out, "chirp_value_ghz = {}", num(r.chirp_value));
    let _ = writeln!(out, "omega43_ghz = {}", num(r.omega43));
    let _ = writeln!(out, "dominance = {}", num(r.dominance));
    let _ = writeln!(out, "validity_chirp = {}", r.validity_chirp);
    let _ = writeln!(out, "rabi_value_ghz = {}", num(r.rabi_value));
    let _ = writeln!(out, "validity_rabi = {}", r.validity_rabi);
    let _ = writeln!(out, "aminus_drift = {}", num(r.aminus_drift));
    let _ = writeln!(out, "population_gap = {}", num(r.population_gap));
    let _ = writeln!(out, "final_p2_gap = {}", num(r.final_p2_gap));
    let _ = writeln!(out, "final_four = [{}, {}, {}]", num(f[0]), num(f[1]), num(f[2]));
    let _ = writeln!(out, "final_three = [{}, {}, {}]", num(t[0]), num(t[1]), num(t[2]));
    let _ = writeln!(out, "end_four = {:?}", r.end_four);
    let _ = writeln!(out, "end_three = {:?}", r.end_three);
    let _ = writeln!(out, "qualitative_discrepancy = {}", r.qualitative_discrepancy());
    out.push_str("\n# matched samples; excited = p3 + p4 for the four-level model\n");
    out.push_str("time_ns,p1_four,p2_four,excited_four,p1_three,p2_three,p3_three\n");
    for ((time, a), b) in r.four.times.iter().zip(&r.four.populations).zip(&r.three.populations) {
        row(&mut out, *time, [a[0], a[1], a[2] + a[3], b[0], b[1], b[2]]);
    }
    out
}

/// Writes every file to a temporary in `dir`, then renames them into
/// place, so an error leaves no partial output behind.
pub fn write_outputs(dir: &Path, files: &[(String, String)]) -> Result<Vec<PathBuf>, CliError> {
    let fail = |what: &str, e: std::io::Error| CliError::Output(format!("{what} in {}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(|e| fail("cannot create directory", e))?;
    let mut staged = Vec::with_capacity(files.len());
    for (name, content) in files {
        let mut tmp = NamedTempFile::new_in(dir).map_err(|e| fail("cannot create temporary file", e))?;
        tmp.write_all(content.as_bytes()).map_err(|e| fail("cannot write", e))?;
        staged.push((tmp, dir.join(name)));
    }
    let mut written = Vec::with_capacity(staged.len());
    for (tmp, path) in staged {
        tmp.persist(&path).map_err(|e| fail("cannot rename", e.error))?;
        written.push(path);
    }
    Ok(written)
}
