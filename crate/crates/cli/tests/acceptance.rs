//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::path::Path;
use std::time::{Duration, Instant};

use arp_cli::{Cli, Command};
use arp_core::dressed::{
    active_subset, adiabaticity_report, bare_weights, dressed_frame, dressed_label, propagate_dressed, DressedFrame,
};
use arp_core::lambda::compare_models;
use arp_core::model::{hamiltonian4, rb85_d1_preset, AmplitudeVector, PulseParams};
use arp_core::propagator::{count_local_maxima, default_window, propagate, transient_max, IntegrationSettings, Trajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RUN_BUDGET: Duration = Duration::from_secs(5);
const MAP_BUDGET: Duration = Duration::from_secs(600);

struct Report {
    failed: usize,
}

impl Report {
    fn check(&mut self, id: u32, name: &str, ok: bool, detail: String) {
        println!("[{}] criterion {id:>2} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed += 1;
        }
    }
}

fn adiabatic() -> PulseParams {
    PulseParams::reference()
}

fn slow() -> PulseParams {
    PulseParams::reference().with_chirp(-0.092)
}

fn run(p: &PulseParams, s: &IntegrationSettings) -> Trajectory {
    let atom = rb85_d1_preset();
    propagate(|t| hamiltonian4(t, p, &atom), &AmplitudeVector::basis(4, 0), s).expect("propagation")
}

fn timed_run(p: &PulseParams) -> (Trajectory, Duration) {
    let start = Instant::now();
    let traj = run(p, &default_window(p));
    (traj, start.elapsed())
}

fn frame(p: &PulseParams, s: &IntegrationSettings) -> DressedFrame {
    let atom = rb85_d1_preset();
    dressed_frame(|t| hamiltonian4(t, p, &atom), &s.sample_times()).expect("dressed frame")
}

fn max_abs(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().zip(b).flat_map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v).abs())).fold(0.0, f64::max)
}

fn sweep_cli(threads: u16, out: &Path, grid: &Path) -> Duration {
    let cli = Cli {
        config: None,
        out: Some(out.to_path_buf()),
        preset: None,
        model: None,
        threads: Some(threads),
        dump_config: false,
        command: Command::Sweep { grid: Some(grid.to_path_buf()) },
    };
    let start = Instant::now();
    arp_cli::run(&cli).expect("sweep");
    start.elapsed()
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn main() {
    let mut r = Report { failed: 0 };
    let atom = rb85_d1_preset();

    // 1
    let (t1, d1) = timed_run(&adiabatic());
    let f1 = t1.populations.last().unwrap().clone();
    r.check(
        1,
        "adiabatic inversion",
        f1[1] >= 0.9 && f1[0] <= 0.05 && d1 < RUN_BUDGET,
        format!("P2 = {:.4} (>= 0.9), P1 = {:.4} (<= 0.05), {:.3} s (< 5 s)", f1[1], f1[0], d1.as_secs_f64()),
    );

    // 2
    let (t2, d2) = timed_run(&slow());
    let f2 = t2.populations.last().unwrap().clone();
    r.check(
        2,
        "nonadiabatic failure",
        f2[0] > 0.5 && d2 < RUN_BUDGET,
        format!("P1 = {:.4} (> 0.5), {:.3} s (< 5 s)", f2[0], d2.as_secs_f64()),
    );

    // 3
    let excited = t1.summed(&[2, 3]).unwrap();
    let peak = transient_max(&t1, &[2, 3]).unwrap();
    let maxima = count_local_maxima(&excited);
    r.check(
        3,
        "transient excited population",
        (0.02..=0.30).contains(&peak) && maxima >= 3,
        format!("max P3+P4 = {peak:.4} (in [0.02, 0.30]), {maxima} local maxima (>= 3)"),
    );

    // 4 and 10 share the grid
    let work = tempfile::tempdir().unwrap();
    let grid = work.path().join("grid.toml");
    std::fs::write(&grid, "[sweep]\nfwhm = { start = 2.5, end = 4.0, points = 16 }\nchirp = { start = -4.0, end = -2.0, points = 16 }\n").unwrap();
    let outs: Vec<_> = [8u16, 4, 1].iter().map(|t| (*t, work.path().join(format!("w{t}")))).collect();
    let d4 = sweep_cli(8, &outs[0].1, &grid);
    let p2: Vec<f64> = std::fs::read_to_string(outs[0].1.join("sweep_p2.csv"))
        .unwrap()
        .lines()
        .skip(2)
        .flat_map(|l| l.split(',').skip(1).map(|v| v.parse::<f64>().unwrap()).collect::<Vec<_>>())
        .collect();
    let inverted = p2.iter().filter(|&&p| p > 0.9).count();
    let frac = inverted as f64 / p2.len() as f64;
    r.check(
        4,
        "adiabatic-region map",
        p2.len() == 256 && frac >= 0.9 && d4 < MAP_BUDGET,
        format!("{inverted}/{} cells with P2 > 0.9 ({:.1}% >= 90%), {:.1} s with 8 workers (< 600 s)", p2.len(), 100.0 * frac, d4.as_secs_f64()),
    );

    // 5
    let s1 = default_window(&adiabatic());
    let s2 = default_window(&slow());
    let fr1 = frame(&adiabatic(), &s1);
    let fr2 = frame(&slow(), &s2);
    let a1 = adiabaticity_report(&adiabatic(), &atom, &fr1);
    let a2 = adiabaticity_report(&slow(), &atom, &fr2);
    // agreement to one unit in the last quoted digit
    let ok5 = (a1.sweep_value - 5.30).abs() <= 0.01
        && a1.condition_sweep
        && (a2.sweep_value - 0.166).abs() <= 0.001
        && !a2.condition_sweep
        && a2.sweep_value < a2.sweep_threshold;
    r.check(
        5,
        "analytic conditions",
        ok5,
        format!(
            "run 1 |a|t0 = {:.4} GHz > {:.3} ({}); run 2 |a|t0 = {:.4} GHz vs {:.3} ({}); LZ ratio run 2 = {:.1} (reported only)",
            a1.sweep_value, a1.sweep_threshold, a1.condition_sweep, a2.sweep_value, a2.sweep_threshold, a2.condition_sweep, a2.lz_ratio
        ),
    );

    // 6
    let route = |fr: &DressedFrame, direct: &Trajectory| {
        let d = propagate_dressed(fr, &AmplitudeVector::basis(4, 0), 1e-10).expect("dressed propagation");
        max_abs(&d.bare.populations, &direct.populations)
    };
    let e1 = route(&fr1, &t1);
    let e2 = route(&fr2, &t2);
    r.check(
        6,
        "dressed-route equivalence",
        e1 < 1e-4 && e2 < 1e-4,
        format!("max |dP| run 1 = {e1:.2e}, run 2 = {e2:.2e} (< 1e-4)"),
    );

    // 7
    match active_subset(&fr1, 0) {
        Ok(pair) => {
            let w = bare_weights(&fr1);
            let start = w[0][0][pair.initial];
            let end = w[w.len() - 1][1][pair.partner];
            let dt = (pair.crossing_time - adiabatic().center).abs();
            r.check(
                7,
                "dressed-state structure",
                dressed_label(pair.initial) == "I" && start > 0.99 && end > 0.99 && dt < adiabatic().tau0(),
                format!(
                    "pair ({}, {}): initial T2(1,{}) = {start:.5}, final T2(2,{}) = {end:.5} (> 0.99), crossing at {:.3} ns (|t - T| < tau0 = {:.3})",
                    dressed_label(pair.initial),
                    dressed_label(pair.partner),
                    dressed_label(pair.initial),
                    dressed_label(pair.partner),
                    pair.crossing_time,
                    adiabatic().tau0()
                ),
            );
        }
        Err(e) => r.check(7, "dressed-state structure", false, format!("no active pair: {e}")),
    }

    // 8
    let c = compare_models(&adiabatic(), &atom).unwrap();
    let exact = compare_models(&adiabatic(), &atom.without_excited_splitting()).unwrap();
    r.check(
        8,
        "three-level consistency",
        c.final_p2_gap <= 0.05 && exact.population_gap < 1e-6,
        format!("|dP2| final = {:.4} (<= 0.05), omega43 = 0 gap = {:.2e} (< 1e-6)", c.final_p2_gap, exact.population_gap),
    );

    // 9
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_917);
    let mut drift = 0.0_f64;
    for _ in 0..100 {
        let p = PulseParams::new(
            rng.random_range(1.0..5.0),
            rng.random_range(0.5..4.5),
            rng.random_range(-4.0..0.0),
            rng.random_range(-0.5..0.5),
            0.0,
        )
        .unwrap();
        drift = drift.max(run(&p, &default_window(&p)).max_norm_drift());
    }
    let shift = [(adiabatic(), &t1), (slow(), &t2)]
        .iter()
        .map(|(p, base)| {
            let shifted =
                propagate(|t| hamiltonian4(t, p, &atom).shifted(10.0), &AmplitudeVector::basis(4, 0), &default_window(p)).unwrap();
            max_abs(&shifted.populations, &base.populations)
        })
        .fold(0.0, f64::max);
    let stored = fr1.antihermitian_defect().max(fr2.antihermitian_defect());
    let dense = |p: &PulseParams| frame(p, &IntegrationSettings { record_stride: 1, ..default_window(p) }).raw_antihermitian_defect;
    let raw = dense(&adiabatic()).max(dense(&slow()));
    let halving = [(adiabatic(), &t1), (slow(), &t2)]
        .iter()
        .map(|(p, base)| {
            let fine = run(p, &default_window(p).refined());
            let (a, b) = (fine.populations.last().unwrap(), base.populations.last().unwrap());
            a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    r.check(
        9,
        "norm and invariance suite",
        drift < 1e-6 && shift < 1e-8 && stored < 1e-6 && raw < 1e-6 && halving < 1e-7,
        format!(
            "norm drift {drift:.1e} (< 1e-6, 100 draws), shift {shift:.1e} (< 1e-8), K defect stored {stored:.1e} / raw finite-difference on step grid {raw:.1e} (< 1e-6), step halving {halving:.1e} (< 1e-7)"
        ),
    );

    // 10
    for (threads, dir) in &outs[1..] {
        sweep_cli(*threads, dir, &grid);
    }
    let reference = read_dir_bytes(&outs[0].1);
    let identical = outs[1..].iter().all(|(_, dir)| read_dir_bytes(dir) == reference);
    r.check(
        10,
        "determinism",
        identical && !reference.is_empty(),
        format!("{} sweep files byte-identical across 8, 4 and 1 workers: {identical}", reference.len()),
    );

    println!("acceptance: {} of 10 criteria passed", 10 - r.failed);
    if r.failed > 0 {
        std::process::exit(1);
    }
}
