use arp_core::dressed::{
    active_subset, adiabaticity_report, bare_weights, dressed_frame, dressed_label, propagate_dressed, DressedError,
    DressedFrame,
};
use arp_core::model::{hamiltonian3, hamiltonian4, rb85_d1_preset, AmplitudeVector, PulseParams};
use arp_core::propagator::{default_window, propagate, IntegrationSettings};
use nalgebra::SymmetricEigen;

fn frame_of(p: &PulseParams, settings: &IntegrationSettings) -> DressedFrame {
    let atom = rb85_d1_preset();
    dressed_frame(|t| hamiltonian4(t, p, &atom), &settings.sample_times()).unwrap()
}

fn slow() -> PulseParams {
    PulseParams::reference().with_chirp(-0.092)
}

#[test]
fn energies_match_plain_diagonalization() {
    let atom = rb85_d1_preset();
    let p = PulseParams::reference();
    let frame = frame_of(&p, &default_window(&p));
    for (n, &t) in frame.times.iter().enumerate().step_by(97) {
        let mut plain: Vec<f64> = SymmetricEigen::new(hamiltonian4(t, &p, &atom).to_nalgebra()).eigenvalues.iter().copied().collect();
        let mut tracked = frame.energies[n].clone();
        plain.sort_by(f64::total_cmp);
        tracked.sort_by(f64::total_cmp);
        for (a, b) in plain.iter().zip(&tracked) {
            assert!((a - b).abs() < 1e-10, "t={t}");
        }
    }
    assert!(frame.diagonalization_residual(|t| hamiltonian4(t, &p, &atom)) < 1e-10);
}

#[test]
fn transforms_stay_unitary_and_couplings_antihermitian() {
    let p = PulseParams::reference();
    let frame = frame_of(&p, &default_window(&p));
    for t in frame.transforms.iter().step_by(50) {
        let id = t.adjoint() * t;
        for i in 0..4 {
            for j in 0..4 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((id[(i, j)].re - e).abs() < 1e-10 && id[(i, j)].im.abs() < 1e-10);
            }
        }
    }
    assert!(frame.antihermitian_defect() < 1e-6);
    assert!(frame.raw_antihermitian_defect < 1e-3);
}

#[test]
fn raw_coupling_defect_shrinks_with_density() {
    let p = PulseParams::reference();
    let s = default_window(&p);
    let coarse = frame_of(&p, &s).raw_antihermitian_defect;
    let fine = frame_of(&p, &IntegrationSettings { record_stride: s.record_stride / 4, ..s }).raw_antihermitian_defect;
    assert!(fine < coarse / 10.0, "coarse {coarse:e} fine {fine:e}");
}

#[test]
fn dressed_route_matches_direct_propagation() {
    let atom = rb85_d1_preset();
    for p in [PulseParams::reference(), slow()] {
        let s = default_window(&p);
        let frame = frame_of(&p, &s);
        let direct = propagate(|t| hamiltonian4(t, &p, &atom), &AmplitudeVector::basis(4, 0), &s).unwrap();
        let routed = propagate_dressed(&frame, &AmplitudeVector::basis(4, 0), 1e-10).unwrap();
        let err = routed
            .bare
            .populations
            .iter()
            .zip(&direct.populations)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        assert!(err < 1e-4, "chirp {} err {err:e}", p.chirp_rate);
    }
}

#[test]
fn adiabatic_pair_carries_population_to_target() {
    let p = PulseParams::reference();
    let frame = frame_of(&p, &default_window(&p));
    let pair = active_subset(&frame, 0).unwrap();
    assert_eq!(dressed_label(pair.initial), "I");
    let w = bare_weights(&frame);
    assert!(w[0][0][pair.initial] > 0.99);
    assert!(w[w.len() - 1][1][pair.partner] > 0.99);
    assert!(pair.crossing_time.abs() < p.tau0(), "{}", pair.crossing_time);
    assert!(pair.min_gap > 0.0);
}

#[test]
fn crossing_time_is_grid_converged() {
    let p = PulseParams::reference();
    let s = default_window(&p);
    let dense = IntegrationSettings { record_stride: (s.record_stride / 10).max(1), ..s };
    let base = active_subset(&frame_of(&p, &s), 0).unwrap();
    let fine = active_subset(&frame_of(&p, &dense), 0).unwrap();
    let spacing = s.record_stride as f64 * s.max_step;
    assert!((base.crossing_time - fine.crossing_time).abs() <= spacing, "{} vs {}", base.crossing_time, fine.crossing_time);
    assert!((base.min_gap - fine.min_gap).abs() < 1e-2 * fine.min_gap, "{} vs {}", base.min_gap, fine.min_gap);
}

#[test]
fn slow_chirp_has_no_dominant_pair() {
    let p = slow();
    let frame = frame_of(&p, &default_window(&p));
    assert!(matches!(active_subset(&frame, 0), Err(DressedError::NoActiveSubset { .. })));
}

#[test]
fn report_values() {
    let atom = rb85_d1_preset();
    for (p, sweep, ok) in [(PulseParams::reference(), 5.30, true), (slow(), 0.166, false)] {
        let frame = frame_of(&p, &default_window(&p));
        let r = adiabaticity_report(&p, &atom, &frame);
        assert!((r.sweep_value - sweep).abs() < 5e-3, "{}", r.sweep_value);
        assert_eq!(r.condition_sweep, ok);
        assert!(r.condition_lz);
        assert_eq!(r.pair_is_active, ok);
    }
}

#[test]
fn no_coupling_without_field() {
    let atom = rb85_d1_preset();
    let p = PulseParams { peak_rabi: 0.0, ..PulseParams::reference() };
    let frame = dressed_frame(|t| hamiltonian4(t, &p, &atom), &default_window(&p).sample_times()).unwrap();
    assert!(frame.couplings.iter().all(|k| k.iter().all(|c| c.norm() < 1e-10)));
}

#[test]
fn three_level_dressed_state_follows_the_chirp() {
    let atom = rb85_d1_preset();
    for (p, end_bare) in [(PulseParams::reference(), 1), (slow(), 2)] {
        let frame = dressed_frame(|t| hamiltonian3(t, &p, &atom).unwrap(), &default_window(&p).sample_times()).unwrap();
        let w = bare_weights(&frame);
        let first = frame.dressed_of_bare(0);
        assert_eq!(first, 0);
        assert!(w[w.len() - 1][end_bare][first] > 0.99, "chirp {}", p.chirp_rate);
    }
}
