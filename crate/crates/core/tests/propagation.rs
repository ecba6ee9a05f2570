use arp_core::model::{hamiltonian_builder, hamiltonian4, rb85_d1_preset, AmplitudeVector, LevelModel, PulseParams};
use arp_core::propagator::{
    count_local_maxima, default_window, final_populations, propagate, transient_max, IntegrationSettings, Trajectory,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn run(pulse: &PulseParams, settings: &IntegrationSettings) -> Trajectory {
    let atom = rb85_d1_preset();
    propagate(|t| hamiltonian4(t, pulse, &atom), &AmplitudeVector::basis(4, 0), settings).unwrap()
}

fn slow() -> PulseParams {
    PulseParams::reference().with_chirp(-0.092)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn reference_pulse_inverts() {
    let p = PulseParams::reference();
    let traj = run(&p, &default_window(&p));
    let f = final_populations(&traj).unwrap();
    assert!(f[1] >= 0.9, "{f:?}");
    assert!(f[0] <= 0.05, "{f:?}");
    // frozen at the default window and tolerance
    let expected = [0.0041, 0.9726, 0.0130, 0.0103];
    assert!(max_abs_diff(&f, &expected) < 1e-4, "{f:?}");
}

#[test]
fn slow_chirp_leaves_ground_state() {
    let p = slow();
    let f = final_populations(&run(&p, &default_window(&p))).unwrap();
    assert!(f[0] > 0.5, "{f:?}");
    assert!((f[0] - 0.739).abs() < 1e-3, "{f:?}");
}

#[test]
fn transient_excited_population_oscillates() {
    let p = PulseParams::reference();
    let traj = run(&p, &default_window(&p));
    let peak = transient_max(&traj, &[2, 3]).unwrap();
    assert!((0.02..=0.30).contains(&peak), "{peak}");
    assert!(count_local_maxima(&traj.summed(&[2, 3]).unwrap()) >= 3);
}

#[test]
fn norm_is_conserved_on_random_draws() {
    let atom = rb85_d1_preset();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..40 {
        let p = PulseParams::new(
            rng.random_range(0.5..4.0),
            rng.random_range(0.5..4.5),
            rng.random_range(-4.0..4.0),
            rng.random_range(-1.0..1.0),
            0.0,
        )
        .unwrap();
        let traj = propagate(|t| hamiltonian4(t, &p, &atom), &AmplitudeVector::basis(4, 0), &default_window(&p)).unwrap();
        assert!(traj.max_norm_drift() < 1e-6, "{p:?} drift {}", traj.max_norm_drift());
    }
}

#[test]
fn global_energy_shift_leaves_populations_unchanged() {
    let atom = rb85_d1_preset();
    for p in [PulseParams::reference(), slow()] {
        let s = default_window(&p);
        let a = run(&p, &s);
        let b = propagate(|t| hamiltonian4(t, &p, &atom).shifted(7.5), &AmplitudeVector::basis(4, 0), &s).unwrap();
        for (x, y) in a.populations.iter().zip(&b.populations) {
            assert!(max_abs_diff(x, y) < 1e-8);
        }
    }
}

#[test]
fn reversed_time_returns_initial_state() {
    let atom = rb85_d1_preset();
    let p = PulseParams::reference();
    let s = default_window(&p);
    let forward = run(&p, &s);
    let end = forward.states.last().unwrap().clone();
    let mirror = s.t_start + s.t_end;
    let back = propagate(|tau| hamiltonian4(mirror - tau, &p, &atom).scaled(-1.0), &end, &s).unwrap();
    let last = back.states.last().unwrap();
    let err = last.components.iter().zip(&forward.states[0].components).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(err < 1e-7, "{err}");
}

#[test]
fn halving_the_step_changes_little() {
    for p in [PulseParams::reference(), slow()] {
        let s = default_window(&p);
        let a = final_populations(&run(&p, &s)).unwrap();
        let b = final_populations(&run(&p, &s.refined())).unwrap();
        assert!(max_abs_diff(&a, &b) < 1e-7);
    }
}

#[test]
fn refined_settings_share_sample_times() {
    let s = default_window(&PulseParams::reference());
    let a = s.sample_times();
    let b = s.refined().sample_times();
    assert_eq!(a.len(), b.len());
    assert!(max_abs_diff(&a, &b) < 1e-12);
}

#[test]
fn three_level_model_runs_on_same_grid() {
    let p = PulseParams::reference();
    let h = hamiltonian_builder(LevelModel::Three, p, rb85_d1_preset()).unwrap();
    let traj = propagate(h, &AmplitudeVector::basis(3, 0), &default_window(&p)).unwrap();
    let f = final_populations(&traj).unwrap();
    assert_eq!(f.len(), 3);
    assert!(f[1] > 0.99, "{f:?}");
}
