use arp_core::sweep::{classify_region, linspace, run_sweep, sign_sensitive_cells, SweepSpec};
use arp_core::LevelModel;

#[test]
fn empirical_and_analytic_maps_mostly_agree() {
    let spec = SweepSpec { fwhm_axis: linspace(0.5, 4.5, 8), chirp_axis: linspace(-4.0, 0.0, 8), ..SweepSpec::default() };
    let result = run_sweep(&spec).unwrap();
    assert!(result.failures.is_empty());
    let map = classify_region(&result, 0.9).unwrap();
    // measured: 60 of 64 cells agree
    assert!(map.agreement > 0.8, "{}", map.agreement);
    assert!((map.agreement - 0.9375).abs() < 1e-12, "{}", map.agreement);
    for p in &result.final_pops {
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    }
}

#[test]
fn positive_chirp_mirror_does_not_invert() {
    let spec = SweepSpec { fwhm_axis: vec![2.5, 3.5], chirp_axis: vec![-4.0, -2.5], ..SweepSpec::default() };
    let neg = run_sweep(&spec).unwrap();
    let pos = run_sweep(&spec.mirrored()).unwrap();
    let pos_map = classify_region(&pos, 0.9).unwrap();
    assert_eq!(pos_map.inverted_fraction, 0.0);
    // the analytic conditions only see |α|, so every mirrored cell is flagged
    assert!(pos_map.analytic.iter().all(|&a| a));
    assert_eq!(sign_sensitive_cells(&neg, &pos, 0.9).unwrap(), vec![0, 1, 2, 3]);
    assert!(sign_sensitive_cells(&neg, &neg, 0.9).is_err());
}

#[test]
fn three_level_map_inverts_at_reference_point() {
    let spec = SweepSpec { fwhm_axis: vec![2.995], chirp_axis: vec![-2.947], model: LevelModel::Three, ..SweepSpec::default() };
    let r = run_sweep(&spec).unwrap();
    assert_eq!(r.final_pops[0].len(), 3);
    assert!(r.final_pops[0][1] > 0.99);
}
