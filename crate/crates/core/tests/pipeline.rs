use dissipation::io::{CsvTable, SystemSpec};
use dissipation::models::{
    mean_time_by_quadrature, tight_binding_ring, two_level_closed_forms, two_level_system, InitialState,
    TwoLevelParams,
};
use dissipation::poles::find_poles;
use dissipation::spectral::spectral_model;
use dissipation::stats::{decay_density, moments_by_quadrature, ConditionalMeanCurve, DecayTimeStats};
use serde_json::json;

#[test]
fn disorder_produces_slow_tails() {
    let clean = find_poles(&spectral_model(&tight_binding_ring(10, 1.0, 0.0, 0, 1.0).unwrap()).unwrap(), 1.0).unwrap();
    let dirty =
        find_poles(&spectral_model(&tight_binding_ring(10, 1.0, 0.125, 0, 1.0).unwrap()).unwrap(), 1.0).unwrap();
    for t in [200.0, 400.0, 800.0] {
        assert!(decay_density(&dirty, t) > 10.0 * decay_density(&clean, t), "t = {t}");
    }
}

#[test]
fn json_system_to_statistics() {
    let text = r#"{"hamiltonian": [[[0.25, 0], [0.1, 0]], [[0.1, 0], [-0.25, 0]]],
                   "decay_state": [[1, 0], [0, 0]], "gamma": 1.0}"#;
    let sys = SystemSpec::from_json(text).unwrap().to_system().unwrap();
    let model = spectral_model(&sys).unwrap();
    assert_eq!(model.winding(), 2);
    let stats = DecayTimeStats::from_poles(&find_poles(&model, 1.0).unwrap(), 2).unwrap();
    assert!((stats.p_det - 1.0).abs() < 1e-12);
    assert!((stats.mean - 1.0).abs() < 1e-10);
    assert!((stats.variance - 63.5).abs() < 1e-8);
}

#[test]
fn two_level_quadrature_normalisation() {
    let p = TwoLevelParams::new(0.5, 0.1, 1.0).unwrap();
    let poles = two_level_closed_forms(p).unwrap();
    let q = moments_by_quadrature(&poles, 1e-10);
    assert!((q[0] - 1.0).abs() < 1e-8);
    let sys = two_level_system(p).unwrap();
    let direct = mean_time_by_quadrature(&sys, &InitialState::Pure(sys.decay_state().clone()), 1e5).unwrap();
    assert!((direct.mean - 1.0).abs() < 1e-6);
}

#[test]
fn conditional_mean_curve_serialises() {
    let p = TwoLevelParams::new(0.5, 0.01, 1.0).unwrap();
    let poles = two_level_closed_forms(p).unwrap();
    let thetas: Vec<f64> = (0..=40).map(|k| 10f64.powf(-1.0 + 0.2 * k as f64)).collect();
    let curve = ConditionalMeanCurve::compute(&poles, &thetas).unwrap();
    let mut table = CsvTable::new(json!({"w_apparent": curve.w_apparent}), &["theta", "mean_c"]);
    for (t, v) in curve.thetas.iter().zip(&curve.values) {
        table.push(vec![*t, *v]).unwrap();
    }
    let back = CsvTable::parse_str(&table.to_csv_string()).unwrap();
    assert_eq!(back.column("mean_c").unwrap(), curve.values);
    assert_eq!(back.header["w_apparent"], json!(1));
    // Unconditional mean recovered at the long end.
    assert!((curve.values.last().unwrap() - 1.0).abs() < 0.01);
}
