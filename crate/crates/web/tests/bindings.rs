use linfinity_web::{eigen_json, flux_json, probe_json};

fn parse(s: String) -> serde_json::Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn eigenvalues_at_flip_point() {
    let v = parse(eigen_json(5.3573, 2.19173, 0.5).unwrap());
    let got: Vec<f64> = serde_json::from_value(v["values"].clone()).unwrap();
    for (a, b) in got.iter().zip([-3.7444, 0.2108, 2.5335]) {
        assert!((a - b).abs() < 1e-3);
    }
    assert!(v["case_c_margin"].as_f64().unwrap() > 0.0);
}

#[test]
fn flux_rows_and_errors() {
    let v = parse(flux_json(0.0, 2.0, 0.1, 0.1).unwrap());
    let rows = v["rows"].as_array().unwrap();
    assert!(rows.iter().any(|r| r[0].as_f64().unwrap() == v["r_star"].as_f64().unwrap()));
    assert!(flux_json(0.0, 2.0, -0.1, 0.1).is_err());
}

#[test]
fn probes_on_either_side() {
    let inner = parse(probe_json(5.3, 2.0, 0.5, 1.0, 0.05).unwrap());
    let outer = parse(probe_json(5.3, 2.0, 0.5, 1.3, 0.05).unwrap());
    assert_eq!(inner["outcome"], "Converges");
    assert_eq!(outer["outcome"], "Diverges");
}
