use porosity_web::{profile_json, snapshot_json, summary_json};
use serde_json::Value;

const HALVES: &str = r#"{"kind":"geometric","q":"1/2"}"#;

#[test]
fn summary_of_halves() {
    let v: Value = serde_json::from_str(&summary_json(HALVES, 20).unwrap()).unwrap();
    assert_eq!(v["lower_exact"], "1/3");
    assert_eq!(v["upper_exact"], "1/2");
    assert_eq!(v["converged"], true);
}

#[test]
fn profile_has_one_row_per_window() {
    let v: Value = serde_json::from_str(&profile_json(HALVES, 12).unwrap()).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 8);
    for row in rows {
        assert!((row["sup"].as_f64().unwrap() - 0.5).abs() < 1e-12);
        assert!((row["inf"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }
}

#[test]
fn snapshot_of_halves_is_self_similar() {
    let v: Value = serde_json::from_str(&snapshot_json(HALVES, 5, 4).unwrap()).unwrap();
    let pts: Vec<f64> = v["points"].as_array().unwrap().iter().map(|p| p.as_f64().unwrap()).collect();
    assert_eq!(pts[0], 0.0);
    for x in [0.25, 0.5, 1.0, 2.0, 4.0] {
        assert!(pts.contains(&x), "{x} missing from {pts:?}");
    }
}

#[test]
fn bad_input_is_an_error() {
    assert!(summary_json("{", 10).is_err());
    assert!(profile_json(HALVES, 0).is_err());
    assert!(snapshot_json(r#"{"kind":"explicit","points":["1/2"]}"#, 3, 4).is_err());
}
