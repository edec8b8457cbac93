use serde_json::Value;

use selfsim_web::{energy_json, evolution_json, spectrum_json};

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn spectrum_reports_the_symmetry_eigenvalue() {
    let v = parse(spectrum_json(3.0, 48).unwrap());
    assert_eq!(v["analytic"], serde_json::json!([1.0]));
    assert_eq!(v["n_coarse"], 32);
}

#[test]
fn bad_exponent_is_an_error_message() {
    let err = spectrum_json(4.0, 48).unwrap_err();
    assert!(err.contains("p out of range"), "{err}");
}

#[test]
fn tuned_evolution_decays() {
    let v = parse(evolution_json(3.0, 32, 1e-3, 0, true, 8.0).unwrap());
    let norm = v["norm"].as_array().unwrap();
    assert_eq!(norm.len(), v["tau"].as_array().unwrap().len());
    assert!(norm.last().unwrap().as_f64().unwrap() < norm[0].as_f64().unwrap());
    assert!(v["decay_rate"].as_f64().unwrap() > 0.35);
    assert!(v["t_star"].as_f64().is_some());
}

#[test]
fn untuned_evolution_has_no_decay_rate() {
    let v = parse(evolution_json(3.0, 32, 1e-3, 0, false, 4.0).unwrap());
    assert_eq!(v["decay_rate"], Value::Null);
    assert_eq!(v["t_star"], Value::Null);
}

#[test]
fn energy_curve_follows_the_closed_form() {
    let v = parse(energy_json(3.0).unwrap());
    let e = v["energy"].as_array().unwrap();
    let c = v["closed_form"].as_array().unwrap();
    for (a, b) in e.iter().zip(c) {
        let (a, b) = (a.as_f64().unwrap(), b.as_f64().unwrap());
        assert!((a - b).abs() <= 1e-8 * b);
    }
    assert!((v["slope"].as_f64().unwrap() - v["predicted_slope"].as_f64().unwrap()).abs() <= 1e-3);
}
