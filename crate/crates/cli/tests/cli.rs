use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn selfsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_selfsim")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(o: &Output) -> Value {
    serde_json::from_str(&stdout(o)).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn read_csv(path: &Path) -> Vec<Vec<f64>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("tau,norm,unstable_coeff"));
    lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect()
}

fn assert_single_error_line(o: &Output, code: i32, needle: &str) {
    assert_eq!(o.status.code(), Some(code), "{}", stderr(o));
    let err = stderr(o);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error: kind="), "{err}");
    assert!(err.contains(needle), "{err}");
}

#[test]
fn spectrum_p3_has_only_the_symmetry_eigenvalue() {
    let o = selfsim(&["spectrum", "--p", "3", "--n", "96"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["analytic"], serde_json::json!([1.0]));
    assert_eq!(v["projection_rank"], 1);
    assert!(v["projection_defect"].as_f64().unwrap() <= 1e-8);
    for key in ["p", "n_coarse", "n_fine", "discrete"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    let stable: Vec<f64> = v["discrete"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|e| e["stable"].as_bool().unwrap())
        .map(|e| e["re"].as_f64().unwrap())
        .collect();
    assert_eq!(stable.len(), 1);
    assert!((stable[0] - 1.0).abs() <= 1e-8);
}

#[test]
fn spectrum_rejects_p_out_of_range() {
    let o = selfsim(&["spectrum", "--p", "5", "--n", "96"]);
    assert_single_error_line(&o, 2, "p out of range (1,3]");
}

#[test]
fn spectrum_halfplane_lists_both_eigenvalues() {
    let o = selfsim(&["spectrum", "--p", "2", "--n", "96", "--halfplane", "-1.4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(json(&o)["analytic"], serde_json::json!([-1.0, 1.0]));
}

#[test]
fn spectrum_sweep_returns_one_report_per_exponent() {
    let o = selfsim(&["spectrum", "--n", "48", "--sweep", "1.5,3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = json(&o);
    let reports = v.as_array().unwrap();
    assert_eq!(reports.len(), 2);
    assert_eq!(reports[0]["p"], 1.5);
    assert_eq!(reports[1]["p"], 3.0);
}

#[test]
fn bad_arguments_give_one_line_and_exit_2() {
    assert_single_error_line(&selfsim(&["spectrum", "--n", "ten"]), 2, "kind=usage");
    assert_single_error_line(&selfsim(&["spectrum", "--n", "8"]), 2, "grid size 8");
    assert_single_error_line(&selfsim(&["evolve", "--eps", "0.7", "--n", "24"]), 2, "eps out of range");
}

#[test]
fn evolve_zero_amplitude_is_identically_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("zero.csv");
    let o = selfsim(&["evolve", "--p", "3", "--amplitude", "0", "--tau-end", "5", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_csv(&out);
    assert_eq!(rows.len(), 51);
    assert_eq!(rows.last().unwrap()[0], 5.0);
    assert!(rows.iter().all(|r| r[1] == 0.0 && r[2] == 0.0));
}

#[test]
fn evolve_tuned_run_decays() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("tuned.csv");
    let o = selfsim(&[
        "evolve", "--p", "3", "--amplitude", "1e-3", "--tune-T", "--tau-end", "10", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = json(&o);
    let t_star = s["t_star"].as_f64().unwrap();
    assert!(t_star > 0.9 && t_star < 1.1, "{t_star}");
    assert!(s["decay_rate"].as_f64().unwrap() >= 0.35, "{s}");
    assert!(s["x_norm"].as_f64().unwrap().is_finite());
    assert_eq!(read_csv(&out).len(), 101);
}

#[test]
fn evolve_untuned_unstable_coefficient_grows_at_rate_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("untuned.csv");
    let o = selfsim(&[
        "evolve", "--p", "3", "--amplitude", "1e-3", "--no-tune", "--T", "1", "--tau-end", "8", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = json(&o);
    assert_eq!(s["t_star"], Value::Null);
    let rate = s["unstable_growth_rate"].as_f64().unwrap();
    assert!((rate - 1.0).abs() <= 0.05, "{rate}");
}

#[test]
fn evolve_large_perturbation_overflows_with_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("big.csv");
    let o = selfsim(&["evolve", "--n", "32", "--amplitude", "1e3", "--tau-end", "3", "--out", out.to_str().unwrap()]);
    assert_single_error_line(&o, 4, "--amplitude");
}

#[test]
fn evolve_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let o = selfsim(&[
            "evolve", "--n", "32", "--tune-T", "--tau-end", "4", "--seed", "3", "--out",
            path.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        (std::fs::read(path).unwrap(), o.stdout)
    };
    assert_eq!(run("a.csv"), run("b.csv"));
}

#[test]
fn evolve_writes_the_reconstructed_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let field = dir.path().join("field.csv");
    let o = selfsim(&[
        "evolve", "--n", "32", "--tau-end", "1", "--out", out.to_str().unwrap(), "--field",
        field.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(field).unwrap();
    assert!(text.starts_with("t,r,psi,psi_t\n"));
    assert_eq!(text.lines().count(), 33);
}

#[test]
fn energy_table_matches_the_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("energy.csv");
    let o = selfsim(&["energy", "--p", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = json(&o);
    assert!((s["slope"].as_f64().unwrap() + 0.5).abs() <= 1e-3);
    let text = std::fs::read_to_string(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,energy,closed_form"));
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((first[1] - 2.0 * 2.0_f64.sqrt() / 3.0_f64.sqrt()).abs() <= 1e-8);
}

#[test]
fn validate_default_config_passes() {
    let o = selfsim(&["validate"]);
    let text = stdout(&o);
    assert!(o.status.success(), "{text}");
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 40);
    assert!(!text.contains("FAIL"));
}

#[test]
fn validate_second_exponent_passes() {
    let o = selfsim(&["validate", "--p", "1.5"]);
    assert!(o.status.success(), "{}", stdout(&o));
}

#[test]
fn validate_catches_an_injected_fault() {
    let o = selfsim(&["validate", "--n", "32", "--inject-fault"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    let failing: Vec<&str> = text.lines().filter(|l| l.starts_with("FAIL")).collect();
    assert!(failing.iter().any(|l| l.contains("model/Lipschitz")), "{text}");
    assert!(failing.iter().any(|l| l.starts_with("FAIL rhs/")), "{text}");
}
