use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

struct Run {
    code: i32,
    out: PathBuf,
    stderr: String,
}

fn crms(dir: &Path, config: &str, args: &[&str]) -> Run {
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    let output = Command::new(env!("CARGO_BIN_EXE_crms"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--quiet")
        .output()
        .unwrap();
    Run {
        code: output.status.code().unwrap(),
        out,
        stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
    }
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn validate_standard_form_passes() {
    let dir = TempDir::new().unwrap();
    let r = crms(dir.path(), r#"{"n": 2}"#, &["validate"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = json(r.out.join("validate.json"));
    assert_eq!(v["all_passed"], true);
    assert_eq!(v["report"]["closed"], "not_applicable");
}

#[test]
fn validate_reports_the_injected_vertical_triple() {
    let dir = TempDir::new().unwrap();
    let r = crms(
        dir.path(),
        r#"{"n": 2, "form": {"inject": "vertical_triple"}}"#,
        &["validate"],
    );
    assert_eq!(r.code, 1);
    let w = &json(r.out.join("validate.json"))["report"]["one_horizontal"]["witness"];
    assert_eq!(w["kind"], "vertical_triple");
    assert_eq!(w["indices"], serde_json::json!([2, 3, 8]));
}

#[test]
fn validate_flags_each_injected_violation() {
    for (inject, condition) in [
        ("zero", "fiberwise_nondegenerate"),
        ("rank_deficient", "fiberwise_nondegenerate"),
        ("incompatible_structure", "i_compatible"),
    ] {
        let dir = TempDir::new().unwrap();
        let config = format!(r#"{{"n": 2, "form": {{"inject": "{inject}"}}}}"#);
        let r = crms(dir.path(), &config, &["validate"]);
        assert_eq!(r.code, 1, "{inject}");
        let report = &json(r.out.join("validate.json"))["report"];
        assert_eq!(report[condition]["passed"], false, "{inject}");
    }
}

#[test]
fn malformed_config_exits_two() {
    let dir = TempDir::new().unwrap();
    for config in [
        r#"{"n": 2"#,
        r#"{"hamiltonian": {"name": "sextic"}}"#,
        r#"{"experiment": "flow"}"#,
    ] {
        let r = crms(dir.path(), config, &["validate"]);
        assert_eq!(r.code, 2, "{config}");
    }
}

#[test]
fn darboux_mirrors_the_library_examples() {
    let dir = TempDir::new().unwrap();
    let r = crms(dir.path(), r#"{"n": 2}"#, &["darboux"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = json(r.out.join("darboux.json"));
    assert_eq!(v["reconstruction_error"], 0.0);
    let frame = v["frame"].as_array().unwrap();
    for (i, row) in frame.iter().enumerate() {
        for (j, x) in row.as_array().unwrap().iter().enumerate() {
            assert_eq!(x.as_f64().unwrap(), if i == j { 1.0 } else { 0.0 });
        }
    }

    let nu = [0.3, -0.2, 0.7, 0.1];
    let config = format!(r#"{{"form": {{"source": "standard_plus_nu", "nu": {nu:?}}}}}"#);
    let r = crms(dir.path(), &config, &["darboux"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = json(r.out.join("darboux.json"));
    let got: Vec<f64> = v["nu"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    for (g, e) in got.iter().zip(nu) {
        assert!((g - e).abs() < 1e-12, "{got:?}");
    }

    for seed in 0..3 {
        let config = format!(
            r#"{{"n": 2, "seed": {seed}, "form": {{"source": "seeded_random_conjugate"}}}}"#
        );
        let r = crms(dir.path(), &config, &["darboux"]);
        assert_eq!(r.code, 0, "{}", r.stderr);
        let v = json(r.out.join("darboux.json"));
        assert!(v["reconstruction_error"].as_f64().unwrap() < 1e-8);
        assert!(v["structure_defect"].as_f64().unwrap() < 1e-8);
    }
}

#[test]
fn darboux_of_a_non_crms_form_exits_one() {
    let dir = TempDir::new().unwrap();
    let r = crms(dir.path(), r#"{"form": {"inject": "zero"}}"#, &["darboux"]);
    assert_eq!(r.code, 1);
    let v = json(r.out.join("darboux.json"));
    assert_eq!(v["passed"], false);
    assert!(v["error"].is_string());
}

fn symbol_rows(out: &Path) -> Vec<Vec<String>> {
    let mut reader = csv::Reader::from_path(out.join("symbol.csv")).unwrap();
    assert_eq!(
        reader.headers().unwrap(),
        vec![
            "angle",
            "ddw_kernel_dim",
            "bridges_kernel_dim",
            "bridges_det"
        ]
    );
    reader
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect()
}

#[test]
fn symbol_sweep_has_unit_bridges_determinant() {
    for n in 1..=2 {
        let dir = TempDir::new().unwrap();
        let r = crms(dir.path(), &format!(r#"{{"n": {n}}}"#), &["symbol"]);
        assert_eq!(r.code, 0, "{}", r.stderr);
        let rows = symbol_rows(&r.out);
        assert_eq!(rows.len(), 64);
        for row in rows {
            let det: f64 = row[3].parse().unwrap();
            assert!((det - 1.0).abs() < 1e-10, "{row:?}");
            assert_eq!(row[2], "0");
            assert!(row[1].parse::<usize>().unwrap() >= 1);
        }
    }
}

#[test]
fn symbol_rejects_a_zero_covector() {
    let dir = TempDir::new().unwrap();
    let r = crms(
        dir.path(),
        r#"{"symbol": {"covectors": [[1, 0], [0, 0]]}}"#,
        &["symbol"],
    );
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("zero covector"));
}

#[test]
fn zero_hamiltonian_from_a_constant_is_converged_at_step_zero() {
    let dir = TempDir::new().unwrap();
    let r = crms(
        dir.path(),
        r#"{"hamiltonian": {"name": "zero"}, "initial": {"mode": "constant", "value": [1, -2, 0.5, 3]}}"#,
        &["flow"],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = json(r.out.join("flow_summary.json"));
    assert_eq!(v["status"], "converged");
    assert_eq!(v["steps"], 0);
    assert_eq!(v["bridges_residual"], 0.0);
    assert!(r.out.join("flow_trace.csv").exists());
    assert!(r.out.join("final_state.crms").exists());
}

#[test]
fn step_above_the_stability_bound_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    // Ten times the explicit Euler bound 0.2·2π/32.
    let r = crms(
        dir.path(),
        r#"{"hamiltonian": {"name": "quartic"}, "flow": {"ds": 0.39269908169872414}}"#,
        &["flow"],
    );
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("stability bound"));
}

// The action is unbounded below along constant fields for this Hamiltonian,
// so descent from generic data leaves every bounded set.
#[test]
fn quadratic_flow_from_seed_seven_diverges() {
    let dir = TempDir::new().unwrap();
    let r = crms(
        dir.path(),
        r#"{"n": 1, "seed": 7, "hamiltonian": {"name": "quadratic"}}"#,
        &["flow"],
    );
    assert_eq!(r.code, 3, "{}", r.stderr);
    let v = json(r.out.join("flow_summary.json"));
    assert_eq!(v["status"], "diverged");
    assert!(v["divergence_step"].as_u64().unwrap() > 0);
}

#[test]
fn final_state_restarts_through_the_container() {
    let dir = TempDir::new().unwrap();
    let config = r#"{"hamiltonian": {"name": "zero"},
                     "initial": {"mode": "constant", "value": [0.25, 0.5, -1, 2]}}"#;
    let r = crms(dir.path(), config, &["flow", "--grid", "16x16"]);
    assert_eq!(r.code, 0, "{}", r.stderr);

    let restart = dir.path().join("restart.crms");
    std::fs::copy(r.out.join("final_state.crms"), &restart).unwrap();
    let config = format!(
        r#"{{"hamiltonian": {{"name": "zero"}}, "initial": {{"mode": "file", "path": {:?}}}}}"#,
        restart.to_str().unwrap()
    );
    let r = crms(dir.path(), &config, &["flow", "--grid", "16x16"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = json(r.out.join("flow_summary.json"));
    assert_eq!(
        (v["status"].as_str(), v["steps"].as_u64()),
        (Some("converged"), Some(0))
    );
    assert_eq!(
        std::fs::read(&restart).unwrap(),
        std::fs::read(r.out.join("final_state.crms")).unwrap()
    );

    let r = crms(dir.path(), &config, &["flow", "--grid", "8x8"]);
    assert_eq!(r.code, 2);
}

#[test]
fn step_budget_exhaustion_exits_one() {
    let dir = TempDir::new().unwrap();
    let r = crms(
        dir.path(),
        r#"{"hamiltonian": {"name": "quadratic", "parameters": {"lambda": -10}}, "flow": {"max_steps": 3}}"#,
        &["flow", "--grid", "16x16"],
    );
    assert_eq!(r.code, 1);
    assert_eq!(
        json(r.out.join("flow_summary.json"))["status"],
        "max_steps_reached"
    );
}

#[test]
fn gradcheck_passes_for_builtins_and_fails_for_a_corrupted_gradient() {
    let dir = TempDir::new().unwrap();
    let r = crms(
        dir.path(),
        r#"{"hamiltonian": {"name": "quadratic"}}"#,
        &["gradcheck"],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = json(r.out.join("gradcheck.json"));
    assert!(v["max_relative_error"].as_f64().unwrap() < 1e-9);
    assert_eq!(v["relative_errors"].as_array().unwrap().len(), 20);

    let r = crms(
        dir.path(),
        r#"{"hamiltonian": {"name": "cosine"}}"#,
        &["gradcheck", "--grid", "16x16"],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(
        json(r.out.join("gradcheck.json"))["max_relative_error"]
            .as_f64()
            .unwrap()
            < 1e-6
    );

    let r = crms(
        dir.path(),
        r#"{"hamiltonian": {"name": "cosine", "corrupt_gradient": 1.01}}"#,
        &["gradcheck", "--grid", "16x16"],
    );
    assert_eq!(r.code, 1);
    assert_eq!(
        json(r.out.join("gradcheck.json"))["hamiltonian"],
        "cosine_corrupted"
    );
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let config = r#"{"seed": 5, "hamiltonian": {"name": "quadratic", "parameters": {"lambda": -10}},
                     "flow": {"max_steps": 40, "record_every": 10}}"#;
    let files = ["flow_trace.csv", "final_state.crms", "flow_summary.json"];
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let ra = crms(a.path(), config, &["flow", "--grid", "16x16"]);
    let rb = crms(b.path(), config, &["flow", "--grid", "16x16"]);
    assert_eq!(ra.code, rb.code);
    for f in files {
        assert_eq!(
            std::fs::read(ra.out.join(f)).unwrap(),
            std::fs::read(rb.out.join(f)).unwrap(),
            "{f}"
        );
    }
    for verb in ["gradcheck", "symbol", "darboux"] {
        let ra = crms(
            a.path(),
            r#"{"seed": 9, "form": {"source": "seeded_random_conjugate"}}"#,
            &[verb],
        );
        let rb = crms(
            b.path(),
            r#"{"seed": 9, "form": {"source": "seeded_random_conjugate"}}"#,
            &[verb],
        );
        assert_eq!(ra.code, 0, "{verb}: {}", ra.stderr);
        let name = match verb {
            "symbol" => "symbol.csv".to_string(),
            v => format!("{v}.json"),
        };
        assert_eq!(
            std::fs::read(ra.out.join(&name)).unwrap(),
            std::fs::read(rb.out.join(&name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = TempDir::new().unwrap();
    let r1 = crms(
        dir.path(),
        r#"{"seed": 1}"#,
        &["gradcheck", "--grid", "8x8"],
    );
    let a = json(r1.out.join("gradcheck.json"));
    let r2 = crms(
        dir.path(),
        r#"{"seed": 1}"#,
        &["gradcheck", "--grid", "8x8", "--seed", "2"],
    );
    let b = json(r2.out.join("gradcheck.json"));
    assert_eq!((a["seed"].as_u64(), b["seed"].as_u64()), (Some(1), Some(2)));
    assert_eq!((a["n1"].as_u64(), b["n2"].as_u64()), (Some(8), Some(8)));
}
