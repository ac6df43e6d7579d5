use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tomodesign")).args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write_temp(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn fixtures_match_bundled_constructors() {
    for (name, file) in [
        ("tetrahedron", "tetrahedron.json"),
        ("trine", "trine.json"),
        ("qutrit7", "qutrit7.json"),
        ("two-qubit-family", "two_qubit_family.json"),
    ] {
        let out = run(&["export", name]);
        assert!(out.status.success());
        let exported: Value = serde_json::from_slice(&out.stdout).unwrap();
        let stored: Value = serde_json::from_str(&fs::read_to_string(fixture(file)).unwrap()).unwrap();
        assert_eq!(exported, stored, "{file} is stale");
    }
}

#[test]
fn validate_accepts_bundled_designs() {
    for file in ["tetrahedron.json", "trine.json", "qutrit7.json", "two_qubit_family.json"] {
        let out = run(&["validate", "--input", fixture(file).to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{file}");
        assert_eq!(json_of(&out)["result"]["valid"], true);
    }
}

#[test]
fn validate_names_completeness_violation() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_temp(&dir, "half.json", r#"{"dim":2,"elements":[[[[0.5,0],[0,0]],[[0,0],[0.5,0]]]]}"#);
    let out = run(&["validate", "--input", &p]);
    assert_eq!(out.status.code(), Some(1));
    let v = json_of(&out);
    let kinds: Vec<&str> =
        v["result"]["violations"].as_array().unwrap().iter().map(|x| x["kind"].as_str().unwrap()).collect();
    assert!(kinds.contains(&"completeness"), "{kinds:?}");
}

#[test]
fn dimension_mismatch_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_temp(&dir, "bad.json", r#"{"dim":2,"elements":[[[[1,0],[0,0]],[[0,0],[1,0]]],[[[1,0],[0,0]]]]}"#);
    let out = run(&["validate", "--input", &p]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["code"], "parse");
}

#[test]
fn malformed_json_reports_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_temp(&dir, "mal.json", "{\"dim\":2,\n \"elements\": [1,}");
    let out = run(&["validate", "--input", &p]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    let msg = err["error"]["message"].as_str().unwrap();
    assert!(msg.contains("line 2") && msg.contains("elements"), "{msg}");
}

#[test]
fn missing_input_is_a_config_error() {
    assert_eq!(run(&["validate"]).status.code(), Some(2));
    assert_eq!(run(&["validate", "--input", "/nonexistent/x.json"]).status.code(), Some(2));
}

#[test]
fn singular_design_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_temp(
        &dir,
        "flat.json",
        r#"{"dim":2,"elements":[[[[0.25,0],[0,0]],[[0,0],[0.25,0]]],[[[0.25,0],[0,0]],[[0,0],[0.25,0]]],
            [[[0.25,0],[0,0]],[[0,0],[0.25,0]]],[[[0.25,0],[0,0]],[[0,0],[0.25,0]]]]}"#,
    );
    let out = run(&["objective", "--input", &p, "--samples", "0"]);
    assert_eq!(out.status.code(), Some(3));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["code"], "singular-design");
}

#[test]
fn verify_sic_reports_constants() {
    let out = run(&["verify-sic", "--input", fixture("tetrahedron.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let sic = &json_of(&out)["result"]["sic"];
    assert!((sic["lambda"].as_f64().unwrap() - 2.0).abs() < 1e-10);
    assert!((sic["mu"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-10);

    let out = run(&["verify-sic", "--input", fixture("trine.json").to_str().unwrap(), "--mask", "d1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    let sic = &v["result"]["sic"];
    assert!((sic["lambda"].as_f64().unwrap() - 1.5).abs() < 1e-10);
    assert!((sic["mu"].as_f64().unwrap() - 0.25).abs() < 1e-10);
    assert_eq!(sic["quasi_orthogonal_to_known"], true);
    assert_eq!(v["config"]["mask"], "d1");
}

#[test]
fn verify_sic_rejects_a_non_sic() {
    // the trine is not quasi-orthogonal to σ₁
    let out = run(&["verify-sic", "--input", fixture("trine.json").to_str().unwrap(), "--mask", "s01"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn demo_qutrit_passes_every_check() {
    let out = run(&["demo-qutrit"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    for c in v["result"]["checks"].as_array().unwrap() {
        assert_eq!(c["passed"], true, "{c}");
    }
    assert_eq!(v["result"]["known"], serde_json::json!(["d1", "d2"]));
}

#[test]
fn objective_methods_agree() {
    let out = run(&["objective", "--input", fixture("tetrahedron.json").to_str().unwrap(), "--samples", "20000"]);
    assert_eq!(out.status.code(), Some(0));
    let r = &json_of(&out)["result"];
    let closed = r["closed_form"]["det_value"].as_f64().unwrap();
    let mc = r["monte_carlo"]["det_value"].as_f64().unwrap();
    let se = r["monte_carlo"]["mc_stderr"].as_f64().unwrap();
    assert!((closed - 64.0 / 27.0).abs() < 1e-10);
    assert!((closed - mc).abs() <= 3.0 * se, "{closed} {mc} {se}");
}

#[test]
fn objective_accepts_inline_prior_and_known_directions() {
    let out = run(&[
        "objective",
        "--input",
        fixture("trine.json").to_str().unwrap(),
        "--mask",
        "d1",
        "--prior",
        r#"{"kind":"circle_qubit","theta3":0.5,"radius":0.6}"#,
        "--samples",
        "2000",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = &json_of(&out)["result"];
    assert_eq!(r["known"], serde_json::json!(["d1"]));
    assert_eq!(r["closed_form"]["avg_cov"].as_array().unwrap().len(), 2);
}

#[test]
fn optimize_finds_qubit_sic() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_temp(
        &dir,
        "problem.json",
        r#"{"dim":2,"design":{"kind":"povm","outcomes":4},"prior":{"kind":"haar_orbit","spectrum":[1,0]},"restarts":8}"#,
    );
    let out = run(&["optimize", "--input", &p, "--seed", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["result"]["problem"]["seed"], 4);
    let sic = &v["result"]["result"]["structure_report"]["sic"];
    assert!((sic["lambda"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    assert!((sic["mu"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-6);
    assert!(sic["max_mu_residual"].as_f64().unwrap() < 1e-4);
}

fn experiment(dir: &tempfile::TempDir) -> String {
    let design = fs::read_to_string(fixture("tetrahedron.json")).unwrap();
    let text = format!(
        r#"{{"design": {design}, "true_state": {{"dim": 2, "theta": [0.2, -0.1, 0.3]}}, "shots": 1000, "runs": 500, "seed": 3}}"#
    );
    write_temp(dir, "experiment.json", &text)
}

#[test]
fn simulate_is_deterministic_and_embeds_config() {
    let dir = tempfile::tempdir().unwrap();
    let input = experiment(&dir);
    let out_a = dir.path().join("a.json");
    let out_b = dir.path().join("b.json");
    for o in [&out_a, &out_b] {
        let st = run(&["simulate", "--input", &input, "--output", o.to_str().unwrap(), "--seed", "11"]);
        assert_eq!(st.status.code(), Some(0));
    }
    let v: Value = serde_json::from_str(&fs::read_to_string(&out_a).unwrap()).unwrap();
    let w: Value = serde_json::from_str(&fs::read_to_string(&out_b).unwrap()).unwrap();
    assert_eq!(v["result"], w["result"]);
    assert_eq!(v["config"]["seed"], 11);
    assert_eq!(v["result"]["experiment"]["seed"], 11);
    assert_eq!(v["result"]["covariance_comparison"].as_array().unwrap().len(), 6);
}

#[test]
fn simulate_dumps_runs_as_csv() {
    let dir = tempfile::tempdir().unwrap();
    let input = experiment(&dir);
    let out = run(&["simulate", "--input", &input, "--format", "csv", "--runs", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "run,s01,a01,d1,physical");
    assert_eq!(lines.len(), 5);
}

#[test]
fn bases_lists_labels() {
    let out = run(&["bases", "--dim", "4", "--basis", "pauli-product"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    let els = v["result"]["elements"].as_array().unwrap();
    assert_eq!(els.len(), 15);
    assert_eq!(els[0]["label"], "IX");
}

#[test]
fn threads_flag_is_accepted() {
    let out = run(&["--threads", "2", "objective", "--input", fixture("tetrahedron.json").to_str().unwrap(), "--samples", "1000"]);
    assert_eq!(out.status.code(), Some(0));
}
