use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_toruszeros"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(format!("{name}.json"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn evolve(name: &str, out: &Path, extra: &[&str]) -> Output {
    let cfg = config(name);
    let mut args = vec!["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    args.push("evolve");
    run(&args)
}

fn classification(name: &str) -> Value {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(name);
    let o = run(&["--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "classify"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let written: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("classification.json")).unwrap()).unwrap();
    assert_eq!(written, serde_json::from_str::<Value>(&stdout(&o)).unwrap());
    written
}

#[test]
fn evolve_writes_outputs_with_the_right_cell() {
    for (name, side, d) in [("fig1", "5.0133", 4), ("fig3", "4.3416", 3), ("fig4", "5.6050", 5)] {
        let dir = tempfile::tempdir().unwrap();
        let o = evolve(name, dir.path(), &["--svg"]);
        assert!(o.status.success(), "{name}: {}", stderr(&o));
        assert!(stdout(&o).contains(&format!("cell side    {side}")), "{name}: {}", stdout(&o));
        let svg = std::fs::read_to_string(dir.path().join("paths.svg")).unwrap();
        assert!(svg.contains(r#"class="cell""#));
        assert_eq!(svg.matches(r#"<g class="path""#).count(), d);
        let csv = std::fs::read_to_string(dir.path().join("paths.csv")).unwrap();
        assert!(csv.starts_with("t,path_index,re_lifted,im_lifted,re_cell,im_cell\n"));
        let json: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("paths.json")).unwrap()).unwrap();
        assert!(json["times"].as_array().unwrap().len() > 5000);
    }
}

#[test]
fn outputs_are_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(evolve("fig3", a.path(), &[]).status.success());
    assert!(evolve("fig3", b.path(), &[]).status.success());
    for f in ["paths.json", "paths.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn classify_reproduces_the_figures() {
    let fig1 = classification("fig1");
    assert_eq!(fig1["permutation"], serde_json::json!([3, 1, 2, 0]));
    let fig2 = classification("fig2");
    assert_eq!(fig2["cycles"].as_array().unwrap().len(), 1);
    assert_eq!(fig2["cycles"][0]["members"], serde_json::json!([0, 2, 3, 1]));
    let fig3 = classification("fig3");
    let mut w: Vec<Value> = fig3["cycles"].as_array().unwrap().iter().map(|c| c["winding"].clone()).collect();
    w.sort_by_key(|v| v.to_string());
    assert_eq!(w, vec![serde_json::json!([0, 0]), serde_json::json!([0, 1]), serde_json::json!([0, 1])]);
}

#[test]
fn classify_reads_a_saved_bundle() {
    let dir = tempfile::tempdir().unwrap();
    assert!(evolve("fig1", dir.path(), &[]).status.success());
    let bundle = dir.path().join("paths.json");
    let o = run(&["--out", dir.path().to_str().unwrap(), "classify", "--bundle", bundle.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["permutation"], serde_json::json!([3, 1, 2, 0]));
}

#[test]
fn classify_short_run_is_insufficient_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("short.json");
    std::fs::write(&cfg, r#"{"d": 3, "hamiltonian": [[1.5,0.2,0],[0.2,1.5,0],[0,0,2.1]], "initial_zeros": [[1.01,2.0],[2.15,2.56]], "t_end": 1.0}"#).unwrap();
    assert!(run(&["--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "evolve"]).status.success());
    let bundle = dir.path().join("paths.json");
    let o = run(&["--out", dir.path().to_str().unwrap(), "classify", "--bundle", bundle.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn malformed_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"d": 3, "hamiltonian": [[1,0,0],[0,2,0],[0,0,3]], "initial_zeros": [[1,1],[2,2]], "tracker": {"dt": "small"}}"#).unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "evolve"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("tracker"), "{}", stderr(&o));
    std::fs::write(&cfg, r#"{"d": "three"}"#).unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "evolve"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("field \"d\""), "{}", stderr(&o));
}

#[test]
fn aperiodic_hamiltonian_needs_t_end() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("aperiodic.json");
    std::fs::write(&cfg, r#"{"d": 3, "hamiltonian": [[0,0,0],[0,1,0],[0,0,1.4142135623730951]], "initial_zeros": [[1,1],[2,2]]}"#).unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "evolve"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("t_end"));
}

#[test]
fn convert_round_trip_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("state.json");
    std::fs::write(&state, r#"{"d": 3, "g": [[0.6, 0.1], [-0.2, 0.5], [0.3, -0.4]]}"#).unwrap();
    let zeros = dir.path().join("zeros.json");
    let (z1, z2) = (dir.path().join("z1.json"), dir.path().join("z2.json"));
    let back = dir.path().join("back.json");
    let convert = |i: &Path, o: &Path| {
        let out = run(&["convert", "--input", i.to_str().unwrap(), "--output", o.to_str().unwrap()]);
        assert!(out.status.success(), "{}", stderr(&out));
        std::fs::read(o).unwrap()
    };
    let a = convert(&state, &zeros);
    assert_eq!(a, convert(&state, &z1));
    let s1 = convert(&zeros, &back);
    assert_eq!(s1, convert(&zeros, &z2));
    // A second pass through the cycle lands on the same zeros.
    let zeros_of = |bytes: &[u8]| -> Vec<f64> {
        let v: Value = serde_json::from_slice(bytes).unwrap();
        v["zeros"].as_array().unwrap().iter().flat_map(|p| [p[0].as_f64().unwrap(), p[1].as_f64().unwrap()]).collect()
    };
    let again = zeros_of(&convert(&back, &z1));
    for (x, y) in zeros_of(&a).iter().zip(&again) {
        assert!((x - y).abs() < 1e-10);
    }

    let v: Value = serde_json::from_slice(&s1).unwrap();
    let g: Vec<(f64, f64)> = v["g"].as_array().unwrap().iter().map(|p| (p[0].as_f64().unwrap(), p[1].as_f64().unwrap())).collect();
    let orig = [(0.6, 0.1), (-0.2, 0.5), (0.3, -0.4)];
    let norm = orig.iter().map(|(a, b): &(f64, f64)| a * a + b * b).sum::<f64>().sqrt();
    // Overlap magnitude with the original state is 1 up to round-off.
    let (mut re, mut im) = (0.0, 0.0);
    for ((a, b), (c, d)) in orig.iter().zip(&g) {
        re += (a * c + b * d) / norm;
        im += (a * d - b * c) / norm;
    }
    assert!(((re * re + im * im).sqrt() - 1.0).abs() < 1e-10);
}

#[test]
fn convert_completes_a_missing_zero() {
    let dir = tempfile::tempdir().unwrap();
    let zeros = dir.path().join("zeros.json");
    std::fs::write(&zeros, r#"{"d": 4, "zeros": [[1.0, -1.99], [3.02, 3.0], [1.0, 3.0]]}"#).unwrap();
    let o = run(&["convert", "--input", zeros.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("completed zero"));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["g"].as_array().unwrap().len(), 4);
}

#[test]
fn verify_checks_pass() {
    for name in ["fig6", "fig7", "fig3"] {
        let cfg = config(name);
        let o = run(&["--config", cfg.to_str().unwrap(), "verify"]);
        assert!(o.status.success(), "{name}: {}{}", stdout(&o), stderr(&o));
        assert!(stdout(&o).contains("PASS") && !stdout(&o).contains("FAIL"));
    }
    let o = run(&["verify", "--check", "invariants", "--dim", "3"]);
    assert!(o.status.success(), "{}", stdout(&o));
}
