use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pamlab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pamlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("PAMLAB_OUT")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, json: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, json).unwrap();
    path.to_string_lossy().into_owned()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(k).unwrap().to_string()).collect()
}

#[test]
fn chi_reproduces_the_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"rho": 1.0, "d": 1, "half_width": 8.0, "h": 0.05}"#);
    let out = tmp.path().join("out");
    let run = pamlab(&["chi", "--config", &cfg], &out);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let csv = fs::read_to_string(out.join("chi/chi.csv")).unwrap();
    let value: f64 = column(&csv, "value")[0].parse().unwrap();
    assert!((value / 1.57236 - 1.0).abs() < 0.02, "{value}");
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"t_grid": [30.0, 100.0], "replicas": 500, "samples": 20, "lattice_radius": 3}"#);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(pamlab(&["moments", "--config", &cfg, "--threads", "1"], &a).status.success());
    assert!(pamlab(&["moments", "--config", &cfg, "--threads", "3"], &b).status.success());
    for file in ["moments.csv", "intermittency.csv", "config.json", "plots.json"] {
        assert_eq!(fs::read(a.join("moments").join(file)).unwrap(), fs::read(b.join("moments").join(file)).unwrap(), "{file}");
    }
}

#[test]
fn emitted_config_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let cfg = write_config(tmp.path(), r#"{"t_grid": [1.0, 2.0], "fields": 2, "replicas": 2000, "lattice_radius": 2}"#);
    assert!(pamlab(&["fk", "--config", &cfg, "--seed", "17"], &a).status.success());
    let emitted = a.join("fk/config.json").to_string_lossy().into_owned();
    assert!(pamlab(&["fk", "--config", &emitted], &b).status.success());
    assert_eq!(fs::read(a.join("fk/fk.csv")).unwrap(), fs::read(b.join("fk/fk.csv")).unwrap());
    let manifest = |dir: &Path| -> Value { serde_json::from_slice(&fs::read(dir.join("fk/manifest.json")).unwrap()).unwrap() };
    let (ma, mb) = (manifest(&a), manifest(&b));
    assert_eq!(ma["config_sha256"], mb["config_sha256"]);
    assert_eq!(ma["seeds"]["base"], 17);
}

#[test]
fn seed_changes_stochastic_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"t_grid": [1.0], "fields": 1, "replicas": 2000, "lattice_radius": 2}"#);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(pamlab(&["fk", "--config", &cfg, "--seed", "1"], &a).status.success());
    assert!(pamlab(&["fk", "--config", &cfg, "--seed", "2"], &b).status.success());
    assert_ne!(fs::read(a.join("fk/fk.csv")).unwrap(), fs::read(b.join("fk/fk.csv")).unwrap());
}

#[test]
fn constant_test_function_has_zero_limit() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"t_grid": [1e3, 1e4, 1e5], "pieces": 1, "piece_values": [1.0]}"#);
    let out = tmp.path().join("out");
    assert!(pamlab(&["ldp", "--config", &cfg], &out).status.success());
    let csv = fs::read_to_string(out.join("ldp/ldp.csv")).unwrap();
    let limits = column(&csv, "limit");
    assert_eq!(limits.len(), 3);
    assert!(limits.iter().all(|v| v.parse::<f64>().unwrap() == 0.0), "{limits:?}");
}

#[test]
fn every_artifact_is_listed_in_the_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), r#"{"t_grid": [2.0], "fields": 1, "lattice_radius": 2}"#);
    assert!(pamlab(&["evolve", "--config", &cfg], &out).status.success());
    let dir = out.join("evolve");
    let manifest: Value = serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap();
    let listed: Vec<&str> = manifest["artifacts"].as_array().unwrap().iter().map(|a| a["file"].as_str().unwrap()).collect();
    for entry in fs::read_dir(&dir).unwrap() {
        let name = entry.unwrap().file_name().to_string_lossy().into_owned();
        assert!(name == "manifest.json" || listed.contains(&name.as_str()), "{name} missing");
    }
    let plots: Value = serde_json::from_slice(&fs::read(dir.join("plots.json")).unwrap()).unwrap();
    assert_eq!(plots["plots"][0]["file"], "evolve.csv");
}

#[test]
fn check_flag_runs_the_oracles() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let run = pamlab(&["scale", "--check"], &out);
    assert!(run.status.success());
    assert!(String::from_utf8_lossy(&run.stderr).contains("PASS"));
    let manifest: Value = serde_json::from_slice(&fs::read(out.join("scale/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["checks"][0]["pass"], true);
}

#[test]
fn failures_exit_nonzero_and_leave_no_partial_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    assert!(!pamlab(&["chi", "--no-such-flag"], &out).status.success());
    let unknown = write_config(tmp.path(), r#"{"sed": 3}"#);
    let run = pamlab(&["chi", "--config", &unknown], &out);
    assert!(!run.status.success());
    assert!(String::from_utf8_lossy(&run.stderr).contains("unknown field"));
    // Fails after the staging directory exists: four values for one piece.
    let bad = write_config(tmp.path(), r#"{"t_grid": [1e3], "pieces": 1, "piece_values": [1.0, 2.0, 3.0, 4.0]}"#);
    assert!(!pamlab(&["ldp", "--config", &bad], &out).status.success());
    let left: Vec<_> = fs::read_dir(&out).map(|d| d.map(|e| e.unwrap().file_name()).collect()).unwrap_or_default();
    assert!(left.is_empty(), "{left:?}");
}

#[test]
fn output_directory_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let run = Command::new(env!("CARGO_BIN_EXE_pamlab"))
        .args(["scale"])
        .env("PAMLAB_OUT", tmp.path())
        .output()
        .unwrap();
    assert!(run.status.success());
    assert!(tmp.path().join("scale/scale.csv").exists());
}
