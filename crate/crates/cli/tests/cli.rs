use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pfcert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pfcert")).args(args).output().unwrap()
}

fn run_in(out: &Path, args: &[&str]) -> Output {
    let mut all = args.to_vec();
    let dir = out.to_str().unwrap();
    all.extend(["--out", dir]);
    pfcert(&all)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn verify_only_ccr_reports_that_family() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["verify", "--only", "ccr", "--threads", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = json(&dir.path().join("report.json"));
    let checks = rep["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    assert!(checks.iter().all(|c| c["family"] == "ccr"));
    assert_eq!(rep["config"]["only"], serde_json::json!(["ccr"]));
    let table = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(table.starts_with("status"));
    assert_eq!(String::from_utf8_lossy(&out.stdout), table);
}

#[test]
fn low_cutoff_with_commutator_suite_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"fock": {"n_max": 1}}"#).unwrap();
    let out = run_in(dir.path(), &["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fock.n_max"));
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn unknown_config_fields_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"fock": {"nmax": 3}}"#).unwrap();
    let out = run_in(dir.path(), &["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"seed": 3, "dense_oracle": true, "only": ["leibniz"]}"#).unwrap();
    let out = run_in(
        dir.path(),
        &["verify", "--config", cfg.to_str().unwrap(), "--seed", "9", "--dense-oracle", "off", "--only", "kato"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = json(&dir.path().join("report.json"));
    assert_eq!(rep["config"]["seed"], 9);
    assert_eq!(rep["config"]["dense_oracle"], false);
    let names: Vec<&str> = rep["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["kato_monotone"]);
}

#[test]
fn spectrum_k_beyond_dimension_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["spectrum", "--k", "100000"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn free_spectrum_starts_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"physics": {"charges": [0.0], "potential": null}}"#).unwrap();
    let out = run_in(dir.path(), &["spectrum", "--config", cfg.to_str().unwrap(), "--k", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&dir.path().join("spectrum.json"));
    let ev = doc["spectrum"]["eigenvalues"].as_array().unwrap();
    assert_eq!(ev.len(), 2);
    assert!(ev[0]["value"].as_f64().unwrap().abs() < 1e-10);
}

#[test]
fn free_sweep_row_is_exact_and_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = run_in(a.path(), &["sweep", "--e", "0"]);
    let second = run_in(b.path(), &["sweep", "--e", "0"]);
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    let csv = fs::read(a.path().join("sweep.csv")).unwrap();
    assert_eq!(csv, fs::read(b.path().join("sweep.csv")).unwrap());
    let text = String::from_utf8(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("e,C1,C2,D1,D2,ground_energy,b_step2"));
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(row[0], 0.0);
    assert!((row[1] - 1.0).abs() < 1e-10 && row[2] == 0.0);
    assert!((row[3] - 1.0).abs() < 1e-10 && row[4] == 0.0);
    assert!(lines.next().is_none());
    assert_eq!(second.status.code(), Some(0));
}

#[test]
fn sweep_without_zero_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["sweep", "--e", "0.5,1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn export_writes_triplets_and_potential() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["export"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["fock_field_energy.txt", "fock_number.txt", "fock_creation.txt", "fock_field.txt", "ta.txt", "pauli_fierz.txt"] {
        let text = fs::read_to_string(dir.path().join(name)).unwrap();
        let first = text.lines().next().unwrap();
        let cols: Vec<&str> = first.split(' ').collect();
        assert_eq!(cols.len(), 4, "{name}: {first}");
        cols[0].parse::<usize>().unwrap();
        cols[2].parse::<f64>().unwrap();
    }
    let bytes = fs::read(dir.path().join("potential.bin")).unwrap();
    assert_eq!(bytes.len(), 16 * 16);
    let v0 = f64::from_le_bytes(bytes[0..8].try_into().unwrap());
    let im0 = f64::from_le_bytes(bytes[8..16].try_into().unwrap());
    assert!(v0.is_finite() && v0 < 0.0);
    assert_eq!(im0, 0.0);
}

#[test]
fn default_verify_passes_with_every_family() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let rep = json(&dir.path().join("report.json"));
    let families = rep["summary"]["families"].as_object().unwrap();
    for f in pfcert::config::FAMILIES {
        assert!(families.contains_key(f), "missing family {f}");
    }
    assert_eq!(rep["summary"]["failed"], 0);
    assert!(rep["scope_notes"].as_array().unwrap().len() >= 3);
}
