use std::process::Command;

use comb_energy::comb::Comb;
use comb_energy::tensor::{choi_of_unitary, hadamard, SpaceLabel};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_comb-energy"))
}

fn run(args: &[&str]) -> (i32, String) {
    let out = bin().args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(2).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn hadamard_file(dir: &std::path::Path) -> std::path::PathBuf {
    let (a, b) = (SpaceLabel::qubit("in"), SpaceLabel::qubit("out"));
    let c = Comb::channel(choi_of_unitary(&hadamard(), &a, &b).unwrap(), "in", "out").unwrap();
    let path = dir.join("hadamard.json");
    std::fs::write(&path, serde_json::to_string(&c.to_json()).unwrap()).unwrap();
    path
}

#[test]
fn energy_of_hadamard_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = hadamard_file(dir.path());
    let (code, out) = run(&["energy", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!((v["e_global"].as_f64().unwrap() - 0.5f64.sqrt()).abs() < 1e-9);
    assert!((v["energy"].as_f64().unwrap() - 0.5f64.sqrt()).abs() < 1e-9);
    let (code, out) = run(&["energy", path.to_str().unwrap(), "--model", "local"]);
    assert_eq!(code, 0);
    assert!(out.contains("\"model\": \"local\""));
}

#[test]
fn battery_constants() {
    let (code, out) = run(&["ico-batteries"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("# comb-energy "));
    let rows = data_rows(&out);
    let get = |k: &str| rows.iter().find(|r| r[0] == k).unwrap()[1].parse::<f64>().unwrap();
    let h = 0.5f64.sqrt();
    assert!((get("c1_local") - 2.0 * h).abs() < 1e-8);
    assert!((get("c1_global") - h).abs() < 1e-8);
    assert!((get("c2_individual") - h).abs() < 1e-8);
    assert!((get("c2_shared") - h / 2.0).abs() < 1e-8);
}

#[test]
fn phase_sweep_matches_closed_form_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (p1, p2) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&p1, &p2] {
        let (code, _) = run(&["phase-sweep", "--d", "2", "--E-grid", "0:1:0.25", "--out", p.to_str().unwrap()]);
        assert_eq!(code, 0);
    }
    let (a, b) = (std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().nth(1).unwrap(), "E,cost,cost_closed_form,gap");
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 5);
    for r in rows {
        let (cost, cf): (f64, f64) = (r[1].parse().unwrap(), r[2].parse().unwrap());
        assert!((cost - cf).abs() < 1e-5, "{r:?}");
    }
}

#[test]
fn dump_sdp_writes_triplets() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("sdp.txt");
    let (code, out) = run(&["phase-opt", "--E", "0.4", "--restarts", "1", "--dump-sdp", dump.to_str().unwrap()]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["cost"].as_f64().unwrap() < 2.0);
    assert!(std::fs::read_to_string(&dump).unwrap().starts_with("# sense"));
}

#[test]
fn dilate_hadamard() {
    let dir = tempfile::tempdir().unwrap();
    let path = hadamard_file(dir.path());
    let (code, out) = run(&["dilate", path.to_str().unwrap(), "--trials", "5"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["report"]["choi_error"].as_f64().unwrap() < 1e-8);
    assert_eq!(v["plan"]["m"].as_u64().unwrap(), 1);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["phase-sweep", "--E-grid", "1:0:0.1"]).0, 2);
    assert_eq!(run(&["no-such-command"]).0, 2);
    assert_eq!(run(&["energy", "/nonexistent/comb.json"]).0, 1);
    assert_eq!(run(&["--help"]).0, 0);
}
