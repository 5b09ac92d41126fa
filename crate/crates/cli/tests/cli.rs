use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sharpfield-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn sharpfield(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sharpfield")).args(args).current_dir(cwd).output().unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn hashes(dir: &Path) -> Vec<(String, String)> {
    manifest(dir)["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| (f["path"].as_str().unwrap().to_string(), f["sha256"].as_str().unwrap().to_string()))
        .collect()
}

#[test]
fn spectrum_first_row_is_ground_level() {
    let dir = scratch("spectrum");
    let out = sharpfield(&["spectrum", "--n-max", "4", "--out", "run"], &dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let levels = fs::read_to_string(dir.join("run/levels.csv")).unwrap();
    let mut lines = levels.lines();
    assert_eq!(lines.next(), Some("n,energy"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[1].parse::<f64>().unwrap(), -0.5);
    assert_eq!(levels.lines().count(), 5);
    let transitions = fs::read_to_string(dir.join("run/transitions.csv")).unwrap();
    assert_eq!(transitions.lines().count(), 1 + 6);
    assert!(transitions.contains("2,1,3.7500000000000000e-1"));
    let m = manifest(&dir.join("run"));
    assert_eq!(m["config"]["n_max"], 4);
    assert_eq!(m["subcommand"], "spectrum");
}

#[test]
fn identical_runs_hash_identically() {
    let dir = scratch("determinism");
    let cfg = r#"{"trajectory": {"starts": [[1.0, 0.2, 0.3]], "t1": 3.0,
        "state": [{"label": {"n": 1, "l": 0, "m": 0}}, {"label": {"n": 2, "l": 1, "m": 1}, "coefficient": [0.0, 1.0]}],
        "pushforward": {"t": 1.0, "samples": 500}}}"#;
    fs::write(dir.join("cfg.json"), cfg).unwrap();
    for run in ["a", "b"] {
        let out = sharpfield(&["trajectory", "--config", "cfg.json", "--seed", "9", "--out", run], &dir);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(hashes(&dir.join("a")), hashes(&dir.join("b")));
    let traj = fs::read_to_string(dir.join("a/trajectory_0.csv")).unwrap();
    assert_eq!(traj.lines().next(), Some("tau,qx,qy,qz,speed,rho"));
}

#[test]
fn malformed_config_writes_nothing() {
    let dir = scratch("malformed");
    fs::write(dir.join("broken.json"), "{\"spectrum\": {\"n_max\": ").unwrap();
    fs::write(dir.join("unknown.json"), r#"{"spectrum": {"n_max": 3, "colour": "red"}}"#).unwrap();
    fs::write(dir.join("toplevel.json"), r#"{"spectra": {}}"#).unwrap();
    for cfg in ["broken.json", "unknown.json", "toplevel.json", "missing.json"] {
        let out = sharpfield(&["spectrum", "--config", cfg, "--out", "run"], &dir);
        assert_eq!(out.status.code(), Some(2), "{cfg}");
        let err: Value = serde_json::from_slice(&out.stderr).unwrap();
        assert_eq!(err["error"], "validation");
        assert!(!dir.join("run").exists(), "{cfg}");
    }
}

#[test]
fn invalid_physics_is_a_validation_error() {
    let dir = scratch("physics");
    fs::write(dir.join("cfg.json"), r#"{"perturb": {"initial": {"n": 2, "l": 1, "m": 1},
        "pulse": {"preset": "custom", "amplitude": 1.0, "sigma_z": 100.0, "z0": -50.0, "omega": 0.375}}}"#)
    .unwrap();
    let out = sharpfield(&["perturb", "--config", "cfg.json", "--out", "run"], &dir);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.join("run").exists());
}

#[test]
fn non_convergence_exits_three() {
    let dir = scratch("scf");
    fs::write(dir.join("cfg.json"), r#"{"hartree": {"max_iterations": 2}}"#).unwrap();
    let out = sharpfield(&["hartree", "--config", "cfg.json", "--out", "run"], &dir);
    assert_eq!(out.status.code(), Some(3));
    assert!(!dir.join("run").exists());
}

#[test]
fn hartree_reports_ratios() {
    let dir = scratch("hartree");
    let out = sharpfield(&["hartree", "--Z", "1", "--out", "run"], &dir);
    assert!(out.status.success());
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.join("run/hartree.json")).unwrap()).unwrap();
    let f_ratio = report["relations"]["f_over_e1"].as_f64().unwrap();
    assert!((f_ratio - 0.488).abs() < 2e-3, "{f_ratio}");
    assert!(report["relations"]["eg_over_e1"].is_number());
    assert_eq!(manifest(&dir.join("run"))["config"]["z"], 1.0);
}

#[test]
fn si_units_convert_energies() {
    let dir = scratch("si");
    assert!(sharpfield(&["spectrum", "--units", "si", "--n-max", "1", "--out", "run"], &dir).status.success());
    let levels = fs::read_to_string(dir.join("run/levels.csv")).unwrap();
    let e1: f64 = levels.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((e1 / -2.1798723611e-18 - 1.0).abs() < 1e-6, "{e1}");
    assert_eq!(manifest(&dir.join("run"))["units"], "si");
}

#[test]
fn remaining_subcommands_emit_outputs() {
    let dir = scratch("all");
    let cfg = r#"{
      "fields": {"probes": [[0, 0, 2]]},
      "radiate": {"source": {"kind": "uniform", "start": [0, 0, 0], "velocity": [0.3, 0, 0]}, "times": [1.0],
                  "probes": [[5, 0, 0]], "wave_vectors": [[0.1, 0.2, 0]], "kernel": {"ct": 1.0, "r": [0.5, 1.0, 2.0]}},
      "perturb": {"initial": {"n": 2, "l": 1, "m": 0}, "basis": [{"n": 1, "l": 0, "m": 0}, {"n": 2, "l": 1, "m": 1}], "steps": 10,
                  "pulse": {"preset": "custom", "amplitude": 1.0, "sigma_z": 365.43, "z0": -4385.2, "omega": 0.375}},
      "photon": {"field": {"kind": "plane_wave", "wave": {"amplitude": 0.7, "direction": [0, 0, 1], "polarization": [1, 0, 0],
                 "omega": 0.375, "circular": true}}, "starts": [[0, 0, 0]], "t_span": [0, 1]},
      "audit": {}
    }"#;
    fs::write(dir.join("cfg.json"), cfg).unwrap();
    let expected: [(&str, &[&str]); 5] = [
        ("fields", &["fields.json", "fields.csv"]),
        ("radiate", &["potential.csv", "fourier.csv", "kernel.csv"]),
        ("perturb", &["amplitudes.json", "population_100p.csv", "population_211p.csv"]),
        ("photon", &["photon_0.csv"]),
        ("audit", &["audit.json"]),
    ];
    for (cmd, files) in expected {
        let out = sharpfield(&[cmd, "--config", "cfg.json", "--out", cmd], &dir);
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        let listed: Vec<String> = hashes(&dir.join(cmd)).into_iter().map(|(p, _)| p).collect();
        for f in files {
            assert!(dir.join(cmd).join(f).exists() && listed.iter().any(|p| p == f), "{cmd}: {f}");
        }
    }
    // 210 → 100 vanishes for a pulse polarized along x: the integrand is odd in x
    let forbidden = fs::read_to_string(dir.join("perturb/population_100p.csv")).unwrap();
    assert!(forbidden.lines().skip(1).all(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap() < 1e-20));
    let photon = fs::read_to_string(dir.join("photon/photon_0.csv")).unwrap();
    let speed: f64 = photon.lines().last().unwrap().split(',').nth(4).unwrap().parse().unwrap();
    assert!((speed / 137.036 - 1.0).abs() < 1e-8);
    let kernel = fs::read_to_string(dir.join("radiate/kernel.csv")).unwrap();
    assert!(kernel.contains("-7.8539816339744828e-1"));
}

#[test]
fn selftest_subset_prints_table() {
    let dir = scratch("selftest");
    fs::write(dir.join("cfg.json"), r#"{"selftest": {"only": [1, 6, 10]}}"#).unwrap();
    let out = sharpfield(&["selftest", "--config", "cfg.json", "--out", "run"], &dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = String::from_utf8(out.stdout).unwrap();
    assert_eq!(table.lines().filter(|l| l.ends_with("PASS")).count(), 3, "{table}");
    assert!(dir.join("run/selftest.json").exists());
}
