use std::path::Path;
use std::process::{Command, Output};

use eb_core::io::Manifest;
use eb_core::scenarios::builtin;

fn ebsim(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ebsim"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("RAYON_NUM_THREADS", "1")
        .output()
        .expect("ebsim did not start")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("terminated by signal")
}

fn manifest_ok(dir: &Path) {
    let m = Manifest::load(&dir.join("manifest.json")).unwrap();
    assert!(!m.entries.is_empty());
    assert!(m.verify(dir).unwrap().is_empty());
}

#[test]
fn simulate_uniform_rest_reaches_horizon() {
    let dir = tempfile::tempdir().unwrap();
    let o = ebsim(&["simulate", "--scenario", "uniform-rest"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["timeseries.csv", "summary.json", "certificate.json", "snapshot_initial.ebsnap", "snapshot_final.ebsnap", "scenario.toml"] {
        assert!(dir.path().join(f).exists(), "missing {f}");
    }
    assert!(String::from_utf8_lossy(&o.stdout).contains("status: healthy"));
    manifest_ok(dir.path());
}

#[test]
fn simulate_burgers_exits_blown_up() {
    let dir = tempfile::tempdir().unwrap();
    let o = ebsim(&["simulate", "--scenario", "theorem36-burgers-1d"], dir.path());
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("status: blown-up"));
    manifest_ok(dir.path());
}

#[test]
fn certify_validate_and_picard_succeed() {
    for (mode, scenario, file) in [
        ("certify", "theorem36-burgers-1d", "certificate.json"),
        ("validate", "lemma31-annulus", "validation.json"),
        ("picard", "picard-contraction", "picard.json"),
    ] {
        let dir = tempfile::tempdir().unwrap();
        let o = ebsim(&[mode, "--scenario", scenario], dir.path());
        assert_eq!(code(&o), 0, "{mode}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(dir.path().join(file).exists(), "{mode} wrote no {file}");
        manifest_ok(dir.path());
    }
}

#[test]
fn certify_reports_burgers_time() {
    let dir = tempfile::tempdir().unwrap();
    let o = ebsim(&["certify", "--scenario", "theorem36-burgers-1d"], dir.path());
    assert_eq!(code(&o), 0);
    let cert: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("certificate.json")).unwrap()).unwrap();
    let t = cert["t_burgers"].as_f64().unwrap();
    assert!((t - 1.0).abs() <= 1e-12, "t_burgers = {t}");
}

#[test]
fn unknown_scenario_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = ebsim(&["simulate", "--scenario", "no-such-thing"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn broken_config_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = builtin("uniform-rest").unwrap();
    s.run.cfl = 1.5;
    let cfg = dir.path().join("broken.toml");
    std::fs::write(&cfg, s.to_toml_string().unwrap()).unwrap();
    let out = dir.path().join("out");
    let o = ebsim(&["validate", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(code(&o), 1);
}

#[test]
fn bad_override_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = ebsim(&["simulate", "--scenario", "uniform-rest", "--cfl", "0"], dir.path());
    assert_eq!(code(&o), 1);
}

#[test]
fn plot_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let o = ebsim(&["simulate", "--scenario", "corollary38-damped"], dir.path());
    assert_eq!(code(&o), 2);
    let svgs = |d: &Path| {
        let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(d)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|x| x == "svg"))
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
            .collect();
        v.sort();
        v
    };
    let before = svgs(dir.path());
    assert!(!before.is_empty());
    let p = Command::new(env!("CARGO_BIN_EXE_ebsim")).arg("plot").arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(code(&p), 0);
    assert_eq!(svgs(dir.path()), before);
    manifest_ok(dir.path());
}
