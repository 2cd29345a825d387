use std::path::Path;
use std::process::Command;

use pilotwave::io::{run_pipeline, RunConfig, Stage, StageStatus};

fn config(dir: &Path, overrides: &[&str]) -> RunConfig {
    let mut all: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    all.push(format!("out_dir={}", dir.display()));
    RunConfig::parse_with_overrides("", &all).unwrap()
}

fn csv_files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    names
}

#[test]
fn fields_only_run_writes_one_csv() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = run_pipeline(&config(dir.path(), &["stages=fields"])).unwrap();
    assert!(manifest.all_ok());
    assert_eq!(csv_files(dir.path()), vec!["fields.csv"]);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(json["stage.fields.status"], "ok");
    assert!(json["stage.fields.file"].as_str().unwrap().ends_with("fields.csv"));
    assert!(json.get("stage.compare.status").is_none());
    assert_eq!(json["seed"], 1);
}

#[test]
fn every_csv_has_a_schema_header_and_finite_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = run_pipeline(&config(dir.path(), &["n_planes=10", "n_bins=80", "n_reconstruct=20"])).unwrap();
    assert!(manifest.all_ok());
    assert_eq!(csv_files(dir.path()).len(), Stage::ALL.len());
    for name in csv_files(dir.path()) {
        let text = std::fs::read_to_string(dir.path().join(&name)).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert!(
            header.starts_with(&format!("# {name} schema_version=1 units: ")),
            "{header}"
        );
        let width = lines.next().unwrap().split(',').count();
        for line in lines {
            assert_eq!(line.split(',').count(), width, "{name}: {line}");
            assert!(!line.contains("NaN") && !line.contains("inf"), "{name}: {line}");
        }
    }
}

#[test]
fn noiseless_compare_is_below_grid_spacing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), &["noiseless=true", "stages=compare"]);
    let manifest = run_pipeline(&cfg).unwrap();
    assert!(manifest.all_ok());
    let rms = manifest.summary["compare.mean_rms"].as_f64().unwrap();
    assert!(rms < cfg.grid.dx(), "mean rms {rms}");
    assert!(dir.path().join("compare.csv").exists());
}

#[test]
fn failing_stage_is_recorded_and_earlier_outputs_kept() {
    let dir = tempfile::tempdir().unwrap();
    // A one-photon beable started on the node at the origin cannot move.
    let cfg = config(
        dir.path(),
        &[
            "stages=fields,field-mode",
            "mode_alpha_re=0",
            "mode_beta_re=1",
            "mode_q0_re=0",
        ],
    );
    let manifest = run_pipeline(&cfg).unwrap();
    assert!(!manifest.all_ok());
    assert_eq!(manifest.record(Stage::Fields).unwrap().status, StageStatus::Ok);
    assert!(matches!(
        manifest.record(Stage::FieldMode).unwrap().status,
        StageStatus::Aborted(_)
    ));
    assert_eq!(csv_files(dir.path()), vec!["fields.csv"]);
    let json = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    assert!(json.contains("\"stage.field-mode.status\": \"aborted: "));
}

#[test]
fn seeds_change_stochastic_outputs_only() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let stages = "stages=fields,weak-scan";
    run_pipeline(&config(a.path(), &[stages, "n_planes=4", "seed=1"])).unwrap();
    run_pipeline(&config(b.path(), &[stages, "n_planes=4", "seed=2"])).unwrap();
    let read = |d: &Path, f: &str| std::fs::read(d.join(f)).unwrap();
    assert_eq!(read(a.path(), "fields.csv"), read(b.path(), "fields.csv"));
    assert_ne!(read(a.path(), "weak_scan.csv"), read(b.path(), "weak_scan.csv"));
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pilotwave"))
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let ok = cli()
        .args(["fields", "--seed", "3", "--set", "fields_nx=11", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(out.join("fields.csv").exists());

    let bad_cfg = dir.path().join("bad.cfg");
    std::fs::write(&bad_cfg, "sigma0 = 1\nsigma_zero = 2\n").unwrap();
    let bad = cli().arg("run").arg("--config").arg(&bad_cfg).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("line 2"));

    let conflict = cli()
        .args(["run", "--set", "eta=0.05", "--set", "D=0.5"])
        .output()
        .unwrap();
    assert_eq!(conflict.status.code(), Some(1));

    let failing = cli()
        .args([
            "field-mode",
            "--set",
            "mode_alpha_re=0",
            "--set",
            "mode_q0_re=0",
            "--set",
            "mode_beta_re=1",
            "--out",
        ])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(failing.status.code(), Some(2));
}
