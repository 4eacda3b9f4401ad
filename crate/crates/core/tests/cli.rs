use std::process::Command;

fn bdris() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bdris"))
}

#[test]
fn sweep_snr_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("snr.csv");
    let status = bdris()
        .args([
            "sweep-snr",
            "--n",
            "8",
            "--nbar",
            "2,4",
            "--kinds",
            "ideal,type3",
            "--snr",
            "0:10:20",
        ])
        .args(["--trials", "3", "--workers", "2", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let records = bdris::harness::read_csv(&out).unwrap();
    assert_eq!(records.len(), 2 * 2 * 3);
    assert!(records.iter().all(|r| r.fraction == 0.2 && r.trials == 3));
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"n": 8, "nbar": 2, "trials": 2, "snr_db": 5.0, "master_seed": 7}"#,
    )
    .unwrap();
    let out = dir.path().join("frac.csv");
    let status = bdris()
        .args([
            "sweep-fraction",
            "--kinds",
            "type1",
            "--fractions",
            "0:0.5:1",
            "--seed",
            "8",
            "--config",
        ])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let records = bdris::harness::read_csv(&out).unwrap();
    assert_eq!(records.len(), 3);
    for r in &records {
        assert_eq!((r.n, r.nbar, r.trials, r.master_seed), (8, 2, 2, 8));
        assert_eq!(r.snr_db, 5.0);
    }
}

#[test]
fn unknown_config_keys_fail() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"antennas": 3}"#).unwrap();
    let out = bdris()
        .args(["sweep-snr", "--out", "/dev/null", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("antennas"));
}

#[test]
fn trial_dump_reports_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let audit = dir.path().join("audit.csv");
    let out = bdris()
        .args([
            "trial",
            "--dump",
            "--nbar",
            "4",
            "--kind",
            "type2",
            "--snr-db",
            "inf",
            "--decouple",
            "--audit-csv",
        ])
        .arg(&audit)
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["shapes"]["Omega"], serde_json::json!([256, 256]));
    assert_eq!(v["sigma2"], 0.0);
    assert_eq!(v["max_affected"], 32);
    assert_eq!(v["affected_count"], 6);
    assert_eq!(v["affected"].as_array().unwrap().len(), 6);
    assert!(v["nmse"].as_f64().unwrap() > 0.0);
    assert_eq!(v["decoupled_nmse"].as_array().unwrap().len(), 8);
    let audit = std::fs::read_to_string(&audit).unwrap();
    assert_eq!(audit.lines().next().unwrap(), "trial,kind,q,i,j,alpha,phi");
    assert_eq!(audit.lines().count(), 7);
}

#[test]
fn dump_training_writes_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let out = bdris()
        .args([
            "dump-training",
            "--nbar",
            "2",
            "--n",
            "4",
            "--realizability",
            "--out-dir",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let omega = bdris::training::read_matrix_dump(&dir.path().join("Omega.csv")).unwrap();
    assert_eq!(omega.shape(), (16, 16));
    for name in ["X.csv", "S_prime.csv"] {
        assert!(dir.path().join(name).exists());
    }
    assert!(String::from_utf8_lossy(&out.stdout).contains("unitarity"));
}

#[test]
fn preset_help_documents_values() {
    let out = bdris().args(["preset", "--help"]).output().unwrap();
    let help = String::from_utf8_lossy(&out.stdout);
    assert!(help.contains("fig7") && help.contains("0:0.05:0.5") && help.contains("K=100"));
}

#[test]
fn rejects_bad_arguments() {
    let out = bdris()
        .args(["sweep-snr", "--nbar", "3", "--out", "/dev/null"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("divide"));
    assert!(!bdris()
        .args(["preset", "--name", "fig9", "--out", "x"])
        .status()
        .unwrap()
        .success());
}
