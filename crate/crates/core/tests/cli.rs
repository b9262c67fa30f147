use std::process::Command;

fn gffwalk(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_gffwalk")).args(args).output().unwrap()
}

#[test]
fn identity_suite_exits_zero_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = gffwalk(&["identity-suite", "--n", "2,3", "--replicas", "3", "--seed", "9", "--threads", "1", "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "pass");
    assert_eq!(report["config"]["seed"], 9);
    assert_eq!(report["config"]["n_list"], serde_json::json!([2, 3]));
}

#[test]
fn repeated_runs_give_identical_csv() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = gffwalk(&["duality-check", "--gamma", "0.2", "--replicas", "20", "--out", d.path().to_str().unwrap()]);
        assert!(o.status.success());
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("detail.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn zero_replicas_is_rejected() {
    let o = gffwalk(&["resistance", "--replicas", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("replicas"));
}

#[test]
fn tightness_experiments_require_gamma() {
    let o = gffwalk(&["quantiles", "--replicas", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gamma"));
}

#[test]
fn config_file_supplies_settings() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "gamma = 0.1\nn_list = [2]\nreplicas = 4\n\n[geometry]\nk = 3\n").unwrap();
    let out = dir.path().join("out");
    let o = gffwalk(&["duality-check", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("detail.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| l.contains(",R_lr,")).count(), 4);
    assert!(csv.lines().skip(1).all(|l| l.split(',').nth(3) == Some("0.1")));
}

#[test]
fn large_gamma_warns() {
    let dir = tempfile::tempdir().unwrap();
    let o = gffwalk(&["resistance", "--gamma", "0.8", "--n", "2", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
}
