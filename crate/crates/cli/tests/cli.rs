use std::process::Command;

fn torlab() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_torlab"));
    c.env_remove("TORLAB_THREADS");
    c
}

#[test]
fn selftest_passes_and_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("selftest.csv");
    let out = torlab().args(["selftest", "--out"]).arg(&csv).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("identity,computed,expected,tolerance,verdict"));
    assert!(dir.path().join("selftest.summary.json").exists());
}

#[test]
fn rate_run_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("rate.csv");
    let out = torlab()
        .args(["rate", "--tgrid", "16:64:dyadic", "--replicas", "8", "--tol", "10", "--out"])
        .arg(&csv)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("T,mean,stderr,n_replicas,estimator"));
    assert_eq!(lines.count(), 3);
    let summary = std::fs::read_to_string(dir.path().join("rate.summary.json")).unwrap();
    let summary = summary.trim();
    assert!(summary.starts_with('{') && summary.ends_with('}'));
    assert!(summary.contains("\"config\"") && summary.contains("\"report\""));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    std::fs::write(&cfg, "# small run\ntgrid = 16,32,64\nreplicas = 4\nseed = 3\n").unwrap();
    let run = |extra: &[&str]| {
        let csv = dir.path().join(format!("out{}.csv", extra.len()));
        let out = torlab()
            .args(["rate", "--tol", "10", "--config"])
            .arg(&cfg)
            .args(extra)
            .arg("--out")
            .arg(&csv)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read_to_string(csv).unwrap()
    };
    let base = run(&[]);
    assert!(base.lines().nth(1).unwrap().ends_with(",4,circular"));
    let over = run(&["--replicas", "6"]);
    assert!(over.lines().nth(1).unwrap().ends_with(",6,circular"));
}

#[test]
fn bad_arguments_exit_with_two() {
    let out = torlab().args(["rate", "--alpha", "1.5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = torlab().args(["rate", "--tgrid", "64"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = torlab().args(["nonsense"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
