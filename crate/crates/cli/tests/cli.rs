use std::process::Command;

fn dlx() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dlx"))
}

fn stdout(args: &[&str]) -> (i32, String) {
    let out = dlx().args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8(out.stdout).unwrap())
}

#[test]
fn nu_table_ends_at_one() {
    let (code, text) = stdout(&["nu", "--grid", "5"]);
    assert_eq!(code, 0);
    let last = text.lines().filter(|l| !l.starts_with('#')).last().unwrap();
    let cols: Vec<f64> = last.split('\t').map(|c| c.parse().unwrap()).collect();
    assert_eq!(cols[0], 1.0);
    assert!((cols[2] - 1.0).abs() < 1e-12);
}

#[test]
fn cf_of_355_over_113() {
    let (code, text) = stdout(&["cf", "--theta", "355/113"]);
    assert_eq!(code, 0);
    assert!(text.contains("quotients = 3,7,16\n"), "{text}");
}

#[test]
fn missing_config_exits_2() {
    let (code, _) = stdout(&["dl", "--config", "missing.json"]);
    assert_eq!(code, 2);
}

#[test]
fn malformed_config_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"mode\": \"dl\",\n  \"n_horizon\": \"ten\"\n}").unwrap();
    let out = dlx().args(["dl", "--config", path.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn dl_run_writes_manifest_last_and_digests_match() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let out = dlx()
        .args(["dl", "--n-horizon", "50", "--trials", "4", "--seed", "7", "--out", run.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = dlx_core::io::read_run(&run).unwrap();
    assert_eq!(manifest.seed, 7);
    let records = dlx_core::io::read_records(&run.join("records.csv")).unwrap();
    assert_eq!(records.len(), 4 * 2);
    let header = std::fs::read_to_string(run.join("records.csv")).unwrap();
    assert!(header.starts_with("trial,checkpoint_T,sum_F,count_N,err_gamma,err_gamma0,clt_stat,seed,wall_ms\n"));
}

#[test]
fn runtime_failure_exits_1() {
    // too few trials for the variance estimate
    let (code, _) = stdout(&["clt", "--trials", "3", "--t-horizon", "50"]);
    assert_eq!(code, 1);
}
