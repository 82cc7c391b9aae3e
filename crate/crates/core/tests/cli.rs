use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dal"))
}

fn repo_config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

#[test]
fn synth_writes_results() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let status = bin()
        .args(["synth", "--config"])
        .arg(repo_config("ps_lb.toml"))
        .args(["--trials", "2", "--thin", "100", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let rows = dal::harness::read_csv(&out).unwrap();
    assert_eq!(rows.len(), 100);
    assert_eq!(rows.last().unwrap().t, 10_000);
}

#[test]
fn every_shipped_config_runs() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_none_or(|e| e != "toml") {
            continue;
        }
        let mut cfg = dal::harness::ExperimentConfig::load(&path).unwrap();
        cfg.trials = 1;
        cfg.horizon = cfg.horizon.map(|t| t.min(300));
        let res = dal::harness::run_experiment(&cfg).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(!res.mean_regret.is_empty());
    }
}

#[test]
fn missing_config_exits_one() {
    let out = bin().args(["synth", "--config", "/definitely/missing.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/definitely/missing.toml"));
}

#[test]
fn unknown_subcommand_exits_one_with_usage() {
    let out = bin().arg("bogus").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn bad_config_value_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "horizon = 100\nenv.variant = \"linear\"\nenv.noise = \"bernoulli\"\n").unwrap();
    let out = bin().args(["synth", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn runtime_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let replay = dir.path().join("m.csv");
    std::fs::write(&replay, "2,3\n1,1\n0,0,0\n").unwrap();
    let out = bin().args(["replay", "--file"]).arg(&replay).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn replay_matrix_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let replay = dir.path().join("m.csv");
    let row = |v: &str| vec![v; 50].join(",");
    std::fs::write(&replay, format!("2,50\n{}\n{}\n", row("1"), row("0"))).unwrap();
    let out = bin().args(["replay", "--file"]).arg(&replay).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 51);
}

#[test]
fn detect_demo_prints_split() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("s.csv");
    let body: String = (0..100).map(|i| format!("{}\n", u8::from(i >= 50))).collect();
    std::fs::write(&input, body).unwrap();
    let out = bin().args(["detect-demo", "--input"]).arg(&input).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("change after sample"), "{text}");
}

#[test]
fn cover_lists_a_basis() {
    let out = bin().args(["cover", "--config"]).arg(repo_config("ps_lb.toml")).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("N_e 5 of 20 actions"), "{text}");
}
