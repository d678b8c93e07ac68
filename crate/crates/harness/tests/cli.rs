use std::fs;
use std::process::Command;

fn robot() -> Command {
    Command::new(env!("CARGO_BIN_EXE_robot"))
}

#[test]
fn run_then_summarize() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    let out = dir.path().join("out");
    fs::write(
        &cfg,
        "problem = \"quadratic\"\nmethod = \"robot\"\nm = 2\ntau = 0.2\ndiversity = \"euclidean\"\nn_init = 8\nbudget = 40\ncandidates = 50\n",
    )
    .unwrap();
    let status = robot()
        .args(["run", cfg.to_str().unwrap(), "--seed", "3", "--out-dir", out.to_str().unwrap()])
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    assert!(out.join("trace_rep0.csv").exists());
    assert!(out.join("solutions.csv").exists());

    let summary = robot()
        .args(["summarize", out.join("trace_rep0.csv").to_str().unwrap(), "--m", "2", "--tau", "0.2"])
        .output()
        .unwrap();
    assert!(summary.status.success());
    let text = String::from_utf8(summary.stdout).unwrap();
    assert!(text.starts_with("evals,runs,mean,stderr,fill_min,fill_mean"));
    assert!(text.lines().nth(1).unwrap().starts_with("40,1,"));
}

#[test]
fn bad_config_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "problem = \"nowhere\"\n").unwrap();
    let out = robot().args(["run", cfg.to_str().unwrap()]).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("error:") && err.contains("bad.toml"), "{err}");
}

#[test]
fn generated_prices_load() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("prices.csv");
    let out = robot()
        .args(["gen-prices", "--days", "30", "--assets", "4", "--out", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let prob = robot_core::problems::load_prices(&path).unwrap();
    assert_eq!(prob.n_assets(), 4);
    assert_eq!(prob.n_days(), 30);
}
