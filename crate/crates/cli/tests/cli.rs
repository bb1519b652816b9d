use std::path::Path;
use std::process::{Command, Output};

fn dualmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dualmap")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn tiny_config(dir: &Path) -> String {
    let path = dir.join("tiny.toml");
    let text = "num_deployments = 2\nhorizon = 4\ntau_c = [1, 3]\n\
                [env]\nnum_maps = 2\nnum_ues = 6\nepisode_len = 6\n\
                [train]\nruns = 2\n[train.policy]\nembed_dim = 4\n[train.ppo]\nminibatch_size = 8\n";
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn config_flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let out = dualmap(&["config", "--config", &cfg, "--seed", "42", "--scenario", "static_ue", "--runs", "9"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("seed = 42"));
    assert!(text.contains("scenario = \"STATIC_UE\""));
    assert!(text.contains("runs = 9"));
    assert!(text.contains("num_maps = 2"));
}

#[test]
fn bench_with_missing_checkpoint_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let out_dir = dir.path().join("out");
    let out = dualmap(&["bench", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--policy", "DUAL_ATTENTION,RANDOM"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("DUAL_ATTENTION"));
    // The remaining policies still ran.
    assert!(out_dir.join("bench_bars.csv").exists());
}

#[test]
fn train_then_bench_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let out_dir = dir.path().join("out");
    let out_dir = out_dir.to_str().unwrap();
    assert!(dualmap(&["train", "--config", &cfg, "--out", out_dir]).status.success());
    let out = dualmap(&["bench", "--config", &cfg, "--out", out_dir, "--policy", "DUAL_ATTENTION,CENTRALIZED", "--tau-c", "1,5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("CENTRALIZED tau_c=5"));
}

#[test]
fn horizon_zero_is_fine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let out_dir = dir.path().join("out");
    let out = dualmap(&["eval", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--policy", "random", "--horizon", "0"]);
    assert!(out.status.success());
}

#[test]
fn bad_input_is_reported() {
    let out = dualmap(&["eval", "--policy", "greedy"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown policy"));
    let out = dualmap(&["train", "--config", "/nonexistent/x.toml"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/x.toml"));
}
