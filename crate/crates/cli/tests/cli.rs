use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_tccva");

fn config(dir: &Path, cir: &str, jumps: &str, scenarios: usize) -> std::path::PathBuf {
    let text = format!(
        r#"
models = ["cir", "jcir", "tccir"]
estimators = ["plain_mc", "adaptive_cv", "independent_closed_form"]
rhos = [-0.5, 0.0, 0.9]

[cir]
{cir}

[intensity_jumps]
{jumps}

[clock]
omega = 0.6
mean_size = 0.512

[market]
hazard = 0.05

[exposure]
kind = "gaussian_forward"
sigma = 0.08
maturity = 3.0

[sim]
horizon = 3.0
delta = 0.05
scenarios = {scenarios}
seed = 11
"#
    );
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

const SET_A: &str = "kappa = 0.02\nbeta = 0.161\neta = 0.08\nx0 = 0.03";
const JUMPS: &str = "omega = 0.07\nmean_size = 0.08";

fn run(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args);
    for var in ["TCCVA_CONFIG", "TCCVA_SEED", "TCCVA_THREADS", "TCCVA_OUT", "TCCVA_REQUIRE_NONNEG", "TCCVA_FULL"] {
        cmd.env_remove(var);
    }
    cmd.envs(envs.iter().copied());
    cmd.output().unwrap()
}

#[test]
fn calibrate_writes_shift_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), SET_A, JUMPS, 10);
    let out = dir.path().join("cal");
    let o =
        run(&["calibrate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--require-nonneg"], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["shift_cir.csv", "shift_jcir.csv", "shift_tccir.csv", "calibration.csv"] {
        assert!(out.join(name).is_file(), "{name}");
    }
    assert!(String::from_utf8_lossy(&o.stdout).contains("nonnegative"));
}

#[test]
fn degenerate_model_gives_market_hazard() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "kappa = 0.3\nbeta = 0.0\neta = 0.1\nx0 = 0.0", JUMPS, 10);
    let out = dir.path().join("cal");
    let o = run(&["calibrate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], &[]);
    assert!(o.status.success());
    // x0 = β = 0 violates Feller
    assert!(String::from_utf8_lossy(&o.stderr).contains("Feller"));
    let text = fs::read_to_string(out.join("shift_cir.csv")).unwrap();
    assert!(text.lines().skip(1).all(|l| {
        let v: f64 = l.split(',').nth(1).unwrap().parse().unwrap();
        (v - 0.05).abs() < 1e-12
    }));
}

#[test]
fn inflated_jumps_fail_the_nonnegativity_gate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), SET_A, "omega = 3.0\nmean_size = 0.08", 10);
    let out = dir.path().join("cal");
    let o = run(&["calibrate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], &[]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("NEGATIVE"));
    let o = run(
        &["calibrate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()],
        &[("TCCVA_REQUIRE_NONNEG", "true")],
    );
    assert_eq!(o.status.code(), Some(3));
    // pricing refuses the negative shift
    let o = run(&["cva", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn cva_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), SET_A, JUMPS, 400);
    let mut files = Vec::new();
    for threads in ["1", "4", "8"] {
        let out = dir.path().join(format!("t{threads}"));
        let o =
            run(&["cva", "--config", cfg.to_str().unwrap(), "--threads", threads, "--out", out.to_str().unwrap()], &[]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        files.push(fs::read(out.join("cva.csv")).unwrap());
    }
    assert_eq!(files[0], files[1]);
    assert_eq!(files[0], files[2]);
    let text = String::from_utf8(files[0].clone()).unwrap();
    assert_eq!(text.lines().next().unwrap(), "model,rho,estimator,cva,std_error,ci_lo,ci_hi,m,runtime_seconds");
    assert_eq!(text.lines().count(), 1 + 1 + 3 * 3 * 2);
}

#[test]
fn environment_overrides_mirror_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), SET_A, JUMPS, 100);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    let cfg = cfg.to_str().unwrap();
    assert!(run(&["cva", "--config", cfg, "--seed", "5", "--out", a.to_str().unwrap()], &[]).status.success());
    let o = run(
        &["cva"],
        &[("TCCVA_CONFIG", cfg), ("TCCVA_SEED", "5"), ("TCCVA_OUT", b.to_str().unwrap()), ("TCCVA_THREADS", "2")],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(a.join("cva.csv")).unwrap(), fs::read(b.join("cva.csv")).unwrap());
    // flag beats environment
    assert!(run(&["cva", "--seed", "6", "--out", c.to_str().unwrap()], &[("TCCVA_CONFIG", cfg), ("TCCVA_SEED", "5")])
        .status
        .success());
    assert_ne!(fs::read(a.join("cva.csv")).unwrap(), fs::read(c.join("cva.csv")).unwrap());
}

#[test]
fn sweep_uses_config_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), SET_A, JUMPS, 50);
    let out = dir.path().join("s");
    let o = run(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], &[]);
    assert!(o.status.success());
    let text = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(text.lines().any(|l| l.starts_with("TCCIR,0.9000,adaptive_cv,")));
}

#[test]
fn bad_input_is_reported() {
    let o = run(&["cva"], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--config"));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "[cir]\nkappa = 1\n").unwrap();
    let o = run(&["calibrate", "--config", path.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(run(&["frobnicate"], &[]).status.code() == Some(2));
}
