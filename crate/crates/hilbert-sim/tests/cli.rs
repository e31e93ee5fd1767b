//! End-to-end tests of the compiled binary: exit codes, artifacts,
//! determinism, and the oracle cross-check.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hilbert-sim"))
}

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn small_config(dir: &Path) -> PathBuf {
    let text = "\
[sheet]
n_nodes = 21
sheet_length = 1.0
B0 = 1.0
S = 1000.0

[schedule]
kind = \"ramp\"
T = 1.0
dt = 0.05
d_final = 0.9
snapshot_stride = 5

[fibre]
kind = \"qubit\"
preset = \"paper-example\"
mu = 1.0
L_c = 1.0
initial_state = \"up\"
N_f = 16

[coupling]
beta = 0.0
law = \"multiplicative-quadratic\"
fp_tol = 1e-8
max_inner = 50
fp_enabled = false

[numerics]
newton_tol = 1e-10
max_newton = 100
seed_amplitude = 0.01
branch_sign = 1

[output]
directory = \"out\"
formats = [\"csv\"]
";
    let path = dir.join("small.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn validate_succeeds_quietly_on_the_shipped_configs() {
    for name in ["default.toml", "coupled.toml"] {
        let out = run_ok(bin().args(["validate", "--config"]).arg(repo_config(name)));
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn validate_reports_all_problems_with_exit_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(small_config(dir.path())).unwrap();
    std::fs::write(
        &path,
        text.replace("dt = 0.05", "dt = 7.0")
            .replace("beta = 0.0", "beta = -1.0"),
    )
    .unwrap();
    let out = bin()
        .args(["validate", "--config"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("dt"), "{err}");
    assert!(err.contains("beta"), "{err}");
}

#[test]
fn missing_config_exits_one() {
    let out = bin()
        .args(["validate", "--config", "/nonexistent.toml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn run_writes_all_four_artifacts_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    run_ok(bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(&out_a));
    run_ok(bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(&out_b));
    for name in [
        "snapshots.csv",
        "summary.csv",
        "config_echo.toml",
        "run_meta.toml",
    ] {
        assert!(out_a.join(name).is_file(), "{name} missing");
    }
    for name in ["snapshots.csv", "summary.csv", "config_echo.toml"] {
        let a = std::fs::read(out_a.join(name)).unwrap();
        let b = std::fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} not byte-identical across reruns");
    }
    let meta = std::fs::read_to_string(out_a.join("run_meta.toml")).unwrap();
    assert!(meta.contains("exit_status = \"ok\""), "{meta}");
    assert!(meta.contains("tool_version"), "{meta}");
}

#[test]
fn run_overwrites_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out_dir = dir.path().join("out");
    run_ok(bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(&out_dir));
    let first = std::fs::read(out_dir.join("snapshots.csv")).unwrap();
    run_ok(bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(&out_dir));
    let second = std::fs::read(out_dir.join("snapshots.csv")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn config_echo_round_trips_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out_dir = dir.path().join("out");
    run_ok(bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(&out_dir));
    let echo_path = out_dir.join("config_echo.toml");
    let out_dir2 = dir.path().join("out2");
    run_ok(
        bin()
            .args(["run", "--config"])
            .arg(&echo_path)
            .arg("--out")
            .arg(&out_dir2),
    );
    let echo1 = std::fs::read(&echo_path).unwrap();
    let echo2 = std::fs::read(out_dir2.join("config_echo.toml")).unwrap();
    assert_eq!(echo1, echo2, "echo is not a fixed point");
}

#[test]
fn oracle_elastica_matches_the_library_solver() {
    let out = run_ok(bin().args(["oracle", "elastica", "--d", "0.9", "--n", "101"]));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let mut lines = stdout.lines();
    assert_eq!(lines.next().unwrap(), "node,s,theta,x,z");
    let theta_oracle: Vec<f64> = lines
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(theta_oracle.len(), 101);

    // Library solver on the matching quasi-inextensible problem.
    let grid = hilbert_body::MaterialGrid::new(101, 1.0).unwrap();
    let problem =
        hilbert_body::elastica::ElasticaProblem::uniform(grid, 1.0, 1e10, 0.9).unwrap();
    let sol = hilbert_body::elastica::solve_equilibrium(
        &problem,
        None,
        &hilbert_body::elastica::SolverOptions::default(),
    )
    .unwrap();
    let worst = sol
        .placement
        .theta
        .iter()
        .zip(&theta_oracle)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-6, "max dtheta {worst}");
}

#[test]
fn sweep_creates_one_directory_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out_dir = dir.path().join("sweep");
    run_ok(
        bin()
            .args(["sweep", "--config"])
            .arg(&cfg)
            .args(["--param", "coupling.beta", "--values", "0,1e-4"])
            .arg("--out")
            .arg(&out_dir),
    );
    for sub in ["coupling_beta=0", "coupling_beta=1e-4"] {
        assert!(
            out_dir.join(sub).join("summary.csv").is_file(),
            "{sub} missing artifacts"
        );
    }

    let out = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .args(["--param", "no.such.key", "--values", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn thread_cap_env_var_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out_a = dir.path().join("auto");
    let out_b = dir.path().join("one");
    run_ok(bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(&out_a));
    run_ok(
        bin()
            .args(["run", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out_b)
            .env("HILBERT_SIM_THREADS", "1"),
    );
    let a = std::fs::read(out_a.join("snapshots.csv")).unwrap();
    let b = std::fs::read(out_b.join("snapshots.csv")).unwrap();
    assert_eq!(a, b, "thread cap changed the results");
}
