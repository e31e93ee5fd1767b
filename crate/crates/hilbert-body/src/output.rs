//! Bit-exact run outputs: per-node snapshot CSV, per-snapshot summary CSV,
//! the canonical config echo, and run metadata.
//!
//! Floats are written with Rust's shortest-round-trip formatting, so
//! re-running the same configuration produces byte-identical CSV files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::{echo_config, SimConfig};
use crate::driver::TrajectoryRecord;
use crate::error::{Error, Result};

pub const SNAPSHOT_HEADER: &str = "step,t,node,s,x,z,theta,eps,kappa,B,w_norm,p_up,fidelity";
pub const SUMMARY_HEADER: &str =
    "step,t,d,elastic_energy,max_abs_kappa,max_w,min_fidelity,newton_iters,inner_iters";

/// Shortest-round-trip decimal for a float.
fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Render the per-node snapshot table.
pub fn snapshots_csv(record: &TrajectoryRecord, config: &SimConfig) -> String {
    let mut out = String::from(SNAPSHOT_HEADER);
    out.push('\n');
    let n = config.sheet.n_nodes;
    let spacing = config.sheet.sheet_length / (n - 1) as f64;
    for snap in &record.snapshots {
        let m = &snap.macro_state;
        for node in 0..n {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                snap.step,
                fmt(snap.t),
                node,
                fmt(node as f64 * spacing),
                fmt(m.placement.x[node]),
                fmt(m.placement.z[node]),
                fmt(m.placement.theta[node]),
                fmt(m.placement.eps[node]),
                fmt(m.kappa[node]),
                fmt(m.stiffness[node]),
                fmt(snap.w_norm[node]),
                fmt(snap.p_up[node]),
                fmt(snap.fidelity[node]),
            );
        }
    }
    out
}

/// Render the per-snapshot scalar summary.
pub fn summary_csv(record: &TrajectoryRecord) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for snap in &record.snapshots {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            snap.step,
            fmt(snap.t),
            fmt(snap.d),
            fmt(snap.elastic_energy),
            fmt(snap.max_abs_kappa),
            fmt(snap.max_w),
            fmt(snap.min_fidelity),
            snap.newton_iters,
            snap.inner_iters,
        );
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Render run metadata (the one output that is not byte-stable across
/// reruns, by design: it carries wall-clock times).
pub fn run_meta(record: &TrajectoryRecord, exit_status: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "tool_version = \"{}\"", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "started_at = \"{}\"", record.started_at);
    let _ = writeln!(out, "finished_at = \"{}\"", record.finished_at);
    let _ = writeln!(out, "exit_status = \"{exit_status}\"");
    let _ = writeln!(out, "n_steps = {}", record.n_steps);
    let _ = writeln!(out, "n_snapshots = {}", record.snapshots.len());
    out
}

/// Write the four run artifacts into `directory` (created if missing):
/// `snapshots.csv`, `summary.csv`, `config_echo.toml`, `run_meta.toml`.
/// Returns the paths written.
pub fn write_outputs(
    record: &TrajectoryRecord,
    config: &SimConfig,
    directory: &Path,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(directory).map_err(|e| Error::Io {
        path: directory.display().to_string(),
        source: e,
    })?;
    let files = [
        ("snapshots.csv", snapshots_csv(record, config)),
        ("summary.csv", summary_csv(record)),
        ("config_echo.toml", echo_config(config)),
        ("run_meta.toml", run_meta(record, "ok")),
    ];
    let mut written = Vec::with_capacity(files.len());
    for (name, contents) in files {
        let path = directory.join(name);
        write_file(&path, &contents)?;
        written.push(path);
    }
    Ok(written)
}

/// Best-effort failure metadata, used by callers when a run aborts.
pub fn write_failure_meta(directory: &Path, started_at: &str, status: &str) -> Result<()> {
    std::fs::create_dir_all(directory).map_err(|e| Error::Io {
        path: directory.display().to_string(),
        source: e,
    })?;
    let mut out = String::new();
    let _ = writeln!(out, "tool_version = \"{}\"", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "started_at = \"{started_at}\"");
    let _ = writeln!(
        out,
        "finished_at = \"{}\"",
        chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
    );
    let _ = writeln!(out, "exit_status = \"{status}\"");
    write_file(&directory.join("run_meta.toml"), &out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_config;
    use crate::driver::run;

    fn tiny_run() -> (TrajectoryRecord, SimConfig) {
        let mut cfg = default_config();
        cfg.sheet.n_nodes = 11;
        cfg.schedule.kind = "hold".into();
        cfg.schedule.d_final = 1.0;
        cfg.schedule.total_time = 0.5;
        cfg.schedule.dt = 0.05;
        cfg.schedule.snapshot_stride = 5;
        (run(&cfg).unwrap(), cfg)
    }

    #[test]
    fn headers_match_the_published_schema_exactly() {
        let (record, cfg) = tiny_run();
        let snaps = snapshots_csv(&record, &cfg);
        assert!(snaps.starts_with(
            "step,t,node,s,x,z,theta,eps,kappa,B,w_norm,p_up,fidelity\n"
        ));
        let summary = summary_csv(&record);
        assert!(summary.starts_with(
            "step,t,d,elastic_energy,max_abs_kappa,max_w,min_fidelity,newton_iters,inner_iters\n"
        ));
        // One row per node per snapshot.
        let rows = snaps.lines().count() - 1;
        assert_eq!(rows, record.snapshots.len() * cfg.sheet.n_nodes);
    }

    #[test]
    fn zero_snapshot_run_writes_headers_only() {
        let mut cfg = default_config();
        cfg.sheet.n_nodes = 11;
        cfg.schedule.kind = "hold".into();
        cfg.schedule.d_final = 1.0;
        cfg.schedule.total_time = 0.2;
        cfg.schedule.dt = 0.05;
        cfg.schedule.snapshot_stride = 0;
        let record = run(&cfg).unwrap();
        let snaps = snapshots_csv(&record, &cfg);
        assert_eq!(snaps, format!("{SNAPSHOT_HEADER}\n"));
        let summary = summary_csv(&record);
        assert_eq!(summary, format!("{SUMMARY_HEADER}\n"));
    }

    #[test]
    fn flat_run_p_up_column_matches_the_closed_form() {
        let (record, cfg) = tiny_run();
        let snaps = snapshots_csv(&record, &cfg);
        for line in snaps.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            let t: f64 = cols[1].parse().unwrap();
            let p_up: f64 = cols[11].parse().unwrap();
            let expected = (cfg.fibre.mu * t).sin().powi(2);
            assert!(
                (p_up - expected).abs() <= 1e-9,
                "t = {t}: {p_up} vs {expected}"
            );
        }
    }

    #[test]
    fn reruns_write_byte_identical_csv() {
        let dir = tempfile::tempdir().unwrap();
        let (record1, cfg) = tiny_run();
        let (record2, _) = tiny_run();
        let d1 = dir.path().join("a");
        let d2 = dir.path().join("b");
        write_outputs(&record1, &cfg, &d1).unwrap();
        write_outputs(&record2, &cfg, &d2).unwrap();
        for name in ["snapshots.csv", "summary.csv", "config_echo.toml"] {
            let a = std::fs::read(d1.join(name)).unwrap();
            let b = std::fs::read(d2.join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between reruns");
        }
    }

    #[test]
    fn config_echo_file_reparses_to_the_same_config() {
        let dir = tempfile::tempdir().unwrap();
        let (record, cfg) = tiny_run();
        write_outputs(&record, &cfg, dir.path()).unwrap();
        let parsed = crate::config::parse_config(&dir.path().join("config_echo.toml")).unwrap();
        assert_eq!(parsed, cfg);
    }

    #[test]
    fn io_errors_carry_the_path() {
        let (record, cfg) = tiny_run();
        let err = write_outputs(&record, &cfg, Path::new("/proc/definitely/not/writable"))
            .unwrap_err();
        match err {
            Error::Io { path, .. } => assert!(path.contains("/proc/definitely")),
            other => panic!("expected io error, got {other:?}"),
        }
    }
}
