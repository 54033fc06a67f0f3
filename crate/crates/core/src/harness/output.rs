//! CSV tables and JSON run manifests.
//!
//! Numbers are written in Rust's shortest round-trip form, so reading a table
//! back yields bit-identical values. Wall-clock time is the only
//! non-reproducible quantity and goes to a separate `timing.json`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Duration;

use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, ObservableSpec};
use super::estimate::EstimatorResult;
use super::reference::ReferenceSolution;
use super::study::Study;
use crate::error::{Error, Result};
use crate::lattice::rng::RNG_ID;
use crate::spectral::TorusGrid;

pub fn format_real(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format_real(*v)).collect();
        writeln!(out, "{}", cells.join(",")).unwrap();
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a table written by [`write_table`]: header names and numeric rows.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let header = lines
        .next()
        .map(|(_, h)| h.split(',').map(str::to_string).collect::<Vec<_>>())
        .ok_or_else(|| Error::Parse {
            path: path.into(),
            line: 1,
            msg: "missing header".into(),
        })?;
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|c| {
                c.trim().parse::<f64>().map_err(|e| Error::Parse {
                    path: path.into(),
                    line: i + 1,
                    msg: format!("bad number `{c}`: {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if row.len() != header.len() {
            return Err(Error::Parse {
                path: path.into(),
                line: i + 1,
                msg: format!("expected {} columns, found {}", header.len(), row.len()),
            });
        }
        rows.push(row);
    }
    Ok((header, rows))
}

/// SHA-256 of the canonical text form of the configuration.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    Sha256::digest(cfg.to_text().as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn git_describe() -> String {
    Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".into())
}

#[derive(Serialize)]
struct Manifest<'a, T: Serialize> {
    command: &'a str,
    version: &'a str,
    git_describe: String,
    config_hash: String,
    seed: u64,
    rng_id: &'a str,
    config: &'a ExperimentConfig,
    files: &'a [String],
    result: &'a T,
}

/// Writes `manifest.json` (deterministic) and `timing.json` (wall time) in `dir`.
pub fn write_manifest<T: Serialize>(
    dir: &Path,
    command: &str,
    cfg: &ExperimentConfig,
    files: &[String],
    result: &T,
    wall_time: Duration,
) -> Result<Vec<PathBuf>> {
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        git_describe: git_describe(),
        config_hash: config_hash(cfg),
        seed: cfg.seed,
        rng_id: RNG_ID,
        config: cfg,
        files,
        result,
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)? + "\n";
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    let timing = dir.join("timing.json");
    let text = serde_json::to_string_pretty(&json!({
        "command": command,
        "wall_time_seconds": wall_time.as_secs_f64(),
    }))? + "\n";
    std::fs::write(&timing, text).map_err(|e| Error::io(&timing, e))?;
    Ok(vec![path, timing])
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// `study.csv` with columns `tau|N, err_S, err_J`, plus `manifest.json`.
pub fn emit_study(
    dir: &Path,
    command: &str,
    cfg: &ExperimentConfig,
    study: &Study,
    wall_time: Duration,
) -> Result<()> {
    ensure_dir(dir)?;
    let x = match study.axis {
        super::fit::FitAxis::TimeStep => "tau",
        super::fit::FitAxis::Samples => "N",
    };
    let rows: Vec<Vec<f64>> = study
        .rows
        .iter()
        .map(|r| vec![r.x, r.err_s, r.err_j])
        .collect();
    write_table(&dir.join("study.csv"), &[x, "err_S", "err_J"], &rows)?;
    write_manifest(dir, command, cfg, &["study.csv".into()], study, wall_time)?;
    Ok(())
}

/// `estimate.csv` (mean and standard error per node, or per-shift values at a
/// point), `estimate.json` with the full result, and `manifest.json`.
pub fn emit_estimate(
    dir: &Path,
    cfg: &ExperimentConfig,
    result: &EstimatorResult,
    wall_time: Duration,
) -> Result<()> {
    ensure_dir(dir)?;
    let csv = dir.join("estimate.csv");
    match result.observable {
        ObservableSpec::Field => {
            let grid = TorusGrid::new(result.grid)?;
            let (s, j) = result.split(&result.mean);
            let m = grid.size();
            let se = result
                .std_error
                .clone()
                .unwrap_or_else(|| vec![f64::NAN; 2 * m]);
            let rows: Vec<Vec<f64>> = (0..m)
                .map(|k| vec![grid.node(k), s[k], j[k], se[k], se[m + k]])
                .collect();
            write_table(&csv, &["x", "S", "J", "se_S", "se_J"], &rows)?;
        }
        ObservableSpec::Point(_) => {
            let rows: Vec<Vec<f64>> = result
                .per_shift
                .iter()
                .enumerate()
                .map(|(k, q)| vec![k as f64, q[0], q[1]])
                .collect();
            write_table(&csv, &["shift", "S", "J"], &rows)?;
        }
    }
    let json_path = dir.join("estimate.json");
    let text = serde_json::to_string_pretty(result)? + "\n";
    std::fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))?;
    write_manifest(
        dir,
        "estimate",
        cfg,
        &["estimate.csv".into(), "estimate.json".into()],
        result,
        wall_time,
    )?;
    Ok(())
}

/// `reference.csv` with columns `x, S, J` on the reference grid.
pub fn emit_reference(
    dir: &Path,
    cfg: &ExperimentConfig,
    reference: &ReferenceSolution,
    wall_time: Duration,
) -> Result<()> {
    ensure_dir(dir)?;
    let grid = reference.s.grid();
    let rows: Vec<Vec<f64>> = (0..grid.size())
        .map(|k| {
            vec![
                grid.node(k),
                reference.s.values()[k],
                reference.j.values()[k],
            ]
        })
        .collect();
    write_table(&dir.join("reference.csv"), &["x", "S", "J"], &rows)?;
    write_manifest(
        dir,
        "reference",
        cfg,
        &["reference.csv".into()],
        reference,
        wall_time,
    )?;
    Ok(())
}
