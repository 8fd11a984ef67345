//! Cartesian parameter sweeps over config overrides.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};

use super::config::{split_assignment, PipelineConfig};
use super::{run_stages, Command, Metrics, RunManifest};

/// Caps the number of cells run at once.
pub const MAX_WORKERS_ENV: &str = "ROTFLOW_MAX_WORKERS";

/// One swept key with its candidate values (TOML literals).
#[derive(Clone, Debug, PartialEq)]
pub struct SweepAxis {
    pub key: String,
    pub values: Vec<String>,
}

impl SweepAxis {
    /// Parses `key=v1,v2,...`. Commas inside brackets do not split.
    /// An empty right-hand side gives an empty axis.
    pub fn parse(s: &str) -> Result<SweepAxis> {
        let (key, rhs) = split_assignment(s)?;
        let mut values = Vec::new();
        let mut depth = 0i32;
        let mut cur = String::new();
        for c in rhs.chars() {
            match c {
                '[' | '{' => depth += 1,
                ']' | '}' => depth -= 1,
                _ => {}
            }
            if c == ',' && depth == 0 {
                values.push(std::mem::take(&mut cur));
            } else {
                cur.push(c);
            }
        }
        if !rhs.trim().is_empty() {
            values.push(cur);
        }
        let values: Vec<String> = values.into_iter().map(|v| v.trim().to_string()).collect();
        if values.iter().any(String::is_empty) {
            return Err(Error::Config(format!("empty value in sweep range {s:?}")));
        }
        Ok(SweepAxis { key: key.to_string(), values })
    }
}

#[derive(Clone, Debug)]
pub struct CellResult {
    pub index: usize,
    pub assignment: Vec<String>,
    pub status: String,
    pub metrics: Metrics,
    pub message: String,
}

/// Every combination of axis values, first axis slowest.
pub fn cartesian(axes: &[SweepAxis]) -> Vec<Vec<String>> {
    let mut cells = vec![Vec::new()];
    for axis in axes {
        cells = cells
            .into_iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |v| {
                    let mut c = prefix.clone();
                    c.push(v.clone());
                    c
                })
            })
            .collect();
    }
    cells
}

/// Worker count from [`MAX_WORKERS_ENV`], defaulting to the core count.
pub fn worker_limit() -> usize {
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    match std::env::var(MAX_WORKERS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        Some(n) if n >= 1 => n,
        _ => cores,
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Runs `stages` for every cell of the sweep below `out/cell_NNNN` and
/// writes `out/aggregate.csv`. Failing cells are recorded, not fatal.
pub fn sweep(
    config_path: &Path,
    overrides: &[String],
    axes: &[SweepAxis],
    stages: &[Command],
    out: &Path,
) -> Result<Vec<CellResult>> {
    // Reject a bad base config before starting any cell.
    let base = PipelineConfig::load(config_path, overrides)?;
    fs::create_dir_all(out)?;
    let cells = if axes.iter().any(|a| a.values.is_empty()) { Vec::new() } else { cartesian(axes) };
    let workers = worker_limit();
    log::info!("sweep: {} cells, {} workers", cells.len(), workers);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let results: Vec<CellResult> = pool.install(|| {
        cells
            .par_iter()
            .enumerate()
            .map(|(index, values)| {
                let dir: PathBuf = out.join(format!("cell_{index:04}"));
                let mut all = overrides.to_vec();
                all.extend(axes.iter().zip(values).map(|(a, v)| format!("{}={v}", a.key)));
                let run = PipelineConfig::load(config_path, &all).and_then(|cfg| run_stages(&cfg, stages, &dir));
                let (status, metrics, message) = match run {
                    Ok(o) if o.passed => ("ok".to_string(), o.metrics, String::new()),
                    Ok(o) => ("failed".to_string(), o.metrics, "tolerance not met".to_string()),
                    Err(e) => ("error".to_string(), Metrics::default(), e.to_string()),
                };
                if status != "ok" {
                    log::warn!("cell {index}: {status} {message}");
                }
                CellResult { index, assignment: values.clone(), status, metrics, message }
            })
            .collect()
    });

    let mut text = Vec::new();
    let mut header = vec!["cell".to_string()];
    header.extend(axes.iter().map(|a| csv_field(&a.key)));
    header.extend(
        ["status", "residual", "e_final", "e_max", "energy_drift", "enstrophy_drift", "annulus_width", "global_width", "message"]
            .map(String::from),
    );
    writeln!(text, "{}", header.join(","))?;
    for r in &results {
        let m = &r.metrics;
        let mut row = vec![format!("{:04}", r.index)];
        row.extend(r.assignment.iter().map(|v| csv_field(v)));
        row.push(r.status.clone());
        row.extend([m.residual, m.e_final, m.e_max, m.energy_drift, m.enstrophy_drift, m.annulus_width, m.global_width].map(fmt_opt));
        row.push(csv_field(&r.message));
        writeln!(text, "{}", row.join(","))?;
    }
    fs::write(out.join("aggregate.csv"), text)?;

    let mut manifest = RunManifest::new("sweep", &base.canonical_json());
    manifest.stage("sweep", || Ok(((), results.iter().all(|r| r.status == "ok"))))?;
    manifest.finish(out)?;
    Ok(results)
}
