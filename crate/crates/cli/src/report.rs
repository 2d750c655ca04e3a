//! Flat report rows written identically to CSV and JSON.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

/// One experiment outcome. Unused fields stay empty so every command
/// shares one stable schema.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub matrix: String,
    pub n_rows: u64,
    pub nnz: u64,
    /// bicgstab | gmres | cg | amg | spmv
    pub solver: String,
    pub preconditioner: String,
    pub format: Option<String>,
    pub fill_level: Option<u64>,
    pub outer_parts: Option<u64>,
    pub inner_parts: Option<u64>,
    pub outer_overlap: Option<u64>,
    pub inner_overlap: Option<u64>,
    pub amg_coarsening: Option<String>,
    pub amg_interpolation: Option<String>,
    pub amg_smoother: Option<String>,
    pub tolerance: Option<f64>,
    pub seed: u64,
    pub workers: u64,
    pub iterations: Option<u64>,
    pub converged: Option<bool>,
    pub breakdown: Option<String>,
    pub final_relative_residual: Option<f64>,
    pub setup_seconds: Option<f64>,
    pub seq_seconds: Option<f64>,
    pub par_seconds: Option<f64>,
    pub speedup: Option<f64>,
    pub comm_volume: Option<u64>,
    pub gflops: Option<f64>,
    pub formats_agree: Option<bool>,
    pub amg_levels: Option<u64>,
    pub grid_complexity: Option<f64>,
    pub operator_complexity: Option<f64>,
    pub error: Option<String>,
}

/// Run-level metadata carried in the JSON report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportMeta {
    pub command: String,
    pub timing: String,
    pub seed: u64,
}

impl ReportMeta {
    pub fn new(command: &str, seed: u64) -> Self {
        ReportMeta {
            command: command.to_string(),
            timing: "monotonic clock, best of 3 repetitions after 1 warmup".to_string(),
            seed,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JsonReport {
    pub metadata: ReportMeta,
    pub rows: Vec<ReportRow>,
}

/// Writes `<prefix>.json` and `<prefix>.csv` with the same rows.
pub fn write_reports(
    prefix: &Path,
    meta: ReportMeta,
    rows: &[ReportRow],
) -> anyhow::Result<(PathBuf, PathBuf)> {
    let json_path = prefix.with_extension("json");
    let csv_path = prefix.with_extension("csv");

    let report = JsonReport {
        metadata: meta,
        rows: rows.to_vec(),
    };
    let json = serde_json::to_string_pretty(&report)?;
    std::fs::write(&json_path, json)
        .with_context(|| format!("writing {}", json_path.display()))?;

    let mut w = csv::Writer::from_path(&csv_path)
        .with_context(|| format!("writing {}", csv_path.display()))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok((json_path, csv_path))
}

pub fn read_json_rows(path: &Path) -> anyhow::Result<Vec<ReportRow>> {
    let text = std::fs::read_to_string(path)?;
    let report: JsonReport = serde_json::from_str(&text)?;
    Ok(report.rows)
}

pub fn read_csv_rows(path: &Path) -> anyhow::Result<Vec<ReportRow>> {
    let mut rows = Vec::new();
    let mut r = csv::Reader::from_path(path)?;
    for rec in r.deserialize() {
        rows.push(rec?);
    }
    Ok(rows)
}

/// Compact table for the terminal.
pub fn print_rows(rows: &[ReportRow]) {
    println!(
        "{:<28} {:>9} {:>11} {:<9} {:<12} {:>5} {:>4} {:>8} {:>10} {:>10} {:>8}",
        "matrix", "n", "nnz", "solver", "precond", "k", "wrk", "iters", "seq(s)", "par(s)", "speedup"
    );
    for r in rows {
        let k = r.fill_level.map_or(String::new(), |v| v.to_string());
        let iters = match (&r.error, r.iterations) {
            (Some(_), _) => "error".to_string(),
            (None, Some(i)) => {
                let suffix = match r.converged {
                    Some(true) => "",
                    _ => "*",
                };
                format!("{i}{suffix}")
            }
            _ => String::new(),
        };
        println!(
            "{:<28} {:>9} {:>11} {:<9} {:<12} {:>5} {:>4} {:>8} {:>10} {:>10} {:>8}",
            truncate(&r.matrix, 28),
            r.n_rows,
            r.nnz,
            r.solver,
            r.preconditioner,
            k,
            r.workers,
            iters,
            r.seq_seconds.map_or(String::new(), |v| format!("{v:.4}")),
            r.par_seconds.map_or(String::new(), |v| format!("{v:.4}")),
            r.speedup.map_or(String::new(), |v| format!("{v:.2}")),
        );
        if let Some(err) = &r.error {
            println!("    error: {err}");
        }
    }
}

fn truncate(s: &str, n: usize) -> String {
    let chars: Vec<char> = s.chars().collect();
    if chars.len() <= n {
        s.to_string()
    } else {
        let tail: String = chars[chars.len() - (n - 3)..].iter().collect();
        format!("...{tail}")
    }
}
