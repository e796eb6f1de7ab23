//! CSV and JSON summary writers.
//!
//! Floats are written in Rust's shortest round-trip form, so parsing a
//! cell gives back the exact value. The summary sidecar next to a CSV file
//! `name.csv` is `name.summary.json`.

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{DeviationReport, ExperimentConfig, RateReport, RenormReport, SelftestReport};
use crate::error::{Error, Result};

pub fn csv_float(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv: {other:?}")),
    }
}

pub fn summary_path(csv: &Path) -> PathBuf {
    csv.with_extension("summary.json")
}

/// Sidecar schema: `{"config": {...}, "report": {...}}`; the report holds
/// the rows, fitted quantities and boolean verdicts (`pass` and friends).
#[derive(Debug, Serialize)]
pub struct Summary<'a, R: Serialize> {
    pub config: &'a ExperimentConfig,
    pub report: &'a R,
}

pub fn write_summary<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

impl RateReport {
    /// Columns `T, mean, stderr, n_replicas, estimator`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    csv_float(r.t),
                    csv_float(r.mean),
                    csv_float(r.stderr),
                    r.n_replicas.to_string(),
                    r.estimator.name().to_string(),
                ]
            })
            .collect();
        write_csv(path, &["T", "mean", "stderr", "n_replicas", "estimator"], &rows)
    }
}

impl RenormReport {
    /// Columns `T, ratio, stderr`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| vec![csv_float(r.t), csv_float(r.ratio), csv_float(r.stderr)])
            .collect();
        write_csv(path, &["T", "ratio", "stderr"], &rows)
    }
}

impl DeviationReport {
    /// One file per horizon, `stem.T{T}.csv`, with columns
    /// `xi, empirical_tail, cp_upper, bound`. Returns the paths written.
    pub fn write_csv(&self, path: &Path) -> Result<Vec<PathBuf>> {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("deviation");
        let dir = path.parent().unwrap_or(Path::new(""));
        let mut written = Vec::new();
        for table in &self.tables {
            let p = dir.join(format!("{stem}.T{}.csv", table.t));
            let rows: Vec<Vec<String>> = table
                .rows
                .iter()
                .map(|r| {
                    vec![
                        csv_float(r.xi),
                        csv_float(r.empirical_tail),
                        csv_float(r.cp_upper),
                        csv_float(r.bound),
                    ]
                })
                .collect();
            write_csv(&p, &["xi", "empirical_tail", "cp_upper", "bound"], &rows)?;
            written.push(p);
        }
        Ok(written)
    }
}

impl SelftestReport {
    /// Columns `identity, computed, expected, tolerance, verdict`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.identity.clone(),
                    csv_float(r.computed),
                    csv_float(r.expected),
                    csv_float(r.tolerance),
                    if r.pass { "pass" } else { "fail" }.to_string(),
                ]
            })
            .collect();
        write_csv(path, &["identity", "computed", "expected", "tolerance", "verdict"], &rows)
    }
}
