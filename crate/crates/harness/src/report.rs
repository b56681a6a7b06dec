// Copyright 2026 The uss Authors. Licensed under Apache-2.0.

//! Evaluation reports and their CSV / JSON files.
//!
//! The query file has the fixed header
//! `query_id,true_count,estimator,mean_estimate,rrmse,mean_var_est,emp_variance,coverage`.
//! `mean_var_est` and `coverage` are empty for estimators without a variance
//! estimate. Each sketch also gets an inclusion file
//! `inclusion_<estimator>.csv` with header `item_id,true_count,incl_freq,pps_ref`.
//! The JSON file mirrors both and adds `rrmse_is_absolute`, set when the true
//! count is 0 and `rrmse` holds the absolute RMSE instead.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use uss::ItemId;

use crate::config::Format;
use crate::error::{HarnessError, Result};

pub const QUERY_HEADER: [&str; 8] =
    ["query_id", "true_count", "estimator", "mean_estimate", "rrmse", "mean_var_est", "emp_variance", "coverage"];

pub const INCLUSION_HEADER: [&str; 4] = ["item_id", "true_count", "incl_freq", "pps_ref"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorInfo {
    pub name: String,
    pub kind: String,
    /// Bins, samples or counters the estimator is allowed to hold.
    pub space: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRow {
    pub query_id: String,
    /// Mean over replicates of the true subset count.
    pub true_count: f64,
    pub estimator: String,
    pub mean_estimate: f64,
    pub rrmse: f64,
    pub rrmse_is_absolute: bool,
    pub mean_var_est: Option<f64>,
    pub emp_variance: f64,
    /// Standard error of `mean_var_est - emp_variance`, from the paired
    /// per-replicate differences.
    pub var_gap_se: Option<f64>,
    pub coverage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionRow {
    pub item_id: ItemId,
    /// Exact count, or the expected count when each replicate draws its own
    /// i.i.d. stream.
    pub true_count: f64,
    /// Share of replicates whose sketch held the item.
    pub incl_freq: f64,
    /// `min(1, alpha n_i)` with `sum min(1, alpha n_i) = m`, averaged over
    /// replicates when the counts vary between them.
    pub pps_ref: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionTable {
    pub estimator: String,
    pub rows: Vec<InclusionRow>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub replicates: usize,
    pub seed: u64,
    pub estimators: Vec<EstimatorInfo>,
    pub queries: Vec<QueryRow>,
    pub inclusion: Vec<InclusionTable>,
}

impl EvalReport {
    pub fn row(&self, query_id: &str, estimator: &str) -> Option<&QueryRow> {
        self.queries.iter().find(|r| r.query_id == query_id && r.estimator == estimator)
    }

    pub fn inclusion_for(&self, estimator: &str) -> Option<&InclusionTable> {
        self.inclusion.iter().find(|t| t.estimator == estimator)
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_string(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

pub fn queries_csv(report: &EvalReport) -> String {
    csv_string(
        &QUERY_HEADER,
        report.queries.iter().map(|r| {
            vec![
                r.query_id.clone(),
                r.true_count.to_string(),
                r.estimator.clone(),
                r.mean_estimate.to_string(),
                r.rrmse.to_string(),
                opt(r.mean_var_est),
                r.emp_variance.to_string(),
                opt(r.coverage),
            ]
        }),
    )
}

pub fn inclusion_csv(table: &InclusionTable) -> String {
    csv_string(
        &INCLUSION_HEADER,
        table.rows.iter().map(|r| {
            vec![r.item_id.to_string(), r.true_count.to_string(), r.incl_freq.to_string(), r.pps_ref.to_string()]
        }),
    )
}

pub fn report_json(report: &EvalReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf> {
    fs::write(&path, contents).map_err(|e| HarnessError::io(&path, e))?;
    Ok(path)
}

/// Writes the report into `dir` and returns the files written.
pub fn write_report(report: &EvalReport, format: Format, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    match format {
        Format::Json => Ok(vec![write(dir.join("report.json"), &report_json(report))?]),
        Format::Csv => {
            let mut out = vec![write(dir.join("report.csv"), &queries_csv(report))?];
            for table in &report.inclusion {
                out.push(write(dir.join(format!("inclusion_{}.csv", table.estimator)), &inclusion_csv(table))?);
            }
            Ok(out)
        }
    }
}
