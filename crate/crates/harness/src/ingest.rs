// Copyright 2026 The uss Authors. Licensed under Apache-2.0.

//! CSV event logs as `(item, weight)` rows, in file order.
//!
//! The item key joins the values of the key columns with U+241F, so a
//! composite key `(advertiser, ad)` becomes `"advertiser␟ad"`. Without a
//! weight column every row has weight 1.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use csv::StringRecord;
use uss::{subset_sum, Mode, Sketch, SubsetQuery};

use crate::error::{HarnessError, Result};
use crate::report::{EstimatorInfo, EvalReport, QueryRow};

pub const KEY_SEPARATOR: char = '\u{241F}';

/// Streaming reader returned by [`ingest_csv`].
pub struct CsvIngest {
    reader: csv::Reader<File>,
    path: PathBuf,
    keys: Vec<usize>,
    weight: Option<usize>,
    record: StringRecord,
}

/// Opens `path` and resolves the named columns against its header.
pub fn ingest_csv(path: &Path, key_columns: &[&str], weight_column: Option<&str>) -> Result<CsvIngest> {
    if key_columns.is_empty() {
        return Err(HarnessError::config("key_columns", "at least one key column is required"));
    }
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| HarnessError::Schema { path: path.to_path_buf(), column: name.to_string() })
    };
    let keys = key_columns.iter().map(|c| find(c)).collect::<Result<Vec<_>>>()?;
    let weight = weight_column.map(find).transpose()?;
    Ok(CsvIngest { reader, path: path.to_path_buf(), keys, weight, record: StringRecord::new() })
}

fn csv_error(path: &Path, e: csv::Error) -> HarnessError {
    let line = e.position().map(|p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => HarnessError::io(path, source),
        kind => match line {
            Some(line) => HarnessError::Row { path: path.to_path_buf(), line, message: format!("{kind:?}") },
            None => HarnessError::Parse { path: path.to_path_buf(), message: format!("{kind:?}") },
        },
    }
}

impl Iterator for CsvIngest {
    type Item = Result<(String, f64)>;

    fn next(&mut self) -> Option<Self::Item> {
        match self.reader.read_record(&mut self.record) {
            Ok(false) => None,
            Err(e) => Some(Err(csv_error(&self.path, e))),
            Ok(true) => {
                let line = self.record.position().map_or(0, |p| p.line());
                let mut key = String::new();
                for (i, col) in self.keys.iter().enumerate() {
                    if i > 0 {
                        key.push(KEY_SEPARATOR);
                    }
                    key.push_str(&self.record[*col]);
                }
                let weight = match self.weight {
                    None => 1.0,
                    Some(col) => {
                        let raw = self.record[col].trim();
                        match raw.parse::<f64>() {
                            Ok(w) if w > 0.0 && w.is_finite() => w,
                            _ => {
                                return Some(Err(HarnessError::Row {
                                    path: self.path.clone(),
                                    line,
                                    message: format!("weight `{raw}` is not a positive number"),
                                }))
                            }
                        }
                    }
                };
                Some(Ok((key, weight)))
            }
        }
    }
}

/// Feeds ingested rows into a weighted sketch and tallies exact totals.
pub fn sketch_rows(
    rows: impl IntoIterator<Item = Result<(String, f64)>>,
    m: usize,
    mode: Mode,
    seed: u64,
) -> Result<(Sketch<String, f64>, BTreeMap<String, f64>)> {
    let mut sketch = Sketch::new(m, mode, seed)?;
    let mut exact = BTreeMap::new();
    for row in rows {
        let (key, weight) = row?;
        *exact.entry(key.clone()).or_insert(0.0) += weight;
        sketch.update_weighted(key, weight)?;
    }
    Ok((sketch, exact))
}

/// Single-run report for an ingested log: the whole stream plus the `top`
/// most frequent keys by exact total, each as its own query.
pub fn ingest_report(
    sketch: &Sketch<String, f64>,
    exact: &BTreeMap<String, f64>,
    top: usize,
    level: f64,
    estimator: &str,
) -> EvalReport {
    let mut ranked: Vec<(&String, f64)> = exact.iter().map(|(k, v)| (k, *v)).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let total: f64 = exact.values().sum();
    let mut queries = vec![("all".to_string(), SubsetQuery::all(), total)];
    queries
        .extend(ranked.into_iter().take(top).map(|(k, v)| (format!("item:{k}"), SubsetQuery::items([k.clone()]), v)));
    let rows = queries
        .into_iter()
        .map(|(query_id, query, truth)| {
            let r = subset_sum(sketch, &query, level);
            let err = (r.estimate - truth).abs();
            QueryRow {
                query_id,
                true_count: truth,
                estimator: estimator.to_string(),
                mean_estimate: r.estimate,
                rrmse: if truth > 0.0 { err / truth } else { err },
                rrmse_is_absolute: truth <= 0.0,
                mean_var_est: Some(r.variance),
                emp_variance: 0.0,
                var_gap_se: None,
                coverage: Some(if r.covers(truth) { 1.0 } else { 0.0 }),
            }
        })
        .collect();
    let kind = match sketch.mode() {
        Mode::Unbiased => "sketch_unbiased",
        Mode::Deterministic => "sketch_deterministic",
    };
    EvalReport {
        replicates: 1,
        seed: sketch.seed(),
        estimators: vec![EstimatorInfo { name: estimator.to_string(), kind: kind.into(), space: sketch.capacity() }],
        queries: rows,
        inclusion: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn unit_rows_in_file_order() {
        let f = file("user_id,page\nu2,a\nu1,b\nu2,c\n");
        let rows: Vec<_> = ingest_csv(f.path(), &["user_id"], None).unwrap().map(|r| r.unwrap()).collect();
        assert_eq!(rows, vec![("u2".into(), 1.0), ("u1".into(), 1.0), ("u2".into(), 1.0)]);
    }

    #[test]
    fn composite_key_uses_separator() {
        let f = file("advertiser,ad,clicks\nadvertiser,ad,2.5\n");
        let rows: Vec<_> =
            ingest_csv(f.path(), &["advertiser", "ad"], Some("clicks")).unwrap().map(|r| r.unwrap()).collect();
        assert_eq!(rows, vec![("advertiser\u{241F}ad".to_string(), 2.5)]);
    }

    #[test]
    fn missing_column_is_a_schema_error() {
        let f = file("a,b\n1,2\n");
        match ingest_csv(f.path(), &["a", "zzz"], None) {
            Err(HarnessError::Schema { column, .. }) => assert_eq!(column, "zzz"),
            Err(other) => panic!("{other:?}"),
            Ok(_) => panic!("accepted a missing column"),
        }
    }

    #[test]
    fn report_lists_total_then_top_keys() {
        let f = file("k\na\nb\na\nc\na\nb\n");
        let (sketch, exact) = sketch_rows(ingest_csv(f.path(), &["k"], None).unwrap(), 10, Mode::Unbiased, 1).unwrap();
        let report = ingest_report(&sketch, &exact, 2, 0.95, "unbiased_m10");
        let ids: Vec<_> = report.queries.iter().map(|r| r.query_id.as_str()).collect();
        assert_eq!(ids, vec!["all", "item:a", "item:b"]);
        assert_eq!(report.queries[0].mean_estimate, 6.0);
        assert_eq!(report.queries[1].rrmse, 0.0);
    }

    #[test]
    fn bad_weight_reports_line() {
        let f = file("k,w\na,1\nb,oops\n");
        let rows: Vec<_> = ingest_csv(f.path(), &["k"], Some("w")).unwrap().collect();
        assert!(rows[0].is_ok());
        match &rows[1] {
            Err(HarnessError::Row { line, .. }) => assert_eq!(*line, 3),
            other => panic!("{other:?}"),
        }
    }
}
