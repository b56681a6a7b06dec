// Copyright 2026 The uss Authors. Licensed under Apache-2.0.

//! Experiment harness for the `uss` sketches: replicated runs over
//! synthetic streams, CSV ingestion and report files.

pub mod config;
pub mod error;
pub mod generate;
pub mod ingest;
pub mod report;
pub mod run;

pub use config::{BaselineConfig, ExperimentConfig, Format, OutputConfig, QueryPlan, SketchConfig};
pub use error::{HarnessError, Result};
pub use generate::write_stream;
pub use ingest::{ingest_csv, ingest_report, sketch_rows, CsvIngest, KEY_SEPARATOR};
pub use report::{write_report, EstimatorInfo, EvalReport, InclusionRow, InclusionTable, QueryRow};
pub use run::{derive_seed, run, run_with_threads};
