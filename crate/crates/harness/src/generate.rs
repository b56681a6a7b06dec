// Copyright 2026 The uss Authors. Licensed under Apache-2.0.

//! Dumps a synthetic stream and its ground truth.
//!
//! `stream.csv` holds one `item_id` per line after its header, in stream
//! order, so it can be read back with [`ingest_csv`](crate::ingest_csv).
//! The truth goes to `truth.csv` (`item_id,count`) or `truth.json`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use uss::streams::{emit, RowSink, StreamSpec};
use uss::{GroundTruth, ItemId};

use crate::config::Format;
use crate::error::{HarnessError, Result};

struct LineSink {
    out: BufWriter<File>,
    err: Option<std::io::Error>,
}

impl RowSink for LineSink {
    fn row(&mut self, item: ItemId) {
        if self.err.is_none() {
            if let Err(e) = writeln!(self.out, "{item}") {
                self.err = Some(e);
            }
        }
    }
}

pub fn write_stream(spec: &StreamSpec, dir: &Path, format: Format) -> Result<(GroundTruth, Vec<PathBuf>)> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let stream_path = dir.join("stream.csv");
    let file = File::create(&stream_path).map_err(|e| HarnessError::io(&stream_path, e))?;
    let mut sink = LineSink { out: BufWriter::new(file), err: None };
    writeln!(sink.out, "item_id").map_err(|e| HarnessError::io(&stream_path, e))?;
    let truth = emit(spec, &mut sink)?;
    if let Some(e) = sink.err.take() {
        return Err(HarnessError::io(&stream_path, e));
    }
    sink.out.flush().map_err(|e| HarnessError::io(&stream_path, e))?;

    let truth_path = match format {
        Format::Csv => {
            let path = dir.join("truth.csv");
            let mut text = String::from("item_id,count\n");
            for (i, c) in truth.items() {
                text.push_str(&format!("{i},{c}\n"));
            }
            fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))?;
            path
        }
        Format::Json => {
            let path = dir.join("truth.json");
            let mut text = serde_json::to_string_pretty(&truth).expect("truth serializes");
            text.push('\n');
            fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))?;
            path
        }
    };
    Ok((truth, vec![stream_path, truth_path]))
}
