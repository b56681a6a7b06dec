// Copyright 2026 The uss Authors. Licensed under Apache-2.0.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use uss::{merge_misra_gries, merge_unbiased, Mode, Sketch};
use uss_harness::report::{queries_csv, report_json};
use uss_harness::{
    ingest_csv, ingest_report, run_with_threads, sketch_rows, write_report, write_stream, ExperimentConfig, Format,
    HarnessError, Result,
};

#[derive(Parser)]
#[command(name = "uss", version, about = "Unbiased Space Saving experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Unbiased,
    Deterministic,
}

#[derive(Clone, Copy, ValueEnum)]
enum MergeKindArg {
    Unbiased,
    MisraGries,
}

#[derive(Subcommand)]
enum Command {
    /// Dump the stream described by a config, with its ground truth.
    Generate {
        #[arg(long)]
        config: PathBuf,
        /// Replaces the ordering seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
    },
    /// Run an experiment config and write its report.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Replaces the global seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; the report goes to stdout when neither this nor
        /// the config names one.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Merge two serialized sketches.
    MergeDemo {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        m: usize,
        #[arg(long, value_enum, default_value = "unbiased")]
        kind: MergeKindArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for `merged.json`; stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sketch a CSV event log and report against its exact totals.
    Ingest {
        input: PathBuf,
        /// Key column; repeat for a composite key.
        #[arg(long = "key", required = true)]
        keys: Vec<String>,
        #[arg(long)]
        weight: Option<String>,
        #[arg(long, default_value_t = 100)]
        m: usize,
        #[arg(long, value_enum, default_value = "unbiased")]
        mode: ModeArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of most frequent keys reported individually.
        #[arg(long, default_value_t = 20)]
        top: usize,
        /// Directory for the report and `sketch.json`; stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Generate { config, seed, out, format } => {
            let config = ExperimentConfig::load(&config)?;
            let spec = match seed {
                Some(s) => config.stream.reseeded(s),
                None => config.stream,
            };
            let (truth, files) = write_stream(&spec, &out, format.into())?;
            eprintln!("{} rows over {} items", truth.total(), truth.universe());
            print_files(&files);
        }
        Command::Run { config, seed, out, format, threads } => {
            let mut config = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                config.seed = s;
            }
            let format = format.map(Format::from).unwrap_or(config.output.format);
            let report = run_with_threads(&config, threads)?;
            match out.or(config.output.dir) {
                Some(dir) => print_files(&write_report(&report, format, &dir)?),
                None => match format {
                    Format::Csv => print!("{}", queries_csv(&report)),
                    Format::Json => print!("{}", report_json(&report)),
                },
            }
        }
        Command::MergeDemo { a, b, m, kind, seed, out } => {
            let merged = match (read_sketch::<u64>(&a), read_sketch::<u64>(&b)) {
                (Ok(x), Ok(y)) => merge_json(&x, &y, m, kind, seed)?,
                _ => merge_json(&read_sketch::<String>(&a)?, &read_sketch::<String>(&b)?, m, kind, seed)?,
            };
            emit_text(out.as_deref(), "merged.json", &merged)?;
        }
        Command::Ingest { input, keys, weight, m, mode, seed, top, out, format } => {
            let mode = match mode {
                ModeArg::Unbiased => Mode::Unbiased,
                ModeArg::Deterministic => Mode::Deterministic,
            };
            let key_refs: Vec<&str> = keys.iter().map(String::as_str).collect();
            let rows = ingest_csv(&input, &key_refs, weight.as_deref())?;
            let (sketch, exact) = sketch_rows(rows, m, mode, seed)?;
            let name = match mode {
                Mode::Unbiased => format!("unbiased_m{m}"),
                Mode::Deterministic => format!("deterministic_m{m}"),
            };
            let report = ingest_report(&sketch, &exact, top, 0.95, &name);
            match out {
                Some(dir) => {
                    let mut files = write_report(&report, format.into(), &dir)?;
                    let path = dir.join("sketch.json");
                    std::fs::write(&path, sketch.to_json()?)
                        .map_err(|e| HarnessError::Io { path: path.clone(), source: e })?;
                    files.push(path);
                    print_files(&files);
                }
                None => match Format::from(format) {
                    Format::Csv => print!("{}", queries_csv(&report)),
                    Format::Json => print!("{}", report_json(&report)),
                },
            }
        }
    }
    Ok(())
}

fn read_sketch<K>(path: &Path) -> Result<Sketch<K, f64>>
where
    K: std::hash::Hash + Eq + Clone + serde::Serialize + serde::de::DeserializeOwned,
{
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io { path: path.to_path_buf(), source: e })?;
    Sketch::from_json(&text).map_err(|e| HarnessError::Parse { path: path.to_path_buf(), message: e.to_string() })
}

fn merge_json<K>(a: &Sketch<K, f64>, b: &Sketch<K, f64>, m: usize, kind: MergeKindArg, seed: u64) -> Result<String>
where
    K: std::hash::Hash + Eq + Clone + serde::Serialize + serde::de::DeserializeOwned,
{
    let merged = match kind {
        MergeKindArg::Unbiased => merge_unbiased(a, b, m, &mut ChaCha8Rng::seed_from_u64(seed))?,
        MergeKindArg::MisraGries => merge_misra_gries(a, b, m)?,
    };
    Ok(merged.sketch.to_json()?)
}

fn emit_text(dir: Option<&Path>, name: &str, text: &str) -> Result<()> {
    match dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| HarnessError::Io { path: dir.to_path_buf(), source: e })?;
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| HarnessError::Io { path: path.clone(), source: e })?;
            print_files(&[path]);
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn print_files(files: &[PathBuf]) {
    for f in files {
        println!("{}", f.display());
    }
}
