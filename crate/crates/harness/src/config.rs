// Copyright 2026 The uss Authors. Licensed under Apache-2.0.

//! Experiment configuration, read from JSON.
//!
//! ```json
//! {
//!   "stream": {
//!     "counts": { "weibull_grid": { "shape": 0.7, "scale": 790.0, "grid_size": 1000 } },
//!     "ordering": "sorted_ascending"
//!   },
//!   "sketches": [ { "mode": "unbiased", "m": 100 }, { "mode": "deterministic", "m": 100 } ],
//!   "baselines": [ { "kind": "priority", "m": 100 } ],
//!   "queries": { "epochs": { "k": 10 } },
//!   "replicates": 1000,
//!   "seed": 1
//! }
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use uss::streams::{Ordering, StreamSpec};
use uss::{ItemId, Mode};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub stream: StreamSpec,
    #[serde(default)]
    pub sketches: Vec<SketchConfig>,
    #[serde(default)]
    pub baselines: Vec<BaselineConfig>,
    pub queries: QueryPlan,
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    /// Nominal interval level.
    #[serde(default = "default_level")]
    pub level: f64,
    /// Emit per-item inclusion rows for the sketches.
    #[serde(default = "default_true")]
    pub inclusion: bool,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_level() -> f64 {
    0.95
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SketchConfig {
    pub mode: Mode,
    pub m: usize,
    #[serde(default)]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaselineConfig {
    /// Priority sample of the exact per-item counts.
    Priority {
        m: usize,
        #[serde(default)]
        name: Option<String>,
    },
    BottomK {
        k: usize,
        #[serde(default)]
        name: Option<String>,
    },
    SampleAndHold {
        capacity: usize,
        #[serde(default)]
        name: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryPlan {
    /// `count` subsets of `size` items drawn without replacement from the
    /// item universe. Drawn once from `seed`, then evaluated on every
    /// replicate.
    RandomSubsets {
        count: usize,
        size: usize,
        seed: u64,
    },
    /// Frequency-rank epochs.
    Epochs {
        k: usize,
    },
    Explicit {
        sets: Vec<Vec<ItemId>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

impl SketchConfig {
    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            let mode = match self.mode {
                Mode::Unbiased => "unbiased",
                Mode::Deterministic => "deterministic",
            };
            format!("{mode}_m{}", self.m)
        })
    }
}

impl BaselineConfig {
    pub fn label(&self) -> String {
        match self {
            BaselineConfig::Priority { m, name } => name.clone().unwrap_or_else(|| format!("priority_m{m}")),
            BaselineConfig::BottomK { k, name } => name.clone().unwrap_or_else(|| format!("bottom_k_k{k}")),
            BaselineConfig::SampleAndHold { capacity, name } => {
                name.clone().unwrap_or_else(|| format!("sample_and_hold_m{capacity}"))
            }
        }
    }

    /// Entries held: bins, samples or counters.
    pub fn space(&self) -> usize {
        match self {
            BaselineConfig::Priority { m, .. } => *m,
            BaselineConfig::BottomK { k, .. } => *k,
            BaselineConfig::SampleAndHold { capacity, .. } => *capacity,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(json: &str) -> Result<Self> {
        let config: ExperimentConfig =
            serde_json::from_str(json).map_err(|e| HarnessError::config("<document>", e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(HarnessError::config("replicates", "must be at least 1"));
        }
        if self.sketches.is_empty() && self.baselines.is_empty() {
            return Err(HarnessError::config("sketches", "at least one sketch or baseline is required"));
        }
        for (i, s) in self.sketches.iter().enumerate() {
            if s.m == 0 {
                return Err(HarnessError::config(format!("sketches[{i}].m"), "must be at least 1"));
            }
        }
        for (i, b) in self.baselines.iter().enumerate() {
            if b.space() == 0 {
                return Err(HarnessError::config(format!("baselines[{i}]"), "size must be at least 1"));
            }
        }
        let mut names: Vec<String> = self.estimator_labels();
        names.sort();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(HarnessError::config("sketches", format!("duplicate estimator name `{}`", w[0])));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(HarnessError::config("level", "must lie in (0, 1)"));
        }
        match &self.queries {
            QueryPlan::RandomSubsets { count, size, .. } => {
                if *count == 0 || *size == 0 {
                    return Err(HarnessError::config("queries.random_subsets", "count and size must be at least 1"));
                }
            }
            QueryPlan::Epochs { k } => {
                if *k == 0 {
                    return Err(HarnessError::config("queries.epochs.k", "must be at least 1"));
                }
            }
            QueryPlan::Explicit { sets } => {
                if sets.is_empty() {
                    return Err(HarnessError::config("queries.explicit.sets", "must not be empty"));
                }
            }
        }
        if let Ordering::AdversarialAppend { m: Some(0) } = self.stream.ordering {
            return Err(HarnessError::config("stream.ordering.adversarial_append.m", "must be at least 1"));
        }
        Ok(())
    }

    pub fn estimator_labels(&self) -> Vec<String> {
        self.sketches.iter().map(SketchConfig::label).chain(self.baselines.iter().map(BaselineConfig::label)).collect()
    }
}
