// Copyright 2026 The uss Authors. Licensed under Apache-2.0.

//! Unbiased Space Saving.
//!
//! A capacity-`m` counter sketch that answers two questions from a single
//! pass over a disaggregated stream: which items are frequent, and what is
//! the total count of an arbitrary, post-hoc chosen subset of items.
//!
//! The deterministic Space Saving update overwrites the label of the
//! smallest bin whenever an unseen item arrives. The unbiased variant only
//! overwrites it with probability `1 / (N_min + 1)`, which makes every
//! per-item estimate, and therefore every subset sum, unbiased.
//!
//! ```
//! use uss::{Mode, Sketch, SubsetQuery};
//!
//! let mut sketch: Sketch<u64> = Sketch::new(4, Mode::Unbiased, 7).unwrap();
//! for row in [1, 1, 2, 3, 1, 4, 5, 6, 1] {
//!     sketch.update(row);
//! }
//! assert_eq!(sketch.estimate(&1), 4);
//!
//! let all = uss::subset_sum(&sketch, &SubsetQuery::all(), 0.95);
//! assert_eq!(all.estimate, 9.0);
//! ```
//!
//! Modules:
//!
//! * [`sketch`]: the two update rules over a stream-summary index.
//! * [`reductions`]: Misra-Gries soft thresholding and thresholded PPS size reduction.
//! * [`merge`]: unbiased (priority sampling) and Misra-Gries merges.
//! * [`sampling`]: priority sampling, bottom-k and adaptive sample-and-hold baselines.
//! * [`estimation`]: subset sums, the variance estimator and normal intervals.
//! * [`streams`]: synthetic stream generators with exact ground truth.

pub mod error;
pub mod estimation;
pub mod merge;
pub mod reductions;
pub mod sampling;
pub mod sketch;
pub mod streams;
mod summary;

pub use error::{Error, Result};
pub use estimation::{
    coverage, normal_quantile, pps_variance_bound, subset_sum, QueryResult, SubsetEstimator, SubsetQuery,
};
pub use merge::{merge_misra_gries, merge_unbiased, MergeKind, MergeResult};
pub use reductions::{reduce_pps, solve_alpha, to_misra_gries, ReducedSummary, ReductionKind};
pub use sketch::{Count, Entries, Mode, Sketch, SketchRecord};
pub use streams::{GroundTruth, ItemId};
