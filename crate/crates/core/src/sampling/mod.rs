// Copyright 2026 The uss Authors. Licensed under Apache-2.0.

//! Baselines that answer the same subset-sum queries as the sketch:
//! priority sampling on pre-aggregated counts, bottom-k uniform item
//! sampling, and adaptive sample-and-hold.

mod bottom_k;
mod priority;
mod sample_hold;

pub use bottom_k::{bottom_k_sample, BottomK};
pub use priority::{priority_sample, PrioritySample};
pub use sample_hold::SampleAndHold;
