// Copyright 2026 The uss Authors. Licensed under Apache-2.0.

//! Merging two summaries into one of capacity `m`.
//!
//! Counts of labels present in both inputs are summed first. The unbiased
//! merge then shrinks the combined entries with priority sampling, so the
//! expected merged estimate of every item equals the sum of its input
//! estimates. The Misra-Gries merge soft thresholds by the `(m+1)`-th
//! largest combined count instead, which keeps its deterministic error
//! guarantee but biases every count downwards.

use std::hash::Hash;

use rand::Rng;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::PrioritySample;
use crate::sketch::{Entries, Mode, Sketch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergeKind {
    Unbiased,
    MisraGries,
}

#[derive(Debug, Clone)]
pub struct MergeResult<K> {
    pub sketch: Sketch<K, f64>,
    pub kind: MergeKind,
}

fn combine<K: Hash + Eq + Clone>(a: &impl Entries<K>, b: &impl Entries<K>) -> Vec<(K, f64)> {
    let mut out: Vec<(K, f64)> = a.entries();
    let mut at: FxHashMap<K, usize> = out.iter().enumerate().map(|(i, (k, _))| (k.clone(), i)).collect();
    for (k, v) in b.entries() {
        match at.get(&k) {
            Some(&i) => out[i].1 += v,
            None => {
                at.insert(k.clone(), out.len());
                out.push((k, v));
            }
        }
    }
    out.retain(|(_, v)| *v > 0.0);
    out
}

/// Unbiased merge down to `m` bins by priority sampling.
pub fn merge_unbiased<K, A, B, R>(a: &A, b: &B, m: usize, rng: &mut R) -> Result<MergeResult<K>>
where
    K: Hash + Eq + Clone,
    A: Entries<K>,
    B: Entries<K>,
    R: Rng + ?Sized,
{
    if m == 0 {
        return Err(Error::InvalidCapacity(m));
    }
    let rows = a.rows_processed() + b.rows_processed();
    let combined = combine(a, b);
    let entries =
        if combined.len() <= m { combined } else { PrioritySample::draw(&combined, m, rng)?.adjusted_entries() };
    let sketch = Sketch::from_entries(m, Mode::Unbiased, rows, entries, rng.random())?;
    Ok(MergeResult { sketch, kind: MergeKind::Unbiased })
}

/// Misra-Gries merge: `(N_a + N_b - N_(m+1))_+` where `N_(m+1)` is the
/// `(m+1)`-th largest combined count (0 if there are at most `m`).
pub fn merge_misra_gries<K, A, B>(a: &A, b: &B, m: usize) -> Result<MergeResult<K>>
where
    K: Hash + Eq + Clone,
    A: Entries<K>,
    B: Entries<K>,
{
    if m == 0 {
        return Err(Error::InvalidCapacity(m));
    }
    let rows = a.rows_processed() + b.rows_processed();
    let mut combined = combine(a, b);
    if combined.len() > m {
        let mut counts: Vec<f64> = combined.iter().map(|(_, v)| *v).collect();
        counts.select_nth_unstable_by(m, |x, y| y.total_cmp(x));
        let cut = counts[m];
        combined = combined
            .into_iter()
            .filter_map(|(k, v)| {
                let w = v - cut;
                (w > 0.0).then_some((k, w))
            })
            .collect();
    }
    let sketch = Sketch::from_entries(m, Mode::Deterministic, rows, combined, 0)?;
    Ok(MergeResult { sketch, kind: MergeKind::MisraGries })
}
