// Copyright 2026 The uss Authors. Licensed under Apache-2.0.

//! Size reductions shared by the frequent-item family.
//!
//! Every frequent-item sketch is "exact increment, then shrink back to `m`
//! bins". Misra-Gries shrinks by soft thresholding, which biases counts
//! downwards. A thresholded PPS sample with Horvitz-Thompson adjusted
//! counts shrinks while keeping every expected estimate unchanged.

use std::hash::Hash;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sketch::{Count, Entries, Sketch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionKind {
    MisraGries,
    ThresholdedPps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedSummary<K> {
    /// `(label, adjusted count)`, all counts positive.
    pub entries: Vec<(K, f64)>,
    pub kind: ReductionKind,
    pub rows_processed: u64,
}

impl<K: Clone> Entries<K> for ReducedSummary<K> {
    fn entries(&self) -> Vec<(K, f64)> {
        self.entries.clone()
    }

    fn rows_processed(&self) -> u64 {
        self.rows_processed
    }
}

impl<K: PartialEq> ReducedSummary<K> {
    pub fn estimate(&self, item: &K) -> f64 {
        self.entries.iter().find(|(k, _)| k == item).map_or(0.0, |(_, c)| *c)
    }
}

/// Misra-Gries view of a sketch: every count soft thresholded by `N_min`.
/// Zero entries are dropped; output is in descending count order.
pub fn to_misra_gries<K: Hash + Eq + Clone, C: Count>(sketch: &Sketch<K, C>) -> ReducedSummary<K> {
    let floor = sketch.min_count().to_f64();
    let mut entries: Vec<(K, f64)> = sketch
        .bins()
        .filter_map(|(k, c)| {
            let v = c.to_f64() - floor;
            (v > 0.0).then(|| (k.clone(), v))
        })
        .collect();
    entries.reverse();
    ReducedSummary { entries, kind: ReductionKind::MisraGries, rows_processed: sketch.rows_processed() }
}

/// Solves `sum_i min(1, alpha * v_i) = target` for `alpha`.
///
/// The left side is piecewise linear in `alpha`, so once the number of
/// capped items `k` is known the root is `(target - k) / sum(uncapped)`.
/// Scanning `k` upward over the sorted values finds the segment directly.
/// Returns `None` when `values.len() <= target` (every item is kept) or any
/// value is not positive.
pub fn solve_alpha(values: &[f64], target: usize) -> Option<f64> {
    let n = values.len();
    if n <= target || target == 0 || values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    if sorted[0] == sorted[n - 1] {
        return Some(target as f64 / (n as f64 * sorted[0]));
    }
    // suffix[k] = sum of sorted[k..], accumulated from the small end.
    let mut suffix = vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + sorted[i];
    }
    for k in 0..target {
        let alpha = (target - k) as f64 / suffix[k];
        if alpha * sorted[k] <= 1.0 {
            return Some(alpha);
        }
    }
    unreachable!("k = target - 1 leaves one unit for at least two items")
}

/// `sum_i min(1, alpha * v_i) - target`.
pub fn alpha_residual(values: &[f64], alpha: f64, target: usize) -> f64 {
    values.iter().map(|v| (alpha * v).min(1.0)).sum::<f64>() - target as f64
}

/// Thresholded PPS reduction to at most `target` entries.
///
/// Inclusion probabilities are `pi_i = min(1, alpha * n_i)` with `alpha`
/// from [`solve_alpha`]. Items with `pi_i = 1` are always kept; the rest are
/// drawn by systematic sampling from a uniform start, which hits the
/// marginal `pi_i` exactly and always returns `target` entries. Kept entries
/// carry `n_i / pi_i`.
pub fn reduce_pps<K: Clone, R: Rng + ?Sized>(
    entries: &[(K, f64)],
    target: usize,
    rng: &mut R,
) -> Result<ReducedSummary<K>> {
    if target == 0 {
        return Err(Error::InvalidCapacity(target));
    }
    if let Some((_, v)) = entries.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidInput(format!("entry value {v} is not positive")));
    }
    let out =
        |entries: Vec<(K, f64)>| ReducedSummary { entries, kind: ReductionKind::ThresholdedPps, rows_processed: 0 };
    let values: Vec<f64> = entries.iter().map(|(_, v)| *v).collect();
    let Some(alpha) = solve_alpha(&values, target) else {
        return Ok(out(entries.to_vec()));
    };

    let mut kept = Vec::with_capacity(target);
    let mut uncertain = Vec::with_capacity(entries.len());
    for (k, v) in entries {
        let pi = alpha * v;
        if pi >= 1.0 {
            kept.push((k.clone(), *v));
        } else {
            uncertain.push((k, *v, pi));
        }
    }
    let draws = target - kept.len();
    let start: f64 = rng.random();
    let mut next_point = start;
    let mut cum = 0.0;
    let last = uncertain.len().saturating_sub(1);
    for (i, (k, v, pi)) in uncertain.iter().enumerate() {
        cum += pi;
        // The final interval absorbs rounding so exactly `draws` points land.
        if kept.len() < target && (next_point < cum || i == last) {
            kept.push(((*k).clone(), v / pi));
            next_point += 1.0;
        }
    }
    debug_assert_eq!(kept.len(), target, "systematic design drew {} of {draws}", kept.len());
    Ok(out(kept))
}
