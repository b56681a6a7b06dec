// Copyright 2026 The uss Authors. Licensed under Apache-2.0.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A priority sample: the `m` items with the smallest priorities
/// `R_i = U_i / n_i`, and the threshold `tau`, the `(m+1)`-th smallest
/// priority (infinite when there are at most `m` items).
///
/// A kept item's adjusted value is `max(n_i, 1 / tau)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrioritySample<K> {
    /// `(label, value, priority)`.
    pub kept: Vec<(K, f64, f64)>,
    pub threshold: f64,
}

/// Draws a priority sample of size `m` from pre-aggregated `(item, value)`
/// pairs.
pub fn priority_sample<K: Clone>(items: &[(K, f64)], m: usize, seed: u64) -> Result<PrioritySample<K>> {
    PrioritySample::draw(items, m, &mut ChaCha8Rng::seed_from_u64(seed))
}

impl<K: Clone> PrioritySample<K> {
    pub fn draw<R: Rng + ?Sized>(items: &[(K, f64)], m: usize, rng: &mut R) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidCapacity(m));
        }
        let mut ranked: Vec<(usize, f64)> = Vec::with_capacity(items.len());
        for (i, (_, v)) in items.iter().enumerate() {
            if !(*v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("item value {v} is not positive")));
            }
            // U in (0, 1].
            let u = 1.0 - rng.random::<f64>();
            ranked.push((i, u / v));
        }
        let threshold = if ranked.len() > m {
            ranked.select_nth_unstable_by(m, |a, b| a.1.total_cmp(&b.1));
            let tau = ranked[m].1;
            ranked.truncate(m);
            tau
        } else {
            f64::INFINITY
        };
        ranked.sort_by(|a, b| a.1.total_cmp(&b.1));
        let kept = ranked.into_iter().map(|(i, r)| (items[i].0.clone(), items[i].1, r)).collect();
        Ok(PrioritySample { kept, threshold })
    }

    /// Horvitz-Thompson style adjusted value of a kept item.
    #[inline]
    pub fn adjusted(&self, value: f64) -> f64 {
        value.max(1.0 / self.threshold)
    }

    /// Sum of adjusted values over kept items accepted by `in_subset`.
    pub fn estimate_where(&self, mut in_subset: impl FnMut(&K) -> bool) -> f64 {
        self.kept.iter().filter(|(k, _, _)| in_subset(k)).map(|(_, v, _)| self.adjusted(*v)).sum()
    }

    /// Adjusted `(label, value)` pairs.
    pub fn adjusted_entries(&self) -> Vec<(K, f64)> {
        self.kept.iter().map(|(k, v, _)| (k.clone(), self.adjusted(*v))).collect()
    }

    pub fn len(&self) -> usize {
        self.kept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kept.is_empty()
    }
}
