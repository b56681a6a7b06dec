// Copyright 2026 The uss Authors. Licensed under Apache-2.0.

use std::hash::Hash;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};

/// Multiplicative step applied to the sampling rate on overflow.
pub const RATE_DECAY: f64 = 0.9;

/// Adaptive sample-and-hold.
///
/// An unseen item enters with the current rate `p`; a held item counts
/// every later row exactly. When more than `capacity` items are held the
/// rate drops to `p' = 0.9 p`, and each counter either survives unchanged
/// (probability `p' / p`) or loses a `Geometric(p')` number of rows on
/// `{1, 2, ...}`; counters that reach zero are dropped. The estimate of a
/// held item adds back `(1 - p) / p`, the mean number of rows missed before
/// entry.
#[derive(Debug, Clone)]
pub struct SampleAndHold<K> {
    capacity: usize,
    rate: f64,
    counters: FxHashMap<K, u64>,
    rng: ChaCha8Rng,
}

impl<K: Hash + Eq + Clone> SampleAndHold<K> {
    pub fn new(capacity: usize, seed: u64) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidCapacity(capacity));
        }
        Ok(SampleAndHold { capacity, rate: 1.0, counters: FxHashMap::default(), rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn len(&self) -> usize {
        self.counters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counters.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn update(&mut self, item: K) {
        if let Some(c) = self.counters.get_mut(&item) {
            *c += 1;
            return;
        }
        if self.rate < 1.0 && !self.rng.random_bool(self.rate) {
            return;
        }
        self.counters.insert(item, 1);
        while self.counters.len() > self.capacity {
            self.lower_rate();
        }
    }

    fn lower_rate(&mut self) {
        let old = self.rate;
        let new = old * RATE_DECAY;
        let keep = new / old;
        let geometric = Geometric::new(new).expect("rate in (0, 1)");
        let rng = &mut self.rng;
        self.counters.retain(|_, c| {
            if rng.random_bool(keep) {
                return true;
            }
            // Rows discarded until one is accepted at the new rate.
            let missed = 1 + geometric.sample(rng);
            if missed >= *c {
                false
            } else {
                *c -= missed;
                true
            }
        });
        self.rate = new;
    }

    /// Raw counter (rows seen since entry), 0 if not held.
    pub fn counter(&self, item: &K) -> u64 {
        self.counters.get(item).copied().unwrap_or(0)
    }

    pub fn estimate(&self, item: &K) -> f64 {
        match self.counters.get(item) {
            Some(c) => *c as f64 + (1.0 - self.rate) / self.rate,
            None => 0.0,
        }
    }

    pub fn estimate_where(&self, mut in_subset: impl FnMut(&K) -> bool) -> f64 {
        let bonus = (1.0 - self.rate) / self.rate;
        self.counters.iter().filter(|(k, _)| in_subset(k)).map(|(_, c)| *c as f64 + bonus).sum()
    }
}
