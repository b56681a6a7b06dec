// Copyright 2026 The uss Authors. Licensed under Apache-2.0.

use std::collections::BinaryHeap;
use std::hash::{BuildHasher, Hash};

use rustc_hash::{FxBuildHasher, FxHashMap};

use crate::error::{Error, Result};

/// Uniform sample of distinct items: the `k` items with the smallest seeded
/// hash, each with its exact count.
///
/// An item that is rejected or evicted can never return, because the `k`-th
/// smallest hash only decreases; so every kept item has been counted since
/// its first row.
#[derive(Debug, Clone)]
pub struct BottomK<K> {
    k: usize,
    seed: u64,
    keys: [u64; 2],
    kept: FxHashMap<K, (u32, u64)>,
    labels: Vec<K>,
    heap: BinaryHeap<(u64, u32)>,
    saturated: bool,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Maps a 64-bit hash to the open interval (0, 1).
#[inline]
fn unit(h: u64) -> f64 {
    ((h >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Runs a bottom-k sample over a stream of items.
pub fn bottom_k_sample<K: Hash + Eq + Clone>(
    stream: impl IntoIterator<Item = K>,
    k: usize,
    seed: u64,
) -> Result<BottomK<K>> {
    let mut sample = BottomK::new(k, seed)?;
    for item in stream {
        sample.update(item);
    }
    Ok(sample)
}

impl<K: Hash + Eq + Clone> BottomK<K> {
    pub fn new(k: usize, seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidCapacity(k));
        }
        Ok(BottomK {
            k,
            seed,
            keys: [splitmix64(seed), splitmix64(seed ^ 0x5851_f42d_4c95_7f2d)],
            kept: FxHashMap::default(),
            labels: Vec::with_capacity(k),
            heap: BinaryHeap::with_capacity(k + 1),
            saturated: false,
        })
    }

    #[inline]
    fn hash(&self, item: &K) -> u64 {
        // Two keyed rounds; a single xor-keyed round leaves visible correlation
        // between items across seeds.
        splitmix64(splitmix64(FxBuildHasher.hash_one(item) ^ self.keys[0]) ^ self.keys[1])
    }

    /// Normalised hash of `item` in (0, 1).
    pub fn item_hash(&self, item: &K) -> f64 {
        unit(self.hash(item))
    }

    pub fn update(&mut self, item: K) {
        self.update_many(item, 1);
    }

    pub fn update_many(&mut self, item: K, times: u64) {
        if let Some((_, c)) = self.kept.get_mut(&item) {
            *c += times;
            return;
        }
        let h = self.hash(&item);
        if self.labels.len() < self.k {
            let slot = self.labels.len() as u32;
            self.labels.push(item.clone());
            self.kept.insert(item, (slot, times));
            self.heap.push((h, slot));
            return;
        }
        self.saturated = true;
        let &(top, slot) = self.heap.peek().expect("k >= 1");
        if h < top {
            self.heap.pop();
            let old = std::mem::replace(&mut self.labels[slot as usize], item.clone());
            self.kept.remove(&old);
            self.kept.insert(item, (slot, times));
            self.heap.push((h, slot));
        }
    }

    /// `(D_hat / k)`, the weight applied to every kept count; 1 while no
    /// item has been turned away. `D_hat = (k - 1) / h_(k)`.
    pub fn scale(&self) -> f64 {
        if !self.saturated {
            return 1.0;
        }
        let hk = unit(self.heap.peek().expect("saturated implies full").0);
        (self.k as f64 - 1.0) / hk / self.k as f64
    }

    /// Estimated number of distinct items.
    pub fn distinct_estimate(&self) -> f64 {
        self.scale() * self.k as f64
    }

    pub fn estimate_where(&self, mut in_subset: impl FnMut(&K) -> bool) -> f64 {
        let sum: u64 = self.kept.iter().filter(|(k, _)| in_subset(k)).map(|(_, (_, c))| *c).sum();
        self.scale() * sum as f64
    }

    pub fn contains(&self, item: &K) -> bool {
        self.kept.contains_key(item)
    }

    pub fn count(&self, item: &K) -> u64 {
        self.kept.get(item).map_or(0, |(_, c)| *c)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}
