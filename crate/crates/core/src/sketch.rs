// Copyright 2026 The uss Authors. Licensed under Apache-2.0.

//! Deterministic and Unbiased Space Saving.
//!
//! Both rules keep at most `m` `(label, count)` bins. A row whose item is a
//! current label increments that bin. Otherwise, once all bins are in use,
//! one of the minimum-count bins (chosen uniformly) is incremented and its
//! label is replaced by the new item with probability `p`: `p = 1` for
//! [`Mode::Deterministic`] and `p = 1 / (N_min + 1)` for [`Mode::Unbiased`],
//! where `N_min` is the minimum count before the increment. The counter
//! always increments, so the bin counts always sum to the stream length.

use std::fmt::Debug;
use std::hash::Hash;
use std::ops::Add;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::summary::StreamSummary;

/// Record format version written by [`Sketch::to_record`].
pub const RECORD_VERSION: u32 = 1;

/// Label replacement rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Classic Space Saving: always relabel.
    Deterministic,
    /// Relabel with probability `1 / (N_min + 1)`.
    Unbiased,
}

/// Bin count representation.
///
/// `u64` is exact and is what unit-weight streams use. `f64` is needed once
/// weighted updates or merges introduce Horvitz-Thompson adjusted counts.
pub trait Count:
    Copy + PartialOrd + Debug + Add<Output = Self> + Send + Sync + Serialize + DeserializeOwned + 'static
{
    const ZERO: Self;
    const ONE: Self;

    fn to_f64(self) -> f64;

    fn from_u64(n: u64) -> Self;

    /// Draws a Bernoulli with success probability `1 / (self + 1)`.
    fn relabel_draw<R: Rng>(self, rng: &mut R) -> bool;
}

impl Count for u64 {
    const ZERO: Self = 0;
    const ONE: Self = 1;

    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }

    #[inline]
    fn from_u64(n: u64) -> Self {
        n
    }

    #[inline]
    fn relabel_draw<R: Rng>(self, rng: &mut R) -> bool {
        rng.random_range(0..=self) == 0
    }
}

impl Count for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;

    #[inline]
    fn to_f64(self) -> f64 {
        self
    }

    #[inline]
    fn from_u64(n: u64) -> Self {
        n as f64
    }

    #[inline]
    fn relabel_draw<R: Rng>(self, rng: &mut R) -> bool {
        rng.random::<f64>() * (self + 1.0) < 1.0
    }
}

/// Anything that exposes `(label, count)` entries: sketches and reduced
/// summaries. Merges accept either.
pub trait Entries<K> {
    fn entries(&self) -> Vec<(K, f64)>;

    /// Rows (or total weight for weighted inputs) summarised.
    fn rows_processed(&self) -> u64;
}

/// A capacity-`m` Space Saving sketch over keys `K` with counts `C`.
#[derive(Debug, Clone)]
pub struct Sketch<K, C = u64> {
    capacity: usize,
    mode: Mode,
    rows: u64,
    seed: u64,
    rng: ChaCha8Rng,
    summary: StreamSummary<K, C>,
}

/// Serialized form of a sketch. Bins are listed in ascending count order,
/// which is also the order they are re-inserted on load, so a restored sketch
/// continues with bit-identical behaviour.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SketchRecord<K, C> {
    pub version: u32,
    pub mode: Mode,
    pub capacity: usize,
    pub rows_processed: u64,
    pub seed: u64,
    pub rng: ChaCha8Rng,
    pub bins: Vec<(K, C)>,
}

impl<K: Hash + Eq + Clone, C: Count> Sketch<K, C> {
    pub fn new(capacity: usize, mode: Mode, seed: u64) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidCapacity(capacity));
        }
        Ok(Sketch {
            capacity,
            mode,
            rows: 0,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            summary: StreamSummary::with_capacity(capacity),
        })
    }

    /// Builds a sketch holding the given bins. Labels must be distinct and
    /// counts positive; at most `capacity` entries.
    pub fn from_entries(
        capacity: usize,
        mode: Mode,
        rows_processed: u64,
        entries: impl IntoIterator<Item = (K, C)>,
        seed: u64,
    ) -> Result<Self> {
        let mut sketch = Self::new(capacity, mode, seed)?;
        sketch.rows = rows_processed;
        for (label, count) in entries {
            if count.partial_cmp(&C::ZERO) != Some(std::cmp::Ordering::Greater) {
                return Err(Error::InvalidInput(format!("bin count {count:?} is not positive")));
            }
            if sketch.summary.len() == capacity {
                return Err(Error::InvalidInput(format!("more than {capacity} bins")));
            }
            if sketch.summary.find(&label).is_some() {
                return Err(Error::InvalidInput("duplicate bin label".into()));
            }
            sketch.summary.push(label, count);
        }
        Ok(sketch)
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rows_processed(&self) -> u64 {
        self.rows
    }

    /// Number of bins in use.
    pub fn len(&self) -> usize {
        self.summary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.summary.len() == 0
    }

    /// Processes one unit-weight row.
    #[inline]
    pub fn update(&mut self, item: K) {
        self.rows += 1;
        if let Some(slot) = self.summary.find(&item) {
            self.summary.increment(slot, C::ONE);
        } else if self.summary.len() < self.capacity {
            self.summary.push(item, C::ONE);
        } else {
            self.absent_step(item);
        }
    }

    /// Same distribution as calling [`update`](Self::update) `times` times
    /// with the same item, in far fewer steps.
    ///
    /// While the item has no bin, consecutive rows go to distinct bins of the
    /// minimum group and each flips the label with the same probability
    /// `1 / (N_min + 1)`. So the number of rows before a flip is geometric,
    /// and a level with no flip that covers the whole minimum group is one
    /// group re-key. Once the item holds a bin the remaining rows are added
    /// in one step.
    pub fn update_many(&mut self, item: K, times: u64) {
        if times == 0 {
            return;
        }
        self.rows += times;
        if let Some(slot) = self.summary.find(&item) {
            self.summary.increment(slot, C::from_u64(times));
            return;
        }
        if self.summary.len() < self.capacity {
            self.summary.push(item, C::from_u64(times));
            return;
        }
        let mut left = times;
        while left > 0 {
            let level = self.summary.min_count().expect("full sketch");
            let width = self.summary.min_members().len() as u64;
            let batch = width.min(left);
            let before_flip = match self.mode {
                Mode::Deterministic => 0,
                Mode::Unbiased => {
                    let p = 1.0 / (level.to_f64() + 1.0);
                    Geometric::new(p).expect("p in (0, 1]").sample(&mut self.rng)
                }
            };
            if before_flip >= batch {
                if batch == width {
                    self.summary.rekey_min_group(level + C::ONE);
                } else {
                    for _ in 0..batch {
                        let slot = self.pick_min();
                        self.summary.increment(slot, C::ONE);
                    }
                }
                left -= batch;
            } else {
                for _ in 0..before_flip {
                    let slot = self.pick_min();
                    self.summary.increment(slot, C::ONE);
                }
                let slot = self.pick_min();
                self.summary.increment(slot, C::ONE);
                self.summary.relabel(slot, item);
                left -= before_flip + 1;
                if left > 0 {
                    self.summary.increment(slot, C::from_u64(left));
                }
                return;
            }
        }
    }

    /// Unit update for an item without a bin on a full sketch. Returns the
    /// slot if the item took over a bin.
    #[inline]
    fn absent_step(&mut self, item: K) -> Option<u32> {
        let slot = self.pick_min();
        let n_min = self.summary.count(slot);
        self.summary.increment(slot, C::ONE);
        let relabel = match self.mode {
            Mode::Deterministic => true,
            Mode::Unbiased => n_min.relabel_draw(&mut self.rng),
        };
        if relabel {
            self.summary.relabel(slot, item);
            Some(slot)
        } else {
            None
        }
    }

    /// Uniformly random bin among those with the minimum count.
    #[inline]
    fn pick_min(&mut self) -> u32 {
        let members = self.summary.min_members();
        match members.len() {
            1 => members[0],
            n => members[self.rng.random_range(0..n)],
        }
    }

    /// Count of the item's bin, or zero if it has none.
    #[inline]
    pub fn estimate(&self, item: &K) -> C {
        self.summary.find(item).map_or(C::ZERO, |slot| self.summary.count(slot))
    }

    pub fn contains(&self, item: &K) -> bool {
        self.summary.find(item).is_some()
    }

    /// Smallest bin count; zero while the sketch has free bins.
    pub fn min_count(&self) -> C {
        if self.summary.len() < self.capacity {
            C::ZERO
        } else {
            self.summary.min_count().unwrap_or(C::ZERO)
        }
    }

    /// Bins whose count is at least `phi` times the total count, descending.
    pub fn frequent_items(&self, phi: f64) -> Result<Vec<(K, C)>> {
        if !(phi > 0.0 && phi <= 1.0) {
            return Err(Error::InvalidThreshold(phi));
        }
        let cut = phi * self.total_count();
        let mut out: Vec<(K, C)> =
            self.bins().filter(|(_, c)| c.to_f64() >= cut).map(|(k, c)| (k.clone(), c)).collect();
        out.reverse();
        Ok(out)
    }

    /// Sum of all bin counts. Equals `rows_processed` for unit-weight streams.
    pub fn total_count(&self) -> f64 {
        self.bins().map(|(_, c)| c.to_f64()).sum()
    }

    /// Bins in ascending count order.
    pub fn bins(&self) -> impl Iterator<Item = (&K, C)> + '_ {
        self.summary.iter_ascending()
    }

    pub fn to_record(&self) -> SketchRecord<K, C> {
        SketchRecord {
            version: RECORD_VERSION,
            mode: self.mode,
            capacity: self.capacity,
            rows_processed: self.rows,
            seed: self.seed,
            rng: self.rng.clone(),
            bins: self.bins().map(|(k, c)| (k.clone(), c)).collect(),
        }
    }

    pub fn from_record(record: SketchRecord<K, C>) -> Result<Self> {
        if record.version != RECORD_VERSION {
            return Err(Error::Serialization(format!("unsupported record version {}", record.version)));
        }
        let mut sketch =
            Self::from_entries(record.capacity, record.mode, record.rows_processed, record.bins, record.seed)?;
        sketch.rng = record.rng;
        Ok(sketch)
    }

    #[cfg(test)]
    pub(crate) fn check_invariants(&self) {
        self.summary.check_invariants();
        assert!(self.summary.len() <= self.capacity);
    }
}

impl<K, C> Sketch<K, C>
where
    K: Hash + Eq + Clone + Serialize + DeserializeOwned,
    C: Count,
{
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(&self.to_record()).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let record = serde_json::from_str(json).map_err(|e| Error::Serialization(e.to_string()))?;
        Self::from_record(record)
    }
}

impl<K: Hash + Eq + Clone> Sketch<K, f64> {
    /// Adds a row carrying `weight`.
    ///
    /// When the item has no bin and the sketch is full, the Unbiased rule
    /// draws a thresholded PPS sample over the new item and the minimum
    /// group `J`: values `N_min` for each bin in `J` and `weight` for the new
    /// item, `|J|` of the `|J| + 1` candidates survive, and survivors carry
    /// Horvitz-Thompson adjusted counts. This keeps every item's expected
    /// estimate equal to its pre-update estimate plus its own weight. The
    /// Deterministic rule adds the weight to a minimum bin and relabels it.
    pub fn update_weighted(&mut self, item: K, weight: f64) -> Result<()> {
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::InvalidWeight(weight));
        }
        self.rows += 1;
        if let Some(slot) = self.summary.find(&item) {
            self.summary.increment(slot, weight);
            return Ok(());
        }
        if self.summary.len() < self.capacity {
            self.summary.push(item, weight);
            return Ok(());
        }
        let slot = self.pick_min();
        match self.mode {
            Mode::Deterministic => {
                self.summary.increment(slot, weight);
                self.summary.relabel(slot, item);
            }
            Mode::Unbiased => {
                let n_min = self.summary.min_count().unwrap_or(0.0);
                let j = self.summary.min_members().len() as f64;
                if weight * (j - 1.0) <= j * n_min {
                    // pi_new = alpha * w, pi_bin = alpha * N_min, every survivor gets 1 / alpha.
                    let alpha = j / (weight + j * n_min);
                    if self.rng.random::<f64>() < alpha * weight {
                        self.summary.relabel(slot, item);
                    }
                    self.summary.rekey_min_group(n_min + weight / j);
                } else {
                    // pi_new clips to 1; one bin of J is dropped uniformly and
                    // the rest carry N_min / ((j - 1) / j).
                    self.summary.set_count(slot, weight);
                    self.summary.relabel(slot, item);
                    self.summary.rekey_min_group(n_min * j / (j - 1.0));
                }
            }
        }
        Ok(())
    }
}

impl<K: Hash + Eq + Clone, C: Count> Entries<K> for Sketch<K, C> {
    fn entries(&self) -> Vec<(K, f64)> {
        self.bins().map(|(k, c)| (k.clone(), c.to_f64())).collect()
    }

    fn rows_processed(&self) -> u64 {
        self.rows
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sorted_bins<C: Count>(s: &Sketch<u64, C>) -> Vec<(u64, C)> {
        let mut v: Vec<_> = s.bins().map(|(k, c)| (*k, c)).collect();
        v.sort_by_key(|(k, _)| *k);
        v
    }

    #[test]
    fn new_sketch_is_empty() {
        let s: Sketch<u64> = Sketch::new(2, Mode::Unbiased, 1).unwrap();
        assert_eq!(s.len(), 0);
        assert_eq!(s.rows_processed(), 0);
        assert_eq!(s.estimate(&42), 0);
        assert_eq!(s.min_count(), 0);
    }

    #[test]
    fn zero_capacity_is_rejected() {
        let err = Sketch::<u64>::new(0, Mode::Deterministic, 1).unwrap_err();
        assert_eq!(err, Error::InvalidCapacity(0));
    }

    #[test]
    fn fill_phase_creates_bins() {
        let mut s: Sketch<u64> = Sketch::new(2, Mode::Unbiased, 1).unwrap();
        s.update(7);
        assert_eq!(sorted_bins(&s), vec![(7, 1)]);
        assert_eq!(s.rows_processed(), 1);
    }

    #[test]
    fn deterministic_two_bin_pathology() {
        let c = 100;
        for seed in 0..20 {
            let mut s: Sketch<u64> = Sketch::new(2, Mode::Deterministic, seed).unwrap();
            s.update_many(1, c);
            s.update_many(2, c);
            s.update(3);
            s.update(4);
            assert_eq!(sorted_bins(&s), vec![(3, c + 1), (4, c + 1)]);
        }
    }

    #[test]
    fn estimate_reads_bin_count() {
        let mut s: Sketch<u64> = Sketch::new(3, Mode::Unbiased, 1).unwrap();
        for _ in 0..7 {
            s.update(5);
        }
        assert_eq!(s.estimate(&5), 7);
        assert_eq!(s.estimate(&6), 0);
    }

    #[test]
    fn frequent_items_below_capacity_are_exact() {
        let mut s: Sketch<u64> = Sketch::new(4, Mode::Unbiased, 3).unwrap();
        s.update_many(9, 100);
        assert_eq!(s.frequent_items(0.5).unwrap(), vec![(9, 100)]);
        assert_eq!(s.frequent_items(0.0).unwrap_err(), Error::InvalidThreshold(0.0));
        assert!(s.frequent_items(1.5).is_err());
    }

    #[test]
    fn frequent_items_are_descending() {
        let mut s: Sketch<u64> = Sketch::new(4, Mode::Deterministic, 3).unwrap();
        s.update_many(1, 10);
        s.update_many(2, 30);
        s.update_many(3, 20);
        let out = s.frequent_items(0.1).unwrap();
        assert_eq!(out, vec![(2, 30), (3, 20), (1, 10)]);
    }

    #[test]
    fn weighted_update_matches_unit_when_present() {
        let mut a: Sketch<u64, f64> = Sketch::new(2, Mode::Unbiased, 5).unwrap();
        let mut b: Sketch<u64, f64> = Sketch::new(2, Mode::Unbiased, 5).unwrap();
        a.update(1);
        b.update(1);
        a.update(1);
        b.update_weighted(1, 1.0).unwrap();
        assert_eq!(sorted_bins(&a), sorted_bins(&b));
    }

    #[test]
    fn weighted_update_uses_free_bin() {
        let mut s: Sketch<u64, f64> = Sketch::new(2, Mode::Unbiased, 5).unwrap();
        s.update_weighted(4, 2.5).unwrap();
        assert_eq!(sorted_bins(&s), vec![(4, 2.5)]);
        assert_eq!(s.update_weighted(4, 0.0).unwrap_err(), Error::InvalidWeight(0.0));
        assert!(s.update_weighted(4, f64::NAN).is_err());
        assert!(s.update_weighted(4, -1.0).is_err());
    }

    #[test]
    fn weighted_clipped_branch_keeps_new_item() {
        // J = {a, b} at count 1, weight 5: 5 * 1 > 2 * 1 so the new item is kept.
        let mut s: Sketch<u64, f64> = Sketch::from_entries(2, Mode::Unbiased, 2, vec![(1, 1.0), (2, 1.0)], 9).unwrap();
        s.update_weighted(3, 5.0).unwrap();
        s.check_invariants();
        assert_eq!(s.estimate(&3), 5.0);
        let others = s.estimate(&1) + s.estimate(&2);
        assert_eq!(others, 2.0);
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn update_many_matches_repeated_updates_when_deterministic() {
        let mut a: Sketch<u64> = Sketch::new(5, Mode::Deterministic, 11).unwrap();
        let mut b: Sketch<u64> = Sketch::new(5, Mode::Deterministic, 11).unwrap();
        for item in 0..200u64 {
            let times = item % 13 + 1;
            for _ in 0..times {
                a.update(item);
            }
            b.update_many(item, times);
        }
        assert_eq!(sorted_bins(&a), sorted_bins(&b));
    }

    #[test]
    fn update_many_preserves_total_and_capacity() {
        let mut s: Sketch<u64> = Sketch::new(7, Mode::Unbiased, 5).unwrap();
        let mut total = 0;
        for item in 0..500u64 {
            let times = (item * 37) % 101 + 1;
            s.update_many(item, times);
            total += times;
            s.check_invariants();
        }
        assert_eq!(s.bins().map(|(_, c)| c).sum::<u64>(), total);
        assert_eq!(s.rows_processed(), total);
    }

    #[test]
    fn json_round_trip_continues_identically() {
        let mut s: Sketch<u64, f64> = Sketch::new(4, Mode::Unbiased, 21).unwrap();
        for i in 0..100u64 {
            s.update_weighted(i % 17, 0.1 + (i % 5) as f64 / 3.0).unwrap();
        }
        let json = s.to_json().unwrap();
        let mut t: Sketch<u64, f64> = Sketch::from_json(&json).unwrap();
        assert_eq!(s.to_record(), t.to_record());
        for i in 0..100u64 {
            s.update_weighted(i % 23, 1.7).unwrap();
            t.update_weighted(i % 23, 1.7).unwrap();
        }
        assert_eq!(s.to_record(), t.to_record());
    }

    #[test]
    fn record_version_is_checked() {
        let s: Sketch<u64> = Sketch::new(2, Mode::Unbiased, 1).unwrap();
        let mut rec = s.to_record();
        rec.version = 99;
        assert!(matches!(Sketch::from_record(rec), Err(Error::Serialization(_))));
    }

    #[test]
    fn from_entries_rejects_bad_input() {
        assert!(Sketch::<u64, f64>::from_entries(1, Mode::Unbiased, 0, vec![(1, 1.0), (2, 1.0)], 0).is_err());
        assert!(Sketch::<u64, f64>::from_entries(2, Mode::Unbiased, 0, vec![(1, 1.0), (1, 1.0)], 0).is_err());
        assert!(Sketch::<u64, f64>::from_entries(2, Mode::Unbiased, 0, vec![(1, 0.0)], 0).is_err());
    }

    proptest! {
        #[test]
        fn unit_updates_preserve_total(
            stream in proptest::collection::vec(0u64..40, 0..400),
            m in 1usize..12,
            seed in any::<u64>(),
            unbiased in any::<bool>(),
        ) {
            let mode = if unbiased { Mode::Unbiased } else { Mode::Deterministic };
            let mut s: Sketch<u64> = Sketch::new(m, mode, seed).unwrap();
            for &x in &stream {
                s.update(x);
            }
            s.check_invariants();
            let total: u64 = s.bins().map(|(_, c)| c).sum();
            prop_assert_eq!(total, stream.len() as u64);
            prop_assert!(s.min_count() as f64 <= stream.len() as f64 / m as f64);
        }

        #[test]
        fn deterministic_error_bound(
            stream in proptest::collection::vec(0u64..30, 1..400),
            m in 1usize..10,
        ) {
            let mut s: Sketch<u64> = Sketch::new(m, Mode::Deterministic, 0).unwrap();
            let mut truth = std::collections::HashMap::<u64, u64>::new();
            for &x in &stream {
                s.update(x);
                *truth.entry(x).or_default() += 1;
            }
            let bound = stream.len() as f64 / m as f64;
            for (item, &n) in &truth {
                let est = s.estimate(item);
                prop_assert!((est as f64 - n as f64).abs() <= bound);
                if est == 0 {
                    prop_assert!(n <= s.min_count());
                }
            }
        }

        #[test]
        fn weighted_updates_preserve_total_weight(
            stream in proptest::collection::vec((0u64..25, 0.01f64..20.0), 1..300),
            m in 1usize..8,
            seed in any::<u64>(),
        ) {
            let mut s: Sketch<u64, f64> = Sketch::new(m, Mode::Unbiased, seed).unwrap();
            let mut total = 0.0;
            for &(x, w) in &stream {
                s.update_weighted(x, w).unwrap();
                total += w;
            }
            s.check_invariants();
            prop_assert!((s.total_count() - total).abs() <= 1e-9 * total.max(1.0));
        }
    }
}
