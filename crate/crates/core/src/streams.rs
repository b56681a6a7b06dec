// Copyright 2026 The uss Authors. Licensed under Apache-2.0.

//! Synthetic streams with exact ground truth.
//!
//! Item counts come either from a discretised Weibull distribution evaluated
//! on a regular quantile grid or from an explicit list. The ordering decides
//! how the rows of those items are interleaved. Items are dense `u64` ids,
//! and ids are assigned in grid order so a larger id never has a smaller
//! Weibull count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::SubsetQuery;
use crate::sketch::{Count, Sketch};

pub type ItemId = u64;

/// Exact per-item counts of a stream over items `0..universe()`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    counts: Vec<u64>,
    total: u64,
}

impl GroundTruth {
    pub fn from_counts(counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        GroundTruth { counts, total }
    }

    pub fn count(&self, item: ItemId) -> u64 {
        self.counts.get(item as usize).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of item ids, including items with a zero count.
    pub fn universe(&self) -> usize {
        self.counts.len()
    }

    pub fn subset_total(&self, query: &SubsetQuery<ItemId>) -> u64 {
        match query {
            SubsetQuery::Items(set) => set.iter().map(|i| self.count(*i)).sum(),
            _ => (0..self.counts.len() as u64).filter(|i| query.contains(i)).map(|i| self.count(i)).sum(),
        }
    }

    /// `(item, count)` for items with a positive count.
    pub fn items(&self) -> impl Iterator<Item = (ItemId, u64)> + '_ {
        self.counts.iter().enumerate().filter(|(_, c)| **c > 0).map(|(i, c)| (i as ItemId, *c))
    }

    fn record(&mut self, item: ItemId, times: u64) {
        let i = item as usize;
        if i >= self.counts.len() {
            self.counts.resize(i + 1, 0);
        }
        self.counts[i] += times;
        self.total += times;
    }
}

/// Where item counts come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountsSource {
    WeibullGrid { shape: f64, scale: f64, grid_size: usize },
    Explicit { counts: Vec<u64> },
}

/// Row order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ordering {
    /// Uniformly random permutation of all rows.
    Shuffled { seed: u64 },
    /// Items in ascending count order, each item's rows contiguous.
    SortedAscending,
    /// Two copies of the count set on disjoint id ranges (`0..v` then
    /// `v..2v`), each half shuffled independently.
    TwoHalves { seed: u64 },
    /// Original items most frequent first, then `n_tot` fresh distinct items.
    /// With `m` set, every count must be below `2 n_tot / m`.
    AdversarialAppend {
        #[serde(default)]
        m: Option<usize>,
    },
    /// `n_tot` rows, every one a fresh item.
    AllUnique,
    /// `rows` independent draws with probabilities proportional to the counts.
    Iid { seed: u64, rows: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSpec {
    pub counts: CountsSource,
    pub ordering: Ordering,
    #[serde(default)]
    pub epochs: Option<usize>,
}

impl StreamSpec {
    pub fn new(counts: CountsSource, ordering: Ordering) -> Self {
        StreamSpec { counts, ordering, epochs: None }
    }

    /// The same spec with every ordering seed replaced by `seed`.
    pub fn reseeded(&self, seed: u64) -> Self {
        let mut spec = self.clone();
        match &mut spec.ordering {
            Ordering::Shuffled { seed: s } | Ordering::TwoHalves { seed: s } | Ordering::Iid { seed: s, .. } => {
                *s = seed
            }
            _ => {}
        }
        spec
    }

    /// Whether the row sequence depends on a seed.
    pub fn is_random(&self) -> bool {
        matches!(self.ordering, Ordering::Shuffled { .. } | Ordering::TwoHalves { .. } | Ordering::Iid { .. })
    }

    pub fn base_counts(&self) -> Result<Vec<u64>> {
        match &self.counts {
            CountsSource::WeibullGrid { shape, scale, grid_size } => {
                Ok(weibull_counts(*shape, *scale, *grid_size)?.counts)
            }
            CountsSource::Explicit { counts } => Ok(counts.clone()),
        }
    }
}

/// Weibull inverse CDF: `scale * (-ln(1 - u))^(1 / shape)`.
pub fn weibull_quantile(u: f64, shape: f64, scale: f64) -> f64 {
    scale * (-(-u).ln_1p()).powf(1.0 / shape)
}

/// Counts `round(F^-1((i - 0.5) / grid_size))` for `i = 1..=grid_size`.
pub fn weibull_counts(shape: f64, scale: f64, grid_size: usize) -> Result<GroundTruth> {
    if !(shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite()) {
        return Err(Error::InvalidInput(format!("weibull shape {shape} and scale {scale} must be positive")));
    }
    if grid_size == 0 {
        return Err(Error::InvalidInput("weibull grid_size must be at least 1".into()));
    }
    let counts = (1..=grid_size)
        .map(|i| {
            let u = (i as f64 - 0.5) / grid_size as f64;
            weibull_quantile(u, shape, scale).round() as u64
        })
        .collect();
    Ok(GroundTruth::from_counts(counts))
}

/// Receives rows. `run` delivers `times` consecutive rows of one item.
pub trait RowSink {
    fn row(&mut self, item: ItemId);

    fn run(&mut self, item: ItemId, times: u64) {
        for _ in 0..times {
            self.row(item);
        }
    }
}

impl<C: Count> RowSink for Sketch<ItemId, C> {
    #[inline]
    fn row(&mut self, item: ItemId) {
        self.update(item);
    }

    fn run(&mut self, item: ItemId, times: u64) {
        self.update_many(item, times);
    }
}

impl RowSink for Vec<ItemId> {
    fn row(&mut self, item: ItemId) {
        self.push(item);
    }
}

/// Adapts a closure into a [`RowSink`].
pub struct FnSink<F>(pub F);

impl<F: FnMut(ItemId)> RowSink for FnSink<F> {
    #[inline]
    fn row(&mut self, item: ItemId) {
        (self.0)(item)
    }
}

impl<A: RowSink, B: RowSink> RowSink for (A, B) {
    #[inline]
    fn row(&mut self, item: ItemId) {
        self.0.row(item);
        self.1.row(item);
    }

    fn run(&mut self, item: ItemId, times: u64) {
        self.0.run(item, times);
        self.1.run(item, times);
    }
}

/// Streams the rows described by `spec` into `sink` and returns the exact
/// counts of what was emitted. Memory is proportional to the number of
/// distinct items, never to the number of rows.
pub fn emit<S: RowSink + ?Sized>(spec: &StreamSpec, sink: &mut S) -> Result<GroundTruth> {
    let base = spec.base_counts()?;
    let n_tot: u64 = base.iter().sum();
    let v = base.len() as u64;
    let mut truth = GroundTruth::from_counts(Vec::new());
    match &spec.ordering {
        Ordering::Shuffled { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            shuffled(&base, 0, &mut rng, sink);
            truth = GroundTruth::from_counts(base);
        }
        Ordering::SortedAscending => {
            let mut order: Vec<ItemId> = (0..v).collect();
            order.sort_by_key(|&i| (base[i as usize], i));
            for i in order {
                let n = base[i as usize];
                if n > 0 {
                    sink.run(i, n);
                }
            }
            truth = GroundTruth::from_counts(base);
        }
        Ordering::TwoHalves { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            shuffled(&base, 0, &mut rng, sink);
            shuffled(&base, v, &mut rng, sink);
            let mut counts = base.clone();
            counts.extend_from_slice(&base);
            truth = GroundTruth::from_counts(counts);
        }
        Ordering::AdversarialAppend { m } => {
            if let Some(m) = m {
                if let Some((i, n)) =
                    base.iter().enumerate().find(|(_, n)| **n as u128 * *m as u128 >= 2 * n_tot as u128)
                {
                    return Err(Error::Unsatisfiable(format!(
                        "ordering.adversarial_append: item {i} has count {n}, not below 2 * {n_tot} / {m}"
                    )));
                }
            }
            let mut order: Vec<ItemId> = (0..v).collect();
            order.sort_by_key(|&i| (std::cmp::Reverse(base[i as usize]), i));
            for i in order {
                let n = base[i as usize];
                if n > 0 {
                    sink.run(i, n);
                }
            }
            for fresh in v..v + n_tot {
                sink.row(fresh);
            }
            let mut counts = base;
            counts.resize((v + n_tot) as usize, 1);
            truth = GroundTruth::from_counts(counts);
        }
        Ordering::AllUnique => {
            for item in 0..n_tot {
                sink.row(item);
            }
            truth = GroundTruth::from_counts(vec![1; n_tot as usize]);
        }
        Ordering::Iid { seed, rows } => {
            if n_tot == 0 {
                return Err(Error::Unsatisfiable("ordering.iid: all counts are zero".into()));
            }
            let weights: Vec<f64> = base.iter().map(|c| *c as f64).collect();
            let alias = WeightedAliasIndex::new(weights).map_err(|e| Error::InvalidInput(e.to_string()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            truth.counts.resize(base.len(), 0);
            for _ in 0..*rows {
                let item = alias.sample(&mut rng) as ItemId;
                truth.record(item, 1);
                sink.row(item);
            }
        }
    }
    Ok(truth)
}

/// Materialises the row sequence.
pub fn collect_rows(spec: &StreamSpec) -> Result<(Vec<ItemId>, GroundTruth)> {
    let mut rows = Vec::new();
    let truth = emit(spec, &mut rows)?;
    Ok((rows, truth))
}

/// Uniform random permutation of the multiset `{offset + i: counts[i]}`,
/// drawn one row at a time from an urn so memory stays O(distinct items).
fn shuffled<R: Rng, S: RowSink + ?Sized>(counts: &[u64], offset: u64, rng: &mut R, sink: &mut S) {
    let mut urn = Fenwick::new(counts);
    let mut left: u64 = counts.iter().sum();
    while left > 0 {
        let r = rng.random_range(0..left);
        let i = urn.take(r);
        sink.row(offset + i as u64);
        left -= 1;
    }
}

/// Binary indexed tree over remaining counts.
struct Fenwick {
    tree: Vec<u64>,
    top: usize,
}

impl Fenwick {
    fn new(counts: &[u64]) -> Self {
        let n = counts.len();
        let mut tree = vec![0; n + 1];
        for (i, c) in counts.iter().enumerate() {
            tree[i + 1] += c;
            let parent = (i + 1) + ((i + 1) & (i + 1).wrapping_neg());
            if parent <= n {
                tree[parent] += tree[i + 1];
            }
        }
        let top = if n == 0 { 0 } else { 1 << (usize::BITS - 1 - n.leading_zeros()) };
        Fenwick { tree, top }
    }

    /// Finds the item holding the `r`-th remaining row and removes that row.
    fn take(&mut self, mut r: u64) -> usize {
        let n = self.tree.len() - 1;
        let mut pos = 0;
        let mut step = self.top;
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= r {
                r -= self.tree[next];
                pos = next;
            }
            step >>= 1;
        }
        let mut i = pos + 1;
        while i <= n {
            self.tree[i] -= 1;
            i += i & i.wrapping_neg();
        }
        pos
    }
}

/// Items partitioned by ascending count rank (ties by id) into `k` groups
/// whose sizes differ by at most one.
pub fn epoch_items(truth: &GroundTruth, k: usize) -> Result<Vec<Vec<ItemId>>> {
    if k == 0 {
        return Err(Error::InvalidInput("epochs: k must be at least 1".into()));
    }
    let mut order: Vec<ItemId> = (0..truth.universe() as ItemId).collect();
    order.sort_by_key(|&i| (truth.count(i), i));
    let v = order.len();
    Ok((0..k).map(|g| order[g * v / k..(g + 1) * v / k].to_vec()).collect())
}

pub fn epochs(truth: &GroundTruth, k: usize) -> Result<Vec<SubsetQuery<ItemId>>> {
    Ok(epoch_items(truth, k)?.into_iter().map(SubsetQuery::items).collect())
}
