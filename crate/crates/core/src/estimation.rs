// Copyright 2026 The uss Authors. Licensed under Apache-2.0.

//! Subset-sum queries, the variance estimator and normal intervals.
//!
//! For a subset `S`, the estimate is the sum of the bins labelled by members
//! of `S`. The variance estimate is `N_min^2 * C_S` where `C_S` is the
//! number of such bins, floored at 1: the sketch has no information about
//! how infrequent items compare to each other, so each bin is charged the
//! worst case `N_min` for the rows it may have absorbed before sticking.

use std::fmt;
use std::hash::Hash;
use std::sync::Arc;

use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reductions::ReducedSummary;
use crate::sampling::{BottomK, PrioritySample, SampleAndHold};
use crate::sketch::{Count, Sketch};

/// A set of items to sum over.
#[derive(Clone)]
pub enum SubsetQuery<K> {
    All,
    Items(FxHashSet<K>),
    Predicate(Arc<dyn Fn(&K) -> bool + Send + Sync>),
}

impl<K: Hash + Eq> SubsetQuery<K> {
    pub fn all() -> Self {
        SubsetQuery::All
    }

    pub fn items(items: impl IntoIterator<Item = K>) -> Self {
        SubsetQuery::Items(items.into_iter().collect())
    }

    pub fn predicate(f: impl Fn(&K) -> bool + Send + Sync + 'static) -> Self {
        SubsetQuery::Predicate(Arc::new(f))
    }

    #[inline]
    pub fn contains(&self, item: &K) -> bool {
        match self {
            SubsetQuery::All => true,
            SubsetQuery::Items(set) => set.contains(item),
            SubsetQuery::Predicate(f) => f(item),
        }
    }
}

impl<K: fmt::Debug> fmt::Debug for SubsetQuery<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubsetQuery::All => f.write_str("All"),
            SubsetQuery::Items(set) => f.debug_tuple("Items").field(&set.len()).finish(),
            SubsetQuery::Predicate(_) => f.write_str("Predicate(..)"),
        }
    }
}

/// Estimate of a subset sum with its variance estimate and normal interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub estimate: f64,
    pub variance: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub level: f64,
    /// Bins labelled by members of the subset, floored at 1.
    pub c_s: u64,
}

impl QueryResult {
    pub fn covers(&self, truth: f64) -> bool {
        self.ci_low <= truth && truth <= self.ci_high
    }
}

/// Subset sum over a sketch with a normal interval at `level` (for example
/// 0.95). The interval is `estimate ± z * sqrt(variance)`, truncated at 0.
pub fn subset_sum<K: Hash + Eq + Clone, C: Count>(
    sketch: &Sketch<K, C>,
    query: &SubsetQuery<K>,
    level: f64,
) -> QueryResult {
    let mut estimate = 0.0;
    let mut members = 0u64;
    for (k, c) in sketch.bins() {
        if query.contains(k) {
            estimate += c.to_f64();
            members += 1;
        }
    }
    let n_min = sketch.min_count().to_f64();
    let c_s = members.max(1);
    let variance = n_min * n_min * c_s as f64;
    let half = normal_quantile(0.5 + level / 2.0) * variance.sqrt();
    QueryResult { estimate, variance, ci_low: (estimate - half).max(0.0), ci_high: estimate + half, level, c_s }
}

/// Variance of a Poisson PPS estimate for an item of size `n` included with
/// probability `pi`, where `threshold` is the size at which inclusion
/// becomes certain (`pi = min(1, n / threshold)`): `threshold * n * (1 - pi)`.
pub fn pps_variance_bound(n: f64, pi: f64, threshold: f64) -> f64 {
    debug_assert!(pi > 0.0 && pi <= 1.0);
    threshold * n * (1.0 - pi)
}

/// Fraction of intervals that contain their true value.
pub fn coverage(results: &[(QueryResult, f64)]) -> Result<f64> {
    if results.is_empty() {
        return Err(Error::InvalidInput("coverage of an empty result list".into()));
    }
    let hits = results.iter().filter(|(r, truth)| r.covers(*truth)).count();
    Ok(hits as f64 / results.len() as f64)
}

/// Standard normal quantile (Acklam's rational approximation, relative
/// error below 1.2e-9).
pub fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] =
        [7.784_695_709_041_462e-3, 3.224_671_290_700_398e-1, 2.445_134_137_142_996, 3.754_408_661_907_416];
    const LOW: f64 = 0.02425;

    if !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    if p < LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -normal_quantile(1.0 - p)
    }
}

/// Uniform subset-query interface shared by the sketch and the baselines.
pub trait SubsetEstimator<K> {
    fn estimate_subset(&self, query: &SubsetQuery<K>) -> f64;

    /// Number of items (bins or samples) held: the space the estimator uses.
    fn space(&self) -> usize;
}

impl<K: Hash + Eq + Clone, C: Count> SubsetEstimator<K> for Sketch<K, C> {
    fn estimate_subset(&self, query: &SubsetQuery<K>) -> f64 {
        self.bins().filter(|(k, _)| query.contains(k)).map(|(_, c)| c.to_f64()).sum()
    }

    fn space(&self) -> usize {
        self.len()
    }
}

impl<K: Hash + Eq + Clone> SubsetEstimator<K> for PrioritySample<K> {
    fn estimate_subset(&self, query: &SubsetQuery<K>) -> f64 {
        self.estimate_where(|k| query.contains(k))
    }

    fn space(&self) -> usize {
        self.len()
    }
}

impl<K: Hash + Eq + Clone> SubsetEstimator<K> for BottomK<K> {
    fn estimate_subset(&self, query: &SubsetQuery<K>) -> f64 {
        self.estimate_where(|k| query.contains(k))
    }

    fn space(&self) -> usize {
        self.len()
    }
}

impl<K: Hash + Eq + Clone> SubsetEstimator<K> for SampleAndHold<K> {
    fn estimate_subset(&self, query: &SubsetQuery<K>) -> f64 {
        self.estimate_where(|k| query.contains(k))
    }

    fn space(&self) -> usize {
        self.len()
    }
}

impl<K: Hash + Eq + Clone> SubsetEstimator<K> for ReducedSummary<K> {
    fn estimate_subset(&self, query: &SubsetQuery<K>) -> f64 {
        self.entries.iter().filter(|(k, _)| query.contains(k)).map(|(_, c)| *c).sum()
    }

    fn space(&self) -> usize {
        self.entries.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sketch::Mode;

    fn q(level: f64, est: f64, truth: f64, half: f64) -> (QueryResult, f64) {
        let r = QueryResult { estimate: est, variance: 0.0, ci_low: est - half, ci_high: est + half, level, c_s: 1 };
        (r, truth)
    }

    #[test]
    fn quantiles_match_reference_values() {
        // Reference values from the inverse error function.
        assert!((normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-6);
        assert!((normal_quantile(0.95) - 1.644_853_626_951_472_2).abs() < 1e-6);
        assert!((normal_quantile(0.995) - 2.575_829_303_548_900_4).abs() < 1e-6);
        assert!((normal_quantile(0.01) + 2.326_347_874_040_841).abs() < 1e-6);
        assert_eq!(normal_quantile(0.5), 0.0);
        assert!(normal_quantile(1.5).is_nan());
    }

    #[test]
    fn all_items_query_recovers_total() {
        let mut s: Sketch<u64> = Sketch::new(3, Mode::Unbiased, 2).unwrap();
        for i in 0..500u64 {
            s.update(i % 37);
        }
        let r = subset_sum(&s, &SubsetQuery::all(), 0.95);
        assert_eq!(r.estimate, 500.0);
    }

    #[test]
    fn empty_intersection_charges_one_bin() {
        let s: Sketch<u64> = Sketch::from_entries(2, Mode::Unbiased, 9, vec![(1, 4), (2, 5)], 0).unwrap();
        let r = subset_sum(&s, &SubsetQuery::items([7u64]), 0.95);
        assert_eq!(r.estimate, 0.0);
        assert_eq!(r.c_s, 1);
        assert_eq!(r.variance, 16.0);
        assert_eq!(r.ci_low, 0.0);
        assert!(r.ci_high > 7.8 && r.ci_high < 7.9);
    }

    #[test]
    fn variance_scales_with_bins_in_subset() {
        let s: Sketch<u64> = Sketch::from_entries(3, Mode::Unbiased, 12, vec![(1, 3), (2, 4), (3, 5)], 0).unwrap();
        let r = subset_sum(&s, &SubsetQuery::items([2u64, 3]), 0.95);
        assert_eq!(r.estimate, 9.0);
        assert_eq!(r.c_s, 2);
        assert_eq!(r.variance, 18.0);
        assert!(r.ci_low <= r.estimate && r.estimate <= r.ci_high);
    }

    #[test]
    fn below_capacity_has_zero_variance() {
        let s: Sketch<u64> = Sketch::from_entries(5, Mode::Unbiased, 2, vec![(1, 2)], 0).unwrap();
        let r = subset_sum(&s, &SubsetQuery::all(), 0.9);
        assert_eq!((r.variance, r.ci_low, r.ci_high), (0.0, 2.0, 2.0));
    }

    #[test]
    fn predicate_queries() {
        let s: Sketch<u64> = Sketch::from_entries(3, Mode::Unbiased, 12, vec![(1, 3), (2, 4), (3, 5)], 0).unwrap();
        let odd = SubsetQuery::predicate(|k: &u64| k % 2 == 1);
        assert_eq!(subset_sum(&s, &odd, 0.95).estimate, 8.0);
        assert_eq!(s.estimate_subset(&odd), 8.0);
    }

    #[test]
    fn pps_bound_edges() {
        assert_eq!(pps_variance_bound(10.0, 1.0, 3.0), 0.0);
        assert_eq!(pps_variance_bound(0.0, 0.5, 3.0), 0.0);
        assert_eq!(pps_variance_bound(2.0, 0.5, 4.0), 4.0);
    }

    #[test]
    fn coverage_edges() {
        let wide = vec![q(0.95, 0.0, 5.0, f64::INFINITY), q(0.95, 1.0, -3.0, f64::INFINITY)];
        assert_eq!(coverage(&wide).unwrap(), 1.0);
        let narrow = vec![q(0.95, 1.0, 2.0, 0.0), q(0.95, 4.0, 3.0, 0.0)];
        assert_eq!(coverage(&narrow).unwrap(), 0.0);
        assert!(coverage(&[]).is_err());
    }
}
