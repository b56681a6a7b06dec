// Copyright 2026 The uss Authors. Licensed under Apache-2.0.

//! Replicated experiment runs.
//!
//! Every replicate derives its own seeds from the global seed and its index,
//! regenerates the stream when the ordering is random, feeds every
//! estimator and evaluates every query. Replicates run in parallel in fixed
//! chunks and are folded in index order, so the report bytes do not depend
//! on the thread count.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use uss::sampling::{BottomK, PrioritySample, SampleAndHold};
use uss::streams::{emit, epoch_items, FnSink, Ordering, RowSink, StreamSpec};
use uss::{solve_alpha, subset_sum, GroundTruth, ItemId, Mode, Sketch, SubsetEstimator, SubsetQuery};

use crate::config::{BaselineConfig, ExperimentConfig, QueryPlan};
use crate::error::{HarnessError, Result};
use crate::report::{EstimatorInfo, EvalReport, InclusionRow, InclusionTable, QueryRow};

const CHUNK: usize = 256;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for `slot` (0 for the stream, 1.. for estimators) of replicate `r`.
pub fn derive_seed(global: u64, r: u64, slot: u64) -> u64 {
    splitmix64(splitmix64(global ^ splitmix64(r)).wrapping_add(slot))
}

pub fn run(config: &ExperimentConfig) -> Result<EvalReport> {
    run_with_threads(config, None)
}

/// Runs on a pool of `threads` workers (all cores when `None`).
pub fn run_with_threads(config: &ExperimentConfig, threads: Option<usize>) -> Result<EvalReport> {
    config.validate()?;
    let plan = Plan::new(config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| HarnessError::config("threads", e.to_string()))?;
    let mut acc = Accumulator::new(&plan);
    for start in (0..config.replicates).step_by(CHUNK) {
        let end = (start + CHUNK).min(config.replicates);
        let outcomes: Vec<Result<Outcome>> =
            pool.install(|| (start..end).into_par_iter().map(|r| plan.replicate(r)).collect());
        for outcome in outcomes {
            acc.add(outcome?);
        }
    }
    Ok(acc.finish(&plan))
}

fn stream_error(e: uss::Error) -> HarnessError {
    match e {
        uss::Error::Unsatisfiable(msg) => match msg.split_once(": ") {
            Some((field, rest)) => HarnessError::config(format!("stream.{field}"), rest),
            None => HarnessError::config("stream", msg),
        },
        uss::Error::InvalidInput(msg) => HarnessError::config("stream.counts", msg),
        other => other.into(),
    }
}

struct Plan<'a> {
    config: &'a ExperimentConfig,
    /// Expected per-item counts (exact counts unless the ordering is i.i.d.).
    reference: Vec<f64>,
    queries: Vec<(String, SubsetQuery<ItemId>)>,
    /// Per-query true totals when they do not depend on the replicate.
    fixed_truth: Option<Vec<f64>>,
}

impl<'a> Plan<'a> {
    fn new(config: &'a ExperimentConfig) -> Result<Self> {
        let spec = &config.stream;
        let (truth, varying) = match spec.ordering {
            Ordering::Iid { .. } => (GroundTruth::from_counts(spec.base_counts().map_err(stream_error)?), true),
            _ => (emit(spec, &mut FnSink(|_| {})).map_err(stream_error)?, false),
        };
        let reference: Vec<f64> = match spec.ordering {
            Ordering::Iid { rows, .. } => {
                let total = truth.total() as f64;
                truth.counts().iter().map(|c| rows as f64 * *c as f64 / total).collect()
            }
            _ => truth.counts().iter().map(|c| *c as f64).collect(),
        };
        let queries = build_queries(&config.queries, &truth)?;
        let fixed_truth = (!varying).then(|| queries.iter().map(|(_, q)| truth.subset_total(q) as f64).collect());
        Ok(Plan { config, reference, queries, fixed_truth })
    }

    fn estimators(&self) -> usize {
        self.config.sketches.len() + self.config.baselines.len()
    }

    fn replicate(&self, r: usize) -> Result<Outcome> {
        let config = self.config;
        let r = r as u64;
        let spec: StreamSpec = if config.stream.is_random() {
            config.stream.reseeded(derive_seed(config.seed, r, 0))
        } else {
            config.stream.clone()
        };
        let mut bank = Bank::new(config, r)?;
        let truth = emit(&spec, &mut bank).map_err(stream_error)?;

        let q = self.queries.len();
        let truths: Vec<f64> = match &self.fixed_truth {
            Some(t) => t.clone(),
            None => self.queries.iter().map(|(_, query)| truth.subset_total(query) as f64).collect(),
        };
        let mut est = Vec::with_capacity(self.estimators() * q);
        let mut var = Vec::with_capacity(bank.sketches.len() * q);
        let mut covered = Vec::with_capacity(bank.sketches.len() * q);
        for sketch in &bank.sketches {
            for ((_, query), n) in self.queries.iter().zip(&truths) {
                let res = subset_sum(sketch, query, config.level);
                est.push(res.estimate);
                var.push(res.variance);
                covered.push(res.covers(*n));
            }
        }
        for (i, baseline) in bank.baselines.iter().enumerate() {
            match baseline {
                Baseline::Priority(m) => {
                    let items: Vec<(ItemId, f64)> = truth.items().map(|(k, c)| (k, c as f64)).collect();
                    let mut rng =
                        ChaCha8Rng::seed_from_u64(derive_seed(config.seed, r, 1 + (bank.sketches.len() + i) as u64));
                    let sample = PrioritySample::draw(&items, *m, &mut rng)?;
                    est.extend(self.queries.iter().map(|(_, query)| sample.estimate_subset(query)));
                }
                Baseline::BottomK(b) => est.extend(self.queries.iter().map(|(_, query)| b.estimate_subset(query))),
                Baseline::Hold(h) => est.extend(self.queries.iter().map(|(_, query)| h.estimate_subset(query))),
            }
        }
        let held = if config.inclusion {
            bank.sketches.iter().map(|s| s.bins().map(|(k, _)| *k).collect()).collect()
        } else {
            Vec::new()
        };
        // When the counts change between replicates, the PPS reference is
        // the replicate average of min(1, alpha_r n_i,r) over the realised
        // counts, so count noise is not mistaken for sketch error.
        let pps = if config.inclusion && self.fixed_truth.is_none() {
            let counts: Vec<f64> = truth.counts().iter().map(|c| *c as f64).collect();
            let positive: Vec<f64> = counts.iter().copied().filter(|x| *x > 0.0).collect();
            config.sketches.iter().map(|s| pps_reference(&counts, &positive, s.m, self.reference.len())).collect()
        } else {
            Vec::new()
        };
        let truths = self.fixed_truth.is_none().then_some(truths);
        Ok(Outcome { est, var, covered, truths, held, pps })
    }
}

/// `min(1, alpha n_i)` with `alpha` solved over the positive counts, padded
/// or cut to `len` items.
fn pps_reference(counts: &[f64], positive: &[f64], m: usize, len: usize) -> Vec<f64> {
    let alpha = solve_alpha(positive, m);
    (0..len)
        .map(|i| {
            let n = counts.get(i).copied().unwrap_or(0.0);
            alpha.map_or(f64::from(u8::from(n > 0.0)), |a| (a * n).min(1.0))
        })
        .collect()
}

fn build_queries(plan: &QueryPlan, truth: &GroundTruth) -> Result<Vec<(String, SubsetQuery<ItemId>)>> {
    Ok(match plan {
        QueryPlan::Epochs { k } => epoch_items(truth, *k)?
            .into_iter()
            .enumerate()
            .map(|(i, items)| (format!("epoch_{}", i + 1), SubsetQuery::items(items)))
            .collect(),
        QueryPlan::RandomSubsets { count, size, seed } => {
            let universe = truth.universe();
            if *size > universe {
                return Err(HarnessError::config(
                    "queries.random_subsets.size",
                    format!("{size} exceeds the item universe of {universe}"),
                ));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            (0..*count)
                .map(|i| {
                    let items = index::sample(&mut rng, universe, *size).into_iter().map(|x| x as ItemId);
                    (format!("subset_{i}"), SubsetQuery::items(items))
                })
                .collect()
        }
        QueryPlan::Explicit { sets } => sets
            .iter()
            .enumerate()
            .map(|(i, set)| (format!("set_{i}"), SubsetQuery::items(set.iter().copied())))
            .collect(),
    })
}

enum Baseline {
    Priority(usize),
    BottomK(BottomK<ItemId>),
    Hold(Box<SampleAndHold<ItemId>>),
}

/// Every streaming estimator of one replicate.
struct Bank {
    sketches: Vec<Sketch<ItemId>>,
    baselines: Vec<Baseline>,
}

impl Bank {
    fn new(config: &ExperimentConfig, r: u64) -> Result<Self> {
        let seed = |slot: usize| derive_seed(config.seed, r, 1 + slot as u64);
        let sketches = config
            .sketches
            .iter()
            .enumerate()
            .map(|(i, s)| Sketch::new(s.m, s.mode, seed(i)))
            .collect::<uss::Result<Vec<_>>>()?;
        let offset = sketches.len();
        let baselines = config
            .baselines
            .iter()
            .enumerate()
            .map(|(i, b)| {
                Ok(match b {
                    BaselineConfig::Priority { m, .. } => Baseline::Priority(*m),
                    BaselineConfig::BottomK { k, .. } => Baseline::BottomK(BottomK::new(*k, seed(offset + i))?),
                    BaselineConfig::SampleAndHold { capacity, .. } => {
                        Baseline::Hold(Box::new(SampleAndHold::new(*capacity, seed(offset + i))?))
                    }
                })
            })
            .collect::<uss::Result<Vec<_>>>()?;
        Ok(Bank { sketches, baselines })
    }
}

impl RowSink for Bank {
    fn row(&mut self, item: ItemId) {
        for s in &mut self.sketches {
            s.update(item);
        }
        for b in &mut self.baselines {
            match b {
                Baseline::Priority(_) => {}
                Baseline::BottomK(k) => k.update(item),
                Baseline::Hold(h) => h.update(item),
            }
        }
    }

    fn run(&mut self, item: ItemId, times: u64) {
        for s in &mut self.sketches {
            s.update_many(item, times);
        }
        for b in &mut self.baselines {
            match b {
                Baseline::Priority(_) => {}
                Baseline::BottomK(k) => k.update_many(item, times),
                Baseline::Hold(h) => (0..times).for_each(|_| h.update(item)),
            }
        }
    }
}

struct Outcome {
    /// Estimator-major, then query.
    est: Vec<f64>,
    /// Sketches only.
    var: Vec<f64>,
    covered: Vec<bool>,
    truths: Option<Vec<f64>>,
    held: Vec<Vec<ItemId>>,
    /// Per-sketch PPS reference of this replicate's counts, when they vary.
    pps: Vec<Vec<f64>>,
}

struct Accumulator {
    est: Vec<Vec<f64>>,
    var: Vec<Vec<f64>>,
    covered: Vec<u64>,
    truths: Vec<Vec<f64>>,
    held: Vec<Vec<u64>>,
    pps: Vec<Vec<f64>>,
    replicates: usize,
}

impl Accumulator {
    fn new(plan: &Plan) -> Self {
        let q = plan.queries.len();
        let s = plan.config.sketches.len();
        let held_len = if plan.config.inclusion { plan.reference.len() } else { 0 };
        Accumulator {
            est: vec![Vec::new(); plan.estimators() * q],
            var: vec![Vec::new(); s * q],
            covered: vec![0; s * q],
            truths: vec![Vec::new(); q],
            held: vec![vec![0; held_len]; if plan.config.inclusion { s } else { 0 }],
            pps: Vec::new(),
            replicates: 0,
        }
    }

    fn add(&mut self, o: Outcome) {
        self.replicates += 1;
        for (acc, x) in self.est.iter_mut().zip(o.est) {
            acc.push(x);
        }
        for (acc, x) in self.var.iter_mut().zip(o.var) {
            acc.push(x);
        }
        for (acc, c) in self.covered.iter_mut().zip(o.covered) {
            *acc += u64::from(c);
        }
        if let Some(t) = o.truths {
            for (acc, x) in self.truths.iter_mut().zip(t) {
                acc.push(x);
            }
        }
        if self.pps.is_empty() {
            self.pps = o.pps.iter().map(|p| vec![0.0; p.len()]).collect();
        }
        for (acc, p) in self.pps.iter_mut().zip(o.pps) {
            acc.iter_mut().zip(p).for_each(|(a, x)| *a += x);
        }
        for (acc, items) in self.held.iter_mut().zip(o.held) {
            for item in items {
                if let Some(c) = acc.get_mut(item as usize) {
                    *c += 1;
                }
            }
        }
    }

    fn finish(self, plan: &Plan) -> EvalReport {
        let config = plan.config;
        let q = plan.queries.len();
        let r = self.replicates as f64;
        let labels = config.estimator_labels();
        let mut estimators: Vec<EstimatorInfo> = config
            .sketches
            .iter()
            .map(|s| EstimatorInfo {
                name: s.label(),
                kind: match s.mode {
                    Mode::Unbiased => "sketch_unbiased".into(),
                    Mode::Deterministic => "sketch_deterministic".into(),
                },
                space: s.m,
            })
            .collect();
        estimators.extend(config.baselines.iter().map(|b| {
            EstimatorInfo {
                name: b.label(),
                kind: match b {
                    BaselineConfig::Priority { .. } => "priority",
                    BaselineConfig::BottomK { .. } => "bottom_k",
                    BaselineConfig::SampleAndHold { .. } => "sample_and_hold",
                }
                .into(),
                space: b.space(),
            }
        }));

        let mut queries = Vec::with_capacity(q * labels.len());
        for (qi, (query_id, _)) in plan.queries.iter().enumerate() {
            let truth_at = |rep: usize| match &plan.fixed_truth {
                Some(t) => t[qi],
                None => self.truths[qi][rep],
            };
            let true_count = match &plan.fixed_truth {
                Some(t) => t[qi],
                None => self.truths[qi].iter().sum::<f64>() / r,
            };
            for (ei, name) in labels.iter().enumerate() {
                let xs = &self.est[ei * q + qi];
                let mean = xs.iter().sum::<f64>() / r;
                let emp_variance =
                    if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1.0) } else { 0.0 };
                let mse = xs.iter().enumerate().map(|(rep, x)| (x - truth_at(rep)).powi(2)).sum::<f64>() / r;
                let rrmse_is_absolute = true_count <= 0.0;
                let rrmse = if rrmse_is_absolute { mse.sqrt() } else { mse.sqrt() / true_count };
                let (mean_var_est, var_gap_se, coverage) = if ei < config.sketches.len() {
                    let vs = &self.var[ei * q + qi];
                    let mean_var = vs.iter().sum::<f64>() / r;
                    let gap_se = (xs.len() > 1).then(|| {
                        let scale = r / (r - 1.0);
                        let d: Vec<f64> = xs.iter().zip(vs).map(|(x, v)| v - (x - mean).powi(2) * scale).collect();
                        let dm = d.iter().sum::<f64>() / r;
                        (d.iter().map(|x| (x - dm).powi(2)).sum::<f64>() / (r - 1.0) / r).sqrt()
                    });
                    (Some(mean_var), gap_se, Some(self.covered[ei * q + qi] as f64 / r))
                } else {
                    (None, None, None)
                };
                queries.push(QueryRow {
                    query_id: query_id.clone(),
                    true_count,
                    estimator: name.clone(),
                    mean_estimate: mean,
                    rrmse,
                    rrmse_is_absolute,
                    mean_var_est,
                    emp_variance,
                    var_gap_se,
                    coverage,
                });
            }
        }

        let positive: Vec<f64> = plan.reference.iter().copied().filter(|x| *x > 0.0).collect();
        let inclusion = config
            .sketches
            .iter()
            .enumerate()
            .zip(&self.held)
            .map(|((j, s), held)| {
                let pps_ref = match self.pps.get(j) {
                    Some(sum) => sum.iter().map(|x| x / r).collect(),
                    None => pps_reference(&plan.reference, &positive, s.m, plan.reference.len()),
                };
                let rows = plan
                    .reference
                    .iter()
                    .enumerate()
                    .filter(|(_, n)| **n > 0.0)
                    .map(|(i, n)| InclusionRow {
                        item_id: i as ItemId,
                        true_count: *n,
                        incl_freq: held[i] as f64 / r,
                        pps_ref: pps_ref[i],
                    })
                    .collect();
                InclusionTable { estimator: s.label(), rows }
            })
            .collect();

        EvalReport { replicates: self.replicates, seed: config.seed, estimators, queries, inclusion }
    }
}
