// Copyright 2026 The uss Authors. Licensed under Apache-2.0.

mod common;

use common::{assert_within_3se, Moments};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uss::reductions::alpha_residual;
use uss::{merge_misra_gries, merge_unbiased, reduce_pps, solve_alpha, Entries, Mode, Sketch};

fn mean_adjusted(entries: &[(usize, f64)], target: usize, reps: u64, seed: u64) -> Vec<Moments> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut est = vec![Moments::default(); entries.len()];
    let mut row = vec![0.0; entries.len()];
    for _ in 0..reps {
        row.iter_mut().for_each(|x| *x = 0.0);
        let r = reduce_pps(entries, target, &mut rng).unwrap();
        assert_eq!(r.entries.len(), target.min(entries.len()));
        for (k, v) in &r.entries {
            row[*k] += v;
        }
        for (m, x) in est.iter_mut().zip(&row) {
            m.push(*x);
        }
    }
    est
}

#[test]
fn reduce_pps_small_fixture_is_unbiased() {
    let entries: Vec<(usize, f64)> = [3.0, 2.0, 1.0, 1.0, 1.0].into_iter().enumerate().collect();
    let est = mean_adjusted(&entries, 3, 100_000, 1);
    for (i, m) in est.iter().enumerate() {
        assert_within_3se(m, entries[i].1, &format!("entry {i}"));
    }
}

#[test]
fn reduce_pps_random_fixtures_are_unbiased() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for fixture in 0..24 {
        let len = rng.random_range(4..30);
        let entries: Vec<(usize, f64)> = (0..len).map(|i| (i, rng.random_range(0.5..50.0f64).powi(2))).collect();
        let target = rng.random_range(1..len);
        let values: Vec<f64> = entries.iter().map(|e| e.1).collect();
        let alpha = solve_alpha(&values, target).unwrap();
        assert!(alpha_residual(&values, alpha, target) <= 1e-12 * target as f64);
        let est = mean_adjusted(&entries, target, 20_000, fixture);
        for (i, m) in est.iter().enumerate() {
            assert_within_3se(m, entries[i].1, &format!("fixture {fixture} entry {i}"));
        }
    }
}

fn sketch(entries: &[(char, f64)], m: usize) -> Sketch<char, f64> {
    let rows = entries.iter().map(|e| e.1).sum::<f64>() as u64;
    Sketch::from_entries(m, Mode::Unbiased, rows, entries.to_vec(), 0).unwrap()
}

#[test]
fn merge_with_shared_label_is_unbiased() {
    let a = sketch(&[('x', 4.0), ('y', 1.0)], 2);
    let b = sketch(&[('x', 1.0), ('z', 1.0)], 2);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut est = [Moments::default(); 3];
    for _ in 0..100_000 {
        let r = merge_unbiased(&a, &b, 2, &mut rng).unwrap();
        assert!(r.sketch.len() <= 2);
        for (m, k) in est.iter_mut().zip(['x', 'y', 'z']) {
            m.push(r.sketch.estimate(&k));
        }
    }
    for ((m, k), truth) in est.iter().zip(['x', 'y', 'z']).zip([5.0, 1.0, 1.0]) {
        assert_within_3se(m, truth, &format!("merged {k}"));
    }
}

#[test]
fn unbiased_merge_is_associative_in_expectation() {
    let a = sketch(&[('a', 6.0), ('b', 2.0), ('c', 1.0)], 3);
    let b = sketch(&[('b', 3.0), ('d', 4.0), ('e', 1.0)], 3);
    let c = sketch(&[('a', 1.0), ('e', 2.0), ('f', 5.0)], 3);
    let labels = ['a', 'b', 'c', 'd', 'e', 'f'];
    let mut left = vec![Moments::default(); labels.len()];
    let mut right = vec![Moments::default(); labels.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100_000 {
        let l = merge_unbiased(&merge_unbiased(&a, &b, 3, &mut rng).unwrap().sketch, &c, 3, &mut rng).unwrap();
        let r = merge_unbiased(&a, &merge_unbiased(&b, &c, 3, &mut rng).unwrap().sketch, 3, &mut rng).unwrap();
        for (i, k) in labels.iter().enumerate() {
            left[i].push(l.sketch.estimate(k));
            right[i].push(r.sketch.estimate(k));
        }
    }
    for i in 0..labels.len() {
        let se = (left[i].se().powi(2) + right[i].se().powi(2)).sqrt();
        assert!(
            (left[i].mean() - right[i].mean()).abs() <= 3.0 * se,
            "{}: {} vs {}",
            labels[i],
            left[i].mean(),
            right[i].mean()
        );
    }
}

#[test]
fn misra_gries_merge_never_overestimates_mg_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for trial in 0..200 {
        let mut truth = vec![0u64; 60];
        let mut sa: Sketch<u64> = Sketch::new(8, Mode::Deterministic, trial).unwrap();
        let mut sb: Sketch<u64> = Sketch::new(8, Mode::Deterministic, trial).unwrap();
        for _ in 0..2000 {
            let i = (rng.random::<f64>().powi(3) * 60.0) as u64;
            truth[i as usize] += 1;
            if rng.random_bool(0.5) {
                sa.update(i);
            } else {
                sb.update(i);
            }
        }
        let merged = merge_misra_gries(&uss::to_misra_gries(&sa), &uss::to_misra_gries(&sb), 8).unwrap();
        let entries = merged.sketch.entries();
        assert!(entries.len() <= 8);
        for (k, v) in entries {
            assert!(v <= truth[k as usize] as f64, "item {k}: {v} > {}", truth[k as usize]);
        }
    }
}
