// Copyright 2026 The uss Authors. Licensed under Apache-2.0.

//! Single-thread update throughput on an i.i.d. Weibull stream and on a
//! sorted stream.

use std::time::Instant;

use uss::streams::{collect_rows, CountsSource, Ordering, StreamSpec};
use uss::{Mode, Sketch};

fn main() {
    let iid = StreamSpec::new(
        CountsSource::WeibullGrid { shape: 0.15, scale: 5e5, grid_size: 1000 },
        Ordering::Iid { seed: 1, rows: 1_000_000 },
    );
    let (rows, _) = collect_rows(&iid).unwrap();
    for m in [100, 200, 10_000] {
        for mode in [Mode::Deterministic, Mode::Unbiased] {
            let mut sketch: Sketch<u64> = Sketch::new(m, mode, 3).unwrap();
            let start = Instant::now();
            for &r in &rows {
                sketch.update(r);
            }
            let secs = start.elapsed().as_secs_f64();
            println!("iid    m={m:>6} {mode:?}: {:.1} M updates/s", rows.len() as f64 / secs / 1e6);
        }
    }
    let sorted = StreamSpec::new(
        CountsSource::WeibullGrid { shape: 0.5, scale: 500.0, grid_size: 1000 },
        Ordering::SortedAscending,
    );
    let (rows, truth) = collect_rows(&sorted).unwrap();
    println!("sorted rows {}", truth.total());
    for m in [100, 10_000] {
        let mut sketch: Sketch<u64> = Sketch::new(m, Mode::Unbiased, 3).unwrap();
        let start = Instant::now();
        for &r in &rows {
            sketch.update(r);
        }
        let secs = start.elapsed().as_secs_f64();
        println!("sorted m={m:>6} Unbiased: {:.1} M updates/s", rows.len() as f64 / secs / 1e6);
    }
    let reps = 200;
    let start = Instant::now();
    for seed in 0..reps {
        let mut sketch: Sketch<u64> = Sketch::new(100, Mode::Unbiased, seed).unwrap();
        uss::streams::emit(&sorted, &mut sketch).unwrap();
    }
    let secs = start.elapsed().as_secs_f64();
    println!("sorted m=   100 run-wise: {:.2} ms per stream", secs / reps as f64 * 1e3);
}
