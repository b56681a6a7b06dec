// Copyright 2026 The uss Authors. Licensed under Apache-2.0.

#![allow(dead_code)]

/// Running mean and variance (Welford).
#[derive(Debug, Clone, Copy, Default)]
pub struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn se(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }

    pub fn count(&self) -> u64 {
        self.n
    }
}

/// Asserts `|mean - truth| <= 3 SE`, allowing exact hits when SE is 0.
#[track_caller]
pub fn assert_within_3se(m: &Moments, truth: f64, what: &str) {
    let tol = 3.0 * m.se() + 1e-9 * truth.abs().max(1.0);
    assert!((m.mean() - truth).abs() <= tol, "{what}: mean {} vs truth {truth}, 3 SE = {}", m.mean(), 3.0 * m.se());
}
