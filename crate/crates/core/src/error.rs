// Copyright 2026 The uss Authors. Licensed under Apache-2.0.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid capacity {0}: must be at least 1")]
    InvalidCapacity(usize),
    #[error("invalid weight {0}: must be positive and finite")]
    InvalidWeight(f64),
    #[error("invalid threshold {0}: must lie in (0, 1]")]
    InvalidThreshold(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unsatisfiable stream spec: {0}")]
    Unsatisfiable(String),
    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
