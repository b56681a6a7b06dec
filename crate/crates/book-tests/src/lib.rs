// Copyright 2026 The uss Authors. Licensed under Apache-2.0.

//! Runs the guide's code snippets as doc-tests. Each chapter is included as
//! the documentation of its own module, so a failing snippet names its
//! chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/sketch.md")]
pub mod sketch {}

#[doc = include_str!("../../../book/src/estimation.md")]
pub mod estimation {}

#[doc = include_str!("../../../book/src/reductions-and-merging.md")]
pub mod reductions_and_merging {}

#[doc = include_str!("../../../book/src/baselines.md")]
pub mod baselines {}

#[doc = include_str!("../../../book/src/streams.md")]
pub mod streams {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
