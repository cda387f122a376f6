// SPDX-License-Identifier: MIT OR Apache-2.0

//! Time-varying Bradley-Terry ranking with group structure.
//!
//! The crate estimates item abilities from timestamped pairwise comparisons
//! with a kernel-smoothed spectral estimator (kernel rank centrality),
//! recognizes ranking groups with an adaptive group fused lasso, detects
//! change points of the group structure by dynamic programming, and
//! quantifies the uncertainty of the group-level refit estimator.
//!
//! Everything here is pure computation over in-memory values and builds
//! without `std` (only `alloc` is required). File formats, the command-line
//! front end and parallel replicate drivers live in the `dynrank` crate.
//!
//! # Outcome convention
//!
//! A [`ComparisonRecord`] `(i, j, t, outcome)` is one comparison between
//! items `i` and `j`. `outcome = 1` is evidence in favour of `j` (the random
//! walk moves from `i` to `j`), `outcome = 0` is evidence in favour of `i`.
//! A record therefore informs both directions of the pair: it contributes
//! `outcome` to the `i -> j` fraction and `1 - outcome` to the `j -> i`
//! fraction.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod changepoint;
mod error;
pub mod grouping;
pub mod kernel;
pub mod linalg;
pub mod metrics;
pub mod simulation;
pub mod spectral;
pub mod types;
pub mod uncertainty;

pub use error::{Error, Result};
pub use kernel::{KernelFamily, KernelSpec};
pub use types::{
    make_grid, validate_dataset, ComparisonDataset, ComparisonRecord, DataView, GroupPartition,
    ScoreTrajectory, TimeGrid, Violation,
};
