//! Algorithms for disaggregating a single household water-meter signal into
//! per-fixture activity labels.
//!
//! The crate is `no_std` (with `alloc`) and carries no IO. It covers the whole
//! modelling pipeline:
//!
//! * [`simulator`]: stochastic per-fixture flow traces and their aggregate,
//! * [`dataset`]: lagged-window feature views and chronological splits,
//! * [`trees`], [`boosting`], [`neural`]: binary base learners,
//! * [`multilabel`]: binary relevance and classifier chain meta-estimators,
//! * [`eval`]: micro-F1, accuracies and one-vs-rest confusions,
//! * [`tuning`]: seeded random search over hyperparameter spaces,
//! * [`stream`]: ring-buffer online prediction.
//!
//! File formats, configuration parsing and the command-line driver live in the
//! `aggsense` companion crate.
#![no_std]

extern crate alloc;

pub mod boosting;
pub mod dataset;
mod error;
pub mod eval;
pub mod fixture;
pub mod learner;
pub mod matrix;
pub mod multilabel;
pub mod neural;
pub mod rng;
pub mod simulator;
pub mod stream;
pub mod trees;
pub mod tuning;

mod grow;
mod math;

pub use error::{Error, Result};
pub use fixture::{Fixture, LabelVector, FIXTURES, N_LABELS};
