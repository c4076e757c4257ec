//! File formats, reports, experiment presets and the command-line driver
//! for the `aggsense-core` pipeline.

pub mod cli;
pub mod config;
pub mod dataset_file;
pub mod experiment;
pub mod model_file;
pub mod report;
pub mod trace;

mod error;

pub use error::{Error, Result};
