//! Experiment harness around `xai-chest-core`: TOML configs with stable
//! digests, the binary dataset cache, single-step commands, the seven
//! studies, CSV outputs and run manifests.

pub mod cache;
pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod seeds;
pub mod stats;
pub mod suite;
pub mod tables;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
