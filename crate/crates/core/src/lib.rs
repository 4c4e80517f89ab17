//! Robustness analysis for automated code revision models.

pub mod diffkit;
pub mod features;
pub mod harness;
pub mod instance;
pub mod java;
pub mod lexer;
pub mod metrics;
pub mod spp;
pub mod stats;

pub use instance::ReviewInstance;
pub use spp::{PerturbationType, PerturbedVariant};
