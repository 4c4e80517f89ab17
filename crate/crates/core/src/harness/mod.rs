//! Datasets, perturbed-dataset generation, model adapters, prompts and
//! the evaluation loop.

pub mod adapter;
pub mod dataset;
pub mod evaluate;
pub mod extract;
pub mod generate;
pub mod prompt;

use std::path::Path;

use thiserror::Error;

pub use adapter::{query_model, AdapterConfig, Candidate, HttpAdapter, MockAdapter, MockMode, ModelAdapter, Query};
pub use dataset::{load_dataset, load_variants, read_csv, to_csv, to_jsonl, write_jsonl, Loaded, Rejection};
pub use evaluate::{
    aggregate, compute_subsets, evaluate, join_features, max_drops, observations, solvability, Aggregate,
    EvalSettings, MaxDrop, ResultRow, SolveRecord, SubsetIndex, VariantScore,
};
pub use generate::{generate_variants, Exclusion, Generation};
pub use prompt::{build_prompt, Mitigation};

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 20_240_917;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HarnessError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("unsupported mitigation: {0}")]
    UnsupportedMitigation(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("empty response for {0}")]
    EmptyResponse(String),
    #[error("no method declaration in the response")]
    ExtractionFailure,
    #[error("configuration error: {0}")]
    Config(String),
}

impl HarnessError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}
