//! Shared inputs for the benchmarks.

use std::path::Path;

use acr_core::harness::load_dataset;
use acr_core::ReviewInstance;

/// The bundled corpus of review instances.
pub fn corpus() -> Vec<ReviewInstance> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/corpus.jsonl");
    load_dataset(&path).expect("bundled corpus").items
}
