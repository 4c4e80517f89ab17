use std::collections::BTreeMap;
use std::path::Path;

use acr_core::harness::{generate_variants, load_dataset};
use acr_core::spp::{applicable, PerturbationType};

fn corpus() -> Vec<acr_core::ReviewInstance> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/corpus.jsonl");
    let loaded = load_dataset(&path).unwrap();
    assert!(loaded.rejected.is_empty(), "{:?}", loaded.rejected);
    loaded.items
}

#[test]
fn bundled_corpus_loads_fully() {
    assert!(corpus().len() >= 50);
}

#[test]
fn every_operator_applies_somewhere() {
    let insts = corpus();
    let gen = generate_variants(&insts, &PerturbationType::ALL, 42);
    let counts = gen.counts();
    for p in PerturbationType::ALL {
        assert!(counts.get(&p).copied().unwrap_or(0) > 0, "{p} never applies");
    }
    // Variant count equals the independently computed applicability matrix.
    let mut matrix = BTreeMap::new();
    for i in &insts {
        for p in PerturbationType::ALL {
            if applicable(p, i).is_ok() {
                *matrix.entry(p).or_insert(0) += 1;
            }
        }
    }
    assert_eq!(counts, matrix);
    eprintln!("{counts:?}\n{:?}", gen.reasons());
}
