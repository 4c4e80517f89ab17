//! Perturbed-dataset generation: every instance under every requested
//! operator, one perturbation per variant.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::instance::ReviewInstance;
use crate::spp::{self, PerturbationType, PerturbedVariant, Reason};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub instance_id: String,
    pub ptype: PerturbationType,
    pub reason: Reason,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct Generation {
    pub variants: Vec<PerturbedVariant>,
    pub exclusions: Vec<Exclusion>,
}

impl Generation {
    /// Variant count per operator.
    pub fn counts(&self) -> BTreeMap<PerturbationType, usize> {
        let mut m = BTreeMap::new();
        for v in &self.variants {
            *m.entry(v.ptype).or_insert(0) += 1;
        }
        m
    }

    /// Exclusion count per reason code.
    pub fn reasons(&self) -> BTreeMap<Reason, usize> {
        let mut m = BTreeMap::new();
        for e in &self.exclusions {
            *m.entry(e.reason).or_insert(0) += 1;
        }
        m
    }
}

/// Apply each operator to each instance. The output order is instance
/// order, then operator order, whatever the thread count.
pub fn generate_variants(instances: &[ReviewInstance], ptypes: &[PerturbationType], seed: u64) -> Generation {
    let jobs: Vec<(&ReviewInstance, PerturbationType)> = instances
        .iter()
        .flat_map(|i| ptypes.iter().map(move |&p| (i, p)))
        .collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(inst, p)| (inst, p, spp::apply(p, inst, seed)))
        .collect();
    let mut g = Generation::default();
    for (inst, p, r) in results {
        match r {
            Ok(v) => g.variants.push(v),
            Err(e) => {
                log::debug!("{} {}: {}", inst.id, p, e);
                g.exclusions.push(Exclusion {
                    instance_id: inst.id.clone(),
                    ptype: p,
                    reason: e.reason(),
                    detail: e.to_string(),
                })
            }
        }
    }
    g
}
