//! Solvability, subset bookkeeping, variant scoring and the per-operator
//! consistency aggregates.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adapter::{query_model, Candidate, ModelAdapter, Query};
use super::prompt::{build_prompt, Mitigation};
use super::HarnessError;
use crate::features::{FeatureVector, Position};
use crate::instance::ReviewInstance;
use crate::metrics::{self, MetricsRecord};
use crate::spp::{PerturbationType, PerturbedVariant};
use crate::stats::{max_delta_exm, ObservationRow};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSettings {
    /// Samples per query, for both solvability and variants.
    pub samples: usize,
    /// Applied to variant prompts only; solvability always uses the plain prompt.
    pub mitigation: Mitigation,
    /// Queries in flight at once.
    pub max_parallel: usize,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            samples: 10,
            mitigation: Mitigation::None,
            max_parallel: 4,
        }
    }
}

fn bounded<T: Send>(max_parallel: usize, job: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(max_parallel.max(1)).build() {
        Ok(pool) => pool.install(job),
        Err(e) => {
            log::warn!("thread pool unavailable ({e}), running on the global pool");
            job()
        }
    }
}

/// Whether a model solves one original instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRecord {
    pub model: String,
    pub instance_id: String,
    pub solved: bool,
    pub error: Option<String>,
}

/// Best-of-n exact match on each unperturbed instance.
pub fn solvability(
    adapter: &dyn ModelAdapter,
    instances: &[ReviewInstance],
    settings: &EvalSettings,
) -> Vec<SolveRecord> {
    let model = adapter.name().to_string();
    bounded(settings.max_parallel, || {
        instances
            .par_iter()
            .map(|inst| {
                let outcome = build_prompt(&inst.code, &inst.comment, Mitigation::None, adapter.instruction_tuned())
                    .and_then(|prompt| {
                        query_model(
                            adapter,
                            &Query {
                                key: &inst.id,
                                prompt: &prompt,
                                input: &inst.code,
                                reference: &inst.revision,
                                n: settings.samples,
                            },
                        )
                    });
                let (solved, error) = match outcome {
                    Ok(cands) => (cands.iter().any(|c| metrics::exact_match(&c.text, &inst.revision)), None),
                    Err(e) => (false, Some(e.to_string())),
                };
                SolveRecord {
                    model: model.clone(),
                    instance_id: inst.id.clone(),
                    solved,
                    error,
                }
            })
            .collect()
    })
}

/// Solvable sets per model and their intersection.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SubsetIndex {
    pub solvable: BTreeMap<String, BTreeSet<String>>,
    pub intersection: BTreeSet<String>,
}

impl SubsetIndex {
    pub fn contains(&self, model: &str, instance_id: &str) -> bool {
        self.solvable.get(model).is_some_and(|s| s.contains(instance_id))
    }
}

pub fn compute_subsets(records: &[SolveRecord]) -> SubsetIndex {
    let mut solvable: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for r in records {
        let set = solvable.entry(r.model.clone()).or_default();
        if r.solved {
            set.insert(r.instance_id.clone());
        }
    }
    let mut sets = solvable.values();
    let intersection = match sets.next() {
        Some(first) => sets.fold(first.clone(), |acc, s| acc.intersection(s).cloned().collect()),
        None => BTreeSet::new(),
    };
    SubsetIndex {
        solvable,
        intersection,
    }
}

/// Best-of-n scores for one variant under one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantScore {
    pub model: String,
    pub instance_id: String,
    pub ptype: PerturbationType,
    pub exm: bool,
    pub em: bool,
    pub ree: Option<f64>,
    pub codebleu: f64,
    pub codebleu_degraded: bool,
    /// Samples from which no method could be extracted.
    pub unparseable: usize,
    pub error: Option<String>,
}

fn rank(r: &MetricsRecord) -> (bool, bool, f64, f64) {
    (r.exm, r.em, -r.ree.unwrap_or(f64::INFINITY), r.codebleu)
}

/// The best sample by EXM, then EM, then lowest REE, then CodeBLEU.
fn best_of(v: &PerturbedVariant, cands: &[Candidate]) -> Result<MetricsRecord, HarnessError> {
    let mut best: Option<MetricsRecord> = None;
    for c in cands {
        let r = metrics::score(&v.code, &c.text, &v.revision).map_err(|e| HarnessError::Format(e.to_string()))?;
        if best.as_ref().is_none_or(|b| rank(&r) > rank(b)) {
            best = Some(r);
        }
    }
    best.ok_or_else(|| HarnessError::EmptyResponse(v.instance_id.clone()))
}

/// Score every variant whose parent the model solves. Per-variant failures
/// are recorded in `error` and never abort the batch.
pub fn evaluate(
    variants: &[PerturbedVariant],
    adapter: &dyn ModelAdapter,
    subsets: &SubsetIndex,
    settings: &EvalSettings,
) -> Vec<VariantScore> {
    let model = adapter.name().to_string();
    let eligible: Vec<&PerturbedVariant> = variants
        .iter()
        .filter(|v| subsets.contains(&model, &v.instance_id))
        .collect();
    bounded(settings.max_parallel, || {
        eligible
            .par_iter()
            .map(|v| {
                let key = format!("{}:{}", v.instance_id, v.ptype);
                let outcome = build_prompt(&v.code, &v.comment, settings.mitigation, adapter.instruction_tuned())
                    .and_then(|prompt| {
                        query_model(
                            adapter,
                            &Query {
                                key: &key,
                                prompt: &prompt,
                                input: &v.code,
                                reference: &v.revision,
                                n: settings.samples,
                            },
                        )
                    })
                    .and_then(|cands| Ok((cands.iter().filter(|c| c.unparseable).count(), best_of(v, &cands)?)));
                match outcome {
                    Ok((unparseable, r)) => VariantScore {
                        model: model.clone(),
                        instance_id: v.instance_id.clone(),
                        ptype: v.ptype,
                        exm: r.exm,
                        em: r.em,
                        ree: r.ree,
                        codebleu: r.codebleu,
                        codebleu_degraded: r.codebleu_degraded,
                        unparseable,
                        error: None,
                    },
                    Err(e) => VariantScore {
                        model: model.clone(),
                        instance_id: v.instance_id.clone(),
                        ptype: v.ptype,
                        exm: false,
                        em: false,
                        ree: None,
                        codebleu: 0.0,
                        codebleu_degraded: false,
                        unparseable: 0,
                        error: Some(e.to_string()),
                    },
                }
            })
            .collect()
    })
}

/// Per (model, operator) consistency, in percent where applicable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub model: String,
    pub ptype: PerturbationType,
    pub n: usize,
    pub exm_rate: f64,
    /// `100 × (1 − EXM rate)`.
    pub delta_exm: f64,
    /// `100 × (1 − EM rate)`.
    pub delta_em: f64,
    /// Mean REE over edit-matching variants.
    pub ree: Option<f64>,
    pub codebleu: f64,
}

/// Aggregate scored variants, optionally restricted to a set of instances.
/// Variants that failed to score are left out.
pub fn aggregate(scores: &[VariantScore], restrict: Option<&BTreeSet<String>>) -> Vec<Aggregate> {
    let mut groups: BTreeMap<(&str, PerturbationType), Vec<&VariantScore>> = BTreeMap::new();
    for s in scores {
        if s.error.is_some() || restrict.is_some_and(|r| !r.contains(&s.instance_id)) {
            continue;
        }
        groups.entry((&s.model, s.ptype)).or_default().push(s);
    }
    groups
        .into_iter()
        .map(|((model, ptype), g)| {
            let n = g.len();
            let rate = |f: fn(&VariantScore) -> bool| g.iter().filter(|s| f(s)).count() as f64 / n as f64;
            let exm_rate = rate(|s| s.exm);
            let rees: Vec<f64> = g.iter().filter_map(|s| s.ree).collect();
            Aggregate {
                model: model.to_string(),
                ptype,
                n,
                exm_rate,
                delta_exm: (1.0 - exm_rate) * 100.0,
                delta_em: (1.0 - rate(|s| s.em)) * 100.0,
                ree: (!rees.is_empty()).then(|| rees.iter().sum::<f64>() / rees.len() as f64),
                codebleu: g.iter().map(|s| s.codebleu).sum::<f64>() / n as f64,
            }
        })
        .collect()
}

/// Largest ΔEXM over operators for one model on one subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxDrop {
    pub model: String,
    pub subset: String,
    pub max_delta_exm: f64,
    pub ptype: PerturbationType,
}

pub fn max_drops(aggregates: &[Aggregate], subset: &str) -> Vec<MaxDrop> {
    let mut by_model: BTreeMap<&str, Vec<&Aggregate>> = BTreeMap::new();
    for a in aggregates {
        by_model.entry(&a.model).or_default().push(a);
    }
    by_model
        .into_iter()
        .filter_map(|(model, aggs)| {
            let rates: Vec<f64> = aggs.iter().map(|a| a.exm_rate).collect();
            let max = max_delta_exm(&rates).ok()?;
            let worst = aggs.iter().find(|a| a.delta_exm == max)?;
            Some(MaxDrop {
                model: model.to_string(),
                subset: subset.to_string(),
                max_delta_exm: max,
                ptype: worst.ptype,
            })
        })
        .collect()
}

/// A scored variant joined with its features: the per-variant results row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub model: String,
    pub instance_id: String,
    pub ptype: PerturbationType,
    pub exm: bool,
    pub em: bool,
    pub ree: Option<f64>,
    pub codebleu: f64,
    pub codebleu_degraded: bool,
    pub unparseable: usize,
    pub error: Option<String>,
    pub pos: Option<Position>,
    pub distance: Option<f64>,
    pub tok_edit_in: Option<usize>,
    pub tok_edit_task: Option<usize>,
    pub input_length: Option<usize>,
}

pub fn join_features(scores: &[VariantScore], features: &[FeatureVector]) -> Vec<ResultRow> {
    let index: BTreeMap<(&str, PerturbationType), &FeatureVector> =
        features.iter().map(|f| ((f.instance_id.as_str(), f.ptype), f)).collect();
    scores
        .iter()
        .map(|s| {
            let f = index.get(&(s.instance_id.as_str(), s.ptype));
            ResultRow {
                model: s.model.clone(),
                instance_id: s.instance_id.clone(),
                ptype: s.ptype,
                exm: s.exm,
                em: s.em,
                ree: s.ree,
                codebleu: s.codebleu,
                codebleu_degraded: s.codebleu_degraded,
                unparseable: s.unparseable,
                error: s.error.clone(),
                pos: f.map(|f| f.pos),
                distance: f.map(|f| f.distance),
                tok_edit_in: f.map(|f| f.tok_edit_in),
                tok_edit_task: f.map(|f| f.tok_edit_task),
                input_length: f.map(|f| f.input_length),
            }
        })
        .collect()
}

/// Regression observations: scored rows that have features and no error.
pub fn observations(rows: &[ResultRow]) -> Vec<ObservationRow> {
    rows.iter()
        .filter(|r| r.error.is_none())
        .filter_map(|r| {
            Some(ObservationRow {
                instance_id: r.instance_id.clone(),
                model: r.model.clone(),
                ptype: r.ptype,
                exm: u8::from(r.exm),
                pos: r.pos?,
                distance: r.distance?,
                tok_edit_in: r.tok_edit_in? as f64,
                tok_edit_task: r.tok_edit_task? as f64,
                input_length: r.input_length? as f64,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(model: &str, id: &str, solved: bool) -> SolveRecord {
        SolveRecord {
            model: model.into(),
            instance_id: id.into(),
            solved,
            error: None,
        }
    }

    #[test]
    fn subsets() {
        let s = compute_subsets(&[rec("a", "1", true), rec("a", "2", true), rec("b", "1", false), rec("b", "2", false)]);
        assert!(s.intersection.is_empty());
        assert_eq!(s.solvable["a"].len(), 2);
        let s = compute_subsets(&[rec("a", "1", true), rec("b", "1", true), rec("a", "2", false), rec("b", "2", false)]);
        assert_eq!(s.intersection, s.solvable["a"]);
        assert_eq!(s.intersection, s.solvable["b"]);
    }

    #[test]
    fn aggregate_matches_max_drop() {
        let score = |p, exm| VariantScore {
            model: "m".into(),
            instance_id: "i".into(),
            ptype: p,
            exm,
            em: exm,
            ree: exm.then_some(0.0),
            codebleu: 1.0,
            codebleu_degraded: false,
            unparseable: 0,
            error: None,
        };
        let scores = vec![
            score(PerturbationType::P1, true),
            score(PerturbationType::P1, false),
            score(PerturbationType::P2, true),
        ];
        let aggs = aggregate(&scores, None);
        assert_eq!(aggs[0].delta_exm, 50.0);
        assert_eq!(aggs[1].delta_exm, 0.0);
        let d = max_drops(&aggs, "S_theta");
        assert_eq!(d[0].max_delta_exm, 50.0);
        assert_eq!(d[0].ptype, PerturbationType::P1);
    }
}
