//! Consistency metrics for a model revision against the reference
//! revision: exact match, edit match, relative edit error and CodeBLEU.
//!
//! All comparisons run on lexer tokens with `<START>`/`<END>` removed, so
//! formatting and tags never affect a score.

pub mod codebleu;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diffkit::{edit_script, EditRegion, EditScript};
use crate::lexer::tokenize;
pub use codebleu::{codebleu, codebleu_with, CodeBleu, CodeBleuWeights};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("the reference revision makes no edits to the input")]
    ZeroReferenceEdits,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub exm: bool,
    pub em: bool,
    /// Present exactly when `em` holds.
    pub ree: Option<f64>,
    pub codebleu: f64,
    /// CodeBLEU ran without the syntax components (candidate unparseable).
    pub codebleu_degraded: bool,
}

fn texts(src: &str) -> Vec<String> {
    tokenize(src)
        .without_tags()
        .tokens
        .into_iter()
        .map(|t| t.text)
        .collect()
}

/// Token-level equality, ignoring whitespace, comments and tags.
pub fn exact_match(candidate: &str, reference: &str) -> bool {
    texts(candidate) == texts(reference)
}

/// Whether `sub` occurs contiguously inside `sup`.
fn contains_run(sup: &[String], sub: &[String]) -> bool {
    sub.is_empty() || sup.windows(sub.len()).any(|w| w == sub)
}

/// Every reference region is matched to a distinct candidate region of the
/// same kind that contains its tokens contiguously.
fn regions_covered(g: &[EditRegion], m: &[EditRegion]) -> bool {
    if g.len() > m.len() {
        return false;
    }
    let adj: Vec<Vec<usize>> = g
        .iter()
        .map(|gr| {
            m.iter()
                .enumerate()
                .filter(|(_, mr)| mr.kind == gr.kind && contains_run(&mr.tokens, &gr.tokens))
                .map(|(j, _)| j)
                .collect()
        })
        .collect();
    let mut owner: Vec<Option<usize>> = vec![None; m.len()];
    fn augment(
        u: usize,
        adj: &[Vec<usize>],
        seen: &mut [bool],
        owner: &mut [Option<usize>],
    ) -> bool {
        for &v in &adj[u] {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            if owner[v].is_none_or(|w| augment(w, adj, seen, owner)) {
                owner[v] = Some(u);
                return true;
            }
        }
        false
    }
    (0..g.len()).all(|u| {
        let mut seen = vec![false; m.len()];
        augment(u, &adj, &mut seen, &mut owner)
    })
}

fn scripts(input: &str, candidate: &str, reference: &str) -> (EditScript, EditScript) {
    let c = texts(input);
    let g = edit_script(&c, &texts(reference));
    let m = edit_script(&c, &texts(candidate));
    (g, m)
}

/// The candidate contains every inserted and deleted region of the
/// reference diff; extra edits are allowed.
pub fn edit_match(input: &str, candidate: &str, reference: &str) -> bool {
    let (g, m) = scripts(input, candidate, reference);
    regions_covered(&g.regions, &m.regions)
}

/// `(|edits(input→candidate)| − |edits(input→reference)|) / |edits(input→reference)|`.
pub fn relative_edit_error(input: &str, candidate: &str, reference: &str) -> Result<f64, MetricsError> {
    let (g, m) = scripts(input, candidate, reference);
    ree_from(&g, &m)
}

fn ree_from(g: &EditScript, m: &EditScript) -> Result<f64, MetricsError> {
    if g.edits() == 0 {
        return Err(MetricsError::ZeroReferenceEdits);
    }
    Ok((m.edits() as f64 - g.edits() as f64) / g.edits() as f64)
}

/// All four metrics for one candidate.
pub fn score(input: &str, candidate: &str, reference: &str) -> Result<MetricsRecord, MetricsError> {
    let exm = exact_match(candidate, reference);
    let (g, m) = scripts(input, candidate, reference);
    if g.edits() == 0 {
        return Err(MetricsError::ZeroReferenceEdits);
    }
    let em = exm || regions_covered(&g.regions, &m.regions);
    let ree = if em { Some(ree_from(&g, &m)?) } else { None };
    let cb = codebleu(candidate, reference);
    Ok(MetricsRecord {
        exm,
        em,
        ree,
        codebleu: cb.score,
        codebleu_degraded: cb.degraded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const INPUT: &str = "int f(int a) { return a; }";

    #[test]
    fn exact_match_ignores_whitespace() {
        assert!(exact_match("int  x=0;", "int x = 0 ;"));
        assert!(!exact_match("int x = 0;;", "int x = 0;"));
    }

    #[test]
    fn edit_match_allows_extra_edits() {
        let reference = "int f(int a) { if (a == 0) return 0; return a; }";
        let noisy = "int f(int a) { int zz = 1; if (a == 0) return 0; return a; }";
        assert!(edit_match(INPUT, reference, reference));
        assert!(edit_match(INPUT, noisy, reference));
        assert!(!edit_match(INPUT, INPUT, reference));
        let r = relative_edit_error(INPUT, noisy, reference).unwrap();
        assert!(r > 0.0);
    }

    #[test]
    fn ree_formula() {
        let g = EditScript {
            regions: vec![],
            insert_count: 3,
            delete_count: 1,
        };
        let m = EditScript {
            regions: vec![],
            insert_count: 4,
            delete_count: 2,
        };
        assert_eq!(ree_from(&g, &m).unwrap(), 0.5);
        assert_eq!(
            relative_edit_error(INPUT, INPUT, INPUT),
            Err(MetricsError::ZeroReferenceEdits)
        );
    }
}
