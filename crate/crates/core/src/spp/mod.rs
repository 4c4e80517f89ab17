//! Semantics-preserving perturbations (SPPs).
//!
//! Every operator is applied to the tagged input and to the reference
//! revision with the same anchors and the same generated names, so the
//! reference edit survives the perturbation. The tokens an operator
//! touched in the input are reported as perturbed spans.

pub mod names;
mod ops;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diffkit::token_edit_distance;
use crate::instance::ReviewInstance;
use crate::java::{self, serialize, serialize_full, JavaError, MethodAst};
use crate::lexer::{tokenize, TokenKind};
pub use names::instance_seed;
use names::{comment_words, rewrite_words, NameGen};
pub use ops::negate;
use ops::{OpError, Shared, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbationType {
    P1,
    P2,
    P3,
    P4,
    P5,
    P6,
    P7,
    P8,
    P9,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Concept {
    ControlFlow,
    DataFlow,
    IdentifierNaming,
}

impl PerturbationType {
    pub const ALL: [PerturbationType; 9] = [
        PerturbationType::P1,
        PerturbationType::P2,
        PerturbationType::P3,
        PerturbationType::P4,
        PerturbationType::P5,
        PerturbationType::P6,
        PerturbationType::P7,
        PerturbationType::P8,
        PerturbationType::P9,
    ];

    pub fn all() -> &'static [PerturbationType] {
        &Self::ALL
    }

    pub fn id(self) -> &'static str {
        match self {
            PerturbationType::P1 => "p1",
            PerturbationType::P2 => "p2",
            PerturbationType::P3 => "p3",
            PerturbationType::P4 => "p4",
            PerturbationType::P5 => "p5",
            PerturbationType::P6 => "p6",
            PerturbationType::P7 => "p7",
            PerturbationType::P8 => "p8",
            PerturbationType::P9 => "p9",
        }
    }

    pub fn concept(self) -> Concept {
        use PerturbationType::*;
        match self {
            P1 | P2 | P3 | P4 | P5 => Concept::ControlFlow,
            P6 | P7 => Concept::DataFlow,
            P8 | P9 => Concept::IdentifierNaming,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PerturbationType::P1 => "If-else swap",
            PerturbationType::P2 => "Dead exception insertion",
            PerturbationType::P3 => "Dead variable assignment insertion",
            PerturbationType::P4 => "Try-catch wrapper",
            PerturbationType::P5 => "Independent line swap",
            PerturbationType::P6 => "Return via variable",
            PerturbationType::P7 => "Def-use break",
            PerturbationType::P8 => "Random variable names",
            PerturbationType::P9 => "Shuffle variable names",
        }
    }
}

impl fmt::Display for PerturbationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for PerturbationType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        PerturbationType::ALL
            .into_iter()
            .find(|p| p.id() == lower)
            .ok_or_else(|| format!("unknown perturbation type `{s}` (expected p1..p9)"))
    }
}

/// Machine-readable reason an instance gets no variant for an operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reason {
    ParseFailure,
    NoIfElse,
    AlreadyWrapped,
    EmptyBody,
    ConstructorCall,
    NoSwappablePair,
    VoidReturn,
    NoValueReturn,
    NoInitializedLocal,
    NoLocalVariables,
    NeedsTwoVariables,
    NameCaptureRisk,
    PairingFailure,
    /// The perturbed input already equals the reference revision.
    FixEqualsPerturbation,
    /// The perturbed input equals the perturbed revision.
    RevisionEqualsInput,
    NameCollision,
    SpanUnmappable,
    NoChange,
}

impl Reason {
    /// The operator should have applied but the pipeline failed, as opposed
    /// to the instance simply not meeting the precondition.
    pub fn is_failure(self) -> bool {
        matches!(self, Reason::ParseFailure | Reason::NameCollision | Reason::SpanUnmappable)
    }

    pub fn code(self) -> &'static str {
        match self {
            Reason::ParseFailure => "parse-failure",
            Reason::NoIfElse => "no-if-else",
            Reason::AlreadyWrapped => "already-wrapped",
            Reason::EmptyBody => "empty-body",
            Reason::ConstructorCall => "constructor-call",
            Reason::NoSwappablePair => "no-swappable-pair",
            Reason::VoidReturn => "void-return",
            Reason::NoValueReturn => "no-value-return",
            Reason::NoInitializedLocal => "no-initialized-local",
            Reason::NoLocalVariables => "no-local-variables",
            Reason::NeedsTwoVariables => "needs-two-variables",
            Reason::NameCaptureRisk => "name-capture-risk",
            Reason::PairingFailure => "pairing-failure",
            Reason::FixEqualsPerturbation => "fix-equals-perturbation",
            Reason::RevisionEqualsInput => "revision-equals-input",
            Reason::NameCollision => "name-collision",
            Reason::SpanUnmappable => "span-unmappable",
            Reason::NoChange => "no-change",
        }
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SppError {
    #[error("{0} does not parse: {1}")]
    Parse(&'static str, JavaError),
    #[error("not applicable: {0}")]
    Inapplicable(Reason),
    #[error("operator applies to the input but not to the revision")]
    PairingFailure,
    #[error("no fresh name found after {} attempts", names::MAX_ATTEMPTS)]
    NameCollision,
    #[error("tagged span cannot be mapped: {0}")]
    SpanUnmappable(String),
    #[error("perturbed code failed verification: {0}")]
    Verification(String),
}

impl SppError {
    /// Exclusion reason code for this failure.
    pub fn reason(&self) -> Reason {
        match self {
            SppError::Parse(..) => Reason::ParseFailure,
            SppError::Inapplicable(r) => *r,
            SppError::PairingFailure => Reason::PairingFailure,
            SppError::NameCollision => Reason::NameCollision,
            SppError::SpanUnmappable(_) | SppError::Verification(_) => Reason::SpanUnmappable,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbedVariant {
    pub instance_id: String,
    pub ptype: PerturbationType,
    /// Seed the variant was generated from (after per-instance mixing).
    pub seed: u64,
    /// Perturbed input with `<START>`/`<END>` tags.
    pub code: String,
    /// Perturbed reference revision.
    pub revision: String,
    /// Review comment, rewritten for the naming operators.
    pub comment: String,
    /// Half-open token intervals of `tokenize(code)` touched by the operator.
    pub spans: Vec<[usize; 2]>,
}

/// Whether `ptype` yields a variant for `inst`, or why not.
pub fn applicable(ptype: PerturbationType, inst: &ReviewInstance) -> Result<(), Reason> {
    apply(ptype, inst, 0).map(|_| ()).map_err(|e| e.reason())
}

fn taken_names(inst: &ReviewInstance, c: &MethodAst, r: &MethodAst) -> HashSet<String> {
    let mut taken: HashSet<String> = c.identifiers().into_iter().collect();
    taken.extend(r.identifiers());
    for src in [&inst.code, &inst.revision] {
        taken.extend(
            tokenize(src)
                .tokens
                .into_iter()
                .filter(|t| t.kind == TokenKind::Identifier)
                .map(|t| t.text),
        );
    }
    taken.extend(
        comment_words(&inst.comment)
            .into_iter()
            .map(|(s, e)| inst.comment[s..e].to_string()),
    );
    taken
}

fn op_err(e: OpError, paired: bool) -> SppError {
    match e {
        OpError::Collision => SppError::NameCollision,
        OpError::Inapplicable(_) if paired => SppError::PairingFailure,
        OpError::Inapplicable(r) => SppError::Inapplicable(r),
    }
}

fn tag_free_texts(src: &str) -> Vec<String> {
    tokenize(src)
        .without_tags()
        .tokens
        .into_iter()
        .map(|t| t.text)
        .collect()
}

/// Apply one operator to an instance. `seed` is the global seed; it is
/// mixed with the instance id and operator before use.
pub fn apply(ptype: PerturbationType, inst: &ReviewInstance, seed: u64) -> Result<PerturbedVariant, SppError> {
    let seed = instance_seed(seed, &inst.id, ptype);
    let parsed = java::parse_with_map(&inst.code, true).map_err(|e| SppError::Parse("input", e))?;
    let mut c = parsed.ast;
    let mut span = parsed.span.expect("tags required");
    let mut r = java::parse_untagged(&inst.revision).map_err(|e| SppError::Parse("revision", e))?;

    let mut shared = Shared {
        names: NameGen::new(seed, taken_names(inst, &c, &r)),
        renames: Default::default(),
        swapped: None,
    };
    let marks = {
        let mut side = Side::new(&mut c, Some(&mut span), false);
        ops::run(ptype, &mut side, &mut shared).map_err(|e| op_err(e, false))?;
        side.marks
    };
    {
        let mut side = Side::new(&mut r, None, true);
        ops::run(ptype, &mut side, &mut shared).map_err(|e| op_err(e, true))?;
    }

    let printed = serialize_full(&c, Some(&span), Some(&marks)).map_err(|e| match e {
        JavaError::SpanUnmappable(m) => SppError::SpanUnmappable(m),
        e => SppError::Verification(e.to_string()),
    })?;
    let revision = serialize(&r, None).map_err(|e| SppError::Verification(e.to_string()))?;
    let comment = match ptype {
        PerturbationType::P8 | PerturbationType::P9 => rewrite_words(&inst.comment, &shared.renames),
        _ => inst.comment.clone(),
    };

    let spans = perturbed_spans(&printed.tokens);
    verify(&printed.text, &c)?;
    if spans.is_empty() {
        return Err(SppError::Verification("no perturbed tokens".into()));
    }
    let code_k = tag_free_texts(&printed.text);
    if token_edit_distance(&tag_free_texts(&inst.code), &code_k) == 0 {
        return Err(SppError::Inapplicable(Reason::NoChange));
    }
    if code_k == tag_free_texts(&inst.revision) {
        return Err(SppError::Inapplicable(Reason::FixEqualsPerturbation));
    }
    if code_k == tag_free_texts(&revision) {
        return Err(SppError::Inapplicable(Reason::RevisionEqualsInput));
    }

    Ok(PerturbedVariant {
        instance_id: inst.id.clone(),
        ptype,
        seed,
        code: printed.text,
        revision,
        comment,
        spans,
    })
}

/// Maximal marked runs over the tagged token stream. A tag between two
/// marked tokens belongs to the run.
fn perturbed_spans(tokens: &[java::PrintedToken]) -> Vec<[usize; 2]> {
    let mut marks: Vec<bool> = tokens.iter().map(|t| t.marked).collect();
    for i in 0..tokens.len() {
        if tokens[i].tag {
            let before = tokens[..i].iter().rev().find(|t| !t.tag).is_some_and(|t| t.marked);
            let after = tokens[i + 1..].iter().find(|t| !t.tag).is_some_and(|t| t.marked);
            marks[i] = before && after;
        }
    }
    let mut out = Vec::new();
    let mut i = 0;
    while i < marks.len() {
        if marks[i] {
            let s = i;
            while i < marks.len() && marks[i] {
                i += 1;
            }
            out.push([s, i]);
        } else {
            i += 1;
        }
    }
    out
}

/// The printed variant must re-parse to the same tree and print the same
/// text again.
fn verify(printed: &str, ast: &MethodAst) -> Result<(), SppError> {
    let (again, span) = java::parse_method(printed).map_err(|e| SppError::Verification(e.to_string()))?;
    if !again.structurally_eq(ast) {
        return Err(SppError::Verification("re-parse differs from rewritten tree".into()));
    }
    let reprinted = serialize(&again, Some(&span)).map_err(|e| SppError::Verification(e.to_string()))?;
    if reprinted != printed {
        return Err(SppError::Verification("printing is not stable".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(code: &str, revision: &str) -> ReviewInstance {
        ReviewInstance {
            id: "t".into(),
            code: code.into(),
            comment: "check x please".into(),
            revision: revision.into(),
        }
    }

    #[test]
    fn ids_parse_and_print() {
        for p in PerturbationType::ALL {
            assert_eq!(p.id().parse::<PerturbationType>().unwrap(), p);
        }
        assert!("p10".parse::<PerturbationType>().is_err());
        assert_eq!(serde_json::to_string(&Reason::NoIfElse).unwrap(), "\"no-if-else\"");
    }

    #[test]
    fn dead_exception_is_inserted_in_both() {
        let i = inst(
            "void g() { <START> a(); <END> }",
            "void g() { a(); b(); }",
        );
        let v = apply(PerturbationType::P2, &i, 1).unwrap();
        assert!(v.code.contains("boolean var = false;"));
        assert!(v.revision.contains("if (var) {\n        throw new RuntimeException();"));
        assert_eq!(v.spans.len(), 1);
    }

    #[test]
    fn void_methods_reject_return_via_variable() {
        let i = inst("void g() { <START> a(); <END> }", "void g() { b(); }");
        assert_eq!(applicable(PerturbationType::P6, &i), Err(Reason::VoidReturn));
    }
}
