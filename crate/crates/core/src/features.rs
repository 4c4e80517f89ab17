//! The five perturbation features used as regression covariates.
//!
//! Positions are indices into `tokenize(c^(k))`, tags included. The tagged
//! interval runs from `<START>` through `<END>` inclusive.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diffkit::token_edit_distance;
use crate::instance::ReviewInstance;
use crate::lexer::{tokenize, END_TAG, START_TAG};
use crate::spp::{PerturbationType, PerturbedVariant};

/// Where the perturbed spans sit relative to the tagged span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Position {
    Before,
    After,
    Inside,
    Surrounding,
    #[serde(rename = "Overlap-Before")]
    OverlapBefore,
    #[serde(rename = "Overlap-After")]
    OverlapAfter,
    #[serde(rename = "Overlap-Both")]
    OverlapBoth,
}

impl Position {
    pub const ALL: [Position; 7] = [
        Position::Before,
        Position::After,
        Position::Inside,
        Position::Surrounding,
        Position::OverlapBefore,
        Position::OverlapAfter,
        Position::OverlapBoth,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Position::Before => "Before",
            Position::After => "After",
            Position::Inside => "Inside",
            Position::Surrounding => "Surrounding",
            Position::OverlapBefore => "Overlap-Before",
            Position::OverlapAfter => "Overlap-After",
            Position::OverlapBoth => "Overlap-Both",
        }
    }

    /// Whether the perturbation touches the tagged span.
    pub fn touches(self) -> bool {
        matches!(
            self,
            Position::Inside | Position::OverlapBefore | Position::OverlapAfter | Position::OverlapBoth
        )
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Position {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Position::ALL
            .into_iter()
            .find(|p| p.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown position category `{s}`"))
    }
}

/// One span against the tagged interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SpanClass {
    Before,
    After,
    Inside,
    /// Intersects the tagged interval and sticks out on one or both sides.
    Overlap { before: bool, after: bool },
}

fn classify(span: [usize; 2], tag: [usize; 2]) -> SpanClass {
    let ([s, e], [ts, te]) = (span, tag);
    if e <= ts {
        SpanClass::Before
    } else if s >= te {
        SpanClass::After
    } else if s >= ts && e <= te {
        SpanClass::Inside
    } else {
        SpanClass::Overlap {
            before: s < ts,
            after: e > te,
        }
    }
}

fn by_sides(before: bool, after: bool, both: Position, b: Position, a: Position, none: Position) -> Position {
    match (before, after) {
        (true, true) => both,
        (true, false) => b,
        (false, true) => a,
        (false, false) => none,
    }
}

/// Position category of `spans` relative to the half-open `tag` interval.
pub fn position_category(spans: &[[usize; 2]], tag: [usize; 2]) -> Position {
    let classes: Vec<SpanClass> = spans.iter().map(|&s| classify(s, tag)).collect();
    let touching = |c: &SpanClass| matches!(c, SpanClass::Inside | SpanClass::Overlap { .. });
    let any_before = classes.contains(&SpanClass::Before);
    let any_after = classes.contains(&SpanClass::After);

    if !classes.iter().any(touching) {
        return by_sides(
            any_before,
            any_after,
            Position::Surrounding,
            Position::Before,
            Position::After,
            Position::Inside,
        );
    }
    if any_before || any_after {
        return by_sides(
            any_before,
            any_after,
            Position::OverlapBoth,
            Position::OverlapBefore,
            Position::OverlapAfter,
            Position::Inside,
        );
    }
    // Every span touches the tag: decide by where the residue sticks out.
    let (mut before, mut after) = (false, false);
    for c in &classes {
        if let SpanClass::Overlap { before: b, after: a } = c {
            before |= b;
            after |= a;
        }
    }
    by_sides(
        before,
        after,
        Position::OverlapBoth,
        Position::OverlapBefore,
        Position::OverlapAfter,
        Position::Inside,
    )
}

/// Mean over spans of the token distance to the tagged interval, counted
/// between the nearest tokens of the two; intersecting spans count 0.
pub fn perturbation_distance(spans: &[[usize; 2]], tag: [usize; 2]) -> f64 {
    if spans.is_empty() {
        return 0.0;
    }
    let [ts, te] = tag;
    let total: usize = spans
        .iter()
        .map(|&[s, e]| {
            if e <= ts {
                ts - (e - 1)
            } else if s >= te {
                s - (te - 1)
            } else {
                0
            }
        })
        .sum();
    total as f64 / spans.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub instance_id: String,
    pub ptype: PerturbationType,
    pub pos: Position,
    pub distance: f64,
    pub tok_edit_in: usize,
    pub tok_edit_task: usize,
    pub input_length: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FeatureError {
    #[error("perturbed code of {0} lacks a <START>/<END> pair")]
    MissingTags(String),
    #[error("variant {0} has no perturbed spans")]
    NoSpans(String),
}

fn code_texts(src: &str) -> Vec<String> {
    tokenize(src)
        .without_tags()
        .tokens
        .into_iter()
        .map(|t| t.text)
        .collect()
}

/// Tagged interval `[START, END]` of a tagged source, as a half-open range.
pub fn tagged_interval(code: &str) -> Option<[usize; 2]> {
    let stream = tokenize(code);
    let s = stream.position_of(START_TAG)?;
    let e = stream.position_of(END_TAG)?;
    (s < e).then_some([s, e + 1])
}

/// All five features of one variant.
pub fn extract(variant: &PerturbedVariant, instance: &ReviewInstance) -> Result<FeatureVector, FeatureError> {
    let tag =
        tagged_interval(&variant.code).ok_or_else(|| FeatureError::MissingTags(variant.instance_id.clone()))?;
    if variant.spans.is_empty() {
        return Err(FeatureError::NoSpans(variant.instance_id.clone()));
    }
    let perturbed = code_texts(&variant.code);
    Ok(FeatureVector {
        instance_id: variant.instance_id.clone(),
        ptype: variant.ptype,
        pos: position_category(&variant.spans, tag),
        distance: perturbation_distance(&variant.spans, tag),
        tok_edit_in: token_edit_distance(&code_texts(&instance.code), &perturbed),
        tok_edit_task: token_edit_distance(&perturbed, &code_texts(&variant.revision)),
        input_length: tokenize(&variant.code).len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TAG: [usize; 2] = [10, 15];

    #[test]
    fn basic_categories() {
        assert_eq!(position_category(&[[2, 4]], TAG), Position::Before);
        assert_eq!(position_category(&[[16, 18]], TAG), Position::After);
        assert_eq!(position_category(&[[11, 13]], TAG), Position::Inside);
        assert_eq!(position_category(&[[2, 4], [16, 18]], TAG), Position::Surrounding);
        assert_eq!(position_category(&[[8, 12], [16, 18]], TAG), Position::OverlapAfter);
        assert_eq!(position_category(&[[2, 4], [12, 13]], TAG), Position::OverlapBefore);
        assert_eq!(position_category(&[[2, 4], [12, 13], [20, 21]], TAG), Position::OverlapBoth);
        assert_eq!(position_category(&[[8, 12]], TAG), Position::OverlapBefore);
        assert_eq!(position_category(&[[12, 17]], TAG), Position::OverlapAfter);
        assert_eq!(position_category(&[[5, 20]], TAG), Position::OverlapBoth);
    }

    #[test]
    fn distances() {
        assert_eq!(perturbation_distance(&[[8, 12]], TAG), 0.0);
        // Gaps of 4 and 6 tokens.
        assert_eq!(perturbation_distance(&[[2, 7], [20, 21]], TAG), 5.0);
        assert_eq!(perturbation_distance(&[[9, 10]], TAG), 1.0);
    }

    #[test]
    fn labels_round_trip() {
        for p in Position::ALL {
            assert_eq!(p.label().parse::<Position>().unwrap(), p);
            assert_eq!(serde_json::to_string(&p).unwrap(), format!("\"{}\"", p.label()));
        }
    }
}
