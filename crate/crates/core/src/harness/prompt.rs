//! Prompt construction, including the three mitigation input
//! representations (code repetition, inline comment, chain of thought).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::lexer::{tokenize, END_TAG, INLINE_REVIEW_PREFIX, START_TAG};

/// Version of the default task framing, recorded with results.
pub const TEMPLATE_VERSION: &str = "zero-shot-v1";

pub const COT_SENTENCE: &str = "Provide step-by-step reasoning about how the review comment relates to the code";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mitigation {
    #[default]
    None,
    Cr,
    Ic,
    Cot,
}

impl fmt::Display for Mitigation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mitigation::None => "none",
            Mitigation::Cr => "cr",
            Mitigation::Ic => "ic",
            Mitigation::Cot => "cot",
        })
    }
}

impl FromStr for Mitigation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(Mitigation::None),
            "cr" => Ok(Mitigation::Cr),
            "ic" => Ok(Mitigation::Ic),
            "cot" => Ok(Mitigation::Cot),
            _ => Err(format!("unknown mitigation `{s}` (expected none, cr, ic or cot)")),
        }
    }
}

/// Source text between the two tags, trimmed.
pub fn tagged_text(code: &str) -> Option<&str> {
    let toks = tokenize(code);
    let s = toks.tokens.iter().find(|t| t.text == START_TAG)?;
    let e = toks.tokens.iter().find(|t| t.text == END_TAG)?;
    (s.end <= e.start).then(|| code[s.end..e.start].trim())
}

/// The comment restated around the tagged code.
pub fn code_repetition_comment(code: &str, comment: &str) -> Option<String> {
    let span = tagged_text(code)?;
    Some(format!(
        "For this part of the Java code: {span}, this review comment is provided: {comment}."
    ))
}

/// `code` with the comment inserted right after `<END>` as a review
/// comment.
pub fn with_inline_comment(code: &str, comment: &str) -> Option<String> {
    let toks = tokenize(code);
    let end = toks.tokens.iter().find(|t| t.text == END_TAG)?;
    let body = comment.replace("*/", "* /").replace(['\n', '\r'], " ");
    let mut out = String::with_capacity(code.len() + body.len() + 16);
    out.push_str(&code[..end.end]);
    out.push_str(&format!(" {INLINE_REVIEW_PREFIX} {} */", body.trim()));
    out.push_str(&code[end.end..]);
    Some(out)
}

fn instruction(code: &str, comment: Option<&str>) -> String {
    let mut s = String::from(
        "Revise the following Java method according to the review comment. \
         The comment refers to the code between <START> and <END>. \
         Return only the complete revised method.\n\n",
    );
    s.push_str("Code:\n");
    s.push_str(code.trim_end());
    s.push('\n');
    if let Some(c) = comment {
        s.push_str("\nReview comment:\n");
        s.push_str(c.trim_end());
        s.push('\n');
    }
    s
}

/// Input for a model. Models that are not instruction tuned get the bare
/// `code` / `comment` pair they were fine-tuned on.
pub fn build_prompt(
    code: &str,
    comment: &str,
    mitigation: Mitigation,
    instruction_tuned: bool,
) -> Result<String, HarnessError> {
    let missing = || HarnessError::UnsupportedMitigation(format!("{mitigation}: code has no tagged span"));
    let frame = |code: &str, comment: Option<&str>| {
        if instruction_tuned {
            instruction(code, comment)
        } else {
            match comment {
                Some(c) => format!("{}\n{}\n", code.trim_end(), c.trim_end()),
                None => format!("{}\n", code.trim_end()),
            }
        }
    };
    match mitigation {
        Mitigation::None => Ok(frame(code, Some(comment))),
        Mitigation::Cr => {
            let c = code_repetition_comment(code, comment).ok_or_else(missing)?;
            Ok(frame(code, Some(&c)))
        }
        Mitigation::Ic => {
            let c = with_inline_comment(code, comment).ok_or_else(missing)?;
            Ok(frame(&c, None))
        }
        Mitigation::Cot if !instruction_tuned => Err(HarnessError::UnsupportedMitigation(
            "chain-of-thought needs an instruction-tuned model".into(),
        )),
        Mitigation::Cot => {
            let mut p = frame(code, Some(comment));
            p.push('\n');
            p.push_str(COT_SENTENCE);
            p.push_str(".\n");
            Ok(p)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CODE: &str = "int f(User u) {\n    <START> return u.id; <END>\n}";

    #[test]
    fn plain_prompt_has_code_and_comment() {
        let p = build_prompt(CODE, "check null", Mitigation::None, true).unwrap();
        assert!(p.contains(CODE) && p.contains("check null"));
        assert!(!p.to_lowercase().contains("you are"));
    }

    #[test]
    fn code_repetition_wraps_comment() {
        let c = code_repetition_comment(CODE, "check null").unwrap();
        assert_eq!(
            c,
            "For this part of the Java code: return u.id;, this review comment is provided: check null."
        );
    }

    #[test]
    fn cot_needs_instruction_tuning() {
        assert!(build_prompt(CODE, "c", Mitigation::Cot, false).is_err());
        assert!(build_prompt(CODE, "c", Mitigation::Cot, true).unwrap().contains(COT_SENTENCE));
    }
}
