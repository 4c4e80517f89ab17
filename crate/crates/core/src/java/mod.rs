//! Parsing and canonical printing of single Java methods.

pub mod ast;
pub(crate) mod parser;
pub mod printer;
pub mod resolve;
pub mod span;

use std::collections::HashMap;

use thiserror::Error;

use crate::lexer::{self, TokenKind};
pub use ast::{MethodAst, NodeId, SourceMap};
pub use printer::{serialize, serialize_full, Marks, PrintedToken, Serialized};
pub use span::{Anchor, TaggedSpan};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JavaError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        message: String,
        line: usize,
        column: usize,
    },
    #[error("malformed tags: {0}")]
    MalformedTags(String),
    #[error("tagged span cannot be mapped: {0}")]
    SpanUnmappable(String),
    #[error("printed method does not re-lex to the emitted tokens")]
    PrintMismatch,
}

/// A parsed method together with token positions of its statements in the
/// tag-free stream.
#[derive(Debug, Clone)]
pub struct ParsedMethod {
    pub ast: MethodAst,
    pub source_map: SourceMap,
    pub span: Option<TaggedSpan>,
}

/// Parse a method that carries exactly one `<START>` and one `<END>` tag.
pub fn parse_method(source: &str) -> Result<(MethodAst, TaggedSpan), JavaError> {
    let parsed = parse_any(source, true)?;
    Ok((parsed.ast, parsed.span.expect("tags required")))
}

/// Parse a method without tags (a revision, a model output).
pub fn parse_untagged(source: &str) -> Result<MethodAst, JavaError> {
    Ok(parse_any(source, false)?.ast)
}

/// Parse with or without tags and keep the statement source map.
pub fn parse_with_map(source: &str, require_tags: bool) -> Result<ParsedMethod, JavaError> {
    parse_any(source, require_tags)
}

fn parse_any(source: &str, require_tags: bool) -> Result<ParsedMethod, JavaError> {
    let raw = lexer::tokenize_with_comments(source);
    let mut code = Vec::new();
    let mut comments_before: HashMap<usize, Vec<String>> = HashMap::new();
    let mut starts = Vec::new();
    let mut ends = Vec::new();
    for tok in raw.tokens {
        match tok.kind {
            TokenKind::Comment => comments_before.entry(code.len()).or_default().push(tok.text),
            TokenKind::Tag if tok.text == lexer::START_TAG => starts.push(code.len()),
            TokenKind::Tag => ends.push((code.len(), starts.len())),
            _ => code.push(tok),
        }
    }

    let tags = match (starts.len(), ends.len()) {
        (0, 0) if !require_tags => None,
        (0, 0) => return Err(JavaError::MalformedTags("no <START>/<END> tags".into())),
        _ if !require_tags => {
            return Err(JavaError::MalformedTags("unexpected tags in untagged code".into()))
        }
        (1, 1) => {
            let (end_at, starts_seen) = ends[0];
            if starts_seen == 0 {
                return Err(JavaError::MalformedTags("<END> precedes <START>".into()));
            }
            Some((starts[0], end_at))
        }
        (s, e) => {
            return Err(JavaError::MalformedTags(format!(
                "expected one <START> and one <END>, found {s} and {e}"
            )))
        }
    };

    let parsed = parser::parse_tokens(source, code, comments_before)?;
    let span = tags.map(|(s, e)| {
        span::snap_tags(
            &parsed.ast,
            &parsed.ranges,
            parsed.body_open,
            parsed.token_count,
            s,
            e,
        )
    });
    Ok(ParsedMethod {
        ast: parsed.ast,
        source_map: SourceMap {
            stmts: parsed.ranges,
        },
        span,
    })
}
