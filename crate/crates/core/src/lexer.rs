//! Static Java tokenizer.
//!
//! Every distance, diff and edit count in the crate is computed over the
//! stream produced here. Lexing is total: characters outside the Java
//! lexical grammar become single-character operator tokens.

use serde::{Deserialize, Serialize};

pub const START_TAG: &str = "<START>";
pub const END_TAG: &str = "<END>";

/// Prefix that marks a block comment injected by the inline-comment
/// mitigation. Only such comments survive lexing (as one opaque token).
pub const INLINE_REVIEW_PREFIX: &str = "/* REVIEW:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    Identifier,
    Keyword,
    Operator,
    Separator,
    Literal,
    Tag,
    Comment,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    /// Byte offsets into the lexed source.
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn is(&self, text: &str) -> bool {
        self.text == text
    }

    pub fn is_tag(&self) -> bool {
        self.kind == TokenKind::Tag
    }
}

/// Ordered token list with the source offsets of every token.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenStream {
    pub tokens: Vec<Token>,
}

impl TokenStream {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn texts(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.text.as_str()).collect()
    }

    /// Same stream with the `<START>`/`<END>` tokens removed.
    pub fn without_tags(&self) -> TokenStream {
        TokenStream {
            tokens: self.tokens.iter().filter(|t| !t.is_tag()).cloned().collect(),
        }
    }

    /// Token texts joined by single spaces.
    pub fn joined(&self) -> String {
        self.texts().join(" ")
    }

    pub fn position_of(&self, text: &str) -> Option<usize> {
        self.tokens.iter().position(|t| t.text == text)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Token> {
        self.tokens.iter()
    }
}

/// Java SE reserved words (keywords plus the reserved literals), shipped as
/// fixed data so keyword-weighted scores are reproducible.
pub const JAVA_RESERVED_WORDS: &[&str] = &[
    "abstract", "assert", "boolean", "break", "byte", "case", "catch", "char", "class", "const",
    "continue", "default", "do", "double", "else", "enum", "extends", "final", "finally", "float",
    "for", "goto", "if", "implements", "import", "instanceof", "int", "interface", "long",
    "native", "new", "package", "private", "protected", "public", "return", "short", "static",
    "strictfp", "super", "switch", "synchronized", "this", "throw", "throws", "transient", "try",
    "void", "volatile", "while", "true", "false", "null",
];

pub fn is_reserved_word(word: &str) -> bool {
    JAVA_RESERVED_WORDS.contains(&word)
}

fn is_literal_word(word: &str) -> bool {
    matches!(word, "true" | "false" | "null")
}

// Longest first within each length class.
const OPERATORS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=",
    ">=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>", "=", ">", "<", "!", "~",
    "?", ":", "+", "-", "*", "/", "&", "|", "^", "%", "@",
];

const SEPARATORS: &[char] = &['(', ')', '{', '}', '[', ']', ';', ',', '.'];

#[derive(Clone, Copy, PartialEq, Eq)]
enum CommentMode {
    /// Drop comments except inline-review comments.
    Metrics,
    /// Keep every comment as a token (parser trivia).
    KeepAll,
}

/// Tokenize `source` for metric computation: comments are dropped except
/// injected inline-review comments.
pub fn tokenize(source: &str) -> TokenStream {
    lex(source, CommentMode::Metrics)
}

/// Tokenize keeping every comment as a [`TokenKind::Comment`] token.
pub fn tokenize_with_comments(source: &str) -> TokenStream {
    lex(source, CommentMode::KeepAll)
}

/// Whether a comment text is an injected inline-review comment.
pub fn is_inline_review_comment(text: &str) -> bool {
    text.starts_with(INLINE_REVIEW_PREFIX)
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '$'
}

fn is_ident_part(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

fn lex(source: &str, mode: CommentMode) -> TokenStream {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < source.len() {
        let rest = &source[i..];
        let c = rest.chars().next().unwrap();
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        let start = i;
        // Comments.
        if rest.starts_with("//") {
            let end = rest.find('\n').map(|n| i + n).unwrap_or(source.len());
            if mode == CommentMode::KeepAll {
                push(&mut tokens, source, TokenKind::Comment, start, end);
            }
            i = end;
            continue;
        }
        if rest.starts_with("/*") {
            let end = rest[2..].find("*/").map(|n| i + 2 + n + 2).unwrap_or(source.len());
            let text = &source[start..end];
            if mode == CommentMode::KeepAll || is_inline_review_comment(text) {
                push(&mut tokens, source, TokenKind::Comment, start, end);
            }
            i = end;
            continue;
        }
        if rest.starts_with(START_TAG) {
            i += START_TAG.len();
            push(&mut tokens, source, TokenKind::Tag, start, i);
            continue;
        }
        if rest.starts_with(END_TAG) {
            i += END_TAG.len();
            push(&mut tokens, source, TokenKind::Tag, start, i);
            continue;
        }
        if is_ident_start(c) {
            let mut end = i;
            for ch in rest.chars() {
                if is_ident_part(ch) {
                    end += ch.len_utf8();
                } else {
                    break;
                }
            }
            let word = &source[start..end];
            let kind = if is_literal_word(word) {
                TokenKind::Literal
            } else if is_reserved_word(word) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            };
            push(&mut tokens, source, kind, start, end);
            i = end;
            continue;
        }
        if c.is_ascii_digit()
            || (c == '.' && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit()))
        {
            let end = scan_number(source, i);
            push(&mut tokens, source, TokenKind::Literal, start, end);
            i = end;
            continue;
        }
        if rest.starts_with("\"\"\"") {
            let end = rest[3..].find("\"\"\"").map(|n| i + 3 + n + 3).unwrap_or(source.len());
            push(&mut tokens, source, TokenKind::Literal, start, end);
            i = end;
            continue;
        }
        if c == '"' || c == '\'' {
            let end = scan_quoted(source, i, c);
            push(&mut tokens, source, TokenKind::Literal, start, end);
            i = end;
            continue;
        }
        if SEPARATORS.contains(&c) {
            // `...` is an operator, handled below.
            if !(c == '.' && rest.starts_with("...")) {
                i += 1;
                push(&mut tokens, source, TokenKind::Separator, start, i);
                continue;
            }
        }
        if let Some(op) = OPERATORS.iter().find(|op| rest.starts_with(**op)) {
            i += op.len();
            push(&mut tokens, source, TokenKind::Operator, start, i);
            continue;
        }
        i += c.len_utf8();
        push(&mut tokens, source, TokenKind::Operator, start, i);
    }
    TokenStream { tokens }
}

fn push(tokens: &mut Vec<Token>, source: &str, kind: TokenKind, start: usize, end: usize) {
    tokens.push(Token {
        kind,
        text: source[start..end].to_string(),
        start,
        end,
    });
}

fn scan_quoted(source: &str, start: usize, quote: char) -> usize {
    let mut escaped = false;
    for (off, ch) in source[start + 1..].char_indices() {
        if ch == '\n' {
            return start + 1 + off;
        }
        if escaped {
            escaped = false;
        } else if ch == '\\' {
            escaped = true;
        } else if ch == quote {
            return start + 1 + off + 1;
        }
    }
    source.len()
}

fn scan_number(source: &str, start: usize) -> usize {
    let b = source.as_bytes();
    let mut i = start;
    let hex = b[i] == b'0' && matches!(b.get(i + 1), Some(b'x' | b'X'));
    let bin = b[i] == b'0' && matches!(b.get(i + 1), Some(b'b' | b'B'));
    if hex || bin {
        i += 2;
        while i < b.len() && (b[i].is_ascii_hexdigit() || b[i] == b'_') {
            i += 1;
        }
        if i < b.len() && matches!(b[i], b'l' | b'L') {
            i += 1;
        }
        return i;
    }
    while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'_') {
        i += 1;
    }
    if i < b.len() && b[i] == b'.' {
        match b.get(i + 1) {
            Some(n) if n.is_ascii_digit() => {
                i += 1;
                while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'_') {
                    i += 1;
                }
            }
            // Member access (`1.foo`) or a second dot.
            Some(n) if n.is_ascii_alphabetic() || *n == b'_' || *n == b'.' => {}
            _ => i += 1,
        }
    }
    if i < b.len() && matches!(b[i], b'e' | b'E') {
        let mut j = i + 1;
        if j < b.len() && matches!(b[j], b'+' | b'-') {
            j += 1;
        }
        if j < b.len() && b[j].is_ascii_digit() {
            i = j;
            while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'_') {
                i += 1;
            }
        }
    }
    if i < b.len() && matches!(b[i], b'f' | b'F' | b'd' | b'D' | b'l' | b'L') {
        i += 1;
    }
    i
}
