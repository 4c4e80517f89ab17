//! Canonical pretty-printer.
//!
//! Layout: four-space indentation, opening braces at line end, one
//! statement per line, `} else {` on the brace line. Braces are never added
//! or removed. The token sequence is the observable output; whitespace only
//! has to keep adjacent tokens from lexing together.

use std::collections::{HashMap, HashSet};
use std::ops::Range;

use super::ast::*;
use super::span::{widen_anchors, Anchor, TaggedSpan};
use super::JavaError;
use crate::lexer::{self, END_TAG, START_TAG};

/// Which printed tokens count as perturbed.
#[derive(Debug, Clone, Default)]
pub struct Marks {
    /// Statements marked with everything nested in them.
    pub deep: HashSet<NodeId>,
    /// Statements marked for their own tokens only (keywords, braces,
    /// expressions), not nested statements.
    pub shallow: HashSet<NodeId>,
    /// Variable names whose every use and declaration is marked.
    pub names: HashSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrintedToken {
    pub text: String,
    pub marked: bool,
    pub tag: bool,
}

#[derive(Debug, Clone)]
pub struct Serialized {
    pub text: String,
    /// Emitted tokens; equal to re-lexing `text`.
    pub tokens: Vec<PrintedToken>,
    /// Statement ranges in `tokens` (tags included in the count).
    pub source_map: SourceMap,
    /// The span re-mapped onto `tokens`, when one was printed.
    pub span: Option<TaggedSpan>,
}

impl Serialized {
    /// Maximal runs of marked tokens, in the tag-free stream.
    pub fn marked_runs_untagged(&self) -> Vec<Range<usize>> {
        let marks: Vec<bool> = self.tokens.iter().filter(|t| !t.tag).map(|t| t.marked).collect();
        runs(&marks)
    }

    /// Maximal runs of marked tokens, in the tagged stream.
    pub fn marked_runs(&self) -> Vec<Range<usize>> {
        let marks: Vec<bool> = self.tokens.iter().map(|t| t.marked).collect();
        runs(&marks)
    }
}

fn runs(marks: &[bool]) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < marks.len() {
        if marks[i] {
            let s = i;
            while i < marks.len() && marks[i] {
                i += 1;
            }
            out.push(s..i);
        } else {
            i += 1;
        }
    }
    out
}

/// Print a method, with tags when a span is given.
pub fn serialize(ast: &MethodAst, span: Option<&TaggedSpan>) -> Result<String, JavaError> {
    Ok(serialize_full(ast, span, None)?.text)
}

/// Print a method and report token marks, statement ranges and the span
/// as re-mapped onto the output. Tags that a rewrite put out of order are
/// widened to the closest enclosing statement.
pub fn serialize_full(
    ast: &MethodAst,
    span: Option<&TaggedSpan>,
    marks: Option<&Marks>,
) -> Result<Serialized, JavaError> {
    let empty = Marks::default();
    let marks = marks.unwrap_or(&empty);
    let Some(span) = span else {
        return print(ast, None, marks);
    };
    let ids: HashSet<NodeId> = ast.stmt_ids().into_iter().collect();
    for anchor in [span.start, span.end] {
        if let Some(id) = anchor.stmt() {
            if !ids.contains(&id) {
                return Err(JavaError::SpanUnmappable(format!(
                    "anchor statement {} no longer exists",
                    id.0
                )));
            }
        }
    }
    let first = print(ast, Some((span.start, span.end)), marks)?;
    let (s, e) = tag_positions(&first.tokens);
    if s < e {
        return Ok(with_span(first, span, false));
    }
    let (Some(a), Some(b)) = (span.start.stmt(), span.end.stmt()) else {
        return Err(JavaError::SpanUnmappable("tags out of order".into()));
    };
    let (start, end) = widen_anchors(ast, a, b, &first.source_map.stmts)
        .ok_or_else(|| JavaError::SpanUnmappable("no enclosing statement".into()))?;
    let second = print(ast, Some((start, end)), marks)?;
    let (s, e) = tag_positions(&second.tokens);
    if s >= e {
        return Err(JavaError::SpanUnmappable("tags out of order after widening".into()));
    }
    let widened = TaggedSpan {
        start,
        end,
        ..span.clone()
    };
    Ok(with_span(second, &widened, true))
}

fn tag_positions(tokens: &[PrintedToken]) -> (usize, usize) {
    let s = tokens.iter().position(|t| t.tag && t.text == START_TAG).unwrap_or(0);
    let e = tokens.iter().position(|t| t.tag && t.text == END_TAG).unwrap_or(0);
    (s, e)
}

fn with_span(mut out: Serialized, span: &TaggedSpan, widened: bool) -> Serialized {
    let (s, e) = tag_positions(&out.tokens);
    let mut covered: Vec<(usize, NodeId)> = out
        .source_map
        .stmts
        .iter()
        .filter(|(_, r)| r.start > s && r.end <= e && r.start < r.end)
        .map(|(id, r)| (r.start, *id))
        .collect();
    covered.sort();
    out.span = Some(TaggedSpan {
        start_token_index: s,
        end_token_index: e + 1,
        covered_statement_ids: covered.into_iter().map(|(_, id)| id).collect(),
        start: span.start,
        end: span.end,
        snapped: span.snapped,
        widened: span.widened || widened,
    });
    out
}

fn print(
    ast: &MethodAst,
    tags: Option<(Anchor, Anchor)>,
    marks: &Marks,
) -> Result<Serialized, JavaError> {
    let mut w = Writer {
        out: String::new(),
        line: String::new(),
        indent: 0,
        pending_space: false,
        tokens: Vec::new(),
        marked: false,
        deep: 0,
        ranges: HashMap::new(),
        tags,
        marks,
    };
    w.method(ast);
    w.newline();
    let text = std::mem::take(&mut w.out);
    let relexed = lexer::tokenize(&text);
    let same = relexed.len() == w.tokens.len()
        && relexed
            .tokens
            .iter()
            .zip(&w.tokens)
            .all(|(a, b)| a.text == b.text);
    if !same {
        return Err(JavaError::PrintMismatch);
    }
    Ok(Serialized {
        text,
        tokens: w.tokens,
        source_map: SourceMap { stmts: w.ranges },
        span: None,
    })
}

/// Whether two tokens written without a space would lex differently.
fn would_merge(prev: &str, next: &str) -> bool {
    let joined = format!("{prev}{next}");
    let toks = lexer::tokenize_with_comments(&joined);
    !(toks.len() == 2 && toks.tokens[0].text == prev && toks.tokens[1].text == next)
}

fn is_wordish(t: &str) -> bool {
    t.chars()
        .next()
        .is_some_and(|c| c.is_alphanumeric() || c == '_' || c == '$' || c == '"' || c == '\'')
}

const CONTROL_WORDS: &[&str] = &[
    "if", "for", "while", "switch", "catch", "synchronized", "try", "return", "throw", "new",
    "assert", "case",
];

/// Spacing heuristic for opaque token runs (lambda bodies, annotations,
/// anonymous class bodies).
fn opaque_space(prev: &str, next: &str) -> bool {
    if matches!(prev, "(" | "[" | "." | "@" | "::" | "!" | "~") {
        return false;
    }
    if matches!(next, ")" | "]" | "." | "," | ";" | "::") {
        return false;
    }
    let callish = (is_wordish(prev) && !CONTROL_WORDS.contains(&prev))
        || matches!(prev, ")" | "]" | ">");
    if next == "(" && callish {
        return false;
    }
    if next == "[" && (is_wordish(prev) || matches!(prev, ")" | "]")) {
        return false;
    }
    if matches!(next, "++" | "--") && (is_wordish(prev) || matches!(prev, ")" | "]")) {
        return false;
    }
    true
}

struct Writer<'m> {
    out: String,
    line: String,
    indent: usize,
    pending_space: bool,
    tokens: Vec<PrintedToken>,
    marked: bool,
    deep: usize,
    ranges: HashMap<NodeId, Range<usize>>,
    tags: Option<(Anchor, Anchor)>,
    marks: &'m Marks,
}

impl Writer<'_> {
    fn emit(&mut self, text: &str, marked: bool, tag: bool) {
        if !self.line.is_empty() {
            let prev = self.tokens.last().map(|t| t.text.as_str()).unwrap_or("");
            if self.pending_space || would_merge(prev, text) {
                self.line.push(' ');
            }
        }
        self.pending_space = false;
        self.line.push_str(text);
        self.tokens.push(PrintedToken {
            text: text.to_string(),
            marked,
            tag,
        });
    }

    /// Write a token, tight against the previous one unless a space is
    /// pending.
    fn t(&mut self, text: &str) {
        let m = self.marked;
        self.emit(text, m, false);
    }

    fn sp(&mut self) {
        self.pending_space = true;
    }

    /// Space, token, space.
    fn op(&mut self, text: &str) {
        self.sp();
        self.t(text);
        self.sp();
    }

    fn name(&mut self, text: &str) {
        let m = self.marked || self.marks.names.contains(text);
        self.emit(text, m, false);
    }

    fn newline(&mut self) {
        if !self.line.is_empty() {
            for _ in 0..self.indent {
                self.out.push_str("    ");
            }
            self.out.push_str(&self.line);
            self.out.push('\n');
            self.line.clear();
        }
        self.pending_space = false;
    }

    fn comment(&mut self, text: &str) {
        self.newline();
        if lexer::is_inline_review_comment(text) {
            let m = self.marked;
            self.emit(text, m, false);
        } else {
            self.line.push_str(text);
        }
        self.newline();
    }

    fn tag_if(&mut self, anchor: Anchor) {
        if let Some((start, end)) = self.tags {
            if start == anchor {
                self.sp();
                self.emit(START_TAG, false, true);
                self.sp();
            }
            if end == anchor {
                self.sp();
                self.emit(END_TAG, false, true);
                self.sp();
            }
        }
    }

    fn start_tag_if(&mut self, anchor: Anchor) {
        if let Some((start, _)) = self.tags {
            if start == anchor {
                self.sp();
                self.emit(START_TAG, false, true);
                self.sp();
            }
        }
    }

    fn end_tag_if(&mut self, anchor: Anchor) {
        if let Some((_, end)) = self.tags {
            if end == anchor {
                self.sp();
                self.emit(END_TAG, false, true);
            }
        }
    }

    fn opaque(&mut self, toks: &[String]) {
        let mut prev: Option<&str> = None;
        for t in toks {
            if let Some(p) = prev {
                if opaque_space(p, t) {
                    self.sp();
                }
            }
            self.t(t);
            prev = Some(t);
        }
    }

    fn ty(&mut self, ty: &TypeRef) {
        self.type_tokens(&ty.tokens);
    }

    fn type_tokens(&mut self, toks: &[String]) {
        for t in toks {
            match t.as_str() {
                "extends" | "super" | "&" => self.op(t),
                "," => {
                    self.t(",");
                    self.sp();
                }
                _ => self.t(t),
            }
        }
    }

    fn modifiers(&mut self, mods: &[Vec<String>]) {
        for m in mods {
            self.opaque(m);
            self.sp();
        }
    }

    // ---- method ----

    fn method(&mut self, m: &MethodAst) {
        self.start_tag_if(Anchor::MethodStart);
        let h = &m.header;
        self.modifiers(&h.modifiers);
        if let Some(tp) = &h.type_params {
            self.type_tokens(tp);
            self.sp();
        }
        if let Some(rt) = &h.return_type {
            self.ty(rt);
            self.sp();
        }
        self.t(&h.name);
        self.t("(");
        for (i, p) in h.params.iter().enumerate() {
            if i > 0 {
                self.t(",");
                self.sp();
            }
            self.modifiers(&p.modifiers);
            self.ty(&p.ty);
            if p.varargs {
                self.t("...");
            }
            self.sp();
            self.name(&p.name);
            for _ in 0..p.dims {
                self.t("[");
                self.t("]");
            }
        }
        self.t(")");
        if !h.throws.is_empty() {
            self.op("throws");
            for (i, t) in h.throws.iter().enumerate() {
                if i > 0 {
                    self.t(",");
                    self.sp();
                }
                self.ty(t);
            }
        }
        self.sp();
        self.t("{");
        self.tag_if(Anchor::BodyOpen);
        self.newline();
        self.indent += 1;
        self.block_contents(&m.body);
        self.indent -= 1;
        self.t("}");
        self.end_tag_if(Anchor::MethodEnd);
    }

    fn block_contents(&mut self, b: &Block) {
        for s in &b.stmts {
            self.stmt_line(s);
        }
        for c in &b.trailing_comments {
            self.comment(c);
        }
        self.newline();
    }

    /// ` {`, contents, `}`; leaves the cursor after the closing brace.
    fn block(&mut self, b: &Block) {
        self.sp();
        self.t("{");
        self.newline();
        self.indent += 1;
        self.block_contents(b);
        self.indent -= 1;
        self.t("}");
    }

    fn stmt_line(&mut self, s: &Stmt) {
        self.newline();
        self.stmt(s);
        self.newline();
    }

    /// Body of a compound statement: a block on the same line, anything
    /// else indented on the next line.
    fn body(&mut self, s: &Stmt) {
        if matches!(s.kind, StmtKind::Block(_)) && s.comments.is_empty() {
            self.sp();
            self.stmt(s);
        } else {
            self.newline();
            self.indent += 1;
            self.stmt(s);
            self.newline();
            self.indent -= 1;
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        for c in &s.comments {
            self.comment(c);
        }
        self.start_tag_if(Anchor::Before(s.id));
        let saved = self.marked;
        let deep = self.marks.deep.contains(&s.id);
        if deep {
            self.deep += 1;
        }
        self.marked = self.deep > 0 || self.marks.shallow.contains(&s.id);
        let begin = self.tokens.len();
        self.stmt_kind(s);
        self.ranges.insert(s.id, begin..self.tokens.len());
        if deep {
            self.deep -= 1;
        }
        self.marked = saved;
        self.end_tag_if(Anchor::After(s.id));
    }

    fn paren(&mut self, e: &Expr) {
        self.t("(");
        self.expr(e);
        self.t(")");
    }

    fn local_decl(&mut self, d: &LocalVarDecl) {
        self.modifiers(&d.modifiers);
        self.ty(&d.ty);
        for (i, dec) in d.declarators.iter().enumerate() {
            if i > 0 {
                self.t(",");
            }
            self.sp();
            self.name(&dec.name);
            for _ in 0..dec.dims {
                self.t("[");
                self.t("]");
            }
            if let Some(init) = &dec.init {
                self.op("=");
                self.expr(init);
            }
        }
    }

    fn stmt_kind(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::LocalVar(d) => {
                self.local_decl(d);
                self.t(";");
            }
            StmtKind::Expr(e) => {
                self.expr(e);
                self.t(";");
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                self.t("if");
                self.sp();
                self.paren(cond);
                self.body(then_branch);
                if let Some(els) = else_branch {
                    if matches!(then_branch.kind, StmtKind::Block(_)) && then_branch.comments.is_empty()
                    {
                        self.sp();
                    } else {
                        self.newline();
                    }
                    self.t("else");
                    if matches!(els.kind, StmtKind::If { .. }) && els.comments.is_empty() {
                        self.sp();
                        self.stmt(els);
                    } else {
                        self.body(els);
                    }
                }
            }
            StmtKind::While { cond, body } => {
                self.t("while");
                self.sp();
                self.paren(cond);
                self.body(body);
            }
            StmtKind::DoWhile { body, cond } => {
                self.t("do");
                self.body(body);
                if matches!(body.kind, StmtKind::Block(_)) && body.comments.is_empty() {
                    self.sp();
                } else {
                    self.newline();
                }
                self.t("while");
                self.sp();
                self.paren(cond);
                self.t(";");
            }
            StmtKind::For {
                init,
                cond,
                update,
                body,
            } => {
                self.t("for");
                self.sp();
                self.t("(");
                match init {
                    Some(ForInit::Decl(d)) => self.local_decl(d),
                    Some(ForInit::Exprs(es)) => self.expr_list(es),
                    None => {}
                }
                self.t(";");
                if let Some(c) = cond {
                    self.sp();
                    self.expr(c);
                }
                self.t(";");
                if !update.is_empty() {
                    self.sp();
                    self.expr_list(update);
                }
                self.t(")");
                self.body(body);
            }
            StmtKind::ForEach {
                modifiers,
                ty,
                name,
                iterable,
                body,
            } => {
                self.t("for");
                self.sp();
                self.t("(");
                self.modifiers(modifiers);
                self.ty(ty);
                self.sp();
                self.name(name);
                self.op(":");
                self.expr(iterable);
                self.t(")");
                self.body(body);
            }
            StmtKind::Block(b) => {
                self.t("{");
                self.newline();
                self.indent += 1;
                self.block_contents(b);
                self.indent -= 1;
                self.t("}");
            }
            StmtKind::Try {
                resources,
                body,
                catches,
                finally,
            } => {
                self.t("try");
                if !resources.is_empty() {
                    self.sp();
                    self.t("(");
                    for (i, r) in resources.iter().enumerate() {
                        if i > 0 {
                            self.t(";");
                            self.sp();
                        }
                        match r {
                            Resource::Decl {
                                modifiers,
                                ty,
                                name,
                                init,
                            } => {
                                self.modifiers(modifiers);
                                self.ty(ty);
                                self.sp();
                                self.name(name);
                                self.op("=");
                                self.expr(init);
                            }
                            Resource::Expr(e) => self.expr(e),
                        }
                    }
                    self.t(")");
                }
                self.block(body);
                for c in catches {
                    self.sp();
                    self.t("catch");
                    self.sp();
                    self.t("(");
                    self.modifiers(&c.modifiers);
                    for (i, t) in c.types.iter().enumerate() {
                        if i > 0 {
                            self.op("|");
                        }
                        self.ty(t);
                    }
                    self.sp();
                    self.name(&c.name);
                    self.t(")");
                    self.block(&c.body);
                }
                if let Some(f) = finally {
                    self.sp();
                    self.t("finally");
                    self.block(f);
                }
            }
            StmtKind::Return(e) => {
                self.t("return");
                if let Some(e) = e {
                    self.sp();
                    self.expr(e);
                }
                self.t(";");
            }
            StmtKind::Throw(e) => {
                self.t("throw");
                self.sp();
                self.expr(e);
                self.t(";");
            }
            StmtKind::Break(label) | StmtKind::Continue(label) => {
                self.t(if matches!(s.kind, StmtKind::Break(_)) {
                    "break"
                } else {
                    "continue"
                });
                if let Some(l) = label {
                    self.sp();
                    self.t(l);
                }
                self.t(";");
            }
            StmtKind::Switch { selector, groups } => {
                self.t("switch");
                self.sp();
                self.paren(selector);
                self.sp();
                self.t("{");
                self.newline();
                self.indent += 1;
                for g in groups {
                    for l in &g.labels {
                        match l {
                            Some(e) => {
                                self.t("case");
                                self.sp();
                                self.expr(e);
                            }
                            None => self.t("default"),
                        }
                        self.t(":");
                        self.newline();
                    }
                    self.indent += 1;
                    for st in &g.stmts {
                        self.stmt_line(st);
                    }
                    self.indent -= 1;
                }
                self.indent -= 1;
                self.t("}");
            }
            StmtKind::Synchronized { lock, body } => {
                self.t("synchronized");
                self.sp();
                self.paren(lock);
                self.block(body);
            }
            StmtKind::Labeled { label, body } => {
                self.t(label);
                self.t(":");
                self.sp();
                self.stmt(body);
            }
            StmtKind::Assert { cond, message } => {
                self.t("assert");
                self.sp();
                self.expr(cond);
                if let Some(m) = message {
                    self.op(":");
                    self.expr(m);
                }
                self.t(";");
            }
            StmtKind::Empty => self.t(";"),
        }
    }

    fn expr_list(&mut self, es: &[Expr]) {
        for (i, e) in es.iter().enumerate() {
            if i > 0 {
                self.t(",");
                self.sp();
            }
            self.expr(e);
        }
    }

    fn expr(&mut self, e: &Expr) {
        match e {
            Expr::Literal(l) | Expr::Keyword(l) => self.t(l),
            Expr::Name(n) => self.name(n),
            Expr::FieldAccess { target, name } => {
                self.expr(target);
                self.t(".");
                self.t(name);
            }
            Expr::MethodCall { target, name, args } => {
                if let Some(t) = target {
                    self.expr(t);
                    self.t(".");
                }
                self.t(name);
                self.t("(");
                self.expr_list(args);
                self.t(")");
            }
            Expr::New { ty, args, body } => {
                self.t("new");
                self.sp();
                self.ty(ty);
                self.t("(");
                self.expr_list(args);
                self.t(")");
                if let Some(b) = body {
                    self.sp();
                    self.t("{");
                    if !b.is_empty() {
                        self.sp();
                        self.opaque(b);
                        self.sp();
                    }
                    self.t("}");
                }
            }
            Expr::NewArray { ty, dims, init } => {
                self.t("new");
                self.sp();
                self.ty(ty);
                for d in dims {
                    self.t("[");
                    if let Some(d) = d {
                        self.expr(d);
                    }
                    self.t("]");
                }
                if let Some(items) = init {
                    self.sp();
                    self.array_init(items);
                }
            }
            Expr::ArrayInit(items) => self.array_init(items),
            Expr::Index { target, index } => {
                self.expr(target);
                self.t("[");
                self.expr(index);
                self.t("]");
            }
            Expr::Unary { op, operand } => {
                self.t(op);
                self.expr(operand);
            }
            Expr::Postfix { op, operand } => {
                self.expr(operand);
                self.t(op);
            }
            Expr::Binary { op, lhs, rhs } => {
                self.expr(lhs);
                self.op(op);
                self.expr(rhs);
            }
            Expr::Assign { op, target, value } => {
                self.expr(target);
                self.op(op);
                self.expr(value);
            }
            Expr::Conditional {
                cond,
                then_expr,
                else_expr,
            } => {
                self.expr(cond);
                self.op("?");
                self.expr(then_expr);
                self.op(":");
                self.expr(else_expr);
            }
            Expr::Cast { ty, expr } => {
                self.t("(");
                self.ty(ty);
                self.t(")");
                self.sp();
                self.expr(expr);
            }
            Expr::InstanceOf { expr, ty } => {
                self.expr(expr);
                self.op("instanceof");
                self.ty(ty);
            }
            Expr::Paren(inner) => self.paren(inner),
            Expr::Lambda(toks) => self.opaque(toks),
            Expr::MethodRef { target, name } => {
                self.expr(target);
                self.t("::");
                self.t(name);
            }
            Expr::ClassLit(ty) => {
                self.ty(ty);
                self.t(".");
                self.t("class");
            }
        }
    }

    fn array_init(&mut self, items: &[Expr]) {
        self.t("{");
        self.expr_list(items);
        self.t("}");
    }
}
