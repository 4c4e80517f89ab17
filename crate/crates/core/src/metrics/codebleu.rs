//! CodeBLEU: n-gram, keyword-weighted n-gram, syntax-subtree and
//! data-flow agreement, combined with configurable weights.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::java::ast::*;
use crate::java::resolve::{walk_names, Binding, Site};
use crate::java::parse_untagged;
use crate::lexer::{is_reserved_word, tokenize, END_TAG, START_TAG};

const MAX_N: usize = 4;
const KEYWORD_WEIGHT: f64 = 1.0;
const OTHER_WEIGHT: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodeBleuWeights {
    pub ngram: f64,
    pub weighted_ngram: f64,
    pub syntax: f64,
    pub dataflow: f64,
}

impl Default for CodeBleuWeights {
    fn default() -> Self {
        CodeBleuWeights {
            ngram: 0.25,
            weighted_ngram: 0.25,
            syntax: 0.25,
            dataflow: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeBleu {
    pub score: f64,
    pub ngram: f64,
    pub weighted_ngram: f64,
    pub syntax: f64,
    pub dataflow: f64,
    /// Candidate or reference did not parse; syntax and data-flow scored 0.
    pub degraded: bool,
}

pub fn codebleu(candidate: &str, reference: &str) -> CodeBleu {
    codebleu_with(candidate, reference, CodeBleuWeights::default())
}

fn strip_tags(src: &str) -> String {
    src.replace(START_TAG, " ").replace(END_TAG, " ")
}

pub fn codebleu_with(candidate: &str, reference: &str, w: CodeBleuWeights) -> CodeBleu {
    let cand: Vec<String> = tokenize(candidate).without_tags().tokens.into_iter().map(|t| t.text).collect();
    let refr: Vec<String> = tokenize(reference).without_tags().tokens.into_iter().map(|t| t.text).collect();
    if cand == refr {
        return CodeBleu {
            score: 1.0,
            ngram: 1.0,
            weighted_ngram: 1.0,
            syntax: 1.0,
            dataflow: 1.0,
            degraded: false,
        };
    }
    let ngram = bleu(&cand, &refr, false);
    let weighted_ngram = bleu(&cand, &refr, true);
    let parsed = (
        parse_untagged(&strip_tags(candidate)),
        parse_untagged(&strip_tags(reference)),
    );
    let (syntax, dataflow, degraded) = match parsed {
        (Ok(c), Ok(r)) => (syntax_match(&c, &r), dataflow_match(&c, &r), false),
        _ => (0.0, 0.0, true),
    };
    let score = w.ngram * ngram + w.weighted_ngram * weighted_ngram + w.syntax * syntax + w.dataflow * dataflow;
    CodeBleu {
        score,
        ngram,
        weighted_ngram,
        syntax,
        dataflow,
        degraded,
    }
}

fn ngrams(toks: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut m = HashMap::new();
    if toks.len() >= n {
        for w in toks.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

fn token_weight(t: &str) -> f64 {
    if is_reserved_word(t) {
        KEYWORD_WEIGHT
    } else {
        OTHER_WEIGHT
    }
}

/// Sentence BLEU up to 4-grams. Unigram precision is unsmoothed so that
/// disjoint vocabularies score zero; higher orders use add-one smoothing.
fn bleu(cand: &[String], refr: &[String], keyword_weighted: bool) -> f64 {
    if cand.is_empty() || refr.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=MAX_N {
        let c = ngrams(cand, n);
        let r = ngrams(refr, n);
        let (mut hit, mut total) = (0.0, 0.0);
        for (g, &cnt) in &c {
            let wt = if keyword_weighted && n == 1 { token_weight(&g[0]) } else { 1.0 };
            let clipped = cnt.min(*r.get(g).unwrap_or(&0));
            hit += wt * clipped as f64;
            total += wt * cnt as f64;
        }
        let p = if n == 1 {
            if total == 0.0 {
                0.0
            } else {
                hit / total
            }
        } else {
            (hit + 1.0) / (total + 1.0)
        };
        if p == 0.0 {
            return 0.0;
        }
        log_sum += p.ln() / MAX_N as f64;
    }
    let (c, r) = (cand.len() as f64, refr.len() as f64);
    let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    bp * log_sum.exp()
}

// ---- syntax ----

struct Node {
    label: &'static str,
    children: Vec<Node>,
}

fn leaf(label: &'static str) -> Node {
    Node {
        label,
        children: vec![],
    }
}

fn node(label: &'static str, children: Vec<Node>) -> Node {
    Node { label, children }
}

/// S-expression of every inner node, leaves folded into their parents.
fn subtrees(n: &Node, out: &mut Vec<String>) -> String {
    if n.children.is_empty() {
        return n.label.to_string();
    }
    let parts: Vec<String> = n.children.iter().map(|c| subtrees(c, out)).collect();
    let s = format!("({} {})", n.label, parts.join(" "));
    out.push(s.clone());
    s
}

fn syntax_match(cand: &MethodAst, refr: &MethodAst) -> f64 {
    let mut c = Vec::new();
    subtrees(&method_tree(cand), &mut c);
    let mut r = Vec::new();
    subtrees(&method_tree(refr), &mut r);
    if r.is_empty() {
        return if c.is_empty() { 1.0 } else { 0.0 };
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for s in &c {
        *counts.entry(s).or_insert(0) += 1;
    }
    let mut hit = 0usize;
    for s in &r {
        if let Some(k) = counts.get_mut(s.as_str()) {
            if *k > 0 {
                *k -= 1;
                hit += 1;
            }
        }
    }
    hit as f64 / r.len() as f64
}

fn method_tree(m: &MethodAst) -> Node {
    let mut kids = Vec::new();
    kids.push(if m.header.return_type.is_some() {
        leaf("type")
    } else {
        leaf("constructor")
    });
    kids.push(leaf("identifier"));
    kids.push(node(
        "formal_parameters",
        m.header
            .params
            .iter()
            .map(|_| node("formal_parameter", vec![leaf("type"), leaf("identifier")]))
            .collect(),
    ));
    kids.push(block_tree(&m.body));
    node("method_declaration", kids)
}

fn block_tree(b: &Block) -> Node {
    node("block", b.stmts.iter().map(stmt_tree).collect())
}

fn decl_tree(d: &LocalVarDecl) -> Vec<Node> {
    let mut kids = vec![leaf("type")];
    for dec in &d.declarators {
        let mut dk = vec![leaf("identifier")];
        if let Some(init) = &dec.init {
            dk.push(expr_tree(init));
        }
        kids.push(node("variable_declarator", dk));
    }
    kids
}

fn stmt_tree(s: &Stmt) -> Node {
    match &s.kind {
        StmtKind::LocalVar(d) => node("local_variable_declaration", decl_tree(d)),
        StmtKind::Expr(e) => node("expression_statement", vec![expr_tree(e)]),
        StmtKind::If {
            cond,
            then_branch,
            else_branch,
        } => {
            let mut k = vec![node("condition", vec![expr_tree(cond)]), stmt_tree(then_branch)];
            if let Some(e) = else_branch {
                k.push(stmt_tree(e));
            }
            node("if_statement", k)
        }
        StmtKind::While { cond, body } => node(
            "while_statement",
            vec![node("condition", vec![expr_tree(cond)]), stmt_tree(body)],
        ),
        StmtKind::DoWhile { body, cond } => node(
            "do_statement",
            vec![stmt_tree(body), node("condition", vec![expr_tree(cond)])],
        ),
        StmtKind::For {
            init,
            cond,
            update,
            body,
        } => {
            let mut k = Vec::new();
            match init {
                Some(ForInit::Decl(d)) => k.push(node("local_variable_declaration", decl_tree(d))),
                Some(ForInit::Exprs(es)) => k.extend(es.iter().map(expr_tree)),
                None => {}
            }
            if let Some(c) = cond {
                k.push(expr_tree(c));
            }
            k.extend(update.iter().map(expr_tree));
            k.push(stmt_tree(body));
            node("for_statement", k)
        }
        StmtKind::ForEach { iterable, body, .. } => node(
            "enhanced_for_statement",
            vec![leaf("type"), leaf("identifier"), expr_tree(iterable), stmt_tree(body)],
        ),
        StmtKind::Block(b) => block_tree(b),
        StmtKind::Try {
            resources,
            body,
            catches,
            finally,
        } => {
            let mut k = Vec::new();
            if !resources.is_empty() {
                k.push(node(
                    "resource_specification",
                    resources
                        .iter()
                        .map(|r| match r {
                            Resource::Decl { init, .. } => {
                                node("resource", vec![leaf("type"), leaf("identifier"), expr_tree(init)])
                            }
                            Resource::Expr(e) => node("resource", vec![expr_tree(e)]),
                        })
                        .collect(),
                ));
            }
            k.push(block_tree(body));
            for c in catches {
                k.push(node(
                    "catch_clause",
                    vec![
                        node("catch_formal_parameter", vec![leaf("catch_type"), leaf("identifier")]),
                        block_tree(&c.body),
                    ],
                ));
            }
            if let Some(f) = finally {
                k.push(node("finally_clause", vec![block_tree(f)]));
            }
            node(
                if resources.is_empty() {
                    "try_statement"
                } else {
                    "try_with_resources_statement"
                },
                k,
            )
        }
        StmtKind::Return(e) => match e {
            Some(e) => node("return_statement", vec![expr_tree(e)]),
            None => leaf("return_statement"),
        },
        StmtKind::Throw(e) => node("throw_statement", vec![expr_tree(e)]),
        StmtKind::Break(_) => leaf("break_statement"),
        StmtKind::Continue(_) => leaf("continue_statement"),
        StmtKind::Switch { selector, groups } => {
            let mut k = vec![expr_tree(selector)];
            for g in groups {
                let mut gk: Vec<Node> = g
                    .labels
                    .iter()
                    .map(|l| match l {
                        Some(e) => node("switch_label", vec![expr_tree(e)]),
                        None => leaf("switch_label"),
                    })
                    .collect();
                gk.extend(g.stmts.iter().map(stmt_tree));
                k.push(node("switch_block_statement_group", gk));
            }
            node("switch_statement", k)
        }
        StmtKind::Synchronized { lock, body } => {
            node("synchronized_statement", vec![expr_tree(lock), block_tree(body)])
        }
        StmtKind::Labeled { body, .. } => {
            node("labeled_statement", vec![leaf("identifier"), stmt_tree(body)])
        }
        StmtKind::Assert { cond, message } => {
            let mut k = vec![expr_tree(cond)];
            if let Some(m) = message {
                k.push(expr_tree(m));
            }
            node("assert_statement", k)
        }
        StmtKind::Empty => leaf("empty_statement"),
    }
}

fn expr_tree(e: &Expr) -> Node {
    match e {
        Expr::Literal(_) => leaf("literal"),
        Expr::Name(_) => leaf("identifier"),
        Expr::Keyword(_) => leaf("this"),
        Expr::FieldAccess { target, .. } => {
            node("field_access", vec![expr_tree(target), leaf("identifier")])
        }
        Expr::MethodCall { target, args, .. } => {
            let mut k = Vec::new();
            if let Some(t) = target {
                k.push(expr_tree(t));
            }
            k.push(leaf("identifier"));
            k.push(node("argument_list", args.iter().map(expr_tree).collect()));
            node("method_invocation", k)
        }
        Expr::New { args, body, .. } => {
            let mut k = vec![
                leaf("type"),
                node("argument_list", args.iter().map(expr_tree).collect()),
            ];
            if body.is_some() {
                k.push(leaf("class_body"));
            }
            node("object_creation_expression", k)
        }
        Expr::NewArray { dims, init, .. } => {
            let mut k = vec![leaf("type")];
            for d in dims {
                k.push(match d {
                    Some(d) => node("dimensions_expr", vec![expr_tree(d)]),
                    None => leaf("dimensions"),
                });
            }
            if let Some(items) = init {
                k.push(node("array_initializer", items.iter().map(expr_tree).collect()));
            }
            node("array_creation_expression", k)
        }
        Expr::ArrayInit(items) => node("array_initializer", items.iter().map(expr_tree).collect()),
        Expr::Index { target, index } => {
            node("array_access", vec![expr_tree(target), expr_tree(index)])
        }
        Expr::Unary { op, operand } if op == "++" || op == "--" => {
            node("update_expression", vec![expr_tree(operand)])
        }
        Expr::Unary { operand, .. } => node("unary_expression", vec![expr_tree(operand)]),
        Expr::Postfix { operand, .. } => node("update_expression", vec![expr_tree(operand)]),
        Expr::Binary { lhs, rhs, .. } => {
            node("binary_expression", vec![expr_tree(lhs), expr_tree(rhs)])
        }
        Expr::Assign { target, value, .. } => {
            node("assignment_expression", vec![expr_tree(target), expr_tree(value)])
        }
        Expr::Conditional {
            cond,
            then_expr,
            else_expr,
        } => node(
            "ternary_expression",
            vec![expr_tree(cond), expr_tree(then_expr), expr_tree(else_expr)],
        ),
        Expr::Cast { expr, .. } => node("cast_expression", vec![leaf("type"), expr_tree(expr)]),
        Expr::InstanceOf { expr, .. } => {
            node("instanceof_expression", vec![expr_tree(expr), leaf("type")])
        }
        Expr::Paren(inner) => node("parenthesized_expression", vec![expr_tree(inner)]),
        Expr::Lambda(_) => leaf("lambda_expression"),
        Expr::MethodRef { target, .. } => node("method_reference", vec![expr_tree(target)]),
        Expr::ClassLit(_) => leaf("class_literal"),
    }
}

// ---- data flow ----

/// A data-flow edge with variable names normalised by first appearance.
type Edge = (usize, &'static str, Vec<usize>);

struct Flow {
    vars: HashSet<String>,
    norm: HashMap<String, usize>,
    defined: HashSet<String>,
    edges: Vec<Edge>,
}

impl Flow {
    fn id(&mut self, n: &str) -> usize {
        let k = self.norm.len();
        *self.norm.entry(n.to_string()).or_insert(k)
    }

    fn reads_of(&self, e: &Expr, out: &mut Vec<String>) {
        e.walk(&mut |x| {
            if let Expr::Name(n) = x {
                if self.vars.contains(n) {
                    out.push(n.clone());
                }
            }
        });
    }

    fn uses(&mut self, e: &Expr) {
        let mut r = Vec::new();
        self.reads_of(e, &mut r);
        for n in r {
            if self.defined.contains(&n) {
                let i = self.id(&n);
                self.edges.push((i, "comesFrom", vec![i]));
            }
        }
    }

    fn define(&mut self, target: &str, from: Option<&Expr>, keeps_old: bool) {
        let mut r = Vec::new();
        if let Some(e) = from {
            self.reads_of(e, &mut r);
        }
        if keeps_old {
            r.push(target.to_string());
        }
        let t = self.id(target);
        let mut srcs: Vec<usize> = r.iter().map(|n| self.id(n)).collect();
        srcs.sort();
        srcs.dedup();
        if !srcs.is_empty() {
            self.edges.push((t, "computedFrom", srcs));
        }
        self.defined.insert(target.to_string());
    }

    fn expr(&mut self, e: &Expr) {
        match e {
            Expr::Assign { op, target, value } => {
                self.expr(value);
                if let Expr::Name(n) = &**target {
                    if self.vars.contains(n) {
                        self.define(n, Some(value), op != "=");
                        return;
                    }
                }
                self.uses(target);
            }
            Expr::Unary { op, operand } | Expr::Postfix { op, operand }
                if (op == "++" || op == "--") && matches!(**operand, Expr::Name(_)) =>
            {
                if let Expr::Name(n) = &**operand {
                    if self.vars.contains(n) {
                        self.define(n, None, true);
                    }
                }
            }
            _ if e.children().iter().any(|c| has_assign(c)) => {
                for c in e.children() {
                    self.expr(c);
                }
            }
            _ => self.uses(e),
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::LocalVar(d) => {
                for dec in &d.declarators {
                    if let Some(init) = &dec.init {
                        self.uses(init);
                    }
                    self.define(&dec.name, dec.init.as_ref(), false);
                }
            }
            StmtKind::For { init, cond, update, body } => {
                match init {
                    Some(ForInit::Decl(d)) => {
                        for dec in &d.declarators {
                            if let Some(i) = &dec.init {
                                self.uses(i);
                            }
                            self.define(&dec.name, dec.init.as_ref(), false);
                        }
                    }
                    Some(ForInit::Exprs(es)) => es.iter().for_each(|e| self.expr(e)),
                    None => {}
                }
                if let Some(c) = cond {
                    self.uses(c);
                }
                self.stmt(body);
                update.iter().for_each(|e| self.expr(e));
            }
            StmtKind::ForEach { name, iterable, body, .. } => {
                self.uses(iterable);
                self.define(name, Some(iterable), false);
                self.stmt(body);
            }
            StmtKind::Try { resources, .. } => {
                for r in resources {
                    match r {
                        Resource::Decl { name, init, .. } => {
                            self.uses(init);
                            self.define(name, Some(init), false);
                        }
                        Resource::Expr(e) => self.uses(e),
                    }
                }
                for c in s.child_stmts() {
                    self.stmt(c);
                }
            }
            _ => {
                for e in s.own_exprs() {
                    self.expr(e);
                }
                for c in s.child_stmts() {
                    self.stmt(c);
                }
            }
        }
    }
}

fn has_assign(e: &Expr) -> bool {
    let mut found = false;
    e.walk(&mut |x| {
        if matches!(x, Expr::Assign { .. })
            || matches!(x, Expr::Unary { op, .. } | Expr::Postfix { op, .. } if op == "++" || op == "--")
        {
            found = true;
        }
    });
    found
}

fn flow_edges(m: &MethodAst) -> BTreeMap<Edge, usize> {
    let mut vars = HashSet::new();
    walk_names(m, &mut |n, site, b| {
        if site == Site::Decl || b != Binding::Free {
            vars.insert(n.to_string());
        }
    });
    let mut f = Flow {
        vars,
        norm: HashMap::new(),
        defined: m.header.params.iter().map(|p| p.name.clone()).collect(),
        edges: Vec::new(),
    };
    for p in &m.header.params {
        f.id(&p.name);
    }
    for s in &m.body.stmts {
        f.stmt(s);
    }
    let mut out = BTreeMap::new();
    for e in f.edges {
        *out.entry(e).or_insert(0) += 1;
    }
    out
}

fn dataflow_match(cand: &MethodAst, refr: &MethodAst) -> f64 {
    let c = flow_edges(cand);
    let r = flow_edges(refr);
    let total: usize = r.values().sum();
    if total == 0 {
        return if c.is_empty() { 1.0 } else { 0.0 };
    }
    let hit: usize = r
        .iter()
        .map(|(e, &k)| k.min(*c.get(e).unwrap_or(&0)))
        .sum();
    hit as f64 / total as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_is_one() {
        let m = "int f(int a) { int b = a + 1; return b; }";
        assert_eq!(codebleu(m, m).score, 1.0);
        assert_eq!(codebleu(m, "int  f(int a){int b=a+1;return b;}").score, 1.0);
    }

    #[test]
    fn disjoint_vocabulary_scores_low() {
        let s = codebleu("alpha beta gamma delta eps", "one two three four five");
        assert!(s.score < 0.1, "{s:?}");
        assert!(s.degraded);
    }

    #[test]
    fn similar_methods_score_between() {
        let a = "int f(int a) { int b = a + 1; return b; }";
        let b = "int f(int a) { int c = a + 2; return c; }";
        let s = codebleu(a, b);
        assert!(s.score > 0.3 && s.score < 1.0, "{s:?}");
        assert!(!s.degraded);
    }
}
