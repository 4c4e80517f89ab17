//! Name resolution over a method body.
//!
//! Locals are variables declared in the body: local declarations, for and
//! for-each variables, catch parameters and resources. Parameters, fields
//! and type names resolve to something else. Lambda and anonymous-class
//! tokens are scanned as opaque identifier sequences.

use std::collections::{HashMap, HashSet};

use super::ast::*;
use crate::lexer;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Binding {
    Local,
    Param,
    /// Field, type, or anything declared outside the method.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Site {
    Decl,
    Use,
    /// Identifier token inside a lambda or anonymous class body.
    Opaque,
}

/// Whether an opaque token text is an identifier.
pub fn is_identifier_text(t: &str) -> bool {
    t.chars()
        .next()
        .is_some_and(|c| c.is_alphabetic() || c == '_' || c == '$')
        && !lexer::is_reserved_word(t)
}

struct Walker<'f> {
    scopes: Vec<HashSet<String>>,
    params: HashSet<String>,
    f: &'f mut dyn FnMut(&mut String, Site, Binding),
}

impl Walker<'_> {
    fn binding(&self, n: &str) -> Binding {
        if self.scopes.iter().any(|s| s.contains(n)) {
            Binding::Local
        } else if self.params.contains(n) {
            Binding::Param
        } else {
            Binding::Free
        }
    }

    fn declare(&mut self, name: &mut String) {
        self.scopes
            .last_mut()
            .expect("scope")
            .insert(name.clone());
        (self.f)(name, Site::Decl, Binding::Local);
    }

    fn scoped(&mut self, g: impl FnOnce(&mut Self)) {
        self.scopes.push(HashSet::new());
        g(self);
        self.scopes.pop();
    }

    fn opaque(&mut self, toks: &mut [String]) {
        for i in 0..toks.len() {
            if !is_identifier_text(&toks[i]) {
                continue;
            }
            let prev = if i > 0 { toks[i - 1].as_str() } else { "" };
            let next = toks.get(i + 1).map(String::as_str).unwrap_or("");
            if matches!(prev, "." | "::") || next == "(" {
                continue;
            }
            let b = self.binding(&toks[i]);
            (self.f)(&mut toks[i], Site::Opaque, b);
        }
    }

    fn expr(&mut self, e: &mut Expr) {
        match e {
            Expr::Name(n) => {
                let b = self.binding(n);
                (self.f)(n, Site::Use, b);
            }
            Expr::Lambda(toks) => self.opaque(toks),
            Expr::New { args, body, .. } => {
                for a in args {
                    self.expr(a);
                }
                if let Some(b) = body {
                    self.opaque(b);
                }
            }
            _ => {
                for c in e.children_mut() {
                    self.expr(c);
                }
            }
        }
    }

    fn local_decl(&mut self, d: &mut LocalVarDecl) {
        for dec in &mut d.declarators {
            // The name is in scope within its own initializer in Java, but a
            // self-reference there is a compile error, so order does not
            // matter for well-formed code.
            if let Some(init) = &mut dec.init {
                self.expr(init);
            }
            self.declare(&mut dec.name);
        }
    }

    fn list(&mut self, stmts: &mut [Stmt]) {
        for s in stmts {
            self.stmt(s);
        }
    }

    fn block(&mut self, b: &mut Block) {
        self.scoped(|w| w.list(&mut b.stmts));
    }

    fn stmt(&mut self, s: &mut Stmt) {
        match &mut s.kind {
            StmtKind::LocalVar(d) => self.local_decl(d),
            StmtKind::Expr(e) | StmtKind::Throw(e) => self.expr(e),
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                self.expr(cond);
                self.scoped(|w| w.stmt(then_branch));
                if let Some(e) = else_branch {
                    self.scoped(|w| w.stmt(e));
                }
            }
            StmtKind::While { cond, body } => {
                self.expr(cond);
                self.scoped(|w| w.stmt(body));
            }
            StmtKind::DoWhile { body, cond } => {
                self.scoped(|w| w.stmt(body));
                self.expr(cond);
            }
            StmtKind::For {
                init,
                cond,
                update,
                body,
            } => self.scoped(|w| {
                match init {
                    Some(ForInit::Decl(d)) => w.local_decl(d),
                    Some(ForInit::Exprs(es)) => es.iter_mut().for_each(|e| w.expr(e)),
                    None => {}
                }
                if let Some(c) = cond {
                    w.expr(c);
                }
                for u in update.iter_mut() {
                    w.expr(u);
                }
                w.scoped(|w| w.stmt(body));
            }),
            StmtKind::ForEach {
                name,
                iterable,
                body,
                ..
            } => {
                self.expr(iterable);
                self.scoped(|w| {
                    w.declare(name);
                    w.stmt(body);
                });
            }
            StmtKind::Block(b) => self.block(b),
            StmtKind::Try {
                resources,
                body,
                catches,
                finally,
            } => {
                self.scoped(|w| {
                    for r in resources.iter_mut() {
                        match r {
                            Resource::Decl { name, init, .. } => {
                                w.expr(init);
                                w.declare(name);
                            }
                            Resource::Expr(e) => w.expr(e),
                        }
                    }
                    w.block(body);
                });
                for c in catches {
                    self.scoped(|w| {
                        w.declare(&mut c.name);
                        w.block(&mut c.body);
                    });
                }
                if let Some(f) = finally {
                    self.block(f);
                }
            }
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    self.expr(e);
                }
            }
            StmtKind::Switch { selector, groups } => {
                self.expr(selector);
                self.scoped(|w| {
                    for g in groups.iter_mut() {
                        for l in g.labels.iter_mut().flatten() {
                            w.expr(l);
                        }
                        w.list(&mut g.stmts);
                    }
                });
            }
            StmtKind::Synchronized { lock, body } => {
                self.expr(lock);
                self.block(body);
            }
            StmtKind::Labeled { body, .. } => self.stmt(body),
            StmtKind::Assert { cond, message } => {
                self.expr(cond);
                if let Some(m) = message {
                    self.expr(m);
                }
            }
            StmtKind::Break(_) | StmtKind::Continue(_) | StmtKind::Empty => {}
        }
    }
}

/// Visit every name occurrence in the body with its binding. The callback
/// may rewrite the name in place; resolution always uses original names.
pub fn walk_names_mut(ast: &mut MethodAst, f: &mut dyn FnMut(&mut String, Site, Binding)) {
    let params = ast.header.params.iter().map(|p| p.name.clone()).collect();
    let mut w = Walker {
        scopes: vec![],
        params,
        f,
    };
    w.block(&mut ast.body);
}

/// Read-only variant of [`walk_names_mut`].
pub fn walk_names(ast: &MethodAst, f: &mut dyn FnMut(&str, Site, Binding)) {
    let mut copy = ast.clone();
    walk_names_mut(&mut copy, &mut |n, s, b| f(n, s, b));
}

/// Distinct local variable names in order of first declaration.
pub fn local_names(ast: &MethodAst) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    walk_names(ast, &mut |n, site, _| {
        if site == Site::Decl && seen.insert(n.to_string()) {
            out.push(n.to_string());
        }
    });
    out
}

/// Names used in the body that do not resolve to a local.
pub fn non_local_uses(ast: &MethodAst) -> HashSet<String> {
    let mut out = HashSet::new();
    walk_names(ast, &mut |n, site, b| {
        if site != Site::Decl && b != Binding::Local {
            out.insert(n.to_string());
        }
    });
    out
}

/// Rename local variables (declarations and resolved uses) per `map`.
/// The mapping is applied simultaneously, so permutations are safe.
pub fn rename_locals(ast: &mut MethodAst, map: &HashMap<String, String>) {
    walk_names_mut(ast, &mut |n, _, b| {
        if b == Binding::Local {
            if let Some(to) = map.get(n.as_str()) {
                *n = to.clone();
            }
        }
    });
}

/// Rename every use of `from` in `stmts`, without scope analysis. Callers
/// rely on Java forbidding local shadowing.
pub fn rename_uses_in(stmts: &mut [Stmt], from: &str, to: &str) {
    for_each_stmt_mut(stmts, &mut |s| {
        rename_in_own(s, from, to);
    });
}

fn rename_in_own(s: &mut Stmt, from: &str, to: &str) {
    let mut fix = |e: &mut Expr| rename_expr(e, from, to);
    match &mut s.kind {
        StmtKind::LocalVar(d) => d.declarators.iter_mut().filter_map(|d| d.init.as_mut()).for_each(&mut fix),
        StmtKind::Expr(e) | StmtKind::Throw(e) => fix(e),
        StmtKind::If { cond, .. } | StmtKind::While { cond, .. } | StmtKind::DoWhile { cond, .. } => {
            fix(cond)
        }
        StmtKind::For {
            init, cond, update, ..
        } => {
            match init {
                Some(ForInit::Decl(d)) => {
                    d.declarators.iter_mut().filter_map(|d| d.init.as_mut()).for_each(&mut fix)
                }
                Some(ForInit::Exprs(es)) => es.iter_mut().for_each(&mut fix),
                None => {}
            }
            cond.iter_mut().for_each(&mut fix);
            update.iter_mut().for_each(&mut fix);
        }
        StmtKind::ForEach { iterable, .. } => fix(iterable),
        StmtKind::Try { resources, .. } => {
            for r in resources {
                match r {
                    Resource::Decl { init, .. } => fix(init),
                    Resource::Expr(e) => fix(e),
                }
            }
        }
        StmtKind::Return(e) => e.iter_mut().for_each(&mut fix),
        StmtKind::Switch { selector, groups } => {
            fix(selector);
            groups
                .iter_mut()
                .flat_map(|g| g.labels.iter_mut().flatten())
                .for_each(&mut fix);
        }
        StmtKind::Synchronized { lock, .. } => fix(lock),
        StmtKind::Assert { cond, message } => {
            fix(cond);
            message.iter_mut().for_each(&mut fix);
        }
        StmtKind::Block(_)
        | StmtKind::Break(_)
        | StmtKind::Continue(_)
        | StmtKind::Labeled { .. }
        | StmtKind::Empty => {}
    }
}

fn rename_opaque(toks: &mut [String], from: &str, to: &str) {
    for i in 0..toks.len() {
        if toks[i] != from {
            continue;
        }
        let prev = if i > 0 { toks[i - 1].as_str() } else { "" };
        let next = toks.get(i + 1).map(String::as_str).unwrap_or("");
        if matches!(prev, "." | "::") || next == "(" {
            continue;
        }
        toks[i] = to.to_string();
    }
}

pub fn rename_expr(e: &mut Expr, from: &str, to: &str) {
    match e {
        Expr::Name(n) if n == from => *n = to.to_string(),
        Expr::Lambda(toks) => rename_opaque(toks, from, to),
        Expr::New { args, body, .. } => {
            for a in args {
                rename_expr(a, from, to);
            }
            if let Some(b) = body {
                rename_opaque(b, from, to);
            }
        }
        _ => {
            for c in e.children_mut() {
                rename_expr(c, from, to);
            }
        }
    }
}

/// Variables read and written by one statement (nested statements
/// included). Array element and field writes count as writes of the base
/// variable.
pub fn reads_writes(s: &Stmt) -> (HashSet<String>, HashSet<String>) {
    let mut reads = HashSet::new();
    let mut writes = HashSet::new();
    s.walk(&mut |st| {
        if let StmtKind::LocalVar(d) = &st.kind {
            for dec in &d.declarators {
                writes.insert(dec.name.clone());
            }
        }
        if let StmtKind::ForEach { name, .. } = &st.kind {
            writes.insert(name.clone());
        }
        for e in st.own_exprs() {
            expr_effects(e, &mut reads, &mut writes);
        }
    });
    (reads, writes)
}

fn base_name(e: &Expr) -> Option<&str> {
    match e {
        Expr::Name(n) => Some(n),
        Expr::Index { target, .. } | Expr::FieldAccess { target, .. } => base_name(target),
        Expr::Paren(inner) => base_name(inner),
        _ => None,
    }
}

fn expr_effects(e: &Expr, reads: &mut HashSet<String>, writes: &mut HashSet<String>) {
    match e {
        Expr::Name(n) => {
            reads.insert(n.clone());
        }
        Expr::Assign { op, target, value } => {
            if let Some(b) = base_name(target) {
                writes.insert(b.to_string());
            }
            if op != "=" || !matches!(**target, Expr::Name(_)) {
                expr_effects(target, reads, writes);
            }
            expr_effects(value, reads, writes);
        }
        Expr::Unary { op, operand } | Expr::Postfix { op, operand }
            if op == "++" || op == "--" =>
        {
            if let Some(b) = base_name(operand) {
                writes.insert(b.to_string());
            }
            expr_effects(operand, reads, writes);
        }
        Expr::Lambda(toks) => {
            for t in toks.iter().filter(|t| is_identifier_text(t)) {
                reads.insert(t.clone());
            }
        }
        _ => {
            for c in e.children() {
                expr_effects(c, reads, writes);
            }
        }
    }
}
