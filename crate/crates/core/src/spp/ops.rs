//! The nine rewrites. Each works on one side of a pair (the tagged input
//! or the revision) and reports what it marked as perturbed.

use std::collections::{HashMap, HashSet};

use super::names::{NameCollision, NameGen};
use super::{PerturbationType, Reason};
use crate::java::ast::*;
use crate::java::printer::Marks;
use crate::java::resolve::{self, rename_uses_in};
use crate::java::span::{Anchor, TaggedSpan};

pub(crate) enum OpError {
    Inapplicable(Reason),
    Collision,
}

impl From<NameCollision> for OpError {
    fn from(_: NameCollision) -> Self {
        OpError::Collision
    }
}

type OpResult = Result<(), OpError>;

/// State shared between the two sides of one perturbation.
pub(crate) struct Shared {
    pub names: NameGen,
    /// Identifier renaming applied by p8/p9, also used for the comment.
    pub renames: HashMap<String, String>,
    /// The statement pair swapped by p5 on the input side.
    pub swapped: Option<(Stmt, Stmt)>,
}

/// One side of a pair being rewritten.
pub(crate) struct Side<'a> {
    pub ast: &'a mut MethodAst,
    pub span: Option<&'a mut TaggedSpan>,
    pub marks: Marks,
    next_id: u32,
    /// True for the revision side.
    pub paired: bool,
}

impl<'a> Side<'a> {
    pub fn new(ast: &'a mut MethodAst, span: Option<&'a mut TaggedSpan>, paired: bool) -> Self {
        let next_id = if ast.stmt_ids().is_empty() { 0 } else { ast.max_id() + 1 };
        Side {
            ast,
            span,
            marks: Marks::default(),
            next_id,
            paired,
        }
    }

    fn stmt(&mut self, kind: StmtKind) -> Stmt {
        let id = NodeId(self.next_id);
        self.next_id += 1;
        Stmt {
            id,
            comments: vec![],
            kind,
        }
    }

    fn remap_anchor(&mut self, from: Anchor, to: Anchor) {
        if let Some(span) = self.span.as_deref_mut() {
            if span.start == from {
                span.start = to;
            }
            if span.end == from {
                span.end = to;
            }
        }
    }

    fn remap_start(&mut self, from: Anchor, to: Anchor) {
        if let Some(span) = self.span.as_deref_mut() {
            if span.start == from {
                span.start = to;
            }
        }
    }

    fn remap_end(&mut self, from: Anchor, to: Anchor) {
        if let Some(span) = self.span.as_deref_mut() {
            if span.end == from {
                span.end = to;
            }
        }
    }
}

pub(crate) fn run(p: PerturbationType, side: &mut Side, sh: &mut Shared) -> OpResult {
    match p {
        PerturbationType::P1 => p1_if_else_swap(side),
        PerturbationType::P2 => p2_p3_dead_code(side, sh, true),
        PerturbationType::P3 => p2_p3_dead_code(side, sh, false),
        PerturbationType::P4 => p4_try_wrap(side, sh),
        PerturbationType::P5 => p5_swap(side, sh),
        PerturbationType::P6 => p6_return_via_variable(side, sh),
        PerturbationType::P7 => p7_def_use_break(side, sh),
        PerturbationType::P8 => p8_random_names(side, sh),
        PerturbationType::P9 => p9_shuffle_names(side, sh),
    }
}

fn inapplicable(r: Reason) -> OpResult {
    Err(OpError::Inapplicable(r))
}

fn is_ctor_call(s: &Stmt) -> bool {
    matches!(&s.kind, StmtKind::Expr(Expr::MethodCall { target: None, name, .. }) if name == "super" || name == "this")
}

// ---- p1 ----

/// Logical negation that keeps p1 an involution on comparisons and
/// `!`-prefixed conditions.
pub fn negate(e: Expr) -> Expr {
    match e {
        Expr::Unary { op, operand } if op == "!" => *operand,
        Expr::Binary { op, lhs, rhs } if is_comparison_op(&op) => Expr::Binary {
            op: flip(&op).to_string(),
            lhs,
            rhs,
        },
        e if e.is_primary() => Expr::Unary {
            op: "!".into(),
            operand: Box::new(e),
        },
        e => Expr::Unary {
            op: "!".into(),
            operand: Box::new(Expr::Paren(Box::new(e))),
        },
    }
}

fn is_comparison_op(op: &str) -> bool {
    matches!(op, "==" | "!=" | "<" | ">" | "<=" | ">=")
}

fn flip(op: &str) -> &'static str {
    match op {
        "==" => "!=",
        "!=" => "==",
        "<" => ">=",
        ">=" => "<",
        ">" => "<=",
        "<=" => ">",
        _ => unreachable!(),
    }
}

/// Whether the statement's text ends in an `if` without `else`, which
/// would capture a following `else`.
fn ends_in_open_if(s: &Stmt) -> bool {
    match &s.kind {
        StmtKind::If {
            else_branch: None, ..
        } => true,
        StmtKind::If {
            else_branch: Some(e),
            ..
        } => ends_in_open_if(e),
        StmtKind::While { body, .. }
        | StmtKind::For { body, .. }
        | StmtKind::ForEach { body, .. }
        | StmtKind::Labeled { body, .. } => ends_in_open_if(body),
        _ => false,
    }
}

fn p1_if_else_swap(side: &mut Side) -> OpResult {
    let mut swapped = Vec::new();
    for_each_stmt_mut(&mut side.ast.body.stmts, &mut |s| {
        if let StmtKind::If {
            cond,
            then_branch,
            else_branch: Some(else_branch),
        } = &mut s.kind
        {
            let c = std::mem::replace(cond, Expr::Literal(String::new()));
            *cond = negate(c);
            std::mem::swap(then_branch, else_branch);
            swapped.push(s.id);
        }
    });
    if swapped.is_empty() {
        return inapplicable(Reason::NoIfElse);
    }
    // Guard against a dangling else after the swap.
    let mut hazards = Vec::new();
    side.ast.walk_stmts(&mut |s| {
        if let StmtKind::If {
            then_branch,
            else_branch: Some(_),
            ..
        } = &s.kind
        {
            if !matches!(then_branch.kind, StmtKind::Block(_)) && ends_in_open_if(then_branch) {
                hazards.push(s.id);
            }
        }
    });
    for id in hazards {
        let block_id = side.stmt(StmtKind::Empty).id;
        for_each_stmt_mut(&mut side.ast.body.stmts, &mut |s| {
            if s.id != id {
                return;
            }
            if let StmtKind::If { then_branch, .. } = &mut s.kind {
                let inner = std::mem::replace(
                    &mut **then_branch,
                    Stmt {
                        id: block_id,
                        comments: vec![],
                        kind: StmtKind::Empty,
                    },
                );
                then_branch.kind = StmtKind::Block(Block {
                    stmts: vec![inner],
                    trailing_comments: vec![],
                });
            }
        });
    }
    side.marks.deep.extend(swapped);
    Ok(())
}

// ---- p2 / p3 ----

fn insertion_index(ast: &MethodAst) -> usize {
    match ast.body.stmts.first() {
        Some(s) if ast.header.return_type.is_none() && is_ctor_call(s) => 1,
        _ => 0,
    }
}

fn p2_p3_dead_code(side: &mut Side, sh: &mut Shared, throw: bool) -> OpResult {
    let var = sh.names.preferred("dead-flag", "var")?;
    let decl = side.stmt(StmtKind::LocalVar(LocalVarDecl {
        modifiers: vec![],
        ty: TypeRef::simple("boolean"),
        declarators: vec![Declarator {
            name: var.clone(),
            dims: 0,
            init: Some(Expr::Literal("false".into())),
        }],
    }));
    let inner = if throw {
        side.stmt(StmtKind::Throw(Expr::New {
            ty: TypeRef::simple("RuntimeException"),
            args: vec![],
            body: None,
        }))
    } else {
        side.stmt(StmtKind::Expr(Expr::Assign {
            op: "=".into(),
            target: Box::new(Expr::Name(var.clone())),
            value: Box::new(Expr::Literal("true".into())),
        }))
    };
    let block = side.stmt(StmtKind::Block(Block {
        stmts: vec![inner],
        trailing_comments: vec![],
    }));
    let guard = side.stmt(StmtKind::If {
        cond: Expr::Name(var),
        then_branch: Box::new(block),
        else_branch: None,
    });
    side.marks.deep.insert(decl.id);
    side.marks.deep.insert(guard.id);
    let at = insertion_index(side.ast);
    side.ast.body.stmts.splice(at..at, [decl, guard]);
    Ok(())
}

// ---- p4 ----

fn p4_try_wrap(side: &mut Side, sh: &mut Shared) -> OpResult {
    let body = &side.ast.body;
    if body.stmts.is_empty() {
        return inapplicable(Reason::EmptyBody);
    }
    if body.stmts.len() == 1 {
        if let StmtKind::Try { catches, .. } = &body.stmts[0].kind {
            if !catches.is_empty() {
                return inapplicable(Reason::AlreadyWrapped);
            }
        }
    }
    if side.ast.header.return_type.is_none() && is_ctor_call(&body.stmts[0]) {
        return inapplicable(Reason::ConstructorCall);
    }
    let param = sh.names.preferred("catch-param", "e")?;
    let rethrow = side.stmt(StmtKind::Throw(Expr::Name(param.clone())));
    let rethrow_id = rethrow.id;
    let old = std::mem::take(&mut side.ast.body);
    let wrapper = side.stmt(StmtKind::Try {
        resources: vec![],
        body: old,
        catches: vec![CatchClause {
            modifiers: vec![],
            types: vec![TypeRef::simple("Exception")],
            name: param,
            body: Block {
                stmts: vec![rethrow],
                trailing_comments: vec![],
            },
        }],
        finally: None,
    });
    side.marks.shallow.insert(wrapper.id);
    side.marks.deep.insert(rethrow_id);
    side.ast.body.stmts.push(wrapper);
    Ok(())
}

// ---- p5 ----

fn swappable(s: &Stmt) -> bool {
    match &s.kind {
        StmtKind::LocalVar(d) => d
            .declarators
            .iter()
            .all(|d| d.init.as_ref().is_none_or(|e| !e.contains_call())),
        StmtKind::Expr(e @ Expr::Assign { .. }) => !e.contains_call(),
        _ => false,
    }
}

fn independent(a: &Stmt, b: &Stmt) -> bool {
    let (ra, wa) = resolve::reads_writes(a);
    let (rb, wb) = resolve::reads_writes(b);
    wa.is_disjoint(&rb) && wa.is_disjoint(&wb) && wb.is_disjoint(&ra)
}

/// Copy with every statement id zeroed, for content comparison.
fn anonymous(s: &Stmt) -> Stmt {
    let mut c = s.clone();
    stmt_walk_mut(&mut c, &mut |x| x.id = NodeId(0));
    c.comments.clear();
    c
}

/// Adjacent statement pairs in document order of the first statement.
fn adjacent_pairs(ast: &MethodAst) -> Vec<(Stmt, Stmt)> {
    fn lists<'a>(stmts: &'a [Stmt], out: &mut Vec<&'a [Stmt]>) {
        out.push(stmts);
        for s in stmts {
            for_lists_in(s, out);
        }
    }
    fn for_lists_in<'a>(s: &'a Stmt, out: &mut Vec<&'a [Stmt]>) {
        match &s.kind {
            StmtKind::Block(b) | StmtKind::Synchronized { body: b, .. } => lists(&b.stmts, out),
            StmtKind::Try {
                body,
                catches,
                finally,
                ..
            } => {
                lists(&body.stmts, out);
                for c in catches {
                    lists(&c.body.stmts, out);
                }
                if let Some(f) = finally {
                    lists(&f.stmts, out);
                }
            }
            StmtKind::Switch { groups, .. } => {
                for g in groups {
                    lists(&g.stmts, out);
                }
            }
            _ => {
                for c in s.child_stmts() {
                    for_lists_in(c, out);
                }
            }
        }
    }
    let mut all = Vec::new();
    lists(&ast.body.stmts, &mut all);
    let order: HashMap<NodeId, usize> = ast
        .stmt_ids()
        .into_iter()
        .enumerate()
        .map(|(i, id)| (id, i))
        .collect();
    let mut pairs: Vec<(usize, Stmt, Stmt)> = all
        .iter()
        .flat_map(|l| l.windows(2))
        .map(|w| (order[&w[0].id], w[0].clone(), w[1].clone()))
        .collect();
    pairs.sort_by_key(|(i, _, _)| *i);
    pairs.into_iter().map(|(_, a, b)| (a, b)).collect()
}

fn swap_pair(ast: &mut MethodAst, first: NodeId) {
    for_each_stmt_list_mut(&mut ast.body.stmts, &mut |list| {
        if let Some(i) = list.iter().position(|s| s.id == first) {
            if i + 1 < list.len() {
                list.swap(i, i + 1);
            }
        }
    });
}

fn p5_swap(side: &mut Side, sh: &mut Shared) -> OpResult {
    let pairs = adjacent_pairs(side.ast);
    let chosen = if side.paired {
        let Some((a, b)) = &sh.swapped else {
            return inapplicable(Reason::PairingFailure);
        };
        let (a, b) = (anonymous(a), anonymous(b));
        pairs
            .into_iter()
            .find(|(x, y)| anonymous(x) == a && anonymous(y) == b)
            .ok_or(OpError::Inapplicable(Reason::PairingFailure))?
    } else {
        let found = pairs
            .into_iter()
            .find(|(a, b)| swappable(a) && swappable(b) && independent(a, b) && anonymous(a) != anonymous(b))
            .ok_or(OpError::Inapplicable(Reason::NoSwappablePair))?;
        sh.swapped = Some(found.clone());
        found
    };
    swap_pair(side.ast, chosen.0.id);
    side.marks.deep.insert(chosen.0.id);
    side.marks.deep.insert(chosen.1.id);
    Ok(())
}

// ---- p6 ----

fn returns_value(ast: &MethodAst) -> bool {
    let mut found = false;
    ast.walk_stmts(&mut |s| {
        if matches!(s.kind, StmtKind::Return(Some(_))) {
            found = true;
        }
    });
    found
}

struct P6<'s, 'a> {
    side: &'s mut Side<'a>,
    sh: &'s mut Shared,
    ty: TypeRef,
    /// Temporaries declared per open scope.
    scopes: Vec<HashSet<String>>,
    moves: Vec<(NodeId, NodeId, Option<NodeId>)>,
}

impl P6<'_, '_> {
    fn temp_name(&mut self) -> Result<String, OpError> {
        for k in 0.. {
            let name = if k == 0 {
                self.sh.names.preferred("ret-0", "retVal")?
            } else {
                self.sh.names.keyed(&format!("ret-{k}"))?
            };
            if !self.scopes.iter().any(|s| s.contains(&name)) {
                self.scopes.last_mut().expect("scope").insert(name.clone());
                return Ok(name);
            }
        }
        unreachable!()
    }

    /// `T tmp = e;` and `return tmp;` (the latter keeps the original id).
    fn expand(&mut self, ret: Stmt) -> Result<[Stmt; 2], OpError> {
        let StmtKind::Return(Some(value)) = ret.kind else {
            unreachable!()
        };
        let name = self.temp_name()?;
        let decl = self.side.stmt(StmtKind::LocalVar(LocalVarDecl {
            modifiers: vec![],
            ty: self.ty.clone(),
            declarators: vec![Declarator {
                name: name.clone(),
                dims: 0,
                init: Some(value),
            }],
        }));
        let new_ret = Stmt {
            id: ret.id,
            comments: vec![],
            kind: StmtKind::Return(Some(Expr::Name(name))),
        };
        let decl = Stmt {
            comments: ret.comments,
            ..decl
        };
        self.side.marks.deep.insert(decl.id);
        self.side.marks.deep.insert(new_ret.id);
        Ok([decl, new_ret])
    }

    fn list(&mut self, stmts: &mut Vec<Stmt>) -> OpResult {
        let old = std::mem::take(stmts);
        for s in old {
            if matches!(s.kind, StmtKind::Return(Some(_))) {
                let id = s.id;
                let [d, r] = self.expand(s)?;
                self.moves.push((id, d.id, None));
                stmts.push(d);
                stmts.push(r);
            } else {
                let mut s = s;
                self.nested(&mut s)?;
                stmts.push(s);
            }
        }
        Ok(())
    }

    fn scoped_list(&mut self, stmts: &mut Vec<Stmt>) -> OpResult {
        self.scopes.push(HashSet::new());
        let r = self.list(stmts);
        self.scopes.pop();
        r
    }

    /// A statement in body position: a bare return gets wrapped in a block.
    fn body(&mut self, s: &mut Box<Stmt>) -> OpResult {
        if matches!(s.kind, StmtKind::Return(Some(_))) {
            let placeholder = self.side.stmt(StmtKind::Empty);
            let ret = std::mem::replace(&mut **s, placeholder);
            let id = ret.id;
            self.scopes.push(HashSet::new());
            let expanded = self.expand(ret);
            self.scopes.pop();
            let [d, r] = expanded?;
            self.moves.push((id, d.id, Some(s.id)));
            self.side.marks.deep.insert(s.id);
            s.kind = StmtKind::Block(Block {
                stmts: vec![d, r],
                trailing_comments: vec![],
            });
            return Ok(());
        }
        self.scopes.push(HashSet::new());
        let r = self.nested(s);
        self.scopes.pop();
        r
    }

    fn nested(&mut self, s: &mut Stmt) -> OpResult {
        match &mut s.kind {
            StmtKind::Block(b) | StmtKind::Synchronized { body: b, .. } => {
                self.scoped_list(&mut b.stmts)
            }
            StmtKind::If {
                then_branch,
                else_branch,
                ..
            } => {
                self.body(then_branch)?;
                if let Some(e) = else_branch {
                    self.body(e)?;
                }
                Ok(())
            }
            StmtKind::While { body, .. }
            | StmtKind::DoWhile { body, .. }
            | StmtKind::For { body, .. }
            | StmtKind::ForEach { body, .. }
            | StmtKind::Labeled { body, .. } => self.body(body),
            StmtKind::Try {
                body,
                catches,
                finally,
                ..
            } => {
                self.scoped_list(&mut body.stmts)?;
                for c in catches {
                    self.scoped_list(&mut c.body.stmts)?;
                }
                if let Some(f) = finally {
                    self.scoped_list(&mut f.stmts)?;
                }
                Ok(())
            }
            StmtKind::Switch { groups, .. } => {
                self.scopes.push(HashSet::new());
                let mut r = Ok(());
                for g in groups {
                    r = self.list(&mut g.stmts);
                    if r.is_err() {
                        break;
                    }
                }
                self.scopes.pop();
                r
            }
            _ => Ok(()),
        }
    }
}

fn p6_return_via_variable(side: &mut Side, sh: &mut Shared) -> OpResult {
    let ty = match &side.ast.header.return_type {
        None => return inapplicable(Reason::VoidReturn),
        Some(t) if t.is_void() || t.base_name() == "Void" || t.base_name() == "Runnable" => {
            return inapplicable(Reason::VoidReturn)
        }
        Some(t) => t.clone(),
    };
    if !returns_value(side.ast) {
        return inapplicable(Reason::NoValueReturn);
    }
    let mut body = std::mem::take(&mut side.ast.body.stmts);
    let mut p6 = P6 {
        side: &mut *side,
        sh,
        ty,
        scopes: vec![],
        moves: vec![],
    };
    let r = p6.scoped_list(&mut body);
    let moves = std::mem::take(&mut p6.moves);
    side.ast.body.stmts = body;
    r?;
    for (ret, decl, wrapper) in moves {
        match wrapper {
            Some(w) => {
                side.remap_anchor(Anchor::Before(ret), Anchor::Before(w));
                side.remap_anchor(Anchor::After(ret), Anchor::After(w));
            }
            None => side.remap_start(Anchor::Before(ret), Anchor::Before(decl)),
        }
    }
    Ok(())
}

// ---- p7 ----

struct P7<'s, 'a> {
    side: &'s mut Side<'a>,
    sh: &'s mut Shared,
    seen: HashMap<String, usize>,
    copies: usize,
}

impl P7<'_, '_> {
    /// Process one statement list. `tail` holds later switch groups that
    /// share the list's scope.
    fn list(&mut self, stmts: &mut Vec<Stmt>, tail: &mut [SwitchGroup]) -> OpResult {
        let mut i = 0;
        while i < stmts.len() {
            let StmtKind::LocalVar(decl) = &stmts[i].kind else {
                self.nested(&mut stmts[i])?;
                i += 1;
                continue;
            };
            let decl = decl.clone();
            let decl_id = stmts[i].id;
            let mut inserted = Vec::new();
            for (k, d) in decl.declarators.iter().enumerate() {
                if d.init.is_none() {
                    continue;
                }
                let occurrence = self.seen.entry(d.name.clone()).or_insert(0);
                let key = format!("copy-{}-{}", d.name, occurrence);
                *occurrence += 1;
                let fresh = self.sh.names.keyed(&key)?;
                let copy = self.side.stmt(StmtKind::LocalVar(LocalVarDecl {
                    modifiers: vec![],
                    ty: decl.declarator_type(k),
                    declarators: vec![Declarator {
                        name: fresh.clone(),
                        dims: 0,
                        init: Some(Expr::Name(d.name.clone())),
                    }],
                }));
                self.side.marks.deep.insert(copy.id);
                self.side.marks.names.insert(fresh.clone());
                inserted.push((copy, d.name.clone(), fresh));
            }
            if inserted.is_empty() {
                i += 1;
                continue;
            }
            let n = inserted.len();
            let last_copy = inserted[n - 1].0.id;
            let renames: Vec<(String, String)> =
                inserted.iter().map(|(_, f, t)| (f.clone(), t.clone())).collect();
            stmts.splice(i + 1..i + 1, inserted.into_iter().map(|(c, _, _)| c));
            for (from, to) in &renames {
                rename_uses_in(&mut stmts[i + 1 + n..], from, to);
                for g in tail.iter_mut() {
                    rename_uses_in(&mut g.stmts, from, to);
                }
            }
            self.side.remap_end(Anchor::After(decl_id), Anchor::After(last_copy));
            self.copies += n;
            i += 1 + n;
        }
        Ok(())
    }

    fn nested(&mut self, s: &mut Stmt) -> OpResult {
        match &mut s.kind {
            StmtKind::Block(b) | StmtKind::Synchronized { body: b, .. } => {
                self.list(&mut b.stmts, &mut [])
            }
            StmtKind::If {
                then_branch,
                else_branch,
                ..
            } => {
                self.nested(then_branch)?;
                if let Some(e) = else_branch {
                    self.nested(e)?;
                }
                Ok(())
            }
            StmtKind::While { body, .. }
            | StmtKind::DoWhile { body, .. }
            | StmtKind::For { body, .. }
            | StmtKind::ForEach { body, .. }
            | StmtKind::Labeled { body, .. } => self.nested(body),
            StmtKind::Try {
                body,
                catches,
                finally,
                ..
            } => {
                self.list(&mut body.stmts, &mut [])?;
                for c in catches {
                    self.list(&mut c.body.stmts, &mut [])?;
                }
                if let Some(f) = finally {
                    self.list(&mut f.stmts, &mut [])?;
                }
                Ok(())
            }
            StmtKind::Switch { groups, .. } => {
                for g in 0..groups.len() {
                    let (cur, rest) = groups[g..].split_first_mut().expect("group");
                    self.list(&mut cur.stmts, rest)?;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

fn p7_def_use_break(side: &mut Side, sh: &mut Shared) -> OpResult {
    let mut body = std::mem::take(&mut side.ast.body.stmts);
    let mut p7 = P7 {
        side: &mut *side,
        sh,
        seen: HashMap::new(),
        copies: 0,
    };
    let r = p7.list(&mut body, &mut []);
    let copies = p7.copies;
    side.ast.body.stmts = body;
    r?;
    if copies == 0 {
        return inapplicable(Reason::NoInitializedLocal);
    }
    Ok(())
}

// ---- p8 / p9 ----

fn p8_random_names(side: &mut Side, sh: &mut Shared) -> OpResult {
    let locals = resolve::local_names(side.ast);
    if locals.is_empty() {
        return inapplicable(Reason::NoLocalVariables);
    }
    let mut map = HashMap::new();
    for n in &locals {
        let fresh = sh.names.keyed(&format!("rename-{n}"))?;
        map.insert(n.clone(), fresh);
    }
    resolve::rename_locals(side.ast, &map);
    side.marks.names.extend(map.values().cloned());
    for (k, v) in map {
        sh.renames.entry(k).or_insert(v);
    }
    Ok(())
}

fn p9_shuffle_names(side: &mut Side, sh: &mut Shared) -> OpResult {
    let locals = resolve::local_names(side.ast);
    if !side.paired {
        if locals.len() < 2 {
            return inapplicable(Reason::NeedsTwoVariables);
        }
        let perm = sh.names.derangement(&locals);
        sh.renames = locals.iter().cloned().zip(perm).collect();
    }
    let pool: HashSet<&String> = sh.renames.keys().collect();
    if resolve::non_local_uses(side.ast).iter().any(|n| pool.contains(n)) {
        return inapplicable(Reason::NameCaptureRisk);
    }
    if side.paired && !locals.iter().any(|n| pool.contains(n)) {
        return inapplicable(Reason::PairingFailure);
    }
    let map = sh.renames.clone();
    resolve::rename_locals(side.ast, &map);
    side.marks
        .names
        .extend(locals.iter().filter_map(|n| map.get(n).cloned()));
    Ok(())
}
