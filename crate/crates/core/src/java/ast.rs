//! Method-level Java syntax tree.
//!
//! Statements carry a [`NodeId`]; expressions do not. Token ranges live in a
//! separate [`SourceMap`] so that structural equality ignores them.

use std::collections::HashMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub u32);

/// A type as written: its token texts (`Map`, `<`, `String`, `,`, ...).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TypeRef {
    pub tokens: Vec<String>,
}

impl TypeRef {
    pub fn simple(name: &str) -> Self {
        TypeRef {
            tokens: vec![name.to_string()],
        }
    }

    pub fn is_void(&self) -> bool {
        self.tokens.len() == 1 && self.tokens[0] == "void"
    }

    /// Type with `dims` extra `[]` pairs appended.
    pub fn with_dims(&self, dims: usize) -> Self {
        let mut tokens = self.tokens.clone();
        for _ in 0..dims {
            tokens.push("[".into());
            tokens.push("]".into());
        }
        TypeRef { tokens }
    }

    /// Name of the outermost type, without package qualification or type
    /// arguments.
    pub fn base_name(&self) -> &str {
        let end = self.tokens.iter().position(|t| t == "<").unwrap_or(self.tokens.len());
        self.tokens[..end]
            .iter()
            .rev()
            .find(|t| *t != "." && *t != "[" && *t != "]")
            .map(String::as_str)
            .unwrap_or("")
    }

    pub fn mentions(&self, name: &str) -> bool {
        self.tokens.iter().any(|t| t == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodAst {
    pub header: MethodHeader,
    pub body: Block,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodHeader {
    /// Annotations and modifiers in source order, each as token texts.
    pub modifiers: Vec<Vec<String>>,
    /// Generic method type parameters (`<T extends X>`), token texts.
    pub type_params: Option<Vec<String>>,
    /// `None` for constructors.
    pub return_type: Option<TypeRef>,
    pub name: String,
    pub params: Vec<Param>,
    pub throws: Vec<TypeRef>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub modifiers: Vec<Vec<String>>,
    pub ty: TypeRef,
    pub varargs: bool,
    pub name: String,
    pub dims: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    /// Comments that sit after the last statement, before `}`.
    pub trailing_comments: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub id: NodeId,
    /// Comments attached as leading trivia.
    pub comments: Vec<String>,
    pub kind: StmtKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Declarator {
    pub name: String,
    pub dims: usize,
    pub init: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalVarDecl {
    pub modifiers: Vec<Vec<String>>,
    pub ty: TypeRef,
    pub declarators: Vec<Declarator>,
}

impl LocalVarDecl {
    /// Declared type of the `i`-th declarator, including per-name dims.
    pub fn declarator_type(&self, i: usize) -> TypeRef {
        self.ty.with_dims(self.declarators[i].dims)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ForInit {
    Decl(LocalVarDecl),
    Exprs(Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatchClause {
    pub modifiers: Vec<Vec<String>>,
    pub types: Vec<TypeRef>,
    pub name: String,
    pub body: Block,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resource {
    Decl {
        modifiers: Vec<Vec<String>>,
        ty: TypeRef,
        name: String,
        init: Expr,
    },
    Expr(Expr),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwitchGroup {
    /// `None` stands for `default`.
    pub labels: Vec<Option<Expr>>,
    pub stmts: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    LocalVar(LocalVarDecl),
    Expr(Expr),
    If {
        cond: Expr,
        then_branch: Box<Stmt>,
        else_branch: Option<Box<Stmt>>,
    },
    While {
        cond: Expr,
        body: Box<Stmt>,
    },
    DoWhile {
        body: Box<Stmt>,
        cond: Expr,
    },
    For {
        init: Option<ForInit>,
        cond: Option<Expr>,
        update: Vec<Expr>,
        body: Box<Stmt>,
    },
    ForEach {
        modifiers: Vec<Vec<String>>,
        ty: TypeRef,
        name: String,
        iterable: Expr,
        body: Box<Stmt>,
    },
    Block(Block),
    Try {
        resources: Vec<Resource>,
        body: Block,
        catches: Vec<CatchClause>,
        finally: Option<Block>,
    },
    Return(Option<Expr>),
    Throw(Expr),
    Break(Option<String>),
    Continue(Option<String>),
    Switch {
        selector: Expr,
        groups: Vec<SwitchGroup>,
    },
    Synchronized {
        lock: Expr,
        body: Block,
    },
    Labeled {
        label: String,
        body: Box<Stmt>,
    },
    Assert {
        cond: Expr,
        message: Option<Expr>,
    },
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Literal(String),
    /// A simple name: local variable, parameter, field or type name.
    Name(String),
    /// `this`, `super`, or a primitive/void type used in `int.class`.
    Keyword(String),
    FieldAccess {
        target: Box<Expr>,
        name: String,
    },
    MethodCall {
        target: Option<Box<Expr>>,
        name: String,
        args: Vec<Expr>,
    },
    New {
        ty: TypeRef,
        args: Vec<Expr>,
        /// Anonymous class body, kept as opaque tokens (without braces).
        body: Option<Vec<String>>,
    },
    NewArray {
        ty: TypeRef,
        dims: Vec<Option<Expr>>,
        init: Option<Vec<Expr>>,
    },
    ArrayInit(Vec<Expr>),
    Index {
        target: Box<Expr>,
        index: Box<Expr>,
    },
    Unary {
        op: String,
        operand: Box<Expr>,
    },
    Postfix {
        op: String,
        operand: Box<Expr>,
    },
    Binary {
        op: String,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Assign {
        op: String,
        target: Box<Expr>,
        value: Box<Expr>,
    },
    Conditional {
        cond: Box<Expr>,
        then_expr: Box<Expr>,
        else_expr: Box<Expr>,
    },
    Cast {
        ty: TypeRef,
        expr: Box<Expr>,
    },
    InstanceOf {
        expr: Box<Expr>,
        ty: TypeRef,
    },
    Paren(Box<Expr>),
    /// Lambda expression, kept as opaque tokens.
    Lambda(Vec<String>),
    MethodRef {
        target: Box<Expr>,
        name: String,
    },
    /// `Foo.class`, `int[].class`.
    ClassLit(TypeRef),
}

impl Expr {
    pub fn name(n: &str) -> Expr {
        Expr::Name(n.to_string())
    }

    pub fn is_comparison(&self) -> bool {
        matches!(self, Expr::Binary { op, .. } if matches!(op.as_str(), "==" | "!=" | "<" | ">" | "<=" | ">="))
    }

    /// Primary expressions print without needing parentheses under a prefix
    /// operator.
    pub fn is_primary(&self) -> bool {
        matches!(
            self,
            Expr::Literal(_)
                | Expr::Name(_)
                | Expr::Keyword(_)
                | Expr::FieldAccess { .. }
                | Expr::MethodCall { .. }
                | Expr::Index { .. }
                | Expr::Paren(_)
                | Expr::ClassLit(_)
        )
    }

    /// Whether the expression contains a call, object creation or opaque
    /// code (lambda, anonymous class).
    pub fn contains_call(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if matches!(
                e,
                Expr::MethodCall { .. } | Expr::New { .. } | Expr::Lambda(_) | Expr::MethodRef { .. }
            ) {
                found = true;
            }
        });
        found
    }

    /// Pre-order traversal over this expression and all sub-expressions.
    pub fn walk(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        for child in self.children() {
            child.walk(f);
        }
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Literal(_)
            | Expr::Name(_)
            | Expr::Keyword(_)
            | Expr::Lambda(_)
            | Expr::ClassLit(_) => vec![],
            Expr::FieldAccess { target, .. } | Expr::MethodRef { target, .. } => vec![target],
            Expr::MethodCall { target, args, .. } => {
                target.iter().map(|t| &**t).chain(args.iter()).collect()
            }
            Expr::New { args, .. } => args.iter().collect(),
            Expr::NewArray { dims, init, .. } => dims
                .iter()
                .flatten()
                .chain(init.iter().flatten())
                .collect(),
            Expr::ArrayInit(items) => items.iter().collect(),
            Expr::Index { target, index } => vec![target, index],
            Expr::Unary { operand, .. } | Expr::Postfix { operand, .. } => vec![operand],
            Expr::Binary { lhs, rhs, .. } => vec![lhs, rhs],
            Expr::Assign { target, value, .. } => vec![target, value],
            Expr::Conditional {
                cond,
                then_expr,
                else_expr,
            } => vec![cond, then_expr, else_expr],
            Expr::Cast { expr, .. } | Expr::InstanceOf { expr, .. } | Expr::Paren(expr) => {
                vec![expr]
            }
        }
    }

    pub fn children_mut(&mut self) -> Vec<&mut Expr> {
        match self {
            Expr::Literal(_)
            | Expr::Name(_)
            | Expr::Keyword(_)
            | Expr::Lambda(_)
            | Expr::ClassLit(_) => vec![],
            Expr::FieldAccess { target, .. } | Expr::MethodRef { target, .. } => vec![target],
            Expr::MethodCall { target, args, .. } => target
                .iter_mut()
                .map(|t| &mut **t)
                .chain(args.iter_mut())
                .collect(),
            Expr::New { args, .. } => args.iter_mut().collect(),
            Expr::NewArray { dims, init, .. } => dims
                .iter_mut()
                .flatten()
                .chain(init.iter_mut().flatten())
                .collect(),
            Expr::ArrayInit(items) => items.iter_mut().collect(),
            Expr::Index { target, index } => vec![target, index],
            Expr::Unary { operand, .. } | Expr::Postfix { operand, .. } => vec![operand],
            Expr::Binary { lhs, rhs, .. } => vec![lhs, rhs],
            Expr::Assign { target, value, .. } => vec![target, value],
            Expr::Conditional {
                cond,
                then_expr,
                else_expr,
            } => vec![cond, then_expr, else_expr],
            Expr::Cast { expr, .. } | Expr::InstanceOf { expr, .. } | Expr::Paren(expr) => {
                vec![expr]
            }
        }
    }
}

impl Stmt {
    /// Direct child statements, in source order.
    pub fn child_stmts(&self) -> Vec<&Stmt> {
        match &self.kind {
            StmtKind::If {
                then_branch,
                else_branch,
                ..
            } => std::iter::once(&**then_branch)
                .chain(else_branch.as_deref())
                .collect(),
            StmtKind::While { body, .. }
            | StmtKind::DoWhile { body, .. }
            | StmtKind::For { body, .. }
            | StmtKind::ForEach { body, .. }
            | StmtKind::Labeled { body, .. } => vec![body],
            StmtKind::Block(b) | StmtKind::Synchronized { body: b, .. } => b.stmts.iter().collect(),
            StmtKind::Try {
                body,
                catches,
                finally,
                ..
            } => body
                .stmts
                .iter()
                .chain(catches.iter().flat_map(|c| c.body.stmts.iter()))
                .chain(finally.iter().flat_map(|f| f.stmts.iter()))
                .collect(),
            StmtKind::Switch { groups, .. } => groups.iter().flat_map(|g| g.stmts.iter()).collect(),
            _ => vec![],
        }
    }

    /// Pre-order traversal over this statement and all nested statements.
    pub fn walk(&self, f: &mut dyn FnMut(&Stmt)) {
        f(self);
        for c in self.child_stmts() {
            c.walk(f);
        }
    }

    /// Expressions owned directly by this statement (not by nested
    /// statements).
    pub fn own_exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::LocalVar(d) => d.declarators.iter().filter_map(|d| d.init.as_ref()).collect(),
            StmtKind::Expr(e) | StmtKind::Throw(e) => vec![e],
            StmtKind::If { cond, .. }
            | StmtKind::While { cond, .. }
            | StmtKind::DoWhile { cond, .. } => vec![cond],
            StmtKind::For {
                init, cond, update, ..
            } => {
                let mut v: Vec<&Expr> = Vec::new();
                match init {
                    Some(ForInit::Decl(d)) => {
                        v.extend(d.declarators.iter().filter_map(|d| d.init.as_ref()))
                    }
                    Some(ForInit::Exprs(es)) => v.extend(es.iter()),
                    None => {}
                }
                v.extend(cond.iter());
                v.extend(update.iter());
                v
            }
            StmtKind::ForEach { iterable, .. } => vec![iterable],
            StmtKind::Try { resources, .. } => resources
                .iter()
                .map(|r| match r {
                    Resource::Decl { init, .. } => init,
                    Resource::Expr(e) => e,
                })
                .collect(),
            StmtKind::Return(e) => e.iter().collect(),
            StmtKind::Switch { selector, groups } => std::iter::once(selector)
                .chain(groups.iter().flat_map(|g| g.labels.iter().flatten()))
                .collect(),
            StmtKind::Synchronized { lock, .. } => vec![lock],
            StmtKind::Assert { cond, message } => std::iter::once(cond).chain(message.iter()).collect(),
            StmtKind::Block(_)
            | StmtKind::Break(_)
            | StmtKind::Continue(_)
            | StmtKind::Labeled { .. }
            | StmtKind::Empty => vec![],
        }
    }
}

impl MethodAst {
    pub fn walk_stmts(&self, f: &mut dyn FnMut(&Stmt)) {
        for s in &self.body.stmts {
            s.walk(f);
        }
    }

    /// All statement ids, in pre-order.
    pub fn stmt_ids(&self) -> Vec<NodeId> {
        let mut ids = Vec::new();
        self.walk_stmts(&mut |s| ids.push(s.id));
        ids
    }

    pub fn max_id(&self) -> u32 {
        let mut max = 0;
        self.walk_stmts(&mut |s| max = max.max(s.id.0));
        max
    }

    /// Copy with statement ids reassigned in pre-order starting at 0, the
    /// numbering the parser produces.
    pub fn renumbered(&self) -> MethodAst {
        let mut out = self.clone();
        let mut next = 0u32;
        for_each_stmt_mut(&mut out.body.stmts, &mut |s| {
            s.id = NodeId(next);
            next += 1;
        });
        out
    }

    /// Structural equality: same tree modulo statement ids.
    pub fn structurally_eq(&self, other: &MethodAst) -> bool {
        self.renumbered() == other.renumbered()
    }

    /// Every identifier-like text appearing anywhere in the method, including
    /// opaque lambda and anonymous class tokens.
    pub fn identifiers(&self) -> std::collections::BTreeSet<String> {
        let printed = crate::java::printer::serialize(self, None).unwrap_or_default();
        crate::lexer::tokenize(&printed)
            .tokens
            .into_iter()
            .filter(|t| t.kind == crate::lexer::TokenKind::Identifier)
            .map(|t| t.text)
            .collect()
    }
}

/// Pre-order mutable traversal over statements in `stmts` and everything
/// nested in them.
pub fn for_each_stmt_mut(stmts: &mut [Stmt], f: &mut dyn FnMut(&mut Stmt)) {
    for s in stmts {
        stmt_walk_mut(s, f);
    }
}

pub fn stmt_walk_mut(s: &mut Stmt, f: &mut dyn FnMut(&mut Stmt)) {
    f(s);
    match &mut s.kind {
        StmtKind::If {
            then_branch,
            else_branch,
            ..
        } => {
            stmt_walk_mut(then_branch, f);
            if let Some(e) = else_branch {
                stmt_walk_mut(e, f);
            }
        }
        StmtKind::While { body, .. }
        | StmtKind::DoWhile { body, .. }
        | StmtKind::For { body, .. }
        | StmtKind::ForEach { body, .. }
        | StmtKind::Labeled { body, .. } => stmt_walk_mut(body, f),
        StmtKind::Block(b) | StmtKind::Synchronized { body: b, .. } => {
            for_each_stmt_mut(&mut b.stmts, f)
        }
        StmtKind::Try {
            body,
            catches,
            finally,
            ..
        } => {
            for_each_stmt_mut(&mut body.stmts, f);
            for c in catches {
                for_each_stmt_mut(&mut c.body.stmts, f);
            }
            if let Some(fin) = finally {
                for_each_stmt_mut(&mut fin.stmts, f);
            }
        }
        StmtKind::Switch { groups, .. } => {
            for g in groups {
                for_each_stmt_mut(&mut g.stmts, f);
            }
        }
        _ => {}
    }
}

/// Mutable visit of every statement list in the method (block bodies,
/// catch/finally bodies, switch groups), innermost lists first.
pub fn for_each_stmt_list_mut(stmts: &mut Vec<Stmt>, f: &mut dyn FnMut(&mut Vec<Stmt>)) {
    for s in stmts.iter_mut() {
        stmt_lists_in(s, f);
    }
    f(stmts);
}

fn stmt_lists_in(s: &mut Stmt, f: &mut dyn FnMut(&mut Vec<Stmt>)) {
    match &mut s.kind {
        StmtKind::If {
            then_branch,
            else_branch,
            ..
        } => {
            stmt_lists_in(then_branch, f);
            if let Some(e) = else_branch {
                stmt_lists_in(e, f);
            }
        }
        StmtKind::While { body, .. }
        | StmtKind::DoWhile { body, .. }
        | StmtKind::For { body, .. }
        | StmtKind::ForEach { body, .. }
        | StmtKind::Labeled { body, .. } => stmt_lists_in(body, f),
        StmtKind::Block(b) | StmtKind::Synchronized { body: b, .. } => {
            for_each_stmt_list_mut(&mut b.stmts, f)
        }
        StmtKind::Try {
            body,
            catches,
            finally,
            ..
        } => {
            for_each_stmt_list_mut(&mut body.stmts, f);
            for c in catches {
                for_each_stmt_list_mut(&mut c.body.stmts, f);
            }
            if let Some(fin) = finally {
                for_each_stmt_list_mut(&mut fin.stmts, f);
            }
        }
        StmtKind::Switch { groups, .. } => {
            for g in groups {
                for_each_stmt_list_mut(&mut g.stmts, f);
            }
        }
        _ => {}
    }
}

/// Token ranges of statements in some token stream.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SourceMap {
    pub stmts: HashMap<NodeId, Range<usize>>,
}

impl SourceMap {
    pub fn range(&self, id: NodeId) -> Option<Range<usize>> {
        self.stmts.get(&id).cloned()
    }
}
