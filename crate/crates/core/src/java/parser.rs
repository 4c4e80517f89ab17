//! Recursive-descent parser for single Java method declarations.
//!
//! Covers the statement vocabulary the perturbation operators inspect.
//! Lambdas and anonymous class bodies are kept as opaque token lists.

use std::collections::HashMap;
use std::ops::Range;

use super::ast::*;
use super::JavaError;
use crate::lexer::{Token, TokenKind};

const PRIMITIVES: &[&str] = &[
    "boolean", "byte", "char", "short", "int", "long", "float", "double",
];

const MODIFIERS: &[&str] = &[
    "public",
    "protected",
    "private",
    "static",
    "final",
    "abstract",
    "synchronized",
    "native",
    "strictfp",
    "default",
    "transient",
    "volatile",
];

const ASSIGN_OPS: &[&str] = &[
    "=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>=",
];

pub fn is_primitive(name: &str) -> bool {
    PRIMITIVES.contains(&name)
}

fn binary_precedence(op: &str) -> Option<u8> {
    Some(match op {
        "||" => 1,
        "&&" => 2,
        "|" => 3,
        "^" => 4,
        "&" => 5,
        "==" | "!=" => 6,
        "<" | ">" | "<=" | ">=" | "instanceof" => 7,
        "<<" | ">>" | ">>>" => 8,
        "+" | "-" => 9,
        "*" | "/" | "%" => 10,
        _ => return None,
    })
}

pub(crate) struct Parsed {
    pub ast: MethodAst,
    pub ranges: HashMap<NodeId, Range<usize>>,
    /// Index of the body's opening brace in the code token stream.
    pub body_open: usize,
    pub token_count: usize,
}

/// Parse code tokens (no tags, no comments) into a method AST.
/// `comments_before[k]` holds the comments that precede code token `k`.
pub(crate) fn parse_tokens(
    source: &str,
    tokens: Vec<Token>,
    comments_before: HashMap<usize, Vec<String>>,
) -> Result<Parsed, JavaError> {
    let mut p = Parser {
        source,
        toks: tokens,
        pos: 0,
        gt_pending: 0,
        next_id: 0,
        ranges: HashMap::new(),
        comments_before,
    };
    let (header, body_open) = p.method_header()?;
    let body = p.block()?;
    if p.pos < p.toks.len() {
        return Err(p.error("unexpected tokens after method body"));
    }
    let token_count = p.toks.len();
    Ok(Parsed {
        ast: MethodAst { header, body },
        ranges: p.ranges,
        body_open,
        token_count,
    })
}

struct Parser<'s> {
    source: &'s str,
    toks: Vec<Token>,
    pos: usize,
    /// Remaining `>` characters of a partially consumed `>>`/`>>>` token.
    gt_pending: usize,
    next_id: u32,
    ranges: HashMap<NodeId, Range<usize>>,
    comments_before: HashMap<usize, Vec<String>>,
}

type PResult<T> = Result<T, JavaError>;

impl<'s> Parser<'s> {
    // ---- token helpers ----

    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn peek_text(&self) -> &str {
        self.toks.get(self.pos).map(|t| t.text.as_str()).unwrap_or("")
    }

    fn peek_at(&self, k: usize) -> &str {
        self.toks.get(self.pos + k).map(|t| t.text.as_str()).unwrap_or("")
    }

    fn kind_at(&self, k: usize) -> Option<TokenKind> {
        self.toks.get(self.pos + k).map(|t| t.kind)
    }

    fn at(&self, text: &str) -> bool {
        self.gt_pending == 0 && self.peek_text() == text
    }

    fn advance(&mut self) -> String {
        let t = self.toks[self.pos].text.clone();
        self.pos += 1;
        t
    }

    fn eat(&mut self, text: &str) -> bool {
        if self.at(text) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, text: &str) -> PResult<()> {
        if self.eat(text) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{text}`")))
        }
    }

    fn is_ident(&self) -> bool {
        self.gt_pending == 0 && self.kind_at(0) == Some(TokenKind::Identifier)
    }

    fn ident(&mut self) -> PResult<String> {
        if self.is_ident() {
            Ok(self.advance())
        } else {
            Err(self.error("expected identifier"))
        }
    }

    /// Consume one `>` closing a type argument list, splitting `>>`/`>>>`.
    fn eat_gt(&mut self) -> bool {
        if self.gt_pending > 0 {
            self.gt_pending -= 1;
            if self.gt_pending == 0 {
                self.pos += 1;
            }
            return true;
        }
        match self.peek_text() {
            ">" => {
                self.pos += 1;
                true
            }
            ">>" => {
                self.gt_pending = 1;
                true
            }
            ">>>" => {
                self.gt_pending = 2;
                true
            }
            _ => false,
        }
    }

    fn error(&self, msg: &str) -> JavaError {
        let offset = self
            .toks
            .get(self.pos)
            .map(|t| t.start)
            .unwrap_or(self.source.len());
        let (line, column) = line_col(self.source, offset);
        let found = self
            .peek()
            .map(|t| format!("`{}`", t.text))
            .unwrap_or_else(|| "end of input".into());
        JavaError::Parse {
            message: format!("{msg}, found {found}"),
            line,
            column,
        }
    }

    fn unsupported(&self, what: &str) -> JavaError {
        self.error(&format!("unsupported construct: {what}"))
    }

    fn new_id(&mut self) -> NodeId {
        let id = NodeId(self.next_id);
        self.next_id += 1;
        id
    }

    /// Run `f` speculatively, restoring the position on failure.
    fn attempt<T>(&mut self, f: impl FnOnce(&mut Self) -> PResult<T>) -> Option<T> {
        let (pos, gt, id) = (self.pos, self.gt_pending, self.next_id);
        match f(self) {
            Ok(v) => Some(v),
            Err(_) => {
                self.pos = pos;
                self.gt_pending = gt;
                self.next_id = id;
                None
            }
        }
    }

    /// Index of the token matching the opener at `open` (`(`, `[`, `{`).
    fn matching(&self, open: usize) -> Option<usize> {
        let (o, c) = match self.toks.get(open)?.text.as_str() {
            "(" => ("(", ")"),
            "[" => ("[", "]"),
            "{" => ("{", "}"),
            _ => return None,
        };
        let mut depth = 0usize;
        for (i, t) in self.toks.iter().enumerate().skip(open) {
            if t.text == o {
                depth += 1;
            } else if t.text == c {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
        }
        None
    }

    fn texts(&self, range: Range<usize>) -> Vec<String> {
        self.toks[range].iter().map(|t| t.text.clone()).collect()
    }

    // ---- declarations ----

    fn annotation(&mut self) -> PResult<Vec<String>> {
        let start = self.pos;
        self.expect("@")?;
        self.ident()?;
        while self.at(".") && self.kind_at(1) == Some(TokenKind::Identifier) {
            self.pos += 2;
        }
        if self.at("(") {
            let close = self.matching(self.pos).ok_or_else(|| self.error("unbalanced annotation"))?;
            self.pos = close + 1;
        }
        Ok(self.texts(start..self.pos))
    }

    fn modifiers(&mut self) -> PResult<Vec<Vec<String>>> {
        let mut mods = Vec::new();
        loop {
            if self.at("@") && self.peek_at(1) != "interface" {
                mods.push(self.annotation()?);
            } else if MODIFIERS.contains(&self.peek_text()) && self.gt_pending == 0 {
                mods.push(vec![self.advance()]);
            } else {
                return Ok(mods);
            }
        }
    }

    fn method_header(&mut self) -> PResult<(MethodHeader, usize)> {
        let modifiers = self.modifiers()?;
        let type_params = if self.at("<") {
            let start = self.pos;
            self.type_args()?;
            Some(self.texts(start..self.pos))
        } else {
            None
        };
        let return_type = if self.is_ident() && self.peek_at(1) == "(" {
            None
        } else if self.at("void") {
            self.pos += 1;
            Some(TypeRef::simple("void"))
        } else {
            Some(self.parse_type()?)
        };
        let name = self.ident()?;
        self.expect("(")?;
        let mut params = Vec::new();
        if !self.at(")") {
            loop {
                params.push(self.param()?);
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        if self.at("[") {
            return Err(self.unsupported("array dimensions after parameter list"));
        }
        let mut throws = Vec::new();
        if self.eat("throws") {
            loop {
                throws.push(self.parse_type()?);
                if !self.eat(",") {
                    break;
                }
            }
        }
        if !self.at("{") {
            return Err(self.error("expected method body"));
        }
        let body_open = self.pos;
        Ok((
            MethodHeader {
                modifiers,
                type_params,
                return_type,
                name,
                params,
                throws,
            },
            body_open,
        ))
    }

    fn param(&mut self) -> PResult<Param> {
        let modifiers = self.modifiers()?;
        let ty = self.parse_type()?;
        let varargs = self.eat("...");
        let name = self.ident()?;
        let dims = self.dims();
        Ok(Param {
            modifiers,
            ty,
            varargs,
            name,
            dims,
        })
    }

    fn dims(&mut self) -> usize {
        let mut n = 0;
        while self.at("[") && self.peek_at(1) == "]" {
            self.pos += 2;
            n += 1;
        }
        n
    }

    // ---- types ----

    fn parse_type(&mut self) -> PResult<TypeRef> {
        let start = self.pos;
        if self.gt_pending != 0 {
            return Err(self.error("expected type"));
        }
        if is_primitive(self.peek_text()) {
            self.pos += 1;
        } else {
            self.ident()?;
            if self.at("<") {
                self.type_args()?;
            }
            while self.at(".") && self.kind_at(1) == Some(TokenKind::Identifier) {
                self.pos += 2;
                if self.at("<") {
                    self.type_args()?;
                }
            }
        }
        let mut tokens = self.texts(start..self.pos);
        let d = self.dims();
        for _ in 0..d {
            tokens.push("[".into());
            tokens.push("]".into());
        }
        Ok(TypeRef { tokens })
    }

    /// Type argument list; consumed tokens are recovered by the caller from
    /// the token range, except for split `>` which we record explicitly.
    fn type_args(&mut self) -> PResult<()> {
        self.expect("<")?;
        if self.eat_gt() {
            return Ok(()); // diamond
        }
        loop {
            if self.eat("?") {
                if self.eat("extends") || self.eat("super") {
                    self.parse_type_inner()?;
                }
            } else {
                self.parse_type_inner()?;
                while self.eat("&") {
                    self.parse_type_inner()?;
                }
            }
            if self.eat("extends") || self.eat("super") {
                self.parse_type_inner()?;
                while self.eat("&") {
                    self.parse_type_inner()?;
                }
            }
            if !self.eat(",") {
                break;
            }
        }
        if !self.eat_gt() {
            return Err(self.error("expected `>`"));
        }
        Ok(())
    }

    fn parse_type_inner(&mut self) -> PResult<()> {
        if is_primitive(self.peek_text()) && self.gt_pending == 0 {
            self.pos += 1;
        } else {
            self.ident()?;
            if self.at("<") {
                self.type_args()?;
            }
            while self.at(".") && self.kind_at(1) == Some(TokenKind::Identifier) {
                self.pos += 2;
                if self.at("<") {
                    self.type_args()?;
                }
            }
        }
        if self.gt_pending == 0 {
            self.dims();
        }
        Ok(())
    }

    // ---- statements ----

    fn block(&mut self) -> PResult<Block> {
        self.expect("{")?;
        let mut stmts = Vec::new();
        while !self.at("}") {
            if self.pos >= self.toks.len() {
                return Err(self.error("unterminated block"));
            }
            stmts.push(self.stmt()?);
        }
        let trailing_comments = self.comments_before.remove(&self.pos).unwrap_or_default();
        self.expect("}")?;
        Ok(Block {
            stmts,
            trailing_comments,
        })
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let start = self.pos;
        let comments = self.comments_before.remove(&start).unwrap_or_default();
        let id = self.new_id();
        let kind = self.stmt_kind()?;
        self.ranges.insert(id, start..self.pos);
        Ok(Stmt { id, comments, kind })
    }

    fn boxed_stmt(&mut self) -> PResult<Box<Stmt>> {
        Ok(Box::new(self.stmt()?))
    }

    fn paren_expr(&mut self) -> PResult<Expr> {
        self.expect("(")?;
        let e = self.expr()?;
        self.expect(")")?;
        Ok(e)
    }

    fn stmt_kind(&mut self) -> PResult<StmtKind> {
        if self.gt_pending != 0 {
            return Err(self.error("unexpected `>`"));
        }
        let t = self.peek_text().to_string();
        match t.as_str() {
            "{" => Ok(StmtKind::Block(self.block()?)),
            ";" => {
                self.pos += 1;
                Ok(StmtKind::Empty)
            }
            "if" => {
                self.pos += 1;
                let cond = self.paren_expr()?;
                let then_branch = self.boxed_stmt()?;
                let else_branch = if self.eat("else") {
                    Some(self.boxed_stmt()?)
                } else {
                    None
                };
                Ok(StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                })
            }
            "while" => {
                self.pos += 1;
                let cond = self.paren_expr()?;
                let body = self.boxed_stmt()?;
                Ok(StmtKind::While { cond, body })
            }
            "do" => {
                self.pos += 1;
                let body = self.boxed_stmt()?;
                self.expect("while")?;
                let cond = self.paren_expr()?;
                self.expect(";")?;
                Ok(StmtKind::DoWhile { body, cond })
            }
            "for" => self.for_stmt(),
            "try" => self.try_stmt(),
            "return" => {
                self.pos += 1;
                let value = if self.at(";") { None } else { Some(self.expr()?) };
                self.expect(";")?;
                Ok(StmtKind::Return(value))
            }
            "throw" => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(";")?;
                Ok(StmtKind::Throw(e))
            }
            "break" | "continue" => {
                self.pos += 1;
                let label = if self.is_ident() { Some(self.advance()) } else { None };
                self.expect(";")?;
                Ok(if t == "break" {
                    StmtKind::Break(label)
                } else {
                    StmtKind::Continue(label)
                })
            }
            "switch" => self.switch_stmt(),
            "synchronized" => {
                self.pos += 1;
                let lock = self.paren_expr()?;
                let body = self.block()?;
                Ok(StmtKind::Synchronized { lock, body })
            }
            "assert" => {
                self.pos += 1;
                let cond = self.expr()?;
                let message = if self.eat(":") { Some(self.expr()?) } else { None };
                self.expect(";")?;
                Ok(StmtKind::Assert { cond, message })
            }
            "class" | "interface" | "enum" => Err(self.unsupported("local type declaration")),
            "else" | "case" | "default" | "catch" | "finally" => {
                Err(self.error("unexpected keyword"))
            }
            _ => {
                if self.is_ident() && self.peek_at(1) == ":" {
                    let label = self.advance();
                    self.pos += 1;
                    let body = self.boxed_stmt()?;
                    return Ok(StmtKind::Labeled { label, body });
                }
                if self.is_ident()
                    && matches!(t.as_str(), "record" | "yield")
                    && self.kind_at(1) == Some(TokenKind::Identifier)
                {
                    return Err(self.unsupported(&t));
                }
                if let Some(decl) = self.attempt(|p| {
                    let d = p.local_var_decl()?;
                    p.expect(";")?;
                    Ok(d)
                }) {
                    return Ok(StmtKind::LocalVar(decl));
                }
                let e = self.expr()?;
                self.expect(";")?;
                Ok(StmtKind::Expr(e))
            }
        }
    }

    /// `[modifiers] Type name [= init] {, name [= init]}` without the `;`.
    fn local_var_decl(&mut self) -> PResult<LocalVarDecl> {
        let modifiers = self.modifiers()?;
        let ty = self.parse_type()?;
        let mut declarators = Vec::new();
        loop {
            let name = self.ident()?;
            let dims = self.dims();
            let init = if self.eat("=") {
                Some(self.var_init()?)
            } else {
                None
            };
            declarators.push(Declarator { name, dims, init });
            if !self.eat(",") {
                break;
            }
        }
        if !(self.at(";") || self.at(":")) {
            return Err(self.error("expected `;`"));
        }
        Ok(LocalVarDecl {
            modifiers,
            ty,
            declarators,
        })
    }

    fn var_init(&mut self) -> PResult<Expr> {
        if self.at("{") {
            self.array_init()
        } else {
            self.expr()
        }
    }

    fn array_init(&mut self) -> PResult<Expr> {
        self.expect("{")?;
        let mut items = Vec::new();
        while !self.at("}") {
            items.push(self.var_init()?);
            if !self.eat(",") {
                break;
            }
        }
        self.expect("}")?;
        Ok(Expr::ArrayInit(items))
    }

    fn for_stmt(&mut self) -> PResult<StmtKind> {
        self.expect("for")?;
        self.expect("(")?;
        // Enhanced for.
        if let Some((modifiers, ty, name)) = self.attempt(|p| {
            let modifiers = p.modifiers()?;
            let ty = p.parse_type()?;
            let name = p.ident()?;
            p.expect(":")?;
            Ok((modifiers, ty, name))
        }) {
            let iterable = self.expr()?;
            self.expect(")")?;
            let body = self.boxed_stmt()?;
            return Ok(StmtKind::ForEach {
                modifiers,
                ty,
                name,
                iterable,
                body,
            });
        }
        let init = if self.at(";") {
            None
        } else if let Some(d) = self.attempt(|p| {
            let d = p.local_var_decl()?;
            if !p.at(";") {
                return Err(p.error("expected `;`"));
            }
            Ok(d)
        }) {
            Some(ForInit::Decl(d))
        } else {
            Some(ForInit::Exprs(self.expr_list(";")?))
        };
        self.expect(";")?;
        let cond = if self.at(";") { None } else { Some(self.expr()?) };
        self.expect(";")?;
        let update = if self.at(")") {
            Vec::new()
        } else {
            self.expr_list(")")?
        };
        self.expect(")")?;
        let body = self.boxed_stmt()?;
        Ok(StmtKind::For {
            init,
            cond,
            update,
            body,
        })
    }

    fn expr_list(&mut self, end: &str) -> PResult<Vec<Expr>> {
        let mut v = vec![self.expr()?];
        while self.eat(",") {
            v.push(self.expr()?);
        }
        if !self.at(end) {
            return Err(self.error(&format!("expected `{end}`")));
        }
        Ok(v)
    }

    fn try_stmt(&mut self) -> PResult<StmtKind> {
        self.expect("try")?;
        let mut resources = Vec::new();
        if self.eat("(") {
            while !self.at(")") {
                if let Some(r) = self.attempt(|p| {
                    let modifiers = p.modifiers()?;
                    let ty = p.parse_type()?;
                    let name = p.ident()?;
                    p.expect("=")?;
                    let init = p.expr()?;
                    Ok(Resource::Decl {
                        modifiers,
                        ty,
                        name,
                        init,
                    })
                }) {
                    resources.push(r);
                } else {
                    resources.push(Resource::Expr(self.expr()?));
                }
                if !self.eat(";") {
                    break;
                }
            }
            self.expect(")")?;
        }
        let body = self.block()?;
        let mut catches = Vec::new();
        while self.eat("catch") {
            self.expect("(")?;
            let modifiers = self.modifiers()?;
            let mut types = vec![self.parse_type()?];
            while self.eat("|") {
                types.push(self.parse_type()?);
            }
            let name = self.ident()?;
            self.expect(")")?;
            let body = self.block()?;
            catches.push(CatchClause {
                modifiers,
                types,
                name,
                body,
            });
        }
        let finally = if self.eat("finally") {
            Some(self.block()?)
        } else {
            None
        };
        if catches.is_empty() && finally.is_none() && resources.is_empty() {
            return Err(self.error("try without catch or finally"));
        }
        Ok(StmtKind::Try {
            resources,
            body,
            catches,
            finally,
        })
    }

    fn switch_stmt(&mut self) -> PResult<StmtKind> {
        self.expect("switch")?;
        let selector = self.paren_expr()?;
        self.expect("{")?;
        let mut groups: Vec<SwitchGroup> = Vec::new();
        while !self.at("}") {
            if self.pos >= self.toks.len() {
                return Err(self.error("unterminated switch"));
            }
            let mut labels = Vec::new();
            while self.at("case") || self.at("default") {
                if self.eat("default") {
                    labels.push(None);
                } else {
                    self.pos += 1;
                    loop {
                        labels.push(Some(self.conditional()?));
                        if !self.eat(",") {
                            break;
                        }
                    }
                }
                if self.at("->") {
                    return Err(self.unsupported("arrow-form switch"));
                }
                self.expect(":")?;
            }
            if labels.is_empty() {
                return Err(self.error("expected `case` or `default`"));
            }
            let mut stmts = Vec::new();
            while !(self.at("case") || self.at("default") || self.at("}")) {
                if self.pos >= self.toks.len() {
                    return Err(self.error("unterminated switch"));
                }
                stmts.push(self.stmt()?);
            }
            groups.push(SwitchGroup { labels, stmts });
        }
        self.expect("}")?;
        Ok(StmtKind::Switch { selector, groups })
    }

    // ---- expressions ----

    fn expr(&mut self) -> PResult<Expr> {
        if self.gt_pending != 0 {
            return Err(self.error("unexpected `>`"));
        }
        if let Some(l) = self.try_lambda()? {
            return Ok(l);
        }
        let lhs = self.conditional()?;
        if self.gt_pending == 0 && ASSIGN_OPS.contains(&self.peek_text()) {
            let op = self.advance();
            let value = if self.at("{") {
                self.array_init()?
            } else {
                self.expr()?
            };
            return Ok(Expr::Assign {
                op,
                target: Box::new(lhs),
                value: Box::new(value),
            });
        }
        Ok(lhs)
    }

    fn try_lambda(&mut self) -> PResult<Option<Expr>> {
        let start = self.pos;
        let arrow = if self.is_ident() && self.peek_at(1) == "->" {
            Some(self.pos + 1)
        } else if self.at("(") {
            self.matching(self.pos)
                .filter(|&c| self.toks.get(c + 1).is_some_and(|t| t.text == "->"))
                .map(|c| c + 1)
        } else {
            None
        };
        let Some(arrow) = arrow else {
            return Ok(None);
        };
        self.pos = arrow + 1;
        if self.at("{") {
            let close = self.matching(self.pos).ok_or_else(|| self.error("unbalanced lambda body"))?;
            self.pos = close + 1;
        } else {
            self.expr()?;
        }
        Ok(Some(Expr::Lambda(self.texts(start..self.pos))))
    }

    fn conditional(&mut self) -> PResult<Expr> {
        let cond = self.binary(1)?;
        if self.eat("?") {
            let then_expr = self.expr()?;
            self.expect(":")?;
            let else_expr = if let Some(l) = self.try_lambda()? {
                l
            } else {
                self.conditional()?
            };
            return Ok(Expr::Conditional {
                cond: Box::new(cond),
                then_expr: Box::new(then_expr),
                else_expr: Box::new(else_expr),
            });
        }
        Ok(cond)
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.gt_pending != 0 {
                break;
            }
            let op = self.peek_text().to_string();
            let Some(prec) = binary_precedence(&op) else {
                break;
            };
            if prec < min_prec {
                break;
            }
            self.pos += 1;
            if op == "instanceof" {
                let final_mod = self.eat("final");
                let ty = self.parse_type()?;
                if final_mod || self.is_ident() {
                    return Err(self.unsupported("instanceof pattern binding"));
                }
                lhs = Expr::InstanceOf {
                    expr: Box::new(lhs),
                    ty,
                };
                continue;
            }
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.gt_pending != 0 {
            return Err(self.error("unexpected `>`"));
        }
        let t = self.peek_text().to_string();
        if matches!(t.as_str(), "+" | "-" | "++" | "--" | "!" | "~") {
            self.pos += 1;
            let operand = self.unary()?;
            return Ok(Expr::Unary {
                op: t,
                operand: Box::new(operand),
            });
        }
        if t == "(" {
            if let Some(cast) = self.attempt(|p| p.cast()) {
                return Ok(cast);
            }
        }
        self.postfix()
    }

    fn cast(&mut self) -> PResult<Expr> {
        self.expect("(")?;
        let ty = self.parse_type()?;
        let mut ty_tokens = ty.tokens;
        while self.eat("&") {
            ty_tokens.push("&".into());
            ty_tokens.extend(self.parse_type()?.tokens);
        }
        self.expect(")")?;
        let ty = TypeRef { tokens: ty_tokens };
        let primitive = ty.tokens.len() == 1 && is_primitive(&ty.tokens[0])
            || (is_primitive(&ty.tokens[0]) && ty.tokens[1..].iter().all(|t| t == "[" || t == "]"));
        let next = self.peek().ok_or_else(|| self.error("expected expression"))?;
        let starts_operand = matches!(
            next.kind,
            TokenKind::Identifier | TokenKind::Literal
        ) || matches!(next.text.as_str(), "(" | "!" | "~" | "this" | "super" | "new")
            || (primitive && matches!(next.text.as_str(), "+" | "-" | "++" | "--"));
        if !starts_operand {
            return Err(self.error("not a cast"));
        }
        if let Some(l) = self.try_lambda()? {
            return Ok(Expr::Cast {
                ty,
                expr: Box::new(l),
            });
        }
        let expr = self.unary()?;
        Ok(Expr::Cast {
            ty,
            expr: Box::new(expr),
        })
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect("(")?;
        let mut args = Vec::new();
        if !self.at(")") {
            loop {
                args.push(self.expr()?);
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        Ok(args)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let tok = self.peek().cloned().ok_or_else(|| self.error("expected expression"))?;
        match tok.kind {
            TokenKind::Literal => {
                self.pos += 1;
                Ok(Expr::Literal(tok.text))
            }
            TokenKind::Identifier => {
                self.pos += 1;
                if self.at("(") {
                    let args = self.args()?;
                    return Ok(Expr::MethodCall {
                        target: None,
                        name: tok.text,
                        args,
                    });
                }
                Ok(Expr::Name(tok.text))
            }
            _ => match tok.text.as_str() {
                "(" => {
                    self.pos += 1;
                    let e = self.expr()?;
                    self.expect(")")?;
                    Ok(Expr::Paren(Box::new(e)))
                }
                "this" | "super" => {
                    self.pos += 1;
                    if self.at("(") {
                        let args = self.args()?;
                        return Ok(Expr::MethodCall {
                            target: None,
                            name: tok.text,
                            args,
                        });
                    }
                    Ok(Expr::Keyword(tok.text))
                }
                "new" => self.creation(),
                "switch" => Err(self.unsupported("switch expression")),
                t if is_primitive(t) || t == "void" => {
                    // `int.class`, `int[].class`, `int[]::new`
                    self.pos += 1;
                    let d = self.dims();
                    let ty = TypeRef::simple(t).with_dims(d);
                    if self.eat(".") {
                        self.expect("class")?;
                        return Ok(Expr::ClassLit(ty));
                    }
                    if self.eat("::") {
                        self.expect("new")?;
                        return Ok(Expr::MethodRef {
                            target: Box::new(Expr::ClassLit(ty)),
                            name: "new".into(),
                        });
                    }
                    Err(self.error("expected `.class`"))
                }
                _ => Err(self.error("expected expression")),
            },
        }
    }

    fn creation(&mut self) -> PResult<Expr> {
        self.expect("new")?;
        let start = self.pos;
        if is_primitive(self.peek_text()) {
            self.pos += 1;
        } else {
            self.ident()?;
            if self.at("<") {
                self.type_args()?;
            }
            while self.at(".") && self.kind_at(1) == Some(TokenKind::Identifier) {
                self.pos += 2;
                if self.at("<") {
                    self.type_args()?;
                }
            }
        }
        let ty = TypeRef {
            tokens: self.texts(start..self.pos),
        };
        if self.at("[") {
            let mut dims = Vec::new();
            while self.at("[") {
                self.pos += 1;
                if self.eat("]") {
                    dims.push(None);
                } else {
                    dims.push(Some(self.expr()?));
                    self.expect("]")?;
                }
            }
            let init = if self.at("{") {
                match self.array_init()? {
                    Expr::ArrayInit(items) => Some(items),
                    _ => unreachable!(),
                }
            } else {
                None
            };
            return Ok(Expr::NewArray { ty, dims, init });
        }
        let args = self.args()?;
        let body = if self.at("{") {
            let close = self.matching(self.pos).ok_or_else(|| self.error("unbalanced class body"))?;
            let body = self.texts(self.pos + 1..close);
            self.pos = close + 1;
            Some(body)
        } else {
            None
        };
        Ok(Expr::New { ty, args, body })
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        loop {
            if self.gt_pending != 0 {
                break;
            }
            match self.peek_text() {
                "." => {
                    self.pos += 1;
                    if self.eat("class") {
                        let ty = expr_to_type(&e).ok_or_else(|| self.error("invalid class literal"))?;
                        e = Expr::ClassLit(ty);
                        continue;
                    }
                    if self.at("new") {
                        return Err(self.unsupported("qualified class instance creation"));
                    }
                    if self.at("<") {
                        return Err(self.unsupported("explicit generic method call"));
                    }
                    let name = if self.at("this") || self.at("super") {
                        self.advance()
                    } else {
                        self.ident()?
                    };
                    if self.at("(") {
                        let args = self.args()?;
                        e = Expr::MethodCall {
                            target: Some(Box::new(e)),
                            name,
                            args,
                        };
                    } else {
                        e = Expr::FieldAccess {
                            target: Box::new(e),
                            name,
                        };
                    }
                }
                "[" => {
                    if self.peek_at(1) == "]" {
                        // `Foo[].class` / `Foo[]::new`
                        let base = expr_to_type(&e).ok_or_else(|| self.error("unexpected `[`"))?;
                        let d = self.dims();
                        let ty = base.with_dims(d);
                        if self.eat(".") {
                            self.expect("class")?;
                            e = Expr::ClassLit(ty);
                        } else if self.eat("::") {
                            self.expect("new")?;
                            e = Expr::MethodRef {
                                target: Box::new(Expr::ClassLit(ty)),
                                name: "new".into(),
                            };
                        } else {
                            return Err(self.error("expected `.class`"));
                        }
                        continue;
                    }
                    self.pos += 1;
                    let index = self.expr()?;
                    self.expect("]")?;
                    e = Expr::Index {
                        target: Box::new(e),
                        index: Box::new(index),
                    };
                }
                "::" => {
                    self.pos += 1;
                    let name = if self.at("new") { self.advance() } else { self.ident()? };
                    e = Expr::MethodRef {
                        target: Box::new(e),
                        name,
                    };
                }
                "++" | "--" => {
                    let op = self.advance();
                    e = Expr::Postfix {
                        op,
                        operand: Box::new(e),
                    };
                }
                _ => break,
            }
        }
        Ok(e)
    }
}

fn expr_to_type(e: &Expr) -> Option<TypeRef> {
    match e {
        Expr::Name(n) => Some(TypeRef::simple(n)),
        Expr::FieldAccess { target, name } => {
            let mut t = expr_to_type(target)?;
            t.tokens.push(".".into());
            t.tokens.push(name.clone());
            Some(t)
        }
        _ => None,
    }
}

pub(crate) fn line_col(source: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(source.len());
    let before = &source[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map(|p| offset - p).unwrap_or(offset + 1);
    (line, column)
}
