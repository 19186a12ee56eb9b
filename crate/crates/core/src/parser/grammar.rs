//! Recursive-descent parser producing the syntax tree.

use crate::lang::{
    BinOp, Binding, Block, Builtin, ClassDecl, Expr, ExprKind, FieldDecl, InterfaceDecl, MethodDecl, MethodSig,
    ModelParam, Param, Program, ResourceDescriptor, ResourceGroup, ResourceRequest, SourceSpan, Stmt, StmtKind, Type,
    UnOp,
};

use super::diag::ParseDiagnostic;
use super::lexer::{Keyword, Tok, Token};

type PResult<T> = Result<T, ParseDiagnostic>;

pub struct Parser {
    toks: Vec<Token>,
    pos: usize,
    pub diags: Vec<ParseDiagnostic>,
}

impl Parser {
    pub fn new(toks: Vec<Token>) -> Self {
        Self {
            toks,
            pos: 0,
            diags: Vec::new(),
        }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].span
    }

    fn prev_span(&self) -> SourceSpan {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn at(&self, t: &Tok) -> bool {
        self.peek() == t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.at(t) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> PResult<SourceSpan> {
        if self.at(&t) {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&format!("{t}")))
        }
    }

    fn unexpected(&self, wanted: &str) -> ParseDiagnostic {
        ParseDiagnostic::error(self.span(), format!("expected {wanted}, found {}", self.peek()))
    }

    fn ident(&mut self) -> PResult<(String, SourceSpan)> {
        match self.peek().clone() {
            Tok::Ident(s) => Ok((s, self.bump().span)),
            _ => Err(self.unexpected("identifier")),
        }
    }

    /// Builds a span from `start` up to the end of the previous token.
    fn since(&self, start: SourceSpan) -> SourceSpan {
        let end = self.prev_span();
        let length = if end.line == start.line {
            (end.column + end.length).saturating_sub(start.column)
        } else {
            start.length
        };
        SourceSpan::new(start.line, start.column, length)
    }

    pub fn program(&mut self) -> PResult<Program> {
        self.expect(Tok::Kw(Keyword::Module))?;
        let (module_name, _) = self.ident()?;
        self.expect(Tok::Semi)?;
        let mut interfaces = Vec::new();
        let mut classes = Vec::new();
        loop {
            match self.peek() {
                Tok::Kw(Keyword::Interface) => interfaces.push(self.interface()?),
                Tok::Kw(Keyword::Class) => classes.push(self.class()?),
                _ => break,
            }
        }
        if !self.at(&Tok::LBrace) {
            return Err(self.unexpected("`interface`, `class` or the main block"));
        }
        let main = self.block()?;
        let resources = if self.eat(&Tok::Kw(Keyword::Resources)) {
            self.expect(Tok::Colon)?;
            self.resources()?
        } else {
            Vec::new()
        };
        if !self.at(&Tok::Eof) {
            return Err(self.unexpected("end of input"));
        }
        Ok(Program {
            module_name,
            interfaces,
            classes,
            main,
            resources,
        })
    }

    fn interface(&mut self) -> PResult<InterfaceDecl> {
        let start = self.expect(Tok::Kw(Keyword::Interface))?;
        let (name, _) = self.ident()?;
        self.expect(Tok::LBrace)?;
        let mut methods = Vec::new();
        while !self.at(&Tok::RBrace) {
            let sig_start = self.span();
            let return_type = self.ty()?;
            let (mname, _) = self.ident()?;
            let params = self.params()?;
            self.expect(Tok::Semi)?;
            methods.push(MethodSig {
                name: mname,
                return_type,
                params,
                span: self.since(sig_start),
            });
        }
        self.expect(Tok::RBrace)?;
        Ok(InterfaceDecl {
            name,
            methods,
            span: SourceSpan { length: start.length, ..start },
        })
    }

    fn class(&mut self) -> PResult<ClassDecl> {
        let start = self.expect(Tok::Kw(Keyword::Class))?;
        let (name, _) = self.ident()?;
        self.expect(Tok::Kw(Keyword::Implements))?;
        let (implements, _) = self.ident()?;
        self.expect(Tok::LBrace)?;
        let mut fields = Vec::new();
        let mut methods = Vec::new();
        while !self.at(&Tok::RBrace) {
            let member_start = self.span();
            let ty = self.ty()?;
            let (mname, _) = self.ident()?;
            if self.at(&Tok::LParen) {
                let params = self.params()?;
                let span = self.since(member_start);
                let body = self.block()?;
                methods.push(MethodDecl {
                    name: mname,
                    return_type: ty,
                    params,
                    body,
                    span,
                });
            } else {
                let init = if self.eat(&Tok::Assign) { Some(self.expr()?) } else { None };
                self.expect(Tok::Semi)?;
                fields.push(FieldDecl {
                    name: mname,
                    ty,
                    init,
                    span: self.since(member_start),
                });
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(ClassDecl {
            name,
            implements,
            fields,
            methods,
            span: start,
        })
    }

    fn params(&mut self) -> PResult<Vec<Param>> {
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        if !self.at(&Tok::RParen) {
            loop {
                let ty = self.ty()?;
                let (name, _) = self.ident()?;
                params.push(Param { name, ty });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        Ok(params)
    }

    fn ty(&mut self) -> PResult<Type> {
        let (name, _) = self.ident()?;
        let mut args = Vec::new();
        if self.eat(&Tok::Lt) {
            loop {
                args.push(self.ty()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::Gt)?;
        }
        Ok(Type { name, args })
    }

    /// Parses `{ stmt* }`, resynchronising at the next `;` or `}` after a bad statement.
    fn block(&mut self) -> PResult<Block> {
        self.expect(Tok::LBrace)?;
        let mut stmts = Vec::new();
        while !self.at(&Tok::RBrace) {
            if self.at(&Tok::Eof) {
                return Err(self.unexpected("`}`"));
            }
            match self.stmt() {
                Ok(s) => stmts.push(s),
                Err(d) => {
                    self.diags.push(d);
                    self.resync();
                }
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(Block { stmts })
    }

    fn resync(&mut self) {
        loop {
            match self.peek() {
                Tok::Semi => {
                    self.bump();
                    return;
                }
                Tok::RBrace | Tok::Eof => return,
                Tok::LBrace => {
                    // skip a nested block wholesale
                    let mut depth = 0usize;
                    loop {
                        match self.bump().tok {
                            Tok::LBrace => depth += 1,
                            Tok::RBrace => {
                                depth -= 1;
                                if depth == 0 {
                                    return;
                                }
                            }
                            Tok::Eof => return,
                            _ => {}
                        }
                    }
                }
                _ => {
                    self.bump();
                }
            }
        }
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let start = self.span();
        let kind = match self.peek().clone() {
            Tok::Kw(Keyword::If) => {
                self.bump();
                self.expect(Tok::LParen)?;
                let cond = self.expr()?;
                self.expect(Tok::RParen)?;
                let then_block = self.block()?;
                let else_block = if self.eat(&Tok::Kw(Keyword::Else)) {
                    if self.at(&Tok::Kw(Keyword::If)) {
                        Some(Block { stmts: vec![self.stmt()?] })
                    } else {
                        Some(self.block()?)
                    }
                } else {
                    None
                };
                return Ok(Stmt {
                    kind: StmtKind::If {
                        cond,
                        then_block,
                        else_block,
                    },
                    span: start,
                });
            }
            Tok::Kw(Keyword::While) => {
                self.bump();
                self.expect(Tok::LParen)?;
                let cond = self.expr()?;
                self.expect(Tok::RParen)?;
                let body = self.block()?;
                return Ok(Stmt {
                    kind: StmtKind::While { cond, body },
                    span: start,
                });
            }
            Tok::Kw(Keyword::Await) => {
                self.bump();
                let (future, _) = self.ident()?;
                self.expect(Tok::Question)?;
                StmtKind::Await { future }
            }
            Tok::Kw(Keyword::Return) => {
                self.bump();
                StmtKind::Return(self.expr()?)
            }
            Tok::Kw(Keyword::Cost) => {
                self.bump();
                self.expect(Tok::LParen)?;
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                StmtKind::Cost(e)
            }
            Tok::Kw(Keyword::Release) => {
                self.bump();
                self.expect(Tok::LParen)?;
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                StmtKind::Release(e)
            }
            Tok::Ident(_) if self.peek_at(1) == &Tok::Assign => {
                let (name, _) = self.ident()?;
                self.bump();
                self.rhs(name, None)?
            }
            Tok::Ident(_) => {
                let ty = self.ty()?;
                let (name, _) = self.ident()?;
                if self.eat(&Tok::Assign) {
                    self.rhs(name, Some(ty))?
                } else {
                    StmtKind::VarDecl { name, ty, init: None }
                }
            }
            _ => return Err(self.unexpected("statement")),
        };
        self.expect(Tok::Semi)?;
        Ok(Stmt {
            kind,
            span: self.since(start),
        })
    }

    /// Right-hand side of `name = ...` or `T name = ...`.
    fn rhs(&mut self, name: String, decl: Option<Type>) -> PResult<StmtKind> {
        let target = Binding { name, decl };
        match self.peek().clone() {
            Tok::Bang => {
                if let (Tok::Ident(m), Tok::LParen) = (self.peek_at(1).clone(), self.peek_at(2)) {
                    if Builtin::from_name(&m).is_none() {
                        return self.async_call(target);
                    }
                }
            }
            Tok::Kw(Keyword::Hold) => {
                self.bump();
                self.expect(Tok::LParen)?;
                let requests = self.requests()?;
                self.expect(Tok::RParen)?;
                return Ok(StmtKind::Hold { target, requests });
            }
            Tok::Kw(Keyword::New) => {
                self.bump();
                let (class, _) = self.ident()?;
                self.expect(Tok::LParen)?;
                self.expect(Tok::RParen)?;
                return Ok(StmtKind::New { target, class });
            }
            Tok::Ident(fut) if self.peek_at(1) == &Tok::Dot => {
                if let Tok::Ident(g) = self.peek_at(2) {
                    if g == "get" {
                        self.bump();
                        self.bump();
                        self.bump();
                        return Ok(StmtKind::Get { target, future: fut });
                    }
                }
            }
            _ => {}
        }
        let value = self.expr()?;
        Ok(match target.decl {
            Some(ty) => StmtKind::VarDecl {
                name: target.name,
                ty,
                init: Some(value),
            },
            None => StmtKind::Assign {
                target: target.name,
                value,
            },
        })
    }

    fn async_call(&mut self, target: Binding) -> PResult<StmtKind> {
        self.expect(Tok::Bang)?;
        let (method, _) = self.ident()?;
        let call_start = self.span();
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if !self.at(&Tok::RParen) {
            loop {
                args.push(self.expr()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        if args.is_empty() {
            return Err(ParseDiagnostic::error(
                call_start,
                format!("call to `{method}` is missing its callee argument"),
            ));
        }
        let callee = args.remove(0);
        self.expect(Tok::Kw(Keyword::After))?;
        let mut after = Vec::new();
        while let Tok::Ident(f) = self.peek().clone() {
            self.bump();
            after.push(f);
        }
        self.expect(Tok::Kw(Keyword::Dl))?;
        let deadline = self.expr()?;
        Ok(StmtKind::AsyncCall {
            target,
            method,
            callee,
            args,
            after,
            deadline,
        })
    }

    fn requests(&mut self) -> PResult<Vec<ResourceRequest>> {
        self.keyword_ident("list")?;
        self.expect(Tok::LBracket)?;
        let mut out = Vec::new();
        loop {
            out.push(self.request()?);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RBracket)?;
        Ok(out)
    }

    fn request(&mut self) -> PResult<ResourceRequest> {
        let start = self.span();
        self.keyword_ident("set")?;
        self.expect(Tok::LBracket)?;
        let mut category = None;
        let mut min_efficiency = None;
        loop {
            let (word, wspan) = self.ident()?;
            if word == "ResEfficiency" {
                self.expect(Tok::LParen)?;
                let v = self.int_literal()?;
                self.expect(Tok::RParen)?;
                if min_efficiency.replace(v).is_some() {
                    return Err(ParseDiagnostic::error(wspan, "duplicate efficiency constraint in request"));
                }
            } else if category.replace(word).is_some() {
                return Err(ParseDiagnostic::error(wspan, "request names more than one category"));
            }
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RBracket)?;
        match (category, min_efficiency) {
            (Some(category), Some(min_efficiency)) => Ok(ResourceRequest {
                category,
                min_efficiency,
            }),
            _ => Err(ParseDiagnostic::error(
                self.since(start),
                "each requested unit needs one category and one `ResEfficiency(n)` constraint",
            )),
        }
    }

    fn keyword_ident(&mut self, word: &str) -> PResult<()> {
        match self.peek() {
            Tok::Ident(s) if s == word => {
                self.bump();
                Ok(())
            }
            _ => Err(self.unexpected(&format!("`{word}`"))),
        }
    }

    fn int_literal(&mut self) -> PResult<i64> {
        let neg = self.eat(&Tok::Minus);
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(if neg { -v } else { v })
            }
            _ => Err(self.unexpected("integer")),
        }
    }

    fn resources(&mut self) -> PResult<Vec<ResourceGroup>> {
        let mut groups = Vec::new();
        let mut current: Vec<ResourceDescriptor> = Vec::new();
        let mut group_start = self.span();
        let mut next_id = 1u32;
        loop {
            match self.peek() {
                Tok::Eof => break,
                Tok::Dollar => {
                    let sep = self.bump().span;
                    if current.is_empty() {
                        self.diags.push(ParseDiagnostic::warning(sep, "empty resource group"));
                    } else {
                        groups.push(self.close_group(std::mem::take(&mut current), group_start)?);
                    }
                    group_start = self.span();
                }
                _ => {
                    let (category, _) = self.ident()?;
                    self.expect(Tok::Comma)?;
                    let efficiency = self.int_literal()?;
                    self.expect(Tok::Comma)?;
                    let cost_span = self.span();
                    let cost_per_unit = self.int_literal()?;
                    if cost_per_unit < 0 {
                        return Err(ParseDiagnostic::error(cost_span, "cost per time unit must be non-negative"));
                    }
                    self.expect(Tok::Comma)?;
                    let extra_quality = self.int_literal()?;
                    current.push(ResourceDescriptor {
                        id: next_id,
                        category,
                        efficiency,
                        cost_per_unit,
                        extra_quality,
                        available: true,
                    });
                    next_id += 1;
                }
            }
        }
        if !current.is_empty() {
            groups.push(self.close_group(current, group_start)?);
        }
        Ok(groups)
    }

    fn close_group(&self, descriptors: Vec<ResourceDescriptor>, start: SourceSpan) -> PResult<ResourceGroup> {
        let first = &descriptors[0].category;
        if let Some(odd) = descriptors.iter().find(|d| &d.category != first) {
            return Err(ParseDiagnostic::error(
                start,
                format!(
                    "resource group mixes categories `{first}` and `{}`; separate groups with `$`",
                    odd.category
                ),
            ));
        }
        Ok(ResourceGroup { descriptors })
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binary_op(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::OrOr => BinOp::Or,
            Tok::AndAnd => BinOp::And,
            Tok::EqEq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::Star => BinOp::Mul,
            Tok::Slash => BinOp::Div,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binary_op() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(prec + 1)?;
            let span = join(lhs.span, rhs.span);
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let start = self.span();
        if self.eat(&Tok::Bang) {
            let e = self.unary()?;
            let span = join(start, e.span);
            return Ok(Expr::new(ExprKind::Unary(UnOp::Not, Box::new(e)), span));
        }
        if self.eat(&Tok::Minus) {
            let e = self.unary()?;
            let span = join(start, e.span);
            return Ok(Expr::new(ExprKind::Unary(UnOp::Neg, Box::new(e)), span));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::new(ExprKind::Int(v), start))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if let Some(p) = ModelParam::from_name(&name) {
                    return Ok(Expr::new(ExprKind::Param(p), start));
                }
                match name.as_str() {
                    "Nil" => return Ok(Expr::new(ExprKind::Nil, start)),
                    "True" => return Ok(Expr::new(ExprKind::Bool(true), start)),
                    "False" => return Ok(Expr::new(ExprKind::Bool(false), start)),
                    "list" | "set" if self.at(&Tok::LBracket) => {
                        self.bump();
                        let mut items = Vec::new();
                        if !self.at(&Tok::RBracket) {
                            loop {
                                items.push(self.expr()?);
                                if !self.eat(&Tok::Comma) {
                                    break;
                                }
                            }
                        }
                        self.expect(Tok::RBracket)?;
                        let kind = if name == "list" {
                            ExprKind::List(items)
                        } else {
                            ExprKind::Set(items)
                        };
                        return Ok(Expr::new(kind, self.since(start)));
                    }
                    _ => {}
                }
                if let Some(b) = Builtin::from_name(&name) {
                    self.expect(Tok::LParen)?;
                    let mut args = Vec::new();
                    if !self.at(&Tok::RParen) {
                        loop {
                            args.push(self.expr()?);
                            if !self.eat(&Tok::Comma) {
                                break;
                            }
                        }
                    }
                    self.expect(Tok::RParen)?;
                    if args.len() != b.arity() {
                        return Err(ParseDiagnostic::error(
                            start,
                            format!("`{name}` takes {} argument(s), got {}", b.arity(), args.len()),
                        ));
                    }
                    return Ok(Expr::new(ExprKind::Call(b, args), self.since(start)));
                }
                if self.at(&Tok::LParen) {
                    return Err(ParseDiagnostic::error(
                        start,
                        format!("unknown function `{name}`; method calls must be asynchronous (`!{name}(...)`)"),
                    ));
                }
                Ok(Expr::new(ExprKind::Var(name), start))
            }
            _ => Err(self.unexpected("expression")),
        }
    }
}

fn join(a: SourceSpan, b: SourceSpan) -> SourceSpan {
    if a.line == b.line {
        SourceSpan::new(a.line, a.column, (b.column + b.length).saturating_sub(a.column))
    } else {
        a
    }
}
