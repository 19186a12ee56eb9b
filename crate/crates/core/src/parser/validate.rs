//! Static checks run after parsing: declared types, call targets, arities, scopes, returns.

use std::collections::{HashMap, HashSet};

use crate::lang::{Binding, Block, ClassDecl, Expr, ExprKind, MethodSig, Program, SourceSpan, StmtKind, Type};

use super::diag::ParseDiagnostic;

pub fn validate(p: &Program) -> Vec<ParseDiagnostic> {
    let mut v = Validator {
        p,
        diags: Vec::new(),
        scopes: Vec::new(),
        categories: p.resources.iter().map(|g| g.category().to_string()).collect(),
    };
    v.run();
    v.diags
}

struct Validator<'a> {
    p: &'a Program,
    diags: Vec<ParseDiagnostic>,
    scopes: Vec<HashMap<String, Type>>,
    categories: HashSet<String>,
}

const BUILTIN_TYPES: [(&str, usize); 8] = [
    ("Int", 0),
    ("Bool", 0),
    ("Rat", 0),
    ("Unit", 0),
    ("Fut", 1),
    ("List", 1),
    ("Set", 1),
    ("Pair", 2),
];

impl<'a> Validator<'a> {
    fn error(&mut self, span: SourceSpan, msg: impl Into<String>) {
        self.diags.push(ParseDiagnostic::error(span, msg));
    }

    fn run(&mut self) {
        let p = self.p;
        let mut seen = HashSet::new();
        for i in &p.interfaces {
            if !seen.insert(i.name.as_str()) {
                self.error(i.span, format!("duplicate declaration of `{}`", i.name));
            }
            let mut names = HashSet::new();
            for m in &i.methods {
                if !names.insert(m.name.as_str()) {
                    self.error(m.span, format!("interface `{}` declares `{}` twice", i.name, m.name));
                }
                self.check_sig(m);
            }
        }
        let mut class_names = HashSet::new();
        for c in &p.classes {
            if !class_names.insert(c.name.as_str()) {
                self.error(c.span, format!("duplicate class `{}`", c.name));
            }
            self.check_class(c);
        }
        let mut cats = HashSet::new();
        for g in &p.resources {
            if !cats.insert(g.category()) {
                self.error(
                    SourceSpan::default(),
                    format!("resources of category `{}` must be listed in one group", g.category()),
                );
            }
        }
        self.scopes.push(HashMap::new());
        self.block(&p.main, true);
        self.scopes.pop();
    }

    fn check_type(&mut self, ty: &Type, span: SourceSpan) {
        let arity = BUILTIN_TYPES.iter().find(|(n, _)| *n == ty.name).map(|(_, a)| *a);
        match arity {
            Some(a) if a != ty.args.len() => {
                self.error(span, format!("type `{}` expects {a} type argument(s)", ty.name));
            }
            Some(_) => {}
            None => {
                let known = self.p.interface(&ty.name).is_some() || self.p.class(&ty.name).is_some();
                if !known {
                    self.error(span, format!("unknown type `{}`", ty.name));
                } else if !ty.args.is_empty() {
                    self.error(span, format!("type `{}` takes no type arguments", ty.name));
                }
            }
        }
        for a in &ty.args {
            self.check_type(a, span);
        }
    }

    fn check_sig(&mut self, m: &MethodSig) {
        self.check_type(&m.return_type, m.span);
        let mut names = HashSet::new();
        for prm in &m.params {
            self.check_type(&prm.ty, m.span);
            if !names.insert(prm.name.as_str()) {
                self.error(m.span, format!("parameter `{}` declared twice", prm.name));
            }
        }
    }

    fn check_class(&mut self, c: &'a ClassDecl) {
        match self.p.interface(&c.implements) {
            None => self.error(c.span, format!("class `{}` implements unknown interface `{}`", c.name, c.implements)),
            Some(iface) => {
                for sig in &iface.methods {
                    match c.method(&sig.name) {
                        None => self.error(
                            c.span,
                            format!("class `{}` does not provide `{}` required by `{}`", c.name, sig.name, iface.name),
                        ),
                        Some(m) => {
                            let same_params = m.params.len() == sig.params.len()
                                && m.params.iter().zip(&sig.params).all(|(a, b)| a.ty == b.ty);
                            if !same_params || m.return_type != sig.return_type {
                                self.error(
                                    m.span,
                                    format!("`{}.{}` does not match its declaration in `{}`", c.name, m.name, iface.name),
                                );
                            }
                        }
                    }
                }
            }
        }
        let mut fields: HashMap<String, Type> = HashMap::new();
        for f in &c.fields {
            self.check_type(&f.ty, f.span);
            if let Some(init) = &f.init {
                self.scopes.push(fields.clone());
                self.expr(init);
                self.scopes.pop();
            }
            if fields.insert(f.name.clone(), f.ty.clone()).is_some() {
                self.error(f.span, format!("field `{}` declared twice", f.name));
            }
        }
        let mut method_names = HashSet::new();
        for m in &c.methods {
            if !method_names.insert(m.name.as_str()) {
                self.error(m.span, format!("method `{}` defined twice", m.name));
            }
            self.check_type(&m.return_type, m.span);
            let mut scope = HashMap::new();
            for prm in &m.params {
                self.check_type(&prm.ty, m.span);
                if scope.insert(prm.name.clone(), prm.ty.clone()).is_some() {
                    self.error(m.span, format!("parameter `{}` declared twice", prm.name));
                }
            }
            self.scopes.push(fields.clone());
            self.scopes.push(scope);
            self.block(&m.body, false);
            self.scopes.pop();
            self.scopes.pop();
            if !returns(&m.body) {
                self.error(m.span, format!("method `{}` does not return on every path", m.name));
            }
        }
    }

    fn lookup(&self, name: &str) -> Option<&Type> {
        self.scopes.iter().rev().find_map(|s| s.get(name))
    }

    fn declare(&mut self, name: &str, ty: &Type, span: SourceSpan) {
        self.check_type(ty, span);
        let scope = self.scopes.last_mut().expect("scope");
        if scope.insert(name.to_string(), ty.clone()).is_some() {
            self.error(span, format!("`{name}` is already declared in this block"));
        }
    }

    fn binding(&mut self, b: &Binding, span: SourceSpan) {
        match &b.decl {
            Some(ty) => self.declare(&b.name, ty, span),
            None => {
                if self.lookup(&b.name).is_none() {
                    self.error(span, format!("assignment to undeclared variable `{}`", b.name));
                }
            }
        }
    }

    fn future(&mut self, name: &str, span: SourceSpan) {
        match self.lookup(name) {
            None => self.error(span, format!("undeclared future `{name}`")),
            Some(ty) if !ty.is_future() => {
                let ty = ty.to_string();
                self.error(span, format!("`{name}` has type `{ty}`, expected a future"))
            }
            Some(_) => {}
        }
    }

    fn block(&mut self, b: &Block, is_main: bool) {
        let mut terminated = false;
        for s in &b.stmts {
            if terminated {
                self.error(s.span, "unreachable statement after `return`");
                break;
            }
            match &s.kind {
                StmtKind::VarDecl { name, ty, init } => {
                    if let Some(e) = init {
                        self.expr(e);
                    }
                    self.declare(name, ty, s.span);
                }
                StmtKind::Assign { target, value } => {
                    self.expr(value);
                    if self.lookup(target).is_none() {
                        self.error(s.span, format!("assignment to undeclared variable `{target}`"));
                    }
                }
                StmtKind::AsyncCall {
                    target,
                    method,
                    callee,
                    args,
                    after,
                    deadline,
                } => {
                    self.expr(callee);
                    args.iter().for_each(|a| self.expr(a));
                    self.expr(deadline);
                    for f in after {
                        self.future(f, s.span);
                    }
                    self.check_call(method, callee, args.len(), s.span);
                    if let Some(ty) = &target.decl {
                        if !ty.is_future() {
                            self.error(s.span, format!("`{}` must be declared as a future", target.name));
                        }
                    }
                    self.binding(target, s.span);
                    if target.decl.is_none() && self.lookup(&target.name).is_some() {
                        self.future(&target.name, s.span);
                    }
                }
                StmtKind::Await { future } => self.future(future, s.span),
                StmtKind::Get { target, future } => {
                    self.future(future, s.span);
                    self.binding(target, s.span);
                }
                StmtKind::If {
                    cond,
                    then_block,
                    else_block,
                } => {
                    self.expr(cond);
                    self.scopes.push(HashMap::new());
                    self.block(then_block, is_main);
                    self.scopes.pop();
                    if let Some(e) = else_block {
                        self.scopes.push(HashMap::new());
                        self.block(e, is_main);
                        self.scopes.pop();
                    }
                }
                StmtKind::While { cond, body } => {
                    self.expr(cond);
                    self.scopes.push(HashMap::new());
                    self.block(body, is_main);
                    self.scopes.pop();
                }
                StmtKind::Cost(e) | StmtKind::Release(e) => self.expr(e),
                StmtKind::Return(e) => {
                    self.expr(e);
                    if is_main {
                        self.error(s.span, "the main block cannot `return`");
                    }
                    terminated = true;
                }
                StmtKind::Hold { target, requests } => {
                    for r in requests {
                        if !self.categories.contains(&r.category) {
                            self.diags.push(ParseDiagnostic::warning(
                                s.span,
                                format!("no resource of category `{}` is declared", r.category),
                            ));
                        }
                    }
                    self.binding(target, s.span);
                }
                StmtKind::New { target, class } => {
                    match self.p.class(class) {
                        None => self.error(s.span, format!("unknown class `{class}`")),
                        Some(c) => {
                            if let Some(ty) = &target.decl {
                                if ty.name != c.name && ty.name != c.implements {
                                    self.error(s.span, format!("`new {class}()` cannot be bound to type `{ty}`"));
                                }
                            }
                        }
                    }
                    self.binding(target, s.span);
                }
            }
        }
    }

    fn check_call(&mut self, method: &str, callee: &Expr, nargs: usize, span: SourceSpan) {
        let ExprKind::Var(obj) = &callee.kind else {
            self.error(span, format!("the callee of `{method}` must be a variable"));
            return;
        };
        let Some(ty) = self.lookup(obj).cloned() else {
            return;
        };
        let params = if let Some(i) = self.p.interface(&ty.name) {
            i.methods.iter().find(|m| m.name == method).map(|m| m.params.len())
        } else if let Some(c) = self.p.class(&ty.name) {
            c.method(method).map(|m| m.params.len())
        } else {
            self.error(span, format!("`{obj}` of type `{ty}` has no methods"));
            return;
        };
        match params {
            None => self.error(span, format!("`{method}` is not declared on `{}`", ty.name)),
            Some(n) if n != nargs => self.error(
                span,
                format!("`{method}` expects {n} argument(s) after the callee, got {nargs}"),
            ),
            Some(_) => {}
        }
    }

    fn expr(&mut self, e: &Expr) {
        match &e.kind {
            ExprKind::Var(name) => {
                if self.lookup(name).is_none() {
                    self.error(e.span, format!("undeclared variable `{name}`"));
                }
            }
            ExprKind::Unary(_, a) => self.expr(a),
            ExprKind::Binary(_, a, b) => {
                self.expr(a);
                self.expr(b);
            }
            ExprKind::Call(_, args) | ExprKind::List(args) | ExprKind::Set(args) => {
                args.iter().for_each(|a| self.expr(a))
            }
            ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Param(_) | ExprKind::Nil => {}
        }
    }
}

/// True if every path through the block ends in `return`.
pub fn returns(b: &Block) -> bool {
    match b.stmts.last().map(|s| &s.kind) {
        Some(StmtKind::Return(_)) => true,
        Some(StmtKind::If {
            then_block,
            else_block: Some(e),
            ..
        }) => returns(then_block) && returns(e),
        _ => false,
    }
}
