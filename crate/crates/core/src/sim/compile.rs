//! Lowers method bodies to flat instruction lists so that tasks can suspend at
//! any scheduling point and resume from a program counter.
//!
//! Block-local declarations that shadow a visible name are renamed (`name'N`)
//! so that one flat local map per task is enough at run time.

use std::collections::HashMap;

use crate::lang::{
    Block, Expr, ExprKind, Program, ResourcePool, ResourceRequest, SourceSpan, StmtKind, Type, Value,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CodeRef {
    Main,
    Method { class: usize, method: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CallSite {
    /// Name of the invoked method.
    pub method: String,
    pub line: u32,
}

#[derive(Debug, Clone)]
pub enum Instr {
    Decl {
        name: String,
        init: Option<Expr>,
        default: Value,
    },
    Assign {
        target: String,
        value: Expr,
    },
    Spawn {
        target: String,
        method: String,
        callee: Expr,
        args: Vec<Expr>,
        after: Vec<String>,
        deadline: Expr,
        site: usize,
    },
    Await(String),
    Get {
        target: String,
        future: String,
    },
    Cost(Expr),
    Hold {
        target: String,
        requests: Vec<ResourceRequest>,
    },
    Release(Expr),
    Return(Option<Expr>),
    New {
        target: String,
        class: usize,
    },
    JumpUnless {
        cond: Expr,
        to: usize,
    },
    Jump(usize),
}

#[derive(Debug, Clone)]
pub struct Code {
    pub name: String,
    pub params: Vec<String>,
    pub instrs: Vec<(Instr, SourceSpan)>,
}

#[derive(Debug, Clone)]
pub struct CompiledClass {
    pub name: String,
    pub fields: Vec<(String, Option<Expr>, Value)>,
    pub methods: Vec<Code>,
    pub method_index: HashMap<String, usize>,
}

#[derive(Debug, Clone)]
pub struct CompiledProgram {
    pub classes: Vec<CompiledClass>,
    pub main: Code,
    pub sites: Vec<CallSite>,
    /// Full declared pool, availability applied by the caller.
    pub pool: ResourcePool,
    pub categories: Vec<String>,
    /// Category index of each resource, parallel to `pool.resources`.
    pub resource_category: Vec<usize>,
}

impl CompiledProgram {
    pub fn code(&self, r: CodeRef) -> &Code {
        match r {
            CodeRef::Main => &self.main,
            CodeRef::Method { class, method } => &self.classes[class].methods[method],
        }
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c.name == name)
    }
}

pub fn default_value(ty: &Type) -> Value {
    match ty.name.as_str() {
        "Int" | "Rat" => Value::int(0),
        "Bool" => Value::Bool(false),
        "List" => Value::List(Vec::new()),
        "Set" => Value::Set(Vec::new()),
        _ => Value::Unit,
    }
}

pub fn compile(p: &Program, pool: ResourcePool) -> CompiledProgram {
    let mut sites = Vec::new();
    let class_names: Vec<&str> = p.classes.iter().map(|c| c.name.as_str()).collect();
    let classes = p
        .classes
        .iter()
        .map(|c| {
            let field_names: Vec<String> = c.fields.iter().map(|f| f.name.clone()).collect();
            let methods: Vec<Code> = c
                .methods
                .iter()
                .map(|m| {
                    let mut cx = Lowering::new(&field_names, &class_names, &mut sites);
                    let params: Vec<String> = m.params.iter().map(|prm| cx.declare(&prm.name)).collect();
                    cx.block(&m.body);
                    Code {
                        name: m.name.clone(),
                        params,
                        instrs: cx.out,
                    }
                })
                .collect();
            CompiledClass {
                name: c.name.clone(),
                fields: c
                    .fields
                    .iter()
                    .map(|f| (f.name.clone(), f.init.clone(), default_value(&f.ty)))
                    .collect(),
                method_index: methods.iter().enumerate().map(|(i, m)| (m.name.clone(), i)).collect(),
                methods,
            }
        })
        .collect();
    let mut cx = Lowering::new(&[], &class_names, &mut sites);
    cx.block(&p.main);
    let main = Code {
        name: "main".into(),
        params: Vec::new(),
        instrs: cx.out,
    };
    let mut pool = pool;
    pool.resources.sort_by_key(|r| r.id);
    let categories = pool.categories();
    let resource_category = pool
        .resources
        .iter()
        .map(|r| categories.iter().position(|c| c == &r.category).unwrap())
        .collect();
    CompiledProgram {
        classes,
        main,
        sites,
        pool,
        categories,
        resource_category,
    }
}

struct Lowering<'a> {
    fields: &'a [String],
    classes: &'a [&'a str],
    sites: &'a mut Vec<CallSite>,
    scopes: Vec<HashMap<String, String>>,
    fresh: usize,
    out: Vec<(Instr, SourceSpan)>,
}

impl<'a> Lowering<'a> {
    fn new(fields: &'a [String], classes: &'a [&'a str], sites: &'a mut Vec<CallSite>) -> Self {
        Self {
            fields,
            classes,
            sites,
            scopes: vec![HashMap::new()],
            fresh: 0,
            out: Vec::new(),
        }
    }

    fn visible(&self, name: &str) -> bool {
        self.fields.iter().any(|f| f == name) || self.scopes.iter().any(|s| s.values().any(|v| v == name) || s.contains_key(name))
    }

    fn declare(&mut self, name: &str) -> String {
        let local = if self.visible(name) {
            self.fresh += 1;
            format!("{name}'{}", self.fresh)
        } else {
            name.to_string()
        };
        self.scopes.last_mut().unwrap().insert(name.to_string(), local.clone());
        local
    }

    fn resolve(&self, name: &str) -> String {
        self.scopes
            .iter()
            .rev()
            .find_map(|s| s.get(name).cloned())
            .unwrap_or_else(|| name.to_string())
    }

    fn expr(&self, e: &Expr) -> Expr {
        let mut e = e.clone();
        self.rename(&mut e);
        e
    }

    fn rename(&self, e: &mut Expr) {
        match &mut e.kind {
            ExprKind::Var(v) => *v = self.resolve(v),
            ExprKind::Unary(_, a) => self.rename(a),
            ExprKind::Binary(_, a, b) => {
                self.rename(a);
                self.rename(b);
            }
            ExprKind::Call(_, args) | ExprKind::List(args) | ExprKind::Set(args) => {
                args.iter_mut().for_each(|a| self.rename(a))
            }
            ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Param(_) | ExprKind::Nil => {}
        }
    }

    fn target(&mut self, b: &crate::lang::Binding) -> (String, Option<Value>) {
        match &b.decl {
            Some(ty) => (self.declare(&b.name), Some(default_value(ty))),
            None => (self.resolve(&b.name), None),
        }
    }

    fn emit(&mut self, i: Instr, span: SourceSpan) -> usize {
        self.out.push((i, span));
        self.out.len() - 1
    }

    fn declare_target(&mut self, b: &crate::lang::Binding, span: SourceSpan) -> String {
        let (name, default) = self.target(b);
        if let Some(default) = default {
            self.emit(
                Instr::Decl {
                    name: name.clone(),
                    init: None,
                    default,
                },
                span,
            );
        }
        name
    }

    fn block(&mut self, b: &Block) {
        self.scopes.push(HashMap::new());
        for s in &b.stmts {
            let span = s.span;
            match &s.kind {
                StmtKind::VarDecl { name, ty, init } => {
                    let init = init.as_ref().map(|e| self.expr(e));
                    let name = self.declare(name);
                    self.emit(
                        Instr::Decl {
                            name,
                            init,
                            default: default_value(ty),
                        },
                        span,
                    );
                }
                StmtKind::Assign { target, value } => {
                    let value = self.expr(value);
                    let target = self.resolve(target);
                    self.emit(Instr::Assign { target, value }, span);
                }
                StmtKind::AsyncCall {
                    target,
                    method,
                    callee,
                    args,
                    after,
                    deadline,
                } => {
                    let callee = self.expr(callee);
                    let args = args.iter().map(|a| self.expr(a)).collect();
                    let after = after.iter().map(|f| self.resolve(f)).collect();
                    let deadline = self.expr(deadline);
                    let target = self.declare_target(target, span);
                    self.sites.push(CallSite {
                        method: method.clone(),
                        line: span.line,
                    });
                    let site = self.sites.len() - 1;
                    self.emit(
                        Instr::Spawn {
                            target,
                            method: method.clone(),
                            callee,
                            args,
                            after,
                            deadline,
                            site,
                        },
                        span,
                    );
                }
                StmtKind::Await { future } => {
                    let f = self.resolve(future);
                    self.emit(Instr::Await(f), span);
                }
                StmtKind::Get { target, future } => {
                    let future = self.resolve(future);
                    let target = self.declare_target(target, span);
                    self.emit(Instr::Get { target, future }, span);
                }
                StmtKind::If {
                    cond,
                    then_block,
                    else_block,
                } => {
                    let cond = self.expr(cond);
                    let branch = self.emit(Instr::JumpUnless { cond, to: usize::MAX }, span);
                    self.block(then_block);
                    match else_block {
                        Some(e) => {
                            let skip = self.emit(Instr::Jump(usize::MAX), span);
                            let else_start = self.out.len();
                            self.patch(branch, else_start);
                            self.block(e);
                            let end = self.out.len();
                            self.patch(skip, end);
                        }
                        None => {
                            let end = self.out.len();
                            self.patch(branch, end);
                        }
                    }
                }
                StmtKind::While { cond, body } => {
                    let cond = self.expr(cond);
                    let head = self.emit(Instr::JumpUnless { cond, to: usize::MAX }, span);
                    self.block(body);
                    self.emit(Instr::Jump(head), span);
                    let end = self.out.len();
                    self.patch(head, end);
                }
                StmtKind::Cost(e) => {
                    let e = self.expr(e);
                    self.emit(Instr::Cost(e), span);
                }
                StmtKind::Hold { target, requests } => {
                    let target = self.declare_target(target, span);
                    self.emit(
                        Instr::Hold {
                            target,
                            requests: requests.clone(),
                        },
                        span,
                    );
                }
                StmtKind::Release(e) => {
                    let e = self.expr(e);
                    self.emit(Instr::Release(e), span);
                }
                StmtKind::Return(e) => {
                    let e = self.expr(e);
                    self.emit(Instr::Return(Some(e)), span);
                }
                StmtKind::New { target, class } => {
                    let target = self.declare_target(target, span);
                    let class = self.classes.iter().position(|c| c == class).expect("validated class");
                    self.emit(Instr::New { target, class }, span);
                }
            }
        }
        self.scopes.pop();
    }

    fn patch(&mut self, at: usize, to: usize) {
        match &mut self.out[at].0 {
            Instr::JumpUnless { to: t, .. } | Instr::Jump(t) => *t = to,
            _ => unreachable!("patching a non-jump"),
        }
    }
}
