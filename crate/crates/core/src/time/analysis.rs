//! Symbolic execution of method bodies into cost equations.
//!
//! Each method gets two closed forms: `sequential` (total work of the call and
//! everything it spawns, an upper bound on elapsed time since some task is
//! always working while `main` runs) and `span` (critical path to its return,
//! ignoring contention for actors and resources).

use std::collections::{BTreeSet, HashMap};

use super::bound::BoundExpr;
use super::TimeError;
use crate::lang::{
    walk_stmts, BinOp, Block, Builtin, Expr, ExprKind, Program, StmtKind, Type, UnOp,
};

const MAX_UNROLL: u32 = 10_000;

#[derive(Debug, Clone, PartialEq)]
enum Sv {
    Num(BoundExpr),
    Bool(bool),
    List { len: Option<BoundExpr>, futs: BTreeSet<usize> },
    /// Any of these futures.
    Fut(BTreeSet<usize>),
    /// Any of these classes.
    Obj(Vec<usize>),
    Unknown,
}

impl Sv {
    fn futs(&self) -> Option<&BTreeSet<usize>> {
        match self {
            Sv::Fut(f) | Sv::List { futs: f, .. } => Some(f),
            _ => None,
        }
    }
}

/// Closed forms for one method (or `main`).
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub sequential: BoundExpr,
    pub span: BoundExpr,
}

#[derive(Debug, Clone)]
struct State {
    t: BoundExpr,
    seq: BoundExpr,
    scopes: Vec<HashMap<String, Sv>>,
    returned: bool,
}

#[derive(Default)]
struct Ctx {
    /// Completion time of each future, relative to the task start.
    futs: Vec<BoundExpr>,
    /// `(t, seq)` at every `return`.
    exits: Vec<(BoundExpr, BoundExpr)>,
}

pub struct Analyzer<'p> {
    p: &'p Program,
    memo: HashMap<(usize, String), Summary>,
    stack: Vec<(usize, String)>,
    mutated: BTreeSet<(usize, String)>,
}

fn nonparam(line: u32) -> TimeError {
    TimeError::NonParametricCost { line }
}

fn assigned(b: &Block) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    walk_stmts(b, &mut |s| match &s.kind {
        StmtKind::Assign { target, .. } => {
            out.insert(target.clone());
        }
        StmtKind::AsyncCall { target, .. }
        | StmtKind::Get { target, .. }
        | StmtKind::Hold { target, .. }
        | StmtKind::New { target, .. } => {
            out.insert(target.name.clone());
        }
        _ => {}
    });
    out
}

fn has_work(b: &Block) -> bool {
    let mut found = false;
    walk_stmts(b, &mut |s| found |= matches!(s.kind, StmtKind::AsyncCall { .. } | StmtKind::Cost(_)));
    found
}

/// Number of top-level `v = <rhs>` statements and the rhs of the last one.
fn updates<'b>(b: &'b Block, v: &str) -> (usize, Option<&'b Expr>) {
    let mut n = 0;
    walk_stmts(b, &mut |s| {
        if let StmtKind::Assign { target, .. } = &s.kind {
            if target == v {
                n += 1;
            }
        }
    });
    let top = b.stmts.iter().rev().find_map(|s| match &s.kind {
        StmtKind::Assign { target, value } if target == v => Some(value),
        _ => None,
    });
    (n, top)
}

impl<'p> Analyzer<'p> {
    pub fn new(p: &'p Program) -> Self {
        let mut mutated = BTreeSet::new();
        for (ci, c) in p.classes.iter().enumerate() {
            for m in &c.methods {
                for name in assigned(&m.body) {
                    if c.field(&name).is_some() && !m.params.iter().any(|prm| prm.name == name) {
                        mutated.insert((ci, name));
                    }
                }
            }
        }
        Self {
            p,
            memo: HashMap::new(),
            stack: Vec::new(),
            mutated,
        }
    }

    /// Summary of `main`.
    pub fn main(&mut self) -> Result<Summary, TimeError> {
        let st = State {
            t: BoundExpr::zero(),
            seq: BoundExpr::zero(),
            scopes: vec![HashMap::new()],
            returned: false,
        };
        self.run(&self.p.main, st)
    }

    /// Summary of one method of one class, memoised.
    pub fn method(&mut self, class: usize, name: &str) -> Result<Summary, TimeError> {
        let key = (class, name.to_string());
        if let Some(s) = self.memo.get(&key) {
            return Ok(s.clone());
        }
        if self.stack.contains(&key) {
            let cycle = self
                .stack
                .iter()
                .skip_while(|k| **k != key)
                .map(|(c, m)| format!("{}.{m}", self.p.classes[*c].name))
                .collect::<Vec<_>>()
                .join(" -> ");
            return Err(TimeError::UnsupportedRecursion { cycle });
        }
        self.stack.push(key.clone());
        let c = &self.p.classes[class];
        let m = c.method(name).expect("validated method");
        let mut fields = HashMap::new();
        let mut st = State {
            t: BoundExpr::zero(),
            seq: BoundExpr::zero(),
            scopes: vec![HashMap::new()],
            returned: false,
        };
        for f in &c.fields {
            let v = if self.mutated.contains(&(class, f.name.clone())) {
                Sv::Unknown
            } else {
                match &f.init {
                    Some(e) => self.eval(e, &st)?,
                    None => self.default(&f.ty),
                }
            };
            fields.insert(f.name.clone(), v.clone());
            st.scopes[0].insert(f.name.clone(), v);
        }
        let mut params = HashMap::new();
        for prm in &m.params {
            params.insert(prm.name.clone(), self.default(&prm.ty));
        }
        st.scopes = vec![fields, params];
        let r = self.run(&m.body, st);
        self.stack.pop();
        let r = r?;
        self.memo.insert(key, r.clone());
        Ok(r)
    }

    fn run(&mut self, b: &Block, mut st: State) -> Result<Summary, TimeError> {
        let mut cx = Ctx::default();
        self.block(b, &mut st, &mut cx)?;
        let (mut span, mut seq) = if st.returned {
            (None, None)
        } else {
            (Some(st.t), Some(st.seq))
        };
        for (t, s) in cx.exits {
            span = Some(match span {
                Some(x) => BoundExpr::max(x, t),
                None => t,
            });
            seq = Some(match seq {
                Some(x) => BoundExpr::max(x, s),
                None => s,
            });
        }
        Ok(Summary {
            sequential: seq.unwrap_or_else(BoundExpr::zero),
            span: span.unwrap_or_else(BoundExpr::zero),
        })
    }

    /// Abstract value of a declared-but-unknown variable of type `ty`.
    fn default(&self, ty: &Type) -> Sv {
        match ty.name.as_str() {
            "Int" | "Rat" | "Bool" => Sv::Unknown,
            name => {
                let classes: Vec<usize> = self
                    .p
                    .classes
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| c.name == name || c.implements == name)
                    .map(|(i, _)| i)
                    .collect();
                if classes.is_empty() {
                    Sv::Unknown
                } else {
                    Sv::Obj(classes)
                }
            }
        }
    }

    fn lookup(st: &State, name: &str) -> Sv {
        st.scopes
            .iter()
            .rev()
            .find_map(|s| s.get(name).cloned())
            .unwrap_or(Sv::Unknown)
    }

    fn set(st: &mut State, name: &str, v: Sv) {
        for s in st.scopes.iter_mut().rev() {
            if let Some(slot) = s.get_mut(name) {
                *slot = v;
                return;
            }
        }
        st.scopes.last_mut().unwrap().insert(name.to_string(), v);
    }

    fn declare(st: &mut State, name: &str, v: Sv) {
        st.scopes.last_mut().unwrap().insert(name.to_string(), v);
    }

    fn bind(st: &mut State, b: &crate::lang::Binding, v: Sv) {
        if b.decl.is_some() {
            Self::declare(st, &b.name, v);
        } else {
            Self::set(st, &b.name, v);
        }
    }

    fn eval(&self, e: &Expr, st: &State) -> Result<Sv, TimeError> {
        use BoundExpr as B;
        Ok(match &e.kind {
            ExprKind::Int(i) => Sv::Num(B::int(*i as i128)),
            ExprKind::Bool(b) => Sv::Bool(*b),
            ExprKind::Nil => Sv::List {
                len: Some(B::zero()),
                futs: BTreeSet::new(),
            },
            ExprKind::Param(p) => Sv::Num(B::Param(*p)),
            ExprKind::Var(v) => Self::lookup(st, v),
            ExprKind::Unary(UnOp::Neg, a) => match self.eval(a, st)? {
                Sv::Num(x) => Sv::Num(B::mul(B::int(-1), x)),
                _ => Sv::Unknown,
            },
            ExprKind::Unary(UnOp::Not, a) => match self.eval(a, st)? {
                Sv::Bool(b) => Sv::Bool(!b),
                _ => Sv::Unknown,
            },
            ExprKind::Binary(op, a, b) => {
                let (l, r) = (self.eval(a, st)?, self.eval(b, st)?);
                match (op, l, r) {
                    (BinOp::Add, Sv::Num(x), Sv::Num(y)) => Sv::Num(B::add(x, y)),
                    (BinOp::Sub, Sv::Num(x), Sv::Num(y)) => Sv::Num(B::sub(x, y)),
                    (BinOp::Mul, Sv::Num(x), Sv::Num(y)) => Sv::Num(B::mul(x, y)),
                    (BinOp::Div, Sv::Num(x), Sv::Num(y)) => Sv::Num(B::div(x, y)),
                    (BinOp::And, Sv::Bool(x), Sv::Bool(y)) => Sv::Bool(x && y),
                    (BinOp::Or, Sv::Bool(x), Sv::Bool(y)) => Sv::Bool(x || y),
                    (op, Sv::Num(B::Const(x)), Sv::Num(B::Const(y))) => match op {
                        BinOp::Eq => Sv::Bool(x == y),
                        BinOp::Ne => Sv::Bool(x != y),
                        BinOp::Lt => Sv::Bool(x < y),
                        BinOp::Le => Sv::Bool(x <= y),
                        BinOp::Gt => Sv::Bool(x > y),
                        BinOp::Ge => Sv::Bool(x >= y),
                        _ => Sv::Unknown,
                    },
                    (BinOp::Eq, Sv::Bool(x), Sv::Bool(y)) => Sv::Bool(x == y),
                    (BinOp::Ne, Sv::Bool(x), Sv::Bool(y)) => Sv::Bool(x != y),
                    _ => Sv::Unknown,
                }
            }
            ExprKind::Call(b, args) => {
                let vals = args.iter().map(|a| self.eval(a, st)).collect::<Result<Vec<_>, _>>()?;
                match (b, &vals[..]) {
                    (Builtin::Truncate, [Sv::Num(x)]) => Sv::Num(B::trunc(x.clone())),
                    (Builtin::ResEfficiency, [Sv::Num(x)]) => Sv::Num(x.clone()),
                    (Builtin::AppendRight, [Sv::List { len, futs }, x]) => {
                        let mut futs = futs.clone();
                        if let Some(f) = x.futs() {
                            futs.extend(f);
                        }
                        Sv::List {
                            len: len.clone().map(|l| B::add(l, B::int(1))),
                            futs,
                        }
                    }
                    (Builtin::Tail, [Sv::List { len, futs }]) => Sv::List {
                        len: len.clone().map(|l| B::add(l, B::int(-1))),
                        futs: futs.clone(),
                    },
                    (Builtin::Head, [Sv::List { futs, .. }]) if !futs.is_empty() => Sv::Fut(futs.clone()),
                    (Builtin::IsEmpty, [Sv::List { len: Some(B::Const(l)), .. }]) => Sv::Bool(l.to_integer() <= 0),
                    _ => Sv::Unknown,
                }
            }
            ExprKind::List(items) | ExprKind::Set(items) => {
                let mut futs = BTreeSet::new();
                for i in items {
                    if let Some(f) = self.eval(i, st)?.futs() {
                        futs.extend(f);
                    }
                }
                Sv::List {
                    len: Some(B::int(items.len() as i128)),
                    futs,
                }
            }
        })
    }

    /// Latest completion among `futs`, or among every future seen when unknown.
    fn join(cx: &Ctx, futs: Option<&BTreeSet<usize>>) -> Option<BoundExpr> {
        let all: Vec<usize> = match futs {
            Some(f) => f.iter().copied().collect(),
            None => (0..cx.futs.len()).collect(),
        };
        all.into_iter().map(|f| cx.futs[f].clone()).reduce(BoundExpr::max)
    }

    fn block(&mut self, b: &Block, st: &mut State, cx: &mut Ctx) -> Result<(), TimeError> {
        st.scopes.push(HashMap::new());
        let r = self.stmts(b, st, cx);
        st.scopes.pop();
        r
    }

    fn stmts(&mut self, b: &Block, st: &mut State, cx: &mut Ctx) -> Result<(), TimeError> {
        for s in &b.stmts {
            if st.returned {
                break;
            }
            let line = s.span.line;
            match &s.kind {
                StmtKind::VarDecl { name, ty, init } => {
                    let v = match init {
                        Some(e) => self.eval(e, st)?,
                        None => match ty.name.as_str() {
                            "List" | "Set" => Sv::List {
                                len: Some(BoundExpr::zero()),
                                futs: BTreeSet::new(),
                            },
                            _ => Sv::Unknown,
                        },
                    };
                    Self::declare(st, name, v);
                }
                StmtKind::Assign { target, value } => {
                    let v = self.eval(value, st)?;
                    Self::set(st, target, v);
                }
                StmtKind::AsyncCall {
                    target,
                    method,
                    callee,
                    after,
                    ..
                } => {
                    let classes = match self.eval(callee, st)? {
                        Sv::Obj(c) => c,
                        _ => self
                            .p
                            .classes
                            .iter()
                            .enumerate()
                            .filter(|(_, c)| c.method(method).is_some())
                            .map(|(i, _)| i)
                            .collect(),
                    };
                    let mut callee_sum: Option<Summary> = None;
                    for c in classes {
                        if self.p.classes[c].method(method).is_none() {
                            continue;
                        }
                        let s = self.method(c, method)?;
                        callee_sum = Some(match callee_sum {
                            Some(a) => Summary {
                                sequential: BoundExpr::max(a.sequential, s.sequential),
                                span: BoundExpr::max(a.span, s.span),
                            },
                            None => s,
                        });
                    }
                    let sum = callee_sum.unwrap_or(Summary {
                        sequential: BoundExpr::zero(),
                        span: BoundExpr::zero(),
                    });
                    let mut start = st.t.clone();
                    for a in after {
                        let v = Self::lookup(st, a);
                        if let Some(t) = Self::join(cx, v.futs()) {
                            start = BoundExpr::max(start, t);
                        }
                    }
                    cx.futs.push(BoundExpr::add(start, sum.span));
                    st.seq = BoundExpr::add(st.seq.clone(), sum.sequential);
                    let id = cx.futs.len() - 1;
                    Self::bind(st, target, Sv::Fut(BTreeSet::from([id])));
                }
                StmtKind::Await { future } => {
                    let v = Self::lookup(st, future);
                    if let Some(t) = Self::join(cx, v.futs()) {
                        st.t = BoundExpr::max(st.t.clone(), t);
                    }
                }
                StmtKind::Get { target, future } => {
                    let v = Self::lookup(st, future);
                    if let Some(t) = Self::join(cx, v.futs()) {
                        st.t = BoundExpr::max(st.t.clone(), t);
                    }
                    Self::bind(st, target, Sv::Unknown);
                }
                StmtKind::Cost(e) => match self.eval(e, st)? {
                    Sv::Num(x) => {
                        st.t = BoundExpr::add(st.t.clone(), x.clone());
                        st.seq = BoundExpr::add(st.seq.clone(), x);
                    }
                    _ => return Err(nonparam(line)),
                },
                StmtKind::Hold { target, .. } => Self::bind(st, target, Sv::Unknown),
                StmtKind::Release(_) => {}
                StmtKind::Return(_) => {
                    cx.exits.push((st.t.clone(), st.seq.clone()));
                    st.returned = true;
                }
                StmtKind::New { target, class } => {
                    let idx = self.p.classes.iter().position(|c| &c.name == class).expect("validated");
                    Self::bind(st, target, Sv::Obj(vec![idx]));
                }
                StmtKind::If {
                    cond,
                    then_block,
                    else_block,
                } => match self.eval(cond, st)? {
                    Sv::Bool(true) => self.block(then_block, st, cx)?,
                    Sv::Bool(false) => {
                        if let Some(e) = else_block {
                            self.block(e, st, cx)?;
                        }
                    }
                    _ => {
                        let mut a = st.clone();
                        self.block(then_block, &mut a, cx)?;
                        let mut b = st.clone();
                        if let Some(e) = else_block {
                            self.block(e, &mut b, cx)?;
                        }
                        *st = merge(a, b);
                    }
                },
                StmtKind::While { cond, body } => self.while_loop(cond, body, line, st, cx)?,
            }
        }
        Ok(())
    }

    fn while_loop(&mut self, cond: &Expr, body: &Block, line: u32, st: &mut State, cx: &mut Ctx) -> Result<(), TimeError> {
        // Unroll while the condition is decidable.
        let mut n = 0;
        loop {
            match self.eval(cond, st)? {
                Sv::Bool(false) => return Ok(()),
                Sv::Bool(true) if n < MAX_UNROLL => {
                    n += 1;
                    self.block(body, st, cx)?;
                    if st.returned {
                        return Ok(());
                    }
                }
                Sv::Bool(true) => return Err(TimeError::UnboundedLoop { line }),
                _ => break,
            }
        }
        let vars = assigned(body);
        let count = self.iterations(cond, body, st);
        let work = has_work(body);
        if work && count.is_none() {
            return Err(TimeError::UnboundedLoop { line });
        }

        // One iteration over unknown state, with list variables as deltas.
        let mut it = st.clone();
        if work {
            it.t = BoundExpr::zero();
            it.seq = BoundExpr::zero();
        }
        let mut lists = Vec::new();
        for v in &vars {
            let before = Self::lookup(st, v);
            if let (Sv::List { len: Some(_), .. }, Some(_)) = (&before, &count) {
                lists.push((v.clone(), before));
                let delta = Sv::List {
                    len: Some(BoundExpr::zero()),
                    futs: BTreeSet::new(),
                };
                Self::set(&mut it, v, delta);
            } else {
                Self::set(&mut it, v, Sv::Unknown);
            }
        }
        let first_new = cx.futs.len();
        let exits_before = cx.exits.len();
        self.block(body, &mut it, cx)?;
        match &count {
            // Only joins happen: the loop ends no later than its latest join.
            None => st.t = BoundExpr::max(st.t.clone(), it.t.clone()),
            Some(_) if !work => st.t = BoundExpr::max(st.t.clone(), it.t.clone()),
            Some(count) => {
                let delta = it.t.clone();
                let last_start = BoundExpr::add(
                    st.t.clone(),
                    BoundExpr::mul(
                        BoundExpr::max(BoundExpr::zero(), BoundExpr::add(count.clone(), BoundExpr::int(-1))),
                        delta.clone(),
                    ),
                );
                for f in cx.futs.iter_mut().skip(first_new) {
                    *f = BoundExpr::add(last_start.clone(), f.clone());
                }
                for e in cx.exits.iter_mut().skip(exits_before) {
                    e.0 = BoundExpr::add(last_start.clone(), e.0.clone());
                    e.1 = BoundExpr::add(st.seq.clone(), BoundExpr::mul(count.clone(), e.1.clone()));
                }
                st.t = BoundExpr::add(st.t.clone(), BoundExpr::mul(count.clone(), delta));
                st.seq = BoundExpr::add(st.seq.clone(), BoundExpr::mul(count.clone(), it.seq.clone()));
            }
        }
        for v in &vars {
            Self::set(st, v, Sv::Unknown);
        }
        if let Some(count) = count {
            for (v, before) in lists {
                if let (Sv::List { len: Some(l0), futs: f0 }, Sv::List { len: Some(BoundExpr::Const(d)), futs: fb }) =
                    (before, Self::lookup(&it, &v))
                {
                    let mut futs = f0;
                    futs.extend(fb);
                    let len = BoundExpr::add(l0, BoundExpr::mul(count.clone(), BoundExpr::Const(d)));
                    Self::set(st, &v, Sv::List { len: Some(len), futs });
                }
            }
        }
        Ok(())
    }

    /// Iteration count for `v <= B` / `v < B` with a constant step, or a list drained by `tail`.
    fn iterations(&self, cond: &Expr, body: &Block, st: &State) -> Option<BoundExpr> {
        let vars = assigned(body);
        match &cond.kind {
            ExprKind::Binary(op @ (BinOp::Le | BinOp::Lt | BinOp::Ge | BinOp::Gt), a, b) => {
                let (v, bound, strict) = match (op, &a.kind, &b.kind) {
                    (BinOp::Le | BinOp::Lt, ExprKind::Var(v), _) => (v, b, *op == BinOp::Lt),
                    (BinOp::Ge | BinOp::Gt, _, ExprKind::Var(v)) => (v, a, *op == BinOp::Gt),
                    _ => return None,
                };
                let mut invariant = true;
                walk_expr(bound, &mut |e| {
                    if let ExprKind::Var(x) = &e.kind {
                        invariant &= !vars.contains(x);
                    }
                });
                if !invariant {
                    return None;
                }
                let (n, rhs) = updates(body, v);
                let step = match rhs.map(|r| &r.kind) {
                    Some(ExprKind::Binary(BinOp::Add, x, c)) | Some(ExprKind::Binary(BinOp::Add, c, x))
                        if n == 1 && matches!(&x.kind, ExprKind::Var(y) if y == v) =>
                    {
                        match c.kind {
                            ExprKind::Int(c) if c > 0 => c as i128,
                            _ => return None,
                        }
                    }
                    _ => return None,
                };
                let (Sv::Num(v0), Sv::Num(limit)) = (Self::lookup(st, v), self.eval(bound, st).ok()?) else {
                    return None;
                };
                // Integer counter: v0, v0+step, ... while v <= limit (or < limit).
                let top = if strict {
                    BoundExpr::add(limit, BoundExpr::int(-1))
                } else {
                    limit
                };
                let span = BoundExpr::sub(top, v0);
                let per = if step == 1 {
                    span
                } else {
                    BoundExpr::trunc(BoundExpr::div(span, BoundExpr::int(step)))
                };
                Some(BoundExpr::max(BoundExpr::zero(), BoundExpr::add(per, BoundExpr::int(1))))
            }
            ExprKind::Unary(UnOp::Not, inner) => match &inner.kind {
                ExprKind::Call(Builtin::IsEmpty, args) => {
                    let ExprKind::Var(l) = &args[0].kind else { return None };
                    let (n, rhs) = updates(body, l);
                    let drains = matches!(rhs.map(|r| &r.kind),
                        Some(ExprKind::Call(Builtin::Tail, a)) if matches!(&a[0].kind, ExprKind::Var(y) if y == l));
                    match Self::lookup(st, l) {
                        Sv::List { len: Some(len), .. } if n == 1 && drains => Some(len),
                        _ => None,
                    }
                }
                _ => None,
            },
            _ => None,
        }
    }
}

fn walk_expr(e: &Expr, f: &mut impl FnMut(&Expr)) {
    f(e);
    match &e.kind {
        ExprKind::Unary(_, a) => walk_expr(a, f),
        ExprKind::Binary(_, a, b) => {
            walk_expr(a, f);
            walk_expr(b, f);
        }
        ExprKind::Call(_, xs) | ExprKind::List(xs) | ExprKind::Set(xs) => xs.iter().for_each(|x| walk_expr(x, f)),
        _ => {}
    }
}

fn merge(a: State, b: State) -> State {
    match (a.returned, b.returned) {
        (true, false) => b,
        (false, true) | (true, true) => a,
        (false, false) => {
            let mut out = a;
            out.t = BoundExpr::max(out.t, b.t);
            out.seq = BoundExpr::max(out.seq, b.seq);
            for (sa, sb) in out.scopes.iter_mut().zip(&b.scopes) {
                for (k, v) in sa.iter_mut() {
                    let other = sb.get(k);
                    if other == Some(v) {
                        continue;
                    }
                    *v = match (&*v, other) {
                        (Sv::Fut(x), Some(Sv::Fut(y))) => Sv::Fut(x.union(y).copied().collect()),
                        _ => Sv::Unknown,
                    };
                }
            }
            out
        }
    }
}
