//! Schedule-independent upper bound on simultaneous holds.
//!
//! The program is executed abstractly: every value the model can compute
//! without `random`, task results or mutable fields is known, everything else
//! is unknown. Each spawned call becomes a node; unknown conditions explore
//! both arms, and nodes created in opposite arms of the same branch are
//! mutually exclusive. Ordering facts (`after`, joins before a spawn) give a
//! happens-before relation between task start and end events. Two nodes may
//! hold together unless one ends before the other starts; the bound is the
//! heaviest set of pairwise compatible nodes.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::lang::{
    walk_stmts, Block, BinOp, Builtin, ClassDecl, Expr, ExprKind, FutureId, ObjectId, Program, StmtKind, Value,
};
use crate::sim::ops;

use super::PeakError;

const MAX_ITERATIONS: u32 = 100_000;
const MAX_DEPTH: usize = 64;
const MAX_NODES: usize = 4_096;

#[derive(Debug, Clone, PartialEq)]
enum Av {
    K(Value),
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Ev {
    Start(usize),
    End(usize),
}

#[derive(Debug, Clone, Default)]
struct Node {
    /// Branch choices `(if instance, arm)` under which the node exists.
    path: Vec<(u32, bool)>,
    /// Units requested per category over the heaviest path of the body.
    weight: Vec<u32>,
    /// Some path finishes with more holds than releases.
    leaky: bool,
}

#[derive(Debug, Clone)]
struct Frame {
    node: usize,
    object: Option<usize>,
    scopes: Vec<HashMap<String, Av>>,
    /// Nodes known to have ended at this point.
    joined: BTreeSet<usize>,
    holds: u32,
    releases: u32,
    weight: Vec<u32>,
    path: Vec<(u32, bool)>,
    returned: bool,
}

/// What the finished paths of a body guarantee.
#[derive(Debug, Clone, Default)]
struct Exit {
    joined: Option<BTreeSet<usize>>,
    leaky: bool,
    weight: Vec<u32>,
}

struct Analyzer<'a> {
    p: &'a Program,
    categories: &'a [String],
    objects: Vec<(usize, HashMap<String, Av>)>,
    mutated: HashSet<(String, String)>,
    nodes: Vec<Node>,
    edges: Vec<(Ev, Ev)>,
    branches: u32,
    depth: usize,
}

fn unsupported(line: u32, message: impl Into<String>) -> PeakError {
    PeakError::Unsupported {
        line,
        message: message.into(),
    }
}

fn contains_effects(b: &Block) -> bool {
    let mut found = false;
    walk_stmts(b, &mut |s| {
        found |= matches!(s.kind, StmtKind::AsyncCall { .. } | StmtKind::Hold { .. });
    });
    found
}

fn assigned_names(b: &Block) -> Vec<String> {
    let mut out = Vec::new();
    walk_stmts(b, &mut |s| match &s.kind {
        StmtKind::Assign { target, .. } => out.push(target.clone()),
        StmtKind::AsyncCall { target, .. } | StmtKind::Get { target, .. } | StmtKind::Hold { target, .. } | StmtKind::New { target, .. }
            if target.decl.is_none() =>
        {
            out.push(target.name.clone())
        }
        _ => {}
    });
    out
}

impl<'a> Analyzer<'a> {
    fn class(&self, idx: usize) -> &'a ClassDecl {
        &self.p.classes[idx]
    }

    fn lookup(&self, f: &Frame, name: &str) -> Av {
        for s in f.scopes.iter().rev() {
            if let Some(v) = s.get(name) {
                return v.clone();
            }
        }
        f.object
            .and_then(|o| self.objects[o].1.get(name).cloned())
            .unwrap_or(Av::Unknown)
    }

    fn set(&mut self, f: &mut Frame, name: &str, v: Av) {
        for s in f.scopes.iter_mut().rev() {
            if let Some(slot) = s.get_mut(name) {
                *slot = v;
                return;
            }
        }
        // Field writes are already modelled as unknown.
    }

    fn declare(f: &mut Frame, name: &str, v: Av) {
        f.scopes.last_mut().unwrap().insert(name.to_string(), v);
    }

    fn eval(&self, e: &Expr, f: &Frame) -> Result<Av, PeakError> {
        let line = e.span.line;
        let known = |r: Result<Value, String>| r.map(Av::K).map_err(|m| unsupported(line, m));
        Ok(match &e.kind {
            ExprKind::Int(i) => Av::K(Value::int(*i as i128)),
            ExprKind::Bool(b) => Av::K(Value::Bool(*b)),
            ExprKind::Nil => Av::K(Value::List(Vec::new())),
            ExprKind::Var(v) => self.lookup(f, v),
            ExprKind::Param(_) => Av::Unknown,
            ExprKind::Unary(op, a) => match self.eval(a, f)? {
                Av::K(v) => known(ops::unop(*op, v))?,
                Av::Unknown => Av::Unknown,
            },
            ExprKind::Binary(op, a, b) => {
                let l = self.eval(a, f)?;
                if matches!(op, BinOp::And | BinOp::Or) {
                    if let Av::K(Value::Bool(x)) = &l {
                        if *x == (*op == BinOp::Or) {
                            return Ok(l);
                        }
                    }
                }
                match (l, self.eval(b, f)?) {
                    (Av::K(l), Av::K(r)) => known(ops::binop(*op, l, r))?,
                    _ => Av::Unknown,
                }
            }
            ExprKind::List(items) | ExprKind::Set(items) => {
                let mut vals = Vec::new();
                for i in items {
                    match self.eval(i, f)? {
                        Av::K(v) => vals.push(v),
                        Av::Unknown => return Ok(Av::Unknown),
                    }
                }
                Av::K(if matches!(e.kind, ExprKind::List(_)) {
                    Value::List(vals)
                } else {
                    Value::Set(vals)
                })
            }
            ExprKind::Call(Builtin::Random, _) => Av::Unknown,
            ExprKind::Call(b, args) => {
                let mut vals = Vec::new();
                for a in args {
                    match self.eval(a, f)? {
                        Av::K(v) => vals.push(v),
                        Av::Unknown => return Ok(Av::Unknown),
                    }
                }
                known(ops::builtin(*b, vals))?
            }
        })
    }

    fn new_object(&mut self, class: usize) -> Result<usize, PeakError> {
        let c = self.class(class);
        let id = self.objects.len();
        self.objects.push((class, HashMap::new()));
        let mut frame = Frame {
            node: 0,
            object: Some(id),
            scopes: vec![HashMap::new()],
            joined: BTreeSet::new(),
            holds: 0,
            releases: 0,
            weight: Vec::new(),
            path: Vec::new(),
            returned: false,
        };
        for fd in &c.fields {
            let v = if self.mutated.contains(&(c.name.clone(), fd.name.clone())) {
                Av::Unknown
            } else {
                match &fd.init {
                    Some(e) => self.eval(e, &frame)?,
                    None => Av::K(crate::sim::compile::default_value(&fd.ty)),
                }
            };
            self.objects[id].1.insert(fd.name.clone(), v.clone());
            Self::declare(&mut frame, &fd.name, v);
        }
        Ok(id)
    }

    fn future(&self, f: &Frame, name: &str) -> Option<usize> {
        match self.lookup(f, name) {
            Av::K(Value::Fut(FutureId(n))) => Some(n as usize),
            _ => None,
        }
    }

    fn spawn(
        &mut self,
        f: &Frame,
        method: &str,
        callee: &Expr,
        args: &[Expr],
        after: &[String],
        line: u32,
    ) -> Result<usize, PeakError> {
        let Av::K(Value::Obj(ObjectId(obj))) = self.eval(callee, f)? else {
            return Err(unsupported(line, format!("cannot resolve the callee of `{method}`")));
        };
        let class = self.objects[obj as usize].0;
        let decl = self
            .class(class)
            .method(method)
            .ok_or_else(|| unsupported(line, format!("no method `{method}`")))?;
        if self.depth >= MAX_DEPTH || self.nodes.len() >= MAX_NODES {
            return Err(unsupported(line, "call nesting or task count is too large to bound"));
        }
        let n = self.nodes.len();
        self.nodes.push(Node {
            path: f.path.clone(),
            weight: vec![0; self.categories.len()],
            leaky: false,
        });
        self.edges.push((Ev::Start(f.node), Ev::Start(n)));
        for &j in &f.joined {
            self.edges.push((Ev::End(j), Ev::Start(n)));
        }
        for a in after {
            if let Some(d) = self.future(f, a) {
                self.edges.push((Ev::End(d), Ev::Start(n)));
            }
        }
        let mut scope = HashMap::new();
        for (prm, a) in decl.params.iter().zip(args) {
            scope.insert(prm.name.clone(), self.eval(a, f)?);
        }
        let mut child = Frame {
            node: n,
            object: Some(obj as usize),
            scopes: vec![scope],
            joined: BTreeSet::new(),
            holds: 0,
            releases: 0,
            weight: vec![0; self.categories.len()],
            path: f.path.clone(),
            returned: false,
        };
        self.depth += 1;
        let mut exit = Exit::default();
        self.block(&decl.body, &mut child, &mut exit)?;
        self.depth -= 1;
        if !child.returned {
            self.finish(&child, &mut exit);
        }
        for j in exit.joined.unwrap_or_default() {
            self.edges.push((Ev::End(j), Ev::End(n)));
        }
        self.nodes[n].weight = exit.weight;
        self.nodes[n].leaky = exit.leaky;
        Ok(n)
    }

    fn finish(&self, f: &Frame, exit: &mut Exit) {
        exit.joined = Some(match exit.joined.take() {
            Some(j) => j.intersection(&f.joined).copied().collect(),
            None => f.joined.clone(),
        });
        exit.leaky |= f.holds > f.releases;
        if exit.weight.len() < f.weight.len() {
            exit.weight.resize(f.weight.len(), 0);
        }
        for (e, w) in exit.weight.iter_mut().zip(&f.weight) {
            *e = (*e).max(*w);
        }
    }

    fn merge(a: Frame, b: Frame) -> Frame {
        match (a.returned, b.returned) {
            (true, true) | (false, true) => {
                let mut out = a;
                if b.returned && out.returned {
                    out.returned = true;
                }
                out
            }
            (true, false) => b,
            (false, false) => {
                let mut out = a;
                for (sa, sb) in out.scopes.iter_mut().zip(&b.scopes) {
                    for (k, v) in sa.iter_mut() {
                        if sb.get(k) != Some(v) {
                            *v = Av::Unknown;
                        }
                    }
                }
                out.joined = out.joined.intersection(&b.joined).copied().collect();
                out.holds = out.holds.max(b.holds);
                out.releases = out.releases.min(b.releases);
                for (x, y) in out.weight.iter_mut().zip(&b.weight) {
                    *x = (*x).max(*y);
                }
                out
            }
        }
    }

    fn block(&mut self, b: &Block, f: &mut Frame, exit: &mut Exit) -> Result<(), PeakError> {
        f.scopes.push(HashMap::new());
        let r = self.stmts(b, f, exit);
        f.scopes.pop();
        r
    }

    fn stmts(&mut self, b: &Block, f: &mut Frame, exit: &mut Exit) -> Result<(), PeakError> {
        for s in &b.stmts {
            if f.returned {
                break;
            }
            let line = s.span.line;
            match &s.kind {
                StmtKind::VarDecl { name, init, ty } => {
                    let v = match init {
                        Some(e) => self.eval(e, f)?,
                        None => Av::K(crate::sim::compile::default_value(ty)),
                    };
                    Self::declare(f, name, v);
                }
                StmtKind::Assign { target, value } => {
                    let v = self.eval(value, f)?;
                    self.set(f, target, v);
                }
                StmtKind::AsyncCall {
                    target,
                    method,
                    callee,
                    args,
                    after,
                    ..
                } => {
                    let n = self.spawn(f, method, callee, args, after, line)?;
                    self.bind(f, target, Av::K(Value::Fut(FutureId(n as u32))));
                }
                StmtKind::Await { future } => {
                    if let Some(n) = self.future(f, future) {
                        f.joined.insert(n);
                    }
                }
                StmtKind::Get { target, future } => {
                    if let Some(n) = self.future(f, future) {
                        f.joined.insert(n);
                    }
                    self.bind(f, target, Av::Unknown);
                }
                StmtKind::Cost(_) => {}
                StmtKind::Hold { target, requests } => {
                    for r in requests {
                        if let Some(c) = self.categories.iter().position(|c| c == &r.category) {
                            f.weight[c] += 1;
                        }
                    }
                    f.holds += 1;
                    self.bind(f, target, Av::Unknown);
                }
                StmtKind::Release(_) => f.releases += 1,
                StmtKind::Return(_) => {
                    self.finish(f, exit);
                    f.returned = true;
                }
                StmtKind::New { target, class } => {
                    let idx = self.p.classes.iter().position(|c| &c.name == class).expect("validated");
                    let o = self.new_object(idx)?;
                    self.bind(f, target, Av::K(Value::Obj(ObjectId(o as u32))));
                }
                StmtKind::If {
                    cond,
                    then_block,
                    else_block,
                } => match self.eval(cond, f)? {
                    Av::K(Value::Bool(true)) => self.block(then_block, f, exit)?,
                    Av::K(Value::Bool(false)) => {
                        if let Some(e) = else_block {
                            self.block(e, f, exit)?;
                        }
                    }
                    Av::K(v) => return Err(unsupported(line, format!("condition is a {}", v.type_name()))),
                    Av::Unknown => {
                        let id = self.branches;
                        self.branches += 1;
                        let base = f.path.clone();
                        let mut a = f.clone();
                        a.path.push((id, true));
                        self.block(then_block, &mut a, exit)?;
                        let mut b = f.clone();
                        b.path.push((id, false));
                        if let Some(e) = else_block {
                            self.block(e, &mut b, exit)?;
                        }
                        *f = Self::merge(a, b);
                        f.path = base;
                    }
                },
                StmtKind::While { cond, body } => {
                    let mut iterations = 0;
                    loop {
                        match self.eval(cond, f)? {
                            Av::K(Value::Bool(true)) => {
                                iterations += 1;
                                if iterations > MAX_ITERATIONS {
                                    return Err(PeakError::UnboundedLoop { line });
                                }
                                self.block(body, f, exit)?;
                                if f.returned {
                                    break;
                                }
                            }
                            Av::K(Value::Bool(false)) => break,
                            Av::K(v) => return Err(unsupported(line, format!("condition is a {}", v.type_name()))),
                            Av::Unknown => {
                                if contains_effects(body) {
                                    return Err(PeakError::UnboundedLoop { line });
                                }
                                for name in assigned_names(body) {
                                    self.set(f, &name, Av::Unknown);
                                }
                                break;
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn bind(&mut self, f: &mut Frame, b: &crate::lang::Binding, v: Av) {
        if b.decl.is_some() {
            Self::declare(f, &b.name, v);
        } else {
            self.set(f, &b.name, v);
        }
    }
}

/// Upper bound per category, in `categories` order, before clamping to capacity.
pub fn static_bound(p: &Program, categories: &[String]) -> Result<Vec<u32>, PeakError> {
    let mut mutated = HashSet::new();
    for c in &p.classes {
        for m in &c.methods {
            for name in assigned_names(&m.body) {
                let shadowed = m.params.iter().any(|prm| prm.name == name);
                if c.field(&name).is_some() && !shadowed {
                    mutated.insert((c.name.clone(), name));
                }
            }
        }
    }
    let mut a = Analyzer {
        p,
        categories,
        objects: Vec::new(),
        mutated,
        nodes: vec![Node {
            weight: vec![0; categories.len()],
            ..Node::default()
        }],
        edges: Vec::new(),
        branches: 0,
        depth: 0,
    };
    let mut main = Frame {
        node: 0,
        object: None,
        scopes: vec![HashMap::new()],
        joined: BTreeSet::new(),
        holds: 0,
        releases: 0,
        weight: vec![0; categories.len()],
        path: Vec::new(),
        returned: false,
    };
    let mut exit = Exit::default();
    a.block(&p.main, &mut main, &mut exit)?;
    a.finish(&main, &mut exit);
    a.nodes[0].weight = exit.weight;
    a.nodes[0].leaky = true;

    let n = a.nodes.len();
    let idx = |e: Ev| match e {
        Ev::Start(i) => 2 * i,
        Ev::End(i) => 2 * i + 1,
    };
    // reach[x] = events known to happen no earlier than x.
    let mut succ = vec![Vec::new(); 2 * n];
    for i in 0..n {
        succ[idx(Ev::Start(i))].push(idx(Ev::End(i)));
    }
    for &(x, y) in &a.edges {
        succ[idx(x)].push(idx(y));
    }
    let reach: Vec<Vec<bool>> = (0..2 * n)
        .map(|s| {
            let mut seen = vec![false; 2 * n];
            let mut stack = vec![s];
            while let Some(x) = stack.pop() {
                for &y in &succ[x] {
                    if !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
            seen
        })
        .collect();
    let before = |u: usize, v: usize| !a.nodes[u].leaky && reach[idx(Ev::End(u))][idx(Ev::Start(v))];
    let exclusive = |u: usize, v: usize| {
        a.nodes[u]
            .path
            .iter()
            .any(|(b, arm)| a.nodes[v].path.iter().any(|(b2, arm2)| b == b2 && arm != arm2))
    };
    let compatible = |u: usize, v: usize| !before(u, v) && !before(v, u) && !exclusive(u, v);

    Ok((0..categories.len())
        .map(|c| {
            let mut cands: Vec<usize> = (0..n).filter(|&i| a.nodes[i].weight[c] > 0).collect();
            cands.sort_by_key(|&i| std::cmp::Reverse(a.nodes[i].weight[c]));
            let w: Vec<u32> = cands.iter().map(|&i| a.nodes[i].weight[c]).collect();
            let mut best = 0;
            clique(&cands, &w, &compatible, 0, &mut Vec::new(), 0, &mut best);
            best
        })
        .collect())
}

fn clique(
    cands: &[usize],
    w: &[u32],
    ok: &dyn Fn(usize, usize) -> bool,
    from: usize,
    chosen: &mut Vec<usize>,
    sum: u32,
    best: &mut u32,
) {
    *best = (*best).max(sum);
    let rest: u32 = w[from..].iter().sum();
    if sum + rest <= *best {
        return;
    }
    for k in from..cands.len() {
        let v = cands[k];
        if chosen.iter().all(|&u| ok(u, v)) {
            chosen.push(v);
            clique(cands, w, ok, k + 1, chosen, sum + w[k], best);
            chosen.pop();
        }
    }
}
