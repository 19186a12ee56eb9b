//! The interpreter state and its transition relation.
//!
//! A [`Machine`] exposes the enabled [`Move`]s of the current state and applies
//! one at a time. Random simulation picks among them with a seeded stream; the
//! exhaustive peak explorer branches over all of them.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_traits::{CheckedAdd, Zero};

use super::compile::{CodeRef, CompiledProgram, Instr};
use super::error::SimError;
use super::ops;
use crate::lang::{BinOp, Builtin, Expr, ExprKind, FutureId, ObjectId, Rational, ResourceRequest, Value};

/// Upper bound on instructions executed in one move without reaching a scheduling point.
const STEP_LIMIT: usize = 5_000_000;

/// Source of `random(n)` draws and of choices among several ready tasks.
pub trait Chooser {
    /// Uniform integer in `[0, upper]`.
    fn random(&mut self, upper: u64) -> u64;
    /// Uniform index in `[0, n)`, `n >= 2`.
    fn pick(&mut self, n: usize) -> usize;
}

/// Where a call's deadline is measured from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeadlineAnchor {
    /// From the moment every `after` dependency has resolved.
    #[default]
    Enable,
    /// From the moment the call statement executed.
    Issue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Status {
    /// Waiting for `after` dependencies.
    Pending,
    Ready,
    Active,
    /// Yielded at `await` on the future.
    Suspended(u32),
    /// Blocked at `.get`, still owning its actor.
    GetBlocked(u32),
    /// Consuming time until the given instant, owning its actor.
    Working(u64),
    /// Waiting for resources; the actor is released.
    HoldBlocked,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Task {
    pub object: u32,
    pub code: CodeRef,
    pub pc: usize,
    pub locals: BTreeMap<String, Value>,
    pub future: u32,
    pub status: Status,
    /// Unresolved `after` dependencies.
    pub pending: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Actor {
    pub class: Option<usize>,
    pub fields: BTreeMap<String, Value>,
    pub active: Option<u32>,
    pub ready: BTreeSet<u32>,
}

/// Everything that determines future behaviour, apart from the clock.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Core {
    pub actors: Vec<Actor>,
    pub tasks: BTreeMap<u32, Task>,
    pub futures: Vec<Option<Value>>,
    /// Holding task per resource, parallel to the compiled pool.
    pub held_by: Vec<Option<u32>>,
    pub waiters: VecDeque<u32>,
    pub next_task: u32,
    pub main_done: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Timing {
    issued: u64,
    deadline: i128,
    deadline_abs: Option<i128>,
    site: Option<usize>,
}

/// Observations that do not influence behaviour.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stats {
    pub cost: Rational,
    /// Violation count per call-site index.
    pub violations: BTreeMap<usize, u32>,
    /// Highest simultaneous holding per category index.
    pub peaks: Vec<u32>,
    pub random_draws: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Move {
    pub object: u32,
    pub task: u32,
}

#[derive(Debug, Clone)]
pub struct Machine<'p> {
    pub prog: &'p CompiledProgram,
    pub now: u64,
    pub core: Core,
    pub stats: Stats,
    timing: BTreeMap<u32, Timing>,
    anchor: DeadlineAnchor,
}

fn err(line: u32, msg: impl Into<String>) -> SimError {
    SimError::Runtime {
        line,
        message: msg.into(),
    }
}

impl<'p> Machine<'p> {
    pub fn new(prog: &'p CompiledProgram, anchor: DeadlineAnchor) -> Self {
        let main = Task {
            object: 0,
            code: CodeRef::Main,
            pc: 0,
            locals: BTreeMap::new(),
            future: 0,
            status: Status::Ready,
            pending: Vec::new(),
        };
        let actor = Actor {
            class: None,
            fields: BTreeMap::new(),
            active: None,
            ready: BTreeSet::from([0]),
        };
        Self {
            prog,
            now: 0,
            core: Core {
                actors: vec![actor],
                tasks: BTreeMap::from([(0, main)]),
                futures: vec![None],
                held_by: vec![None; prog.pool.resources.len()],
                waiters: VecDeque::new(),
                next_task: 1,
                main_done: false,
            },
            stats: Stats {
                peaks: vec![0; prog.categories.len()],
                ..Stats::default()
            },
            timing: BTreeMap::new(),
            anchor,
        }
    }

    pub fn is_done(&self) -> bool {
        self.core.main_done
    }

    /// Enabled moves, grouped by actor in id order.
    pub fn moves(&self) -> Vec<Move> {
        let mut out = Vec::new();
        for (o, a) in self.core.actors.iter().enumerate() {
            match a.active {
                Some(t) => {
                    if self.core.tasks[&t].status == Status::Active {
                        out.push(Move { object: o as u32, task: t });
                    }
                }
                None => out.extend(a.ready.iter().map(|&t| Move { object: o as u32, task: t })),
            }
        }
        out
    }

    /// Earliest completion among working tasks.
    pub fn next_wakeup(&self) -> Option<u64> {
        self.core
            .tasks
            .values()
            .filter_map(|t| match t.status {
                Status::Working(u) => Some(u),
                _ => None,
            })
            .min()
    }

    /// Moves the clock to the next completion. Returns false if nothing is working.
    pub fn advance_clock(&mut self) -> bool {
        let Some(at) = self.next_wakeup() else {
            return false;
        };
        self.now = at;
        for t in self.core.tasks.values_mut() {
            if t.status == Status::Working(at) {
                t.status = Status::Active;
            }
        }
        true
    }

    /// Error describing why no move is possible and the clock cannot advance.
    pub fn deadlock(&self) -> SimError {
        let holds: Vec<&Task> = self.core.waiters.iter().map(|t| &self.core.tasks[t]).collect();
        if let Some(t) = holds.first() {
            let line = self.prog.code(t.code).instrs.get(t.pc).map(|i| i.1.line).unwrap_or(0);
            SimError::Deadlock {
                at: self.now,
                message: format!(
                    "resource starvation: {} task(s) wait on `hold`, first at line {line}",
                    holds.len()
                ),
            }
        } else {
            let waiting = self.core.tasks.len();
            SimError::Deadlock {
                at: self.now,
                message: format!("{waiting} task(s) wait on futures that can never resolve"),
            }
        }
    }

    /// Resources currently held per category index.
    pub fn held_counts(&self) -> Vec<u32> {
        let mut counts = vec![0; self.prog.categories.len()];
        for (i, h) in self.core.held_by.iter().enumerate() {
            if h.is_some() {
                counts[self.prog.resource_category[i]] += 1;
            }
        }
        counts
    }

    fn note_peaks(&mut self) {
        for (i, c) in self.held_counts().into_iter().enumerate() {
            self.stats.peaks[i] = self.stats.peaks[i].max(c);
        }
    }

    /// Runs the task of `mv` until its next scheduling point.
    pub fn step(&mut self, mv: Move, ch: &mut dyn Chooser) -> Result<(), SimError> {
        let actor = &mut self.core.actors[mv.object as usize];
        if actor.active.is_none() {
            actor.ready.remove(&mv.task);
            actor.active = Some(mv.task);
        }
        let mut task = self.core.tasks.remove(&mv.task).expect("live task");
        task.status = Status::Active;
        let keep = self.run(mv.task, &mut task, ch);
        match keep {
            Ok(true) => {
                self.core.tasks.insert(mv.task, task);
                Ok(())
            }
            Ok(false) => Ok(()),
            Err(e) => {
                self.core.tasks.insert(mv.task, task);
                Err(e)
            }
        }
    }

    /// Executes instructions; returns whether the task is still alive.
    fn run(&mut self, id: u32, t: &mut Task, ch: &mut dyn Chooser) -> Result<bool, SimError> {
        let prog = self.prog;
        let code = prog.code(t.code);
        for _ in 0..STEP_LIMIT {
            let Some((instr, span)) = code.instrs.get(t.pc) else {
                self.finish(id, t, Value::Unit);
                return Ok(false);
            };
            let line = span.line;
            match instr {
                Instr::Decl { name, init, default } => {
                    let v = match init {
                        Some(e) => self.eval(e, t, ch)?,
                        None => default.clone(),
                    };
                    t.locals.insert(name.clone(), v);
                }
                Instr::Assign { target, value } => {
                    let v = self.eval(value, t, ch)?;
                    self.assign(t, target, v);
                }
                Instr::Spawn {
                    target,
                    method,
                    callee,
                    args,
                    after,
                    deadline,
                    site,
                } => {
                    let callee_v = self.eval(callee, t, ch)?;
                    let Value::Obj(ObjectId(obj)) = callee_v else {
                        return Err(err(line, format!("callee of `{method}` is a {}, not an object", callee_v.type_name())));
                    };
                    let class = self.core.actors[obj as usize].class.expect("main is never a callee");
                    let cls = &prog.classes[class];
                    let Some(&m) = cls.method_index.get(method) else {
                        return Err(err(line, format!("`{}` has no method `{method}`", cls.name)));
                    };
                    let params = &cls.methods[m].params;
                    let mut locals = BTreeMap::new();
                    for (p, a) in params.iter().zip(args) {
                        locals.insert(p.clone(), self.eval(a, t, ch)?);
                    }
                    let mut pending = Vec::new();
                    for f in after {
                        match self.lookup(t, f) {
                            Some(&Value::Fut(FutureId(fid))) => {
                                if self.core.futures[fid as usize].is_none() && !pending.contains(&fid) {
                                    pending.push(fid);
                                }
                            }
                            _ => return Err(err(line, format!("`{f}` does not hold a future"))),
                        }
                    }
                    let dl = self.eval(deadline, t, ch)?;
                    let dl = dl
                        .as_integer()
                        .filter(|d| *d >= 0)
                        .ok_or_else(|| err(line, format!("deadline must be a non-negative integer, got {dl}")))?;
                    let fid = self.core.futures.len() as u32;
                    self.core.futures.push(None);
                    let tid = self.core.next_task;
                    self.core.next_task += 1;
                    self.timing.insert(
                        tid,
                        Timing {
                            issued: self.now,
                            deadline: dl,
                            deadline_abs: None,
                            site: Some(*site),
                        },
                    );
                    let ready = pending.is_empty();
                    self.core.tasks.insert(
                        tid,
                        Task {
                            object: obj,
                            code: CodeRef::Method { class, method: m },
                            pc: 0,
                            locals,
                            future: fid,
                            status: Status::Pending,
                            pending,
                        },
                    );
                    if ready {
                        self.enable(tid);
                    }
                    self.assign(t, target, Value::Fut(FutureId(fid)));
                }
                Instr::Await(f) => {
                    let fid = self.future_of(t, f, line)?;
                    t.pc += 1;
                    if self.core.futures[fid as usize].is_none() {
                        t.status = Status::Suspended(fid);
                        self.core.actors[t.object as usize].active = None;
                        return Ok(true);
                    }
                    continue;
                }
                Instr::Get { target, future } => {
                    let fid = self.future_of(t, future, line)?;
                    match &self.core.futures[fid as usize] {
                        Some(v) => {
                            let v = v.clone();
                            self.assign(t, target, v);
                        }
                        None => {
                            t.status = Status::GetBlocked(fid);
                            return Ok(true);
                        }
                    }
                }
                Instr::Cost(e) => {
                    let v = self.eval(e, t, ch)?;
                    let d = v
                        .as_integer()
                        .filter(|d| *d >= 0)
                        .ok_or_else(|| err(line, format!("cost must be a non-negative integer, got {v}")))?;
                    t.pc += 1;
                    if d > 0 {
                        let until = self.now.checked_add(d as u64).ok_or_else(|| err(line, "clock overflow"))?;
                        t.status = Status::Working(until);
                        return Ok(true);
                    }
                    continue;
                }
                Instr::Hold { target, requests } => {
                    if match_requests(prog, requests, |_| true).is_none() {
                        return Err(SimError::UnsatisfiableHold {
                            line,
                            requests: describe(requests),
                        });
                    }
                    let held_by = &self.core.held_by;
                    let free = |i: usize| prog.pool.resources[i].available && held_by[i].is_none();
                    match match_requests(prog, requests, free) {
                        Some(chosen) => {
                            let v = self.acquire(id, &chosen);
                            self.assign(t, target, v);
                        }
                        None => {
                            t.status = Status::HoldBlocked;
                            self.core.waiters.push_back(id);
                            self.core.actors[t.object as usize].active = None;
                            return Ok(true);
                        }
                    }
                }
                Instr::Release(e) => {
                    let v = self.eval(e, t, ch)?;
                    let Value::Pair(ids, amount) = v else {
                        return Err(err(line, format!("release expects a pair, got {v}")));
                    };
                    let Value::List(ids) = *ids else {
                        return Err(err(line, "release expects a list of resource ids"));
                    };
                    let amount = amount
                        .as_num()
                        .filter(|a| *a >= Rational::zero())
                        .ok_or_else(|| err(line, "release amount must be a non-negative number"))?;
                    for r in ids {
                        let idx = r
                            .as_integer()
                            .and_then(|i| usize::try_from(i - 1).ok())
                            .filter(|&i| i < self.core.held_by.len())
                            .ok_or_else(|| err(line, format!("unknown resource id {r}")))?;
                        if self.core.held_by[idx].take().is_none() {
                            return Err(err(line, format!("resource {r} is not held")));
                        }
                    }
                    self.stats.cost = self
                        .stats
                        .cost
                        .checked_add(&amount)
                        .ok_or_else(|| err(line, "arithmetic overflow"))?;
                    self.retry_waiters();
                }
                Instr::Return(e) => {
                    let v = match e {
                        Some(e) => self.eval(e, t, ch)?,
                        None => Value::Unit,
                    };
                    self.finish(id, t, v);
                    return Ok(false);
                }
                Instr::New { target, class } => {
                    let obj = self.core.actors.len() as u32;
                    let mut fields = BTreeMap::new();
                    for (name, init, default) in &prog.classes[*class].fields {
                        let v = match init {
                            Some(e) => {
                                let scratch = Task {
                                    object: obj,
                                    code: t.code,
                                    pc: 0,
                                    locals: fields.clone(),
                                    future: 0,
                                    status: Status::Active,
                                    pending: Vec::new(),
                                };
                                self.eval_with(e, &scratch, &BTreeMap::new(), ch)?
                            }
                            None => default.clone(),
                        };
                        fields.insert(name.clone(), v);
                    }
                    self.core.actors.push(Actor {
                        class: Some(*class),
                        fields,
                        active: None,
                        ready: BTreeSet::new(),
                    });
                    self.assign(t, target, Value::Obj(ObjectId(obj)));
                }
                Instr::JumpUnless { cond, to } => {
                    let c = self.eval(cond, t, ch)?;
                    let c = c
                        .as_bool()
                        .ok_or_else(|| err(line, format!("condition must be a boolean, got {c}")))?;
                    t.pc = if c { t.pc + 1 } else { *to };
                    continue;
                }
                Instr::Jump(to) => {
                    t.pc = *to;
                    continue;
                }
            }
            t.pc += 1;
        }
        Err(err(
            code.instrs.get(t.pc).map(|i| i.1.line).unwrap_or(0),
            "step limit exceeded without reaching a scheduling point",
        ))
    }

    fn acquire(&mut self, task: u32, chosen: &[usize]) -> Value {
        let mut total = 0i128;
        for &i in chosen {
            self.core.held_by[i] = Some(task);
            total += self.prog.pool.resources[i].cost_per_unit as i128;
        }
        self.note_peaks();
        let ids = chosen
            .iter()
            .map(|&i| Value::int(self.prog.pool.resources[i].id as i128))
            .collect();
        Value::Pair(Box::new(Value::List(ids)), Box::new(Value::int(total)))
    }

    /// Grants blocked holds in arrival order where the free pool now allows it.
    fn retry_waiters(&mut self) {
        let prog = self.prog;
        let mut still = VecDeque::new();
        while let Some(tid) = self.core.waiters.pop_front() {
            let task = &self.core.tasks[&tid];
            let (Instr::Hold { target, requests }, _) = &prog.code(task.code).instrs[task.pc] else {
                unreachable!("hold waiter not at a hold");
            };
            let held_by = &self.core.held_by;
            let free = |i: usize| prog.pool.resources[i].available && held_by[i].is_none();
            match match_requests(prog, requests, free) {
                Some(chosen) => {
                    let v = self.acquire(tid, &chosen);
                    let mut task = self.core.tasks.remove(&tid).unwrap();
                    self.assign(&mut task, target, v);
                    task.pc += 1;
                    task.status = Status::Ready;
                    self.core.actors[task.object as usize].ready.insert(tid);
                    self.core.tasks.insert(tid, task);
                }
                None => still.push_back(tid),
            }
        }
        self.core.waiters = still;
    }

    fn enable(&mut self, tid: u32) {
        let timing = self.timing.get_mut(&tid).expect("spawned task timing");
        let anchor = match self.anchor {
            DeadlineAnchor::Enable => self.now,
            DeadlineAnchor::Issue => timing.issued,
        };
        timing.deadline_abs = Some(anchor as i128 + timing.deadline);
        let task = self.core.tasks.get_mut(&tid).unwrap();
        task.status = Status::Ready;
        self.core.actors[task.object as usize].ready.insert(tid);
    }

    fn finish(&mut self, id: u32, t: &mut Task, v: Value) {
        self.core.actors[t.object as usize].active = None;
        if let Some(tm) = self.timing.remove(&id) {
            if let (Some(abs), Some(site)) = (tm.deadline_abs, tm.site) {
                if self.now as i128 > abs {
                    *self.stats.violations.entry(site).or_default() += 1;
                }
            }
        }
        if id == 0 {
            self.core.main_done = true;
        }
        self.resolve(t.future, v);
    }

    fn resolve(&mut self, fid: u32, v: Value) {
        self.core.futures[fid as usize] = Some(v);
        let mut enabled = Vec::new();
        for (&tid, task) in self.core.tasks.iter_mut() {
            match task.status {
                Status::Suspended(f) if f == fid => {
                    task.status = Status::Ready;
                    self.core.actors[task.object as usize].ready.insert(tid);
                }
                Status::GetBlocked(f) if f == fid => task.status = Status::Active,
                Status::Pending => {
                    task.pending.retain(|&f| f != fid);
                    if task.pending.is_empty() {
                        enabled.push(tid);
                    }
                }
                _ => {}
            }
        }
        for tid in enabled {
            self.enable(tid);
        }
    }

    fn lookup<'a>(&'a self, t: &'a Task, name: &str) -> Option<&'a Value> {
        t.locals
            .get(name)
            .or_else(|| self.core.actors[t.object as usize].fields.get(name))
    }

    fn future_of(&self, t: &Task, name: &str, line: u32) -> Result<u32, SimError> {
        match self.lookup(t, name) {
            Some(Value::Fut(FutureId(f))) => Ok(*f),
            _ => Err(err(line, format!("`{name}` does not hold a future"))),
        }
    }

    fn assign(&mut self, t: &mut Task, name: &str, v: Value) {
        if let Some(slot) = t.locals.get_mut(name) {
            *slot = v;
        } else {
            self.core.actors[t.object as usize].fields.insert(name.to_string(), v);
        }
    }

    fn eval(&mut self, e: &Expr, t: &Task, ch: &mut dyn Chooser) -> Result<Value, SimError> {
        let fields = self.core.actors[t.object as usize].fields.clone();
        self.eval_with(e, t, &fields, ch)
    }

    fn eval_with(
        &mut self,
        e: &Expr,
        t: &Task,
        fields: &BTreeMap<String, Value>,
        ch: &mut dyn Chooser,
    ) -> Result<Value, SimError> {
        let line = e.span.line;
        Ok(match &e.kind {
            ExprKind::Int(i) => Value::int(*i as i128),
            ExprKind::Bool(b) => Value::Bool(*b),
            ExprKind::Nil => Value::List(Vec::new()),
            ExprKind::Var(v) => t
                .locals
                .get(v)
                .or_else(|| fields.get(v))
                .cloned()
                .ok_or_else(|| err(line, format!("unbound variable `{v}`")))?,
            ExprKind::Param(p) => {
                return Err(err(line, format!("parameter `{}` was not substituted", p.name())))
            }
            ExprKind::Unary(op, a) => {
                let a = self.eval_with(a, t, fields, ch)?;
                ops::unop(*op, a).map_err(|m| err(line, m))?
            }
            ExprKind::Binary(op @ (BinOp::And | BinOp::Or), a, b) => {
                let l = self.eval_with(a, t, fields, ch)?;
                if l.as_bool() == Some(*op == BinOp::Or) {
                    return Ok(l);
                }
                let r = self.eval_with(b, t, fields, ch)?;
                ops::binop(*op, l, r).map_err(|m| err(line, m))?
            }
            ExprKind::Binary(op, a, b) => {
                let l = self.eval_with(a, t, fields, ch)?;
                let r = self.eval_with(b, t, fields, ch)?;
                ops::binop(*op, l, r).map_err(|m| err(line, m))?
            }
            ExprKind::List(items) | ExprKind::Set(items) => {
                let vals = items
                    .iter()
                    .map(|i| self.eval_with(i, t, fields, ch))
                    .collect::<Result<Vec<_>, _>>()?;
                if matches!(e.kind, ExprKind::List(_)) {
                    Value::List(vals)
                } else {
                    Value::Set(vals)
                }
            }
            ExprKind::Call(b, args) => {
                let vals = args
                    .iter()
                    .map(|a| self.eval_with(a, t, fields, ch))
                    .collect::<Result<Vec<_>, _>>()?;
                if *b == Builtin::Random {
                    let n = vals[0]
                        .as_integer()
                        .and_then(|n| u64::try_from(n).ok())
                        .ok_or_else(|| err(line, "random expects a non-negative integer"))?;
                    let d = ch.random(n);
                    self.stats.random_draws.push(d);
                    Value::int(d as i128)
                } else {
                    ops::builtin(*b, vals).map_err(|m| err(line, m))?
                }
            }
        })
    }
}

fn describe(requests: &[ResourceRequest]) -> String {
    requests
        .iter()
        .map(|r| format!("{}>={}", r.category, r.min_efficiency))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Assigns one distinct resource to each request, preferring cheaper then lower-id
/// resources, or `None` if no assignment exists among resources passing `usable`.
pub fn match_requests(
    prog: &CompiledProgram,
    requests: &[ResourceRequest],
    usable: impl Fn(usize) -> bool,
) -> Option<Vec<usize>> {
    let candidates: Vec<Vec<usize>> = requests
        .iter()
        .map(|req| {
            let mut c: Vec<usize> = prog
                .pool
                .resources
                .iter()
                .enumerate()
                .filter(|(i, r)| r.category == req.category && r.efficiency >= req.min_efficiency && usable(*i))
                .map(|(i, _)| i)
                .collect();
            c.sort_by_key(|&i| (prog.pool.resources[i].cost_per_unit, prog.pool.resources[i].id));
            c
        })
        .collect();
    fn go(cands: &[Vec<usize>], k: usize, chosen: &mut Vec<usize>) -> bool {
        if k == cands.len() {
            return true;
        }
        for &r in &cands[k] {
            if !chosen.contains(&r) {
                chosen.push(r);
                if go(cands, k + 1, chosen) {
                    return true;
                }
                chosen.pop();
            }
        }
        false
    }
    let mut chosen = Vec::new();
    go(&candidates, 0, &mut chosen).then_some(chosen)
}
