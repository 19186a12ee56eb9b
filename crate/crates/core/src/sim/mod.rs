//! Discrete-event interpreter with actor semantics, shared-resource holds and
//! deadline monitoring.

pub mod compile;
mod error;
pub mod machine;
pub mod ops;

use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use sha2::{Digest, Sha256};

pub use compile::{compile, CallSite, CompiledProgram};
pub use error::SimError;
pub use machine::{Chooser, DeadlineAnchor, Machine, Move};

use crate::lang::value::render_2dp;
use crate::lang::{apply_availability, Profile, Program, Rational, ResourcePool};

/// Seeded pseudo-random stream; the same seed always yields the same run.
#[derive(Debug, Clone)]
pub struct SeededChooser(ChaCha8Rng);

impl SeededChooser {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }
}

impl Chooser for SeededChooser {
    fn random(&mut self, upper: u64) -> u64 {
        self.0.random_range(0..=upper)
    }

    fn pick(&mut self, n: usize) -> usize {
        self.0.random_range(0..n)
    }
}

/// Replays fixed `random` draws; ready-task choices take the lowest task id.
/// Draws past the script return 0.
#[derive(Debug, Clone, Default)]
pub struct ScriptedChooser {
    pub draws: VecDeque<u64>,
}

impl ScriptedChooser {
    pub fn new(draws: impl IntoIterator<Item = u64>) -> Self {
        Self {
            draws: draws.into_iter().collect(),
        }
    }
}

impl Chooser for ScriptedChooser {
    fn random(&mut self, upper: u64) -> u64 {
        self.draws.pop_front().unwrap_or(0).min(upper)
    }

    fn pick(&mut self, _n: usize) -> usize {
        0
    }
}

/// Outcome of one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimRunResult {
    pub seed: u64,
    pub exec_time: u64,
    pub financial_cost: Rational,
    pub violations: BTreeMap<CallSite, u32>,
    /// Highest number of simultaneously held resources per category.
    pub peaks: BTreeMap<String, u32>,
    pub random_draws: Vec<u64>,
    /// Resources still held when `main` finished.
    pub leftover_holds: u32,
}

impl SimRunResult {
    pub fn total_violations(&self) -> u32 {
        self.violations.values().sum()
    }
}

/// Compiles a program against the pool reduced by the profile's availability.
pub fn prepare(program: &Program, profile: &Profile) -> CompiledProgram {
    let pool = apply_availability(&ResourcePool::from_groups(&program.resources), profile.availability_pct);
    compile(program, pool)
}

/// Runs to completion of `main`.
pub fn run(prog: &CompiledProgram, chooser: &mut dyn Chooser, anchor: DeadlineAnchor) -> Result<SimRunResult, SimError> {
    let mut m = Machine::new(prog, anchor);
    while !m.is_done() {
        let moves = m.moves();
        let Some(first) = moves.first() else {
            if !m.advance_clock() {
                return Err(m.deadlock());
            }
            continue;
        };
        let same: Vec<Move> = moves.iter().copied().filter(|mv| mv.object == first.object).collect();
        let mv = if same.len() > 1 { same[chooser.pick(same.len())] } else { same[0] };
        m.step(mv, chooser)?;
    }
    Ok(SimRunResult {
        seed: 0,
        exec_time: m.now,
        financial_cost: m.stats.cost,
        violations: m
            .stats
            .violations
            .iter()
            .map(|(&site, &n)| (prog.sites[site].clone(), n))
            .collect(),
        peaks: prog
            .categories
            .iter()
            .cloned()
            .zip(m.stats.peaks.iter().copied())
            .collect(),
        random_draws: m.stats.random_draws.clone(),
        leftover_holds: m.core.held_by.iter().filter(|h| h.is_some()).count() as u32,
    })
}

pub fn simulate_with(program: &Program, profile: &Profile, chooser: &mut dyn Chooser) -> Result<SimRunResult, SimError> {
    run(&prepare(program, profile), chooser, DeadlineAnchor::default())
}

/// One run seeded with `profile.seed`.
pub fn simulate_once(program: &Program, profile: &Profile) -> Result<SimRunResult, SimError> {
    let mut r = simulate_with(program, profile, &mut SeededChooser::new(profile.seed))?;
    r.seed = profile.seed;
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Summary {
    pub min: Rational,
    pub max: Rational,
    pub avg: Rational,
}

impl Summary {
    fn of(values: &[Rational]) -> Self {
        let n = Rational::from_integer(values.len() as i128);
        Self {
            min: values.iter().copied().min().unwrap_or_default(),
            max: values.iter().copied().max().unwrap_or_default(),
            avg: values.iter().copied().sum::<Rational>() / n,
        }
    }
}

fn number<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    if r.is_integer() {
        s.serialize_i128(r.to_integer())
    } else {
        s.serialize_f64(crate::lang::value::rational_to_f64(*r))
    }
}

impl Serialize for Summary {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        struct N<'a>(&'a Rational);
        impl Serialize for N<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                number(self.0, s)
            }
        }
        let mut m = s.serialize_map(Some(4))?;
        m.serialize_entry("min", &N(&self.min))?;
        m.serialize_entry("max", &N(&self.max))?;
        m.serialize_entry("avg", &render_2dp(self.avg))?;
        m.serialize_entry("avgExact", &format!("{}/{}", self.avg.numer(), self.avg.denom()))?;
        m.end()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SiteViolations {
    pub method: String,
    pub line: u32,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ViolationSummary {
    pub total: u32,
    #[serde(rename = "perSite")]
    pub per_site: Vec<SiteViolations>,
}

/// Aggregate over `num_sims` runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AggregateResult {
    pub exec_id: String,
    pub file: String,
    pub sims: u32,
    pub efficiency: u32,
    pub availability: u32,
    pub cases: u32,
    pub seed: u64,
    pub time: Summary,
    pub cost: Summary,
    pub violations: ViolationSummary,
    /// Highest simultaneous holding per category over all runs.
    pub peaks: BTreeMap<String, u32>,
    #[serde(skip)]
    pub runs: Vec<SimRunResult>,
}

/// Eight hex digits identifying a (program, profile, salt) triple.
pub fn exec_id(program: &Program, profile: &Profile, salt: u64) -> String {
    let mut h = Sha256::new();
    h.update(crate::parser::pretty(program).as_bytes());
    h.update(serde_json::to_vec(profile).expect("profile serializes"));
    h.update(salt.to_le_bytes());
    h.finalize()[..4].iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs `profile.num_sims` times with seeds `seed, seed+1, ...`.
pub fn simulate_many(program: &Program, profile: &Profile, file: &str) -> Result<AggregateResult, SimError> {
    let prog = prepare(program, profile);
    let mut runs = Vec::with_capacity(profile.num_sims as usize);
    for i in 0..profile.num_sims {
        let seed = profile.seed.wrapping_add(i as u64);
        let mut r = run(&prog, &mut SeededChooser::new(seed), DeadlineAnchor::default()).map_err(|e| SimError::Run {
            index: i,
            seed,
            cause: Box::new(e),
        })?;
        r.seed = seed;
        runs.push(r);
    }
    Ok(aggregate(runs, program, profile, file))
}

pub fn aggregate(runs: Vec<SimRunResult>, program: &Program, profile: &Profile, file: &str) -> AggregateResult {
    let times: Vec<Rational> = runs.iter().map(|r| Rational::from_integer(r.exec_time as i128)).collect();
    let costs: Vec<Rational> = runs.iter().map(|r| r.financial_cost).collect();
    let mut per_site: BTreeMap<&CallSite, u32> = BTreeMap::new();
    let mut peaks: BTreeMap<String, u32> = BTreeMap::new();
    for r in &runs {
        for (site, n) in &r.violations {
            *per_site.entry(site).or_default() += n;
        }
        for (c, n) in &r.peaks {
            let e = peaks.entry(c.clone()).or_default();
            *e = (*e).max(*n);
        }
    }
    let mut per_site: Vec<SiteViolations> = per_site
        .into_iter()
        .map(|(s, count)| SiteViolations {
            method: s.method.clone(),
            line: s.line,
            count,
        })
        .collect();
    per_site.sort_by(|a, b| (a.line, &a.method).cmp(&(b.line, &b.method)));
    AggregateResult {
        exec_id: exec_id(program, profile, 0),
        file: file.to_string(),
        sims: runs.len() as u32,
        efficiency: profile.efficiency_pct,
        availability: profile.availability_pct,
        cases: profile.conc_cases,
        seed: profile.seed,
        time: Summary::of(&times),
        cost: Summary::of(&costs),
        violations: ViolationSummary {
            total: per_site.iter().map(|s| s.count).sum(),
            per_site,
        },
        peaks,
        runs,
    }
}

/// Editor gutter markers: (line, violation count), sorted by line.
pub fn violation_markers(r: &AggregateResult) -> Vec<(u32, u32)> {
    let mut by_line: BTreeMap<u32, u32> = BTreeMap::new();
    for s in &r.violations.per_site {
        *by_line.entry(s.line).or_default() += s.count;
    }
    by_line.into_iter().filter(|(_, n)| *n > 0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::lang::preprocess;
    use crate::parser::parse;

    fn load(src: &str, profile: &Profile) -> Program {
        parse(&preprocess(src, profile).unwrap()).unwrap()
    }

    fn scripted(src: &str, profile: &Profile, draws: &[u64]) -> SimRunResult {
        let p = load(src, profile);
        simulate_with(&p, profile, &mut ScriptedChooser::new(draws.iter().copied())).unwrap()
    }

    fn site(method: &str, line: u32) -> CallSite {
        CallSite {
            method: method.into(),
            line,
        }
    }

    #[test]
    fn goods_in_stock_trace() {
        let r = scripted(corpus::SUPPLY, &Profile::default(), &[1]);
        assert_eq!(r.exec_time, 200);
        assert_eq!(r.financial_cost, Rational::from_integer(922_500));
        assert_eq!(r.violations, BTreeMap::from([(site("check_goods", 12), 1)]));
        assert_eq!(r.leftover_holds, 0);
        assert_eq!(r.random_draws, [1]);
    }

    #[test]
    fn restock_trace() {
        let r = scripted(corpus::SUPPLY, &Profile::default(), &[0]);
        assert_eq!(r.exec_time, 400);
        assert_eq!(r.financial_cost, Rational::from_integer(2_212_500));
        assert_eq!(r.total_violations(), 1);
        assert_eq!(r.peaks["Helper"], 1);
        assert_eq!(r.peaks["Van"], 1);
    }

    #[test]
    fn restock_fixture_needs_no_random() {
        let r = scripted(corpus::SUPPLY_RESTOCK, &Profile::default(), &[]);
        assert_eq!(r.exec_time, 400);
        assert!(r.random_draws.is_empty());
    }

    #[test]
    fn empty_main_finishes_at_zero() {
        let r = scripted(corpus::MINIMAL, &Profile::default(), &[]);
        assert_eq!(r.exec_time, 0);
        assert_eq!(r.financial_cost, Rational::from_integer(0));
        assert!(r.peaks.is_empty());
    }

    #[test]
    fn no_helpers_means_deadlock() {
        let profile = Profile {
            availability_pct: 0,
            ..Profile::default()
        };
        let p = load(corpus::SUPPLY, &profile);
        let e = simulate_once(&p, &profile).unwrap_err();
        assert!(matches!(&e, SimError::Deadlock { message, .. } if message.contains("starvation")), "{e}");
    }

    #[test]
    fn parallel_holds_use_two_vans() {
        let r = scripted(corpus::PARALLEL_HOLDS, &Profile::default(), &[]);
        assert_eq!(r.peaks["Van"], 2);
        assert_eq!(r.exec_time, 10);
        let r = scripted(corpus::CHAINED_HOLDS, &Profile::default(), &[]);
        assert_eq!(r.peaks["Van"], 1);
        assert_eq!(r.exec_time, 20);
    }

    #[test]
    fn unsatisfiable_hold_is_reported() {
        let src = corpus::SUPPLY.replace("ResEfficiency(50),Helper", "ResEfficiency(5000),Helper");
        let p = load(&src, &Profile::default());
        let e = simulate_once(&p, &Profile::default()).unwrap_err();
        assert!(matches!(e, SimError::UnsatisfiableHold { line: 37, .. }), "{e}");
    }

    #[test]
    fn get_on_own_actor_deadlocks() {
        let src = "module M;\ninterface I { Int a(); Int b(I me); }\nclass C implements I {\n  Int a() { return 1; }\n  Int b(I me) {\n    Fut<Int> f = !a(me) after dl 5;\n    Int x = f.get;\n    return x;\n  }\n}\n{\n  C c = new C();\n  Fut<Int> g = !b(c, c) after dl 5;\n  await g?;\n}";
        let p = parse(src).unwrap();
        let e = simulate_once(&p, &Profile::default()).unwrap_err();
        assert!(matches!(&e, SimError::Deadlock { message, .. } if message.contains("futures")), "{e}");
    }

    #[test]
    fn runtime_errors_carry_lines() {
        let src = "module M;\n{\n  List<Int> l = Nil;\n  Int x = head(l);\n}";
        let e = simulate_once(&parse(src).unwrap(), &Profile::default()).unwrap_err();
        assert_eq!(
            e,
            SimError::Runtime {
                line: 4,
                message: "head of an empty list".into()
            }
        );
    }

    #[test]
    fn many_runs_are_deterministic() {
        let profile = Profile {
            num_sims: 10,
            seed: 7,
            conc_cases: 2,
            ..Profile::default()
        };
        let p = load(corpus::SUPPLY, &profile);
        let a = simulate_many(&p, &profile, "supply.rpl").unwrap();
        let b = simulate_many(&p, &profile, "supply.rpl").unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.sims, 10);
        assert!(a.time.min <= a.time.avg && a.time.avg <= a.time.max);
        assert_eq!(a.exec_id.len(), 8);
    }

    #[test]
    fn aggregate_json_shape() {
        let profile = Profile {
            num_sims: 3,
            ..Profile::default()
        };
        let p = load(corpus::SUPPLY, &profile);
        let a = simulate_many(&p, &profile, "supply.rpl").unwrap();
        let v = serde_json::to_value(&a).unwrap();
        for key in ["execId", "file", "sims", "efficiency", "availability", "cases", "time", "cost", "violations", "peaks"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["violations"]["total"], 3);
        assert_eq!(v["violations"]["perSite"][0]["line"], 12);
        assert_eq!(violation_markers(&a), [(12, 3)]);
        assert!(v["time"]["avg"].as_str().unwrap().contains('.'));
    }

    #[test]
    fn issue_anchor_counts_waiting_time() {
        let profile = Profile::default();
        let prog = prepare(&load(corpus::SUPPLY_RESTOCK, &profile), &profile);
        let enable = run(&prog, &mut ScriptedChooser::default(), DeadlineAnchor::Enable).unwrap();
        let issue = run(&prog, &mut ScriptedChooser::default(), DeadlineAnchor::Issue).unwrap();
        assert!(issue.total_violations() >= enable.total_violations());
    }
}
