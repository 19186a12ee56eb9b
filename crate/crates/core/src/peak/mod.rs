//! Peak simultaneous resource allocation, three ways:
//! observed over random runs, exact over every schedule, and a static bound.
//! For any model, `observed <= exact <= static`.

mod exhaustive;
mod static_bound;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

pub use exhaustive::{explore, Exploration};
pub use static_bound::static_bound;

use crate::lang::{Profile, Program};
use crate::sim::{self, SimError};

/// Default cap on distinct states visited by the exhaustive search.
pub const DEFAULT_BUDGET: u64 = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PeakError {
    #[error("line {line}: loop bound cannot be determined statically")]
    UnboundedLoop { line: u32 },
    #[error("line {line}: {message}")]
    Unsupported { line: u32, message: String },
    #[error("state budget of {budget} exhausted before any schedule completed")]
    BudgetExceeded { budget: u64 },
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CategoryPeak {
    pub observed: u32,
    pub exact: u32,
    #[serde(rename = "static")]
    pub static_bound: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PeakReport {
    pub per_category: BTreeMap<String, CategoryPeak>,
    pub explored_schedules: u64,
    /// The exhaustive search hit its budget; `exact` is then a lower bound.
    pub truncated: bool,
}

/// Highest simultaneous holding seen over `profile.num_sims` seeded runs.
pub fn observed_peak(program: &Program, profile: &Profile) -> Result<BTreeMap<String, u32>, SimError> {
    Ok(sim::simulate_many(program, profile, "")?.peaks)
}

/// Exact peak over every interleaving and every `random` outcome.
pub fn exact_peak(program: &Program, profile: &Profile, budget: u64) -> Result<(BTreeMap<String, u32>, Exploration), PeakError> {
    let prog = sim::prepare(program, profile);
    let ex = explore(&prog, budget)?;
    if ex.completed == 0 && ex.truncated {
        return Err(PeakError::BudgetExceeded { budget });
    }
    let peaks = prog.categories.iter().cloned().zip(ex.peaks.iter().copied()).collect();
    Ok((peaks, ex))
}

/// Static bound clamped to the number of available resources per category.
pub fn static_peak_bound(program: &Program, profile: &Profile) -> Result<BTreeMap<String, u32>, PeakError> {
    let prog = sim::prepare(program, profile);
    let raw = static_bound(program, &prog.categories)?;
    Ok(prog
        .categories
        .iter()
        .zip(raw)
        .map(|(c, b)| (c.clone(), b.min(prog.pool.available_count(c) as u32)))
        .collect())
}

pub fn analyze(program: &Program, profile: &Profile, budget: u64) -> Result<PeakReport, PeakError> {
    let observed = observed_peak(program, profile)?;
    let (exact, ex) = exact_peak(program, profile, budget)?;
    let bound = static_peak_bound(program, profile)?;
    let per_category = bound
        .iter()
        .map(|(c, &s)| {
            (
                c.clone(),
                CategoryPeak {
                    observed: observed.get(c).copied().unwrap_or(0),
                    exact: exact.get(c).copied().unwrap_or(0),
                    static_bound: s,
                },
            )
        })
        .collect();
    Ok(PeakReport {
        per_category,
        explored_schedules: ex.completed,
        truncated: ex.truncated,
    })
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

    fn report(src: &str, cases: u32) -> PeakReport {
        let profile = Profile {
            conc_cases: cases,
            num_sims: 20,
            ..Profile::default()
        };
        analyze(&load(src, &profile), &profile, DEFAULT_BUDGET).unwrap()
    }

    fn assert_sandwich(r: &PeakReport) {
        for (c, p) in &r.per_category {
            assert!(p.observed <= p.exact && p.exact <= p.static_bound, "{c}: {p:?}");
        }
    }

    #[test]
    fn single_case_needs_one_of_each() {
        let r = report(corpus::SUPPLY, 1);
        for c in ["Van", "Driver", "Helper"] {
            let p = r.per_category[c];
            assert_eq!((p.observed, p.exact, p.static_bound), (1, 1, 1), "{c}");
        }
        assert!(!r.truncated);
        assert!(r.explored_schedules >= 2);
    }

    #[test]
    fn two_cases_sandwich() {
        let r = report(corpus::SUPPLY, 2);
        assert_sandwich(&r);
        assert_eq!(r.per_category["Helper"].exact, 2);
    }

    #[test]
    fn parallel_and_chained_fixtures() {
        let r = report(corpus::PARALLEL_HOLDS, 1);
        assert_eq!(r.per_category["Van"], CategoryPeak { observed: 2, exact: 2, static_bound: 2 });
        let r = report(corpus::CHAINED_HOLDS, 1);
        assert_eq!(r.per_category["Van"], CategoryPeak { observed: 1, exact: 1, static_bound: 1 });
    }

    #[test]
    fn static_bound_is_clamped_to_availability() {
        let profile = Profile {
            conc_cases: 8,
            availability_pct: 50,
            ..Profile::default()
        };
        let b = static_peak_bound(&load(corpus::SUPPLY, &profile), &profile).unwrap();
        assert_eq!(b["Helper"], 2);
        assert!(b["Van"] <= 4);
    }

    #[test]
    fn unknown_loop_with_spawns_is_rejected() {
        let src = "module M;\ninterface I { Int a(); }\nclass C implements I {\n  Int a() { return 1; }\n}\n{\n  C c = new C();\n  while (random(1) == 1) {\n    Fut<Int> f = !a(c) after dl 1;\n  }\n}";
        let e = static_peak_bound(&parse(src).unwrap(), &Profile::default()).unwrap_err();
        assert_eq!(e, PeakError::UnboundedLoop { line: 8 });
    }

    #[test]
    fn tiny_budget_is_reported() {
        let profile = Profile::default();
        let e = exact_peak(&load(corpus::SUPPLY, &profile), &profile, 3).unwrap_err();
        assert_eq!(e, PeakError::BudgetExceeded { budget: 3 });
    }
}
