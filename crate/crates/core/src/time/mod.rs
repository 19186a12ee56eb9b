//! Closed-form execution-time bounds in terms of `EFFICIENCY` and `CONC_CASES`.
//!
//! Source must be preprocessed with [`crate::lang::preprocess_symbolic`] so the
//! two parameters survive as names.

mod analysis;
pub mod bound;

use serde::Serialize;
use thiserror::Error;

pub use analysis::{Analyzer, Summary};
pub use bound::{parse_bound, BoundExpr, BoundParseError};

use crate::lang::{Program, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TimeError {
    #[error("recursive calls cannot be bounded: {cycle}")]
    UnsupportedRecursion { cycle: String },
    #[error("line {line}: loop bound cannot be expressed in the model parameters")]
    UnboundedLoop { line: u32 },
    #[error("line {line}: cost does not depend only on the model parameters")]
    NonParametricCost { line: u32 },
}

/// Efficiency values of the default evaluation grid.
pub const GRID_EFFICIENCY: [u32; 6] = [50, 60, 70, 80, 90, 100];
/// Case counts of the default evaluation grid.
pub const GRID_CASES: [u32; 4] = [1, 2, 4, 8];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Evaluation {
    #[serde(rename = "EFFICIENCY")]
    pub efficiency: u32,
    #[serde(rename = "CONC_CASES")]
    pub cases: u32,
    pub sequential: i128,
    #[serde(rename = "criticalPath")]
    pub critical_path: i128,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TimeReport {
    #[serde(serialize_with = "as_text")]
    pub sequential: BoundExpr,
    #[serde(serialize_with = "as_text")]
    pub critical_path: BoundExpr,
    pub evaluations: Vec<Evaluation>,
}

fn as_text<S: serde::Serializer>(e: &BoundExpr, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(e)
}

/// Cost equations for `main`.
pub fn build_equations(p: &Program) -> Result<Summary, TimeError> {
    Analyzer::new(p).main()
}

fn ceil(r: Rational) -> i128 {
    r.ceil().to_integer()
}

impl TimeReport {
    pub fn at(&self, efficiency: u32, cases: u32) -> Evaluation {
        Evaluation {
            efficiency,
            cases,
            sequential: ceil(self.sequential.eval(efficiency, cases)),
            critical_path: ceil(self.critical_path.eval(efficiency, cases)),
        }
    }
}

/// Bounds for `main`, evaluated on the default grid.
pub fn solve(p: &Program) -> Result<TimeReport, TimeError> {
    let s = build_equations(p)?;
    let mut r = TimeReport {
        sequential: s.sequential,
        critical_path: s.span,
        evaluations: Vec::new(),
    };
    r.evaluations = GRID_EFFICIENCY
        .iter()
        .flat_map(|&e| GRID_CASES.iter().map(move |&c| (e, c)))
        .map(|(e, c)| r.at(e, c))
        .collect();
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub bound: i128,
    pub observed: u64,
    pub holds: bool,
}

/// Compares an observed execution time against a bound at one parameter point.
pub fn check_bound(bound: &BoundExpr, observed: u64, efficiency: u32, cases: u32) -> Verdict {
    let b = ceil(bound.eval(efficiency, cases));
    Verdict {
        bound: b,
        observed,
        holds: observed as i128 <= b,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::lang::{preprocess_symbolic, Profile};
    use crate::parser::parse;

    fn symbolic(src: &str) -> Program {
        parse(&preprocess_symbolic(src, &Profile::default()).unwrap()).unwrap()
    }

    #[test]
    fn supply_sequential_bound_values() {
        let r = solve(&symbolic(corpus::SUPPLY)).unwrap();
        assert_eq!(r.at(100, 1).sequential, 400);
        assert_eq!(r.at(100, 8).sequential, 3200);
        assert_eq!(r.at(70, 1).sequential, 570);
        assert_eq!(r.at(70, 4).sequential, 2280);
        assert_eq!(r.at(100, 1).critical_path, 400);
        assert_eq!(r.evaluations.len(), 24);
    }

    #[test]
    fn bound_text_round_trips() {
        let r = solve(&symbolic(corpus::SUPPLY)).unwrap();
        let back = parse_bound(&r.sequential.to_string()).unwrap();
        for e in GRID_EFFICIENCY {
            for c in GRID_CASES {
                assert_eq!(back.eval(e, c), r.sequential.eval(e, c));
            }
        }
        assert!(r.sequential.to_string().contains("CONC_CASES"));
    }

    #[test]
    fn empty_main_is_zero() {
        let r = solve(&symbolic(corpus::MINIMAL)).unwrap();
        assert_eq!(r.sequential, BoundExpr::zero());
    }

    #[test]
    fn recursion_is_rejected() {
        let src = "module M;\ninterface I { Int a(I me); }\nclass C implements I {\n  Int a(I me) {\n    Fut<Int> f = !a(me, me) after dl 1;\n    return 1;\n  }\n}\n{\n  C c = new C();\n  Fut<Int> f = !a(c, c) after dl 1;\n}";
        assert!(matches!(solve(&parse(src).unwrap()), Err(TimeError::UnsupportedRecursion { .. })));
    }

    #[test]
    fn random_cost_is_rejected() {
        let src = "module M;\n{\n  Int x = random(5);\n  cost(x);\n}";
        assert_eq!(solve(&parse(src).unwrap()).unwrap_err(), TimeError::NonParametricCost { line: 4 });
    }

    #[test]
    fn unbounded_loop_is_rejected() {
        let src = "module M;\n{\n  Int x = random(5);\n  while (x > 0) {\n    cost(1);\n    x = x - 1;\n  }\n}";
        assert_eq!(solve(&parse(src).unwrap()).unwrap_err(), TimeError::UnboundedLoop { line: 4 });
    }

    #[test]
    fn drained_list_loop_is_bounded() {
        let src = "module M;\n{\n  Int i = 1;\n  List<Int> l = Nil;\n  while (i <= CONC_CASES) {\n    l = appendright(l, i);\n    i = i + 1;\n  }\n  while (!isEmpty(l)) {\n    cost(10);\n    l = tail(l);\n  }\n}";
        let r = solve(&parse(src).unwrap()).unwrap();
        assert_eq!(r.at(100, 3).sequential, 30);
    }

    #[test]
    fn strict_counter_with_step() {
        let src = "module M;\n{\n  Int i = 0;\n  while (i < 10) {\n    cost(EFFICIENCY);\n    i = i + 3;\n  }\n}";
        let p = parse(src).unwrap();
        let r = solve(&p).unwrap();
        // Decidable conditions are unrolled: i = 0, 3, 6, 9.
        assert_eq!(r.at(50, 1).sequential, 200);
    }

    #[test]
    fn check_bound_verdict() {
        let b = parse_bound("(CONC_CASES*400)").unwrap();
        assert!(check_bound(&b, 800, 100, 2).holds);
        assert!(!check_bound(&b, 801, 100, 2).holds);
    }
}
