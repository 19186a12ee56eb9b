use proptest::prelude::*;

use rpl_core::corpus;
use rpl_core::lang::{preprocess, preprocess_symbolic, Profile, Program};
use rpl_core::parser::parse;
use rpl_core::{peak, sim, time};

fn load(src: &str, p: &Profile) -> Program {
    parse(&preprocess(src, p).unwrap()).unwrap()
}

fn profile(efficiency: u32, availability: u32, cases: u32, sims: u32, seed: u64) -> Profile {
    Profile {
        efficiency_pct: efficiency,
        availability_pct: availability,
        conc_cases: cases,
        num_sims: sims,
        seed,
        ..Profile::default()
    }
}

#[test]
fn every_example_simulates() {
    for ex in corpus::EXAMPLES {
        let p = profile(100, 100, 1, 3, 0);
        let r = sim::simulate_many(&load(ex.source, &p), &p, ex.name).unwrap();
        assert_eq!(r.sims, 3, "{}", ex.name);
    }
}

#[test]
fn peak_json_shape() {
    let p = profile(100, 100, 1, 5, 0);
    let r = peak::analyze(&load(corpus::SUPPLY, &p), &p, peak::DEFAULT_BUDGET).unwrap();
    let v = serde_json::to_value(&r).unwrap();
    assert_eq!(v["perCategory"]["Van"], serde_json::json!({"observed": 1, "exact": 1, "static": 1}));
    assert_eq!(v["truncated"], false);
}

#[test]
fn time_json_shape() {
    let r = time::solve(&parse(&preprocess_symbolic(corpus::SUPPLY, &Profile::default()).unwrap()).unwrap()).unwrap();
    let v = serde_json::to_value(&r).unwrap();
    assert!(v["sequential"].as_str().unwrap().contains("EFFICIENCY"));
    assert_eq!(v["evaluations"].as_array().unwrap().len(), 24);
}

#[test]
fn low_availability_still_finishes() {
    // A quarter of each group: two vans and drivers, one helper.
    let p = profile(100, 25, 2, 5, 3);
    let r = sim::simulate_many(&load(corpus::SUPPLY, &p), &p, "supply.rpl").unwrap();
    assert!(r.peaks["Helper"] <= 1 && r.peaks["Van"] <= 2);
}

#[test]
fn zero_availability_starves() {
    let p = profile(100, 0, 1, 1, 0);
    let err = sim::simulate_many(&load(corpus::SUPPLY, &p), &p, "supply.rpl").unwrap_err();
    assert!(err.to_string().contains("starvation"), "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn simulated_time_respects_the_sequential_bound(eff in 1u32..=100, cases in 1u32..=4, seed in 0u64..1000) {
        let p = profile(eff, 100, cases, 3, seed);
        let bound = time::solve(&parse(&preprocess_symbolic(corpus::SUPPLY, &p).unwrap()).unwrap()).unwrap().sequential;
        let r = sim::simulate_many(&load(corpus::SUPPLY, &p), &p, "supply.rpl").unwrap();
        for run in &r.runs {
            let v = time::check_bound(&bound, run.exec_time, eff, cases);
            prop_assert!(v.holds, "time {} > bound {}", run.exec_time, v.bound);
        }
    }

    #[test]
    fn aggregate_stats_are_ordered(eff in 10u32..=100, avail in 25u32..=100, cases in 1u32..=3, seed in 0u64..1000) {
        let p = profile(eff, avail, cases, 4, seed);
        let r = sim::simulate_many(&load(corpus::SUPPLY, &p), &p, "supply.rpl").unwrap();
        prop_assert!(r.time.min <= r.time.avg && r.time.avg <= r.time.max);
        prop_assert!(r.cost.min <= r.cost.avg && r.cost.avg <= r.cost.max);
        prop_assert_eq!(r.violations.total as usize, r.runs.iter().map(|x| x.total_violations() as usize).sum::<usize>());
    }

    #[test]
    fn static_bound_dominates_observed(cases in 1u32..=6, avail in 25u32..=100) {
        let p = profile(100, avail, cases, 5, 0);
        let prog = load(corpus::SUPPLY, &p);
        let observed = peak::observed_peak(&prog, &p).unwrap();
        let bound = peak::static_peak_bound(&prog, &p).unwrap();
        for (c, n) in observed {
            prop_assert!(n <= bound[&c], "{}: {} > {}", c, n, bound[&c]);
        }
    }
}
