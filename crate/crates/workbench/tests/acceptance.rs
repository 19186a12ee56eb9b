//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

mod support;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use rpl_core::corpus;
use rpl_core::lang::{preprocess, preprocess_symbolic, strip_spans, Profile, Program, Rational, Tool};
use rpl_core::parser::{self, pretty};
use rpl_core::peak::{self, PeakReport, DEFAULT_BUDGET};
use rpl_core::sim::{self, CallSite};
use rpl_core::time;

use support::Client;

const PARSE_LIMIT: Duration = Duration::from_secs(1);
const PEAK_LIMIT_SMALL: Duration = Duration::from_secs(30);
const ORACLE_SEEDS: u64 = 40;

type Outcome = Result<String, String>;
type Criterion = (&'static str, Box<dyn FnOnce() -> Outcome>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn load(src: &str, profile: &Profile) -> Program {
    parser::parse(&preprocess(src, profile).unwrap()).unwrap()
}

fn profile(efficiency: u32, cases: u32, sims: u32, seed: u64) -> Profile {
    Profile {
        tool: Tool::Simulate,
        efficiency_pct: efficiency,
        availability_pct: 100,
        conc_cases: cases,
        num_sims: sims,
        seed,
    }
}

fn parse_fidelity() -> Outcome {
    let start = Instant::now();
    let text = preprocess(corpus::SUPPLY, &Profile::default()).map_err(|e| e.to_string())?;
    let out = parser::parse_with_diagnostics(&text);
    ensure(out.program.is_some() && out.diagnostics.is_empty(), || format!("supply.rpl diagnostics: {:?}", out.diagnostics))?;
    for ex in corpus::EXAMPLES {
        let mut a = parser::parse(&preprocess(ex.source, &Profile::default()).unwrap()).map_err(|d| format!("{}: {d:?}", ex.name))?;
        let mut b = parser::parse(&pretty(&a)).map_err(|d| format!("{} pretty output: {d:?}", ex.name))?;
        strip_spans(&mut a);
        strip_spans(&mut b);
        ensure(a == b, || format!("{} changes shape after pretty-print", ex.name))?;
    }
    let took = start.elapsed();
    ensure(took < PARSE_LIMIT, || format!("took {took:?}"))?;
    Ok(format!("0 diagnostics, {} files round-trip, {took:.0?}", corpus::EXAMPLES.len()))
}

fn trace_oracle() -> Outcome {
    let p = profile(100, 1, ORACLE_SEEDS as u32, 0);
    let r = sim::simulate_many(&load(corpus::SUPPLY, &p), &p, "supply.rpl").map_err(|e| e.to_string())?;
    let site = CallSite {
        method: "check_goods".into(),
        line: 12,
    };
    let (mut in_stock, mut restock) = (0, 0);
    for run in &r.runs {
        ensure(run.random_draws.len() == 1, || format!("seed {}: draws {:?}", run.seed, run.random_draws))?;
        ensure(run.violations == BTreeMap::from([(site.clone(), 1)]), || format!("seed {}: violations {:?}", run.seed, run.violations))?;
        match run.random_draws[0] {
            1 => {
                in_stock += 1;
                ensure(run.exec_time == 200, || format!("seed {}: random 1 gave time {}", run.seed, run.exec_time))?;
            }
            _ => {
                restock += 1;
                ensure(run.exec_time == 400 && run.financial_cost == Rational::from_integer(2_212_500), || {
                    format!("seed {}: random 0 gave time {} cost {}", run.seed, run.exec_time, run.financial_cost)
                })?;
            }
        }
    }
    ensure(in_stock > 0 && restock > 0, || format!("only one branch exercised ({in_stock}/{restock})"))?;
    Ok(format!("{in_stock} runs at 200, {restock} runs at 400 / 2212500, one check_goods violation each"))
}

fn aggregation() -> Outcome {
    let p = profile(100, 1, 10, 0);
    let r = sim::simulate_many(&load(corpus::SUPPLY, &p), &p, "supply.rpl").map_err(|e| e.to_string())?;
    ensure(r.violations.total == 10, || format!("violations.total = {}", r.violations.total))?;
    let ok = |v: Rational| v == Rational::from_integer(200) || v == Rational::from_integer(400);
    ensure(ok(r.time.min) && ok(r.time.max), || format!("time min {} max {}", r.time.min, r.time.max))?;
    for (name, s) in [("time", &r.time), ("cost", &r.cost)] {
        ensure(s.min <= s.avg && s.avg <= s.max, || format!("{name}: {} <= {} <= {} fails", s.min, s.avg, s.max))?;
    }
    Ok(format!("total 10, time {}..{} avg {}", r.time.min, r.time.max, r.time.avg))
}

fn determinism() -> Outcome {
    let p = profile(80, 2, 10, 42);
    let prog = load(corpus::SUPPLY, &p);
    let a = sim::simulate_many(&prog, &p, "supply.rpl").map_err(|e| e.to_string())?;
    let b = sim::simulate_many(&prog, &p, "supply.rpl").map_err(|e| e.to_string())?;
    let (ja, jb) = (serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    ensure(ja == jb, || "aggregate JSON differs".into())?;
    ensure(a.runs == b.runs, || "per-run results differ".into())?;
    Ok(format!("{} bytes identical", ja.len()))
}

fn peak_report(src: &str, cases: u32) -> Result<(PeakReport, Duration), String> {
    let p = Profile {
        tool: Tool::Peak,
        num_sims: 20,
        ..profile(100, cases, 20, 0)
    };
    let start = Instant::now();
    let r = peak::analyze(&load(src, &p), &p, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    Ok((r, start.elapsed()))
}

fn peak_sandwich() -> Outcome {
    let mut notes = Vec::new();
    let cases = [(corpus::SUPPLY, "supply", 1), (corpus::SUPPLY, "supply", 2), (corpus::SUPPLY, "supply", 4), (corpus::PARALLEL_HOLDS, "parallel", 1), (corpus::CHAINED_HOLDS, "chained", 1)];
    for (src, name, n) in cases {
        let (r, took) = peak_report(src, n)?;
        for (c, p) in &r.per_category {
            ensure(p.observed <= p.exact && p.exact <= p.static_bound, || format!("{name} cases={n} {c}: {p:?}"))?;
        }
        ensure(!r.truncated, || format!("{name} cases={n}: exhaustive search truncated"))?;
        if n <= 2 {
            ensure(took < PEAK_LIMIT_SMALL, || format!("{name} cases={n} took {took:?}"))?;
        }
        if name == "supply" && n == 1 {
            for c in ["Van", "Driver", "Helper"] {
                let p = r.per_category[c];
                ensure((p.observed, p.exact, p.static_bound) == (1, 1, 1), || format!("cases=1 {c}: {p:?}"))?;
            }
        }
        let cell: Vec<String> = r.per_category.iter().map(|(c, p)| format!("{c} {}/{}/{}", p.observed, p.exact, p.static_bound)).collect();
        notes.push(format!("{name}@{n} [{}] {took:.1?}", cell.join(" ")));
    }
    Ok(notes.join("; "))
}

fn time_bound_soundness() -> Outcome {
    let expected = [((100, 1), 400), ((100, 8), 3200), ((70, 1), 570), ((70, 4), 2280)];
    let mut worst = Vec::new();
    for ((eff, cases), want) in expected {
        let p = profile(eff, cases, 20, 0);
        let report = time::solve(&parser::parse(&preprocess_symbolic(corpus::SUPPLY, &p).unwrap()).unwrap()).map_err(|e| e.to_string())?;
        let at = report.at(eff, cases);
        ensure(at.sequential == want, || format!("({eff},{cases}): bound {} expected {want}", at.sequential))?;
        let r = sim::simulate_many(&load(corpus::SUPPLY, &p), &p, "supply.rpl").map_err(|e| e.to_string())?;
        for run in &r.runs {
            let v = time::check_bound(&report.sequential, run.exec_time, eff, cases);
            ensure(v.holds, || format!("({eff},{cases}) seed {}: time {} > bound {}", run.seed, run.exec_time, v.bound))?;
        }
        let max = r.runs.iter().map(|x| x.exec_time).max().unwrap_or(0);
        worst.push(format!("({eff},{cases}) {max}<={want}"));
    }
    Ok(worst.join(" "))
}

fn monotonicity() -> Outcome {
    let mut seen = Vec::new();
    for seed in 0..5u64 {
        let mut prev = 0;
        let mut row = Vec::new();
        for eff in (50..=100).rev().step_by(10) {
            let p = profile(eff, 1, 1, seed);
            let t = sim::simulate_many(&load(corpus::SUPPLY, &p), &p, "supply.rpl").map_err(|e| e.to_string())?.runs[0].exec_time;
            ensure(t >= prev, || format!("seed {seed}: efficiency {eff} gave {t} after {prev}"))?;
            prev = t;
            row.push(t.to_string());
        }
        seen.push(format!("seed {seed}: {}", row.join(",")));
    }
    Ok(seen.join("; "))
}

async fn service_contract() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("runs.jsonl");
    let client = Client::open(&path);
    let (s, body) = client.get("/api/runs").await;
    ensure(s == 200 && body == "[]", || format!("empty list: {s} {body}"))?;
    let run = json!({
        "source": corpus::SUPPLY,
        "fileName": "supply.rpl",
        "tool": "simulate",
        "profile": {"efficiencyPct": 100, "availabilityPct": 100, "concCases": 1, "numSims": 10, "seed": 7}
    });
    let (s, created) = client.post("/api/runs", run.clone()).await;
    ensure(s == 201, || format!("POST: {s} {created}"))?;
    let v: Value = serde_json::from_str(&created).map_err(|e| e.to_string())?;
    ensure(v["violations"]["total"] == 10, || format!("violations: {}", v["violations"]))?;
    let id = v["execId"].as_str().unwrap_or_default().to_string();
    let (s, again) = client.post("/api/runs", run).await;
    ensure(s == 201, || format!("second POST: {s}"))?;
    let second: Value = serde_json::from_str(&again).unwrap();
    ensure(second["execId"] != id.as_str(), || "repeat run reused the execution id".into())?;
    let (_, fetched) = client.get(&format!("/api/runs/{id}")).await;
    ensure(fetched == created, || "GET differs from POST body".into())?;
    let (_, listing) = client.get("/api/runs").await;
    drop(client);

    let client = Client::open(&path);
    let (_, fetched) = client.get(&format!("/api/runs/{id}")).await;
    ensure(fetched == created, || "GET after restart differs from POST body".into())?;
    let (_, relisting) = client.get("/api/runs").await;
    ensure(relisting == listing, || "overview changed across restart".into())?;

    let (s, body) = client.post("/api/runs", json!({"source": "module M;\n{ Int x = ; }", "tool": "simulate"})).await;
    let diags = serde_json::from_str::<Value>(&body).ok().and_then(|v| v["diagnostics"].as_array().map(Vec::len)).unwrap_or(0);
    ensure(s == 400 && diags > 0, || format!("parse failure: {s} {body}"))?;
    let (s, _) = client.get("/api/runs/deadbeef").await;
    ensure(s == 404, || format!("unknown id: {s}"))?;
    let (s, body) = client.post("/api/runs", json!({"source": corpus::SUPPLY, "tool": "simulate", "profile": {"efficiencyPct": 0, "numSims": "many"}})).await;
    ensure(s == 422 && body.contains("efficiencyPct") && body.contains("numSims"), || format!("bad profile: {s} {body}"))?;
    let (_, after) = client.get("/api/runs").await;
    ensure(after == listing, || "failed runs changed the store".into())?;
    Ok(format!("201 + byte-identical GET across restart ({} bytes), 400/404/422", created.len()))
}

fn main() {
    let runtime = tokio::runtime::Runtime::new().unwrap();
    let criteria: Vec<Criterion> = vec![
        ("parse fidelity", Box::new(parse_fidelity)),
        ("trace oracle", Box::new(trace_oracle)),
        ("aggregation", Box::new(aggregation)),
        ("determinism", Box::new(determinism)),
        ("peak sandwich", Box::new(peak_sandwich)),
        ("time-bound soundness", Box::new(time_bound_soundness)),
        ("monotonicity", Box::new(monotonicity)),
        ("service contract", Box::new(move || runtime.block_on(service_contract()))),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  {name:<22} {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name:<22} {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
