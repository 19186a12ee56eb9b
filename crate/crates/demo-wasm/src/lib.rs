//! Browser bindings. Each export takes model source plus profile numbers and
//! returns the tool's JSON result; failures are thrown as JS strings.

use wasm_bindgen::prelude::*;

use rpl_core::lang::{preprocess, preprocess_symbolic, Profile, Program, Tool};
use rpl_core::parser;
use rpl_core::peak;
use rpl_core::sim;
use rpl_core::time;

/// Keeps the page responsive: the exhaustive search gives up sooner than on the CLI.
pub const DEMO_PEAK_BUDGET: u64 = 200_000;

fn profile(tool: Tool, efficiency: u32, availability: u32, cases: u32, sims: u32, seed: u64) -> Result<Profile, String> {
    let p = Profile {
        tool,
        efficiency_pct: efficiency,
        availability_pct: availability,
        conc_cases: cases,
        num_sims: sims,
        seed,
    };
    p.validate()
        .map_err(|es| es.iter().map(|e| format!("{}: {}", e.field, e.message)).collect::<Vec<_>>().join("\n"))?;
    Ok(p)
}

fn parse(text: Result<String, rpl_core::lang::PreprocessError>) -> Result<Program, String> {
    let text = text.map_err(|e| e.to_string())?;
    parser::parse(&text).map_err(|ds| ds.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"))
}

pub fn simulate_json(source: &str, efficiency: u32, availability: u32, cases: u32, sims: u32, seed: u64) -> Result<String, String> {
    let p = profile(Tool::Simulate, efficiency, availability, cases, sims, seed)?;
    let prog = parse(preprocess(source, &p))?;
    let r = sim::simulate_many(&prog, &p, "editor.rpl").map_err(|e| e.to_string())?;
    Ok(serde_json::to_string(&r).expect("aggregate serializes"))
}

pub fn peak_json(source: &str, availability: u32, cases: u32) -> Result<String, String> {
    let p = profile(Tool::Peak, 100, availability, cases, 10, 0)?;
    let prog = parse(preprocess(source, &p))?;
    let r = peak::analyze(&prog, &p, DEMO_PEAK_BUDGET).map_err(|e| e.to_string())?;
    Ok(serde_json::to_string(&r).expect("report serializes"))
}

pub fn time_json(source: &str) -> Result<String, String> {
    let prog = parse(preprocess_symbolic(source, &Profile::default()))?;
    let r = time::solve(&prog).map_err(|e| e.to_string())?;
    Ok(serde_json::to_string(&r).expect("report serializes"))
}

#[wasm_bindgen]
pub fn simulate(source: &str, efficiency: u32, availability: u32, cases: u32, sims: u32, seed: u32) -> Result<String, JsValue> {
    simulate_json(source, efficiency, availability, cases, sims, seed as u64).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn peak(source: &str, availability: u32, cases: u32) -> Result<String, JsValue> {
    peak_json(source, availability, cases).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn time_bounds(source: &str) -> Result<String, JsValue> {
    time_json(source).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn example_source() -> String {
    rpl_core::corpus::SUPPLY.to_string()
}
