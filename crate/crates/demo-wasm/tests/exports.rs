use rpl_core::corpus::SUPPLY;
use rpl_demo_wasm::{peak_json, simulate_json, time_json};

fn json(s: String) -> serde_json::Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn simulate_returns_aggregate() {
    let v = json(simulate_json(SUPPLY, 100, 100, 1, 10, 7).unwrap());
    assert_eq!(v["violations"]["total"], 10);
}

#[test]
fn peak_returns_sandwich() {
    let v = json(peak_json(SUPPLY, 100, 1).unwrap());
    assert_eq!(v["perCategory"]["Van"]["exact"], 1);
}

#[test]
fn time_returns_grid() {
    let v = json(time_json(SUPPLY).unwrap());
    let cell = v["evaluations"].as_array().unwrap().iter().find(|e| e["EFFICIENCY"] == 70 && e["CONC_CASES"] == 4).unwrap().clone();
    assert_eq!(cell["sequential"], 2280);
}

#[test]
fn errors_are_messages() {
    assert!(simulate_json("module M; {", 100, 100, 1, 1, 0).unwrap_err().contains("error"));
    assert!(simulate_json(SUPPLY, 0, 100, 1, 1, 0).unwrap_err().contains("efficiencyPct"));
}
