mod support;

use std::time::Duration;

use serde_json::{json, Value};

use rpl_core::corpus;

use support::Client;

fn parse(body: &str) -> Value {
    serde_json::from_str(body).unwrap()
}

fn store() -> (tempfile::TempDir, std::path::PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("runs.jsonl");
    (dir, path)
}

#[tokio::test]
async fn examples_are_listed_and_fetched() {
    let (_d, path) = store();
    let c = Client::open(&path);
    let (s, body) = c.get("/api/examples").await;
    assert_eq!(s, 200);
    assert!(parse(&body).as_array().unwrap().iter().any(|e| e["name"] == "supply.rpl"));
    let (s, body) = c.get("/api/examples/supply.rpl").await;
    assert_eq!(s, 200);
    assert_eq!(parse(&body)["source"], corpus::SUPPLY);
    let (s, _) = c.get("/api/examples/nope.rpl").await;
    assert_eq!(s, 404);
}

#[tokio::test]
async fn presets_cover_every_tool() {
    let (_d, path) = store();
    let (_, body) = Client::open(&path).get("/api/presets").await;
    let tools: std::collections::BTreeSet<_> = parse(&body).as_array().unwrap().iter().map(|p| p["tool"].as_str().unwrap().to_string()).collect();
    assert_eq!(tools.into_iter().collect::<Vec<_>>(), ["peak", "simulate", "time"]);
}

#[tokio::test]
async fn outline_reports_classes_and_diagnostics() {
    let (_d, path) = store();
    let c = Client::open(&path);
    let src = "module M;\ninterface I { Int a(); }\nclass C implements I {\n  Int a() { return 1; }\n}\n{ }";
    let q: String = src.bytes().map(|b| format!("%{b:02X}")).collect();
    let (s, body) = c.get(&format!("/api/outline?source={q}")).await;
    assert_eq!(s, 200, "{body}");
    let kinds: Vec<_> = parse(&body)["outline"].as_array().unwrap().iter().map(|e| e["kind"].as_str().unwrap().to_string()).collect();
    assert_eq!(kinds, ["interface", "class", "method"]);
    let (s, body) = c.get("/api/outline?source=module%20M%3B%20%7B").await;
    assert_eq!(s, 400);
    assert!(!parse(&body)["diagnostics"].as_array().unwrap().is_empty());
}

#[tokio::test]
async fn peak_and_time_runs_are_recorded() {
    let (_d, path) = store();
    let c = Client::open(&path);
    let (s, body) = c.post("/api/runs", json!({"source": corpus::SUPPLY, "fileName": "supply.rpl", "tool": "peak", "profile": {"concCases": 2}})).await;
    assert_eq!(s, 201, "{body}");
    assert_eq!(parse(&body)["perCategory"]["Helper"]["exact"], 2);
    let (s, body) = c.post("/api/runs", json!({"source": corpus::SUPPLY, "fileName": "supply.rpl", "tool": "time", "profile": {"efficiencyPct": 70, "concCases": 4}})).await;
    assert_eq!(s, 201, "{body}");
    assert_eq!(parse(&body)["atProfile"]["sequential"], 2280);
    let (_, rows) = c.get("/api/runs").await;
    let rows = parse(&rows);
    assert_eq!(rows.as_array().unwrap().len(), 2);
    assert_eq!(rows[0]["tool"], "time", "newest first");
    assert!(rows[0]["time"].is_null());
}

#[tokio::test]
async fn overview_row_has_the_eight_columns() {
    let (_d, path) = store();
    let c = Client::open(&path);
    c.post("/api/runs", json!({"source": corpus::SUPPLY, "fileName": "supply.rpl", "profile": {"numSims": 4}})).await;
    let (_, rows) = c.get("/api/runs").await;
    let row = &parse(&rows)[0];
    for col in ["execId", "file", "executions", "efficiency", "availability", "cases", "time", "cost"] {
        assert!(!row[col].is_null(), "{col}");
    }
    assert_eq!(row["executions"], 4);
    assert!(row["time"]["avg"].is_string());
}

#[tokio::test]
async fn model_errors_are_500_with_context() {
    let (_d, path) = store();
    let c = Client::open(&path);
    let src = "module M;\n{\n  List<Int> l = Nil;\n  Int x = head(l);\n}";
    let (s, body) = c.post("/api/runs", json!({"source": src, "fileName": "bad.rpl"})).await;
    assert_eq!(s, 500);
    let v = parse(&body);
    assert_eq!(v["context"]["file"], "bad.rpl");
    assert!(v["message"].as_str().unwrap().contains("line 4"));
    assert_eq!(c.get("/api/runs").await.1, "[]");
}

#[tokio::test]
async fn slow_runs_time_out() {
    let (_d, path) = store();
    let c = Client::with_timeout(&path, Duration::from_millis(1));
    let (s, _) = c.post("/api/runs", json!({"source": corpus::SUPPLY, "tool": "peak", "profile": {"concCases": 3}})).await;
    assert_eq!(s, 504);
}

#[tokio::test]
async fn malformed_body_is_400() {
    let (_d, path) = store();
    let (s, _) = Client::open(&path).send(axum::http::Method::POST, "/api/runs", Some("{not json".into())).await;
    assert_eq!(s, 400);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_runs_get_distinct_ids() {
    let (_d, path) = store();
    let c = std::sync::Arc::new(Client::open(&path));
    let mut handles = Vec::new();
    for _ in 0..8 {
        let c = c.clone();
        handles.push(tokio::spawn(async move {
            let (s, body) = c.post("/api/runs", json!({"source": corpus::SUPPLY, "profile": {"numSims": 2}})).await;
            assert_eq!(s, 201);
            parse(&body)["execId"].as_str().unwrap().to_string()
        }));
    }
    let mut ids = Vec::new();
    for h in handles {
        ids.push(h.await.unwrap());
    }
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), 8);
    let lines = std::fs::read_to_string(&path).unwrap().lines().count();
    assert_eq!(lines, 8);
}

#[tokio::test]
async fn chart_series_follow_history() {
    let (_d, path) = store();
    let c = Client::open(&path);
    c.post("/api/runs", json!({"source": corpus::SUPPLY_RESTOCK, "fileName": "supply_restock.rpl", "profile": {"numSims": 1}})).await;
    let (_, body) = c.get("/api/charts").await;
    let v = parse(&body);
    assert_eq!(v["avgCost"][0]["display"], 2.2125);
    assert_eq!(v["avgTime"][0]["value"], 400.0);
}
