//! Bar chart series over the run history: average time and average cost per run.

use serde::{Deserialize, Serialize};

use crate::store::RunRecord;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Point {
    pub exec_id: String,
    pub value: f64,
    /// `value` scaled for the axis label.
    pub display: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ChartSeries {
    pub avg_time: Vec<Point>,
    pub avg_cost: Vec<Point>,
    pub cost_unit: &'static str,
}

#[derive(Deserialize)]
struct Stats {
    #[serde(rename = "avgExact")]
    avg_exact: String,
}

fn avg(stats: &serde_json::value::RawValue) -> Option<f64> {
    let s: Stats = serde_json::from_str(stats.get()).ok()?;
    let (n, d) = s.avg_exact.split_once('/')?;
    Some(n.parse::<f64>().ok()? / d.parse::<f64>().ok()?)
}

/// Simulation runs only, in insertion order.
pub fn chart_series(records: &[RunRecord]) -> ChartSeries {
    let mut out = ChartSeries {
        avg_time: Vec::new(),
        avg_cost: Vec::new(),
        cost_unit: "millions",
    };
    for r in records {
        let (Some(t), Some(c)) = (r.time_stats.as_deref().and_then(avg), r.cost_stats.as_deref().and_then(avg)) else {
            continue;
        };
        out.avg_time.push(Point {
            exec_id: r.exec_id.clone(),
            value: t,
            display: t,
        });
        out.avg_cost.push(Point {
            exec_id: r.exec_id.clone(),
            value: c,
            display: c / 1_000_000.0,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::value::RawValue;

    fn record(id: &str, time: &str, cost: &str) -> RunRecord {
        let stats = |avg: &str| Some(RawValue::from_string(format!(r#"{{"min":0,"max":0,"avg":"0","avgExact":"{avg}"}}"#)).unwrap());
        RunRecord {
            exec_id: id.into(),
            source_file_name: "m.rpl".into(),
            tool: "simulate".into(),
            num_sims: 1,
            efficiency_pct: 100,
            availability_pct: 100,
            conc_cases: 1,
            time_stats: stats(time),
            cost_stats: stats(cost),
            created_at: 0,
            payload: RawValue::from_string("{}".into()).unwrap(),
        }
    }

    #[test]
    fn empty_history() {
        let s = chart_series(&[]);
        assert!(s.avg_time.is_empty() && s.avg_cost.is_empty());
    }

    #[test]
    fn cost_is_scaled_to_millions() {
        let s = chart_series(&[record("a", "400/1", "2212500/1")]);
        assert_eq!(s.avg_cost[0].display, 2.2125);
        assert_eq!(s.avg_time[0].value, 400.0);
    }

    #[test]
    fn order_follows_history() {
        let s = chart_series(&[record("a", "1/1", "1/1"), record("b", "3/2", "1/1"), record("c", "1/1", "1/1")]);
        let ids: Vec<_> = s.avg_time.iter().map(|p| p.exec_id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        assert_eq!(s.avg_time[1].value, 1.5);
    }
}
