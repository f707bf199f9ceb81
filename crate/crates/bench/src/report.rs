use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::run::{TaskRecord, METRICS};
use crate::stats::Summary;
use crate::BenchError;

/// Non-functional metrics compared against the ground truth.
pub const GROUND_METRICS: [&str; 3] = ["pattern_length", "feature_count", "nfa_size"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSizeRow {
    pub suite_size: usize,
    pub tasks: usize,
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyReport {
    pub tasks: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub errors: usize,
    pub leaked_tasks: usize,
    /// Per-task means of candidate metrics, plus compose time and candidate
    /// count.
    pub distributions: BTreeMap<String, Summary>,
    /// Per-task mean candidate value minus the ground truth's value.
    pub ground_differences: BTreeMap<String, Summary>,
    /// Per-task variance across candidates, over tasks with two or more.
    pub variances: BTreeMap<String, Summary>,
    pub success_by_suite_size: Vec<SuiteSizeRow>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub strategies: BTreeMap<String, StrategyReport>,
}

fn summaries(values: BTreeMap<String, Vec<f64>>) -> BTreeMap<String, Summary> {
    values.into_iter().filter_map(|(k, v)| Summary::of(&v).map(|s| (k, s))).collect()
}

fn strategy_report(records: &[&TaskRecord]) -> StrategyReport {
    let tasks = records.len();
    let successes = records.iter().filter(|r| r.success).count();
    let mut dist: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut diffs: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut vars: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut by_size: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for r in records {
        let slot = by_size.entry(r.suite_size).or_default();
        slot.0 += 1;
        slot.1 += usize::from(r.success);
        if r.error.is_some() {
            continue;
        }
        dist.entry("compose_time_ms".into()).or_default().push(r.compose_time_ms);
        dist.entry("candidate_count".into()).or_default().push(r.candidate_count as f64);
        for name in METRICS {
            if let Some(&m) = r.means.get(name) {
                dist.entry(name.into()).or_default().push(m);
            }
            if let Some(&v) = r.variances.get(name) {
                vars.entry(name.into()).or_default().push(v);
            }
        }
        for name in GROUND_METRICS {
            if let (Some(&m), Some(g)) = (r.means.get(name), r.ground.value(name)) {
                diffs.entry(name.into()).or_default().push(m - g);
            }
        }
    }
    StrategyReport {
        tasks,
        successes,
        success_rate: if tasks == 0 { 0.0 } else { successes as f64 / tasks as f64 },
        errors: records.iter().filter(|r| r.error.is_some()).count(),
        leaked_tasks: records.iter().filter(|r| r.leaked).count(),
        distributions: summaries(dist),
        ground_differences: summaries(diffs),
        variances: summaries(vars),
        success_by_suite_size: by_size
            .into_iter()
            .map(|(suite_size, (n, ok))| SuiteSizeRow {
                suite_size,
                tasks: n,
                success_rate: ok as f64 / n as f64,
            })
            .collect(),
    }
}

/// Aggregates records per strategy. Independent of record order.
pub fn aggregate(records: &[TaskRecord]) -> Report {
    let mut by_strategy: BTreeMap<&str, Vec<&TaskRecord>> = BTreeMap::new();
    for r in records {
        by_strategy.entry(&r.strategy).or_default().push(r);
    }
    Report {
        strategies: by_strategy.into_iter().map(|(k, v)| (k.to_string(), strategy_report(&v))).collect(),
    }
}

impl Report {
    /// Rows of (strategy, family, metric, statistic, value).
    pub fn rows(&self) -> Vec<(String, &'static str, String, &'static str, f64)> {
        let mut rows = Vec::new();
        for (name, s) in &self.strategies {
            rows.push((name.clone(), "success", "tasks".into(), "count", s.tasks as f64));
            rows.push((name.clone(), "success", "success_rate".into(), "value", s.success_rate));
            rows.push((name.clone(), "success", "errors".into(), "count", s.errors as f64));
            for (family, map) in [
                ("distribution", &s.distributions),
                ("ground_difference", &s.ground_differences),
                ("variance", &s.variances),
            ] {
                for (metric, sum) in map {
                    for (stat, v) in [
                        ("count", sum.count as f64),
                        ("mean", sum.mean),
                        ("p10", sum.p10),
                        ("median", sum.median),
                        ("p90", sum.p90),
                    ] {
                        rows.push((name.clone(), family, metric.clone(), stat, v));
                    }
                }
            }
            for row in &s.success_by_suite_size {
                let metric = row.suite_size.to_string();
                rows.push((name.clone(), "success_by_suite_size", metric.clone(), "tasks", row.tasks as f64));
                rows.push((name.clone(), "success_by_suite_size", metric, "success_rate", row.success_rate));
            }
        }
        rows
    }

    pub fn write_csv(&self, w: impl std::io::Write) -> Result<(), BenchError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["strategy", "family", "metric", "statistic", "value"])?;
        for (strategy, family, metric, stat, value) in self.rows() {
            out.write_record([strategy.as_str(), family, metric.as_str(), stat, &value.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}
