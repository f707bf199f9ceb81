use std::collections::{BTreeMap, HashSet};
use std::io::BufRead;

use forge_core::{parse, MatchMode};
use serde::{Deserialize, Serialize};

use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskSource {
    Oss,
    Regexlib,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositionTask {
    pub id: String,
    pub ground_truth: String,
    pub positives: Vec<String>,
    pub negatives: Vec<String>,
    pub source: TaskSource,
    /// Overrides the run's match mode for this task.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<MatchMode>,
}

impl CompositionTask {
    pub fn suite_size(&self) -> usize {
        self.positives.len() + self.negatives.len()
    }

    pub fn positive_ratio(&self) -> f64 {
        self.positives.len() as f64 / self.suite_size() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExclusionReason {
    NoPositive,
    NoNegative,
    /// The same string is listed as positive and negative.
    Contradictory,
    GroundTruthParseError,
    GroundTruthUnsupported,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub id: String,
    pub reason: ExclusionReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub tasks: Vec<CompositionTask>,
    pub excluded: Vec<Exclusion>,
    pub malformed_lines: usize,
}

impl LoadReport {
    pub fn exclusion_counts(&self) -> BTreeMap<ExclusionReason, usize> {
        let mut m = BTreeMap::new();
        for e in &self.excluded {
            *m.entry(e.reason).or_insert(0) += 1;
        }
        m
    }
}

fn exclusion(task: &CompositionTask) -> Option<ExclusionReason> {
    if task.positives.is_empty() {
        return Some(ExclusionReason::NoPositive);
    }
    if task.negatives.is_empty() {
        return Some(ExclusionReason::NoNegative);
    }
    let pos: HashSet<&String> = task.positives.iter().collect();
    if task.negatives.iter().any(|n| pos.contains(n)) {
        return Some(ExclusionReason::Contradictory);
    }
    match parse(&task.ground_truth) {
        Ok(_) => None,
        Err(e) if e.is_unsupported() => Some(ExclusionReason::GroundTruthUnsupported),
        Err(_) => Some(ExclusionReason::GroundTruthParseError),
    }
}

/// Reads task JSONL. Lines that are not task records are counted and
/// skipped; a repeated id is an error.
pub fn load_tasks(reader: impl BufRead) -> Result<LoadReport, BenchError> {
    let mut report = LoadReport::default();
    let mut ids = HashSet::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let Ok(task) = serde_json::from_str::<CompositionTask>(&line) else {
            report.malformed_lines += 1;
            continue;
        };
        if !ids.insert(task.id.clone()) {
            return Err(BenchError::DuplicateTask(task.id));
        }
        match exclusion(&task) {
            Some(reason) => report.excluded.push(Exclusion { id: task.id, reason }),
            None => report.tasks.push(task),
        }
    }
    Ok(report)
}

pub fn write_tasks<'a>(
    mut w: impl std::io::Write,
    tasks: impl IntoIterator<Item = &'a CompositionTask>,
) -> Result<(), BenchError> {
    for t in tasks {
        serde_json::to_writer(&mut w, t)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Median number of example strings per task.
pub fn median_suite_size(tasks: &[CompositionTask]) -> Option<f64> {
    let sizes: Vec<f64> = tasks.iter().map(|t| t.suite_size() as f64).collect();
    crate::stats::percentile(&sizes, 0.5)
}
