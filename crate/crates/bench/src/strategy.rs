use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use forge_core::{MatchMode, MeasureSettings};
use forge_store::{run_query, Query, QueryOptions, Rank, Source, Store};
use serde::{Deserialize, Serialize};

use crate::task::CompositionTask;

#[derive(Debug, Clone, PartialEq)]
pub struct Composition {
    pub candidates: Vec<String>,
    /// Wall time until the full candidate set was available.
    pub compose_time: Duration,
    /// Latency to the first working candidate, when the strategy reports it.
    pub first_success: Option<Duration>,
}

/// A way of producing candidate regexes for a task.
pub trait Strategy: Sync {
    fn id(&self) -> &str;
    fn compose(&self, task: &CompositionTask, mode: MatchMode) -> Result<Composition, String>;
}

/// Reuse by example against a store, with the task's own ground truth
/// removed from view.
pub struct ReuseStrategy<'a> {
    pub name: String,
    pub store: &'a Store,
    pub sources: Option<BTreeSet<Source>>,
    pub settings: MeasureSettings,
}

impl<'a> ReuseStrategy<'a> {
    pub fn new(store: &'a Store) -> Self {
        Self { name: "reuse".into(), store, sources: None, settings: MeasureSettings::default() }
    }

    /// Restricted to one corpus source, as in the per-source ablation.
    pub fn only(store: &'a Store, source: Source) -> Self {
        Self {
            name: format!("reuse-{source}"),
            store,
            sources: Some(BTreeSet::from([source])),
            settings: MeasureSettings::default(),
        }
    }
}

impl Strategy for ReuseStrategy<'_> {
    fn id(&self) -> &str {
        &self.name
    }

    fn compose(&self, task: &CompositionTask, mode: MatchMode) -> Result<Composition, String> {
        let started = Instant::now();
        let mut q = Query::new(task.positives.iter().cloned(), task.negatives.iter().cloned())
            .map_err(|e| e.to_string())?;
        q.mode = mode;
        q.rank = Rank::None;
        q.sources = self.sources.clone();
        q.exclusions = vec![task.ground_truth.clone()];
        let opts = QueryOptions { settings: self.settings, ..Default::default() };
        let out = run_query(&self.store.view(), &q, &opts);
        Ok(Composition {
            candidates: out.candidates.into_iter().map(|c| c.entry.pattern).collect(),
            compose_time: started.elapsed(),
            first_success: None,
        })
    }
}

#[derive(Debug, Serialize)]
struct AdapterRequest<'a> {
    positives: &'a [String],
    negatives: &'a [String],
    timeout_ms: u64,
}

#[derive(Debug, Deserialize)]
struct AdapterResponse {
    candidates: Vec<String>,
    #[serde(default)]
    first_success_ms: Option<f64>,
}

/// Runs an external program once per task: request JSON on stdin, response
/// JSON on stdout. The child is killed when it outlives the timeout.
#[derive(Debug, Clone)]
pub struct ExternalStrategy {
    pub name: String,
    pub program: String,
    pub args: Vec<String>,
    pub timeout: Duration,
}

const POLL_INTERVAL: Duration = Duration::from_millis(5);

impl Strategy for ExternalStrategy {
    fn id(&self) -> &str {
        &self.name
    }

    fn compose(&self, task: &CompositionTask, _mode: MatchMode) -> Result<Composition, String> {
        let request = serde_json::to_vec(&AdapterRequest {
            positives: &task.positives,
            negatives: &task.negatives,
            timeout_ms: self.timeout.as_millis() as u64,
        })
        .map_err(|e| e.to_string())?;
        let started = Instant::now();
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| format!("spawn {}: {e}", self.program))?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let writer = thread::spawn(move || {
            // A child that exits without reading its input is not an error here.
            let _ = stdin.write_all(&request);
        });
        let mut stdout = child.stdout.take().expect("piped stdout");
        let reader = thread::spawn(move || {
            let mut buf = Vec::new();
            stdout.read_to_end(&mut buf).map(|_| buf)
        });
        let status = loop {
            match child.try_wait().map_err(|e| e.to_string())? {
                Some(status) => break status,
                None if started.elapsed() >= self.timeout => {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(format!("timed out after {} ms", self.timeout.as_millis()));
                }
                None => thread::sleep(POLL_INTERVAL),
            }
        };
        let compose_time = started.elapsed();
        let _ = writer.join();
        let out = reader.join().map_err(|_| "reader panicked".to_string())?.map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("exited with {status}"));
        }
        let resp: AdapterResponse =
            serde_json::from_slice(&out).map_err(|e| format!("invalid response: {e}"))?;
        Ok(Composition {
            candidates: resp.candidates,
            compose_time,
            first_success: resp.first_success_ms.map(|ms| Duration::from_secs_f64(ms.max(0.0) / 1000.0)),
        })
    }
}
