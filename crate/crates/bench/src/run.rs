use std::collections::BTreeMap;
use std::time::Duration;

use forge_core::automaton::build_nfa_with;
use forge_core::metrics::{measure, Candidate, Reference};
use forge_core::{parse, pattern_length, Matcher, MeasureSettings, MetricBundle};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::stats::{mean, variance};
use crate::strategy::Strategy;
use crate::task::CompositionTask;

/// Per-candidate metrics summarized per task.
pub const METRICS: [&str; 7] = [
    "accuracy",
    "semantic_similarity",
    "pattern_length",
    "feature_count",
    "ted_to_ground",
    "nfa_size",
    "strictness",
];

pub fn metric_value(b: &MetricBundle, name: &str) -> Option<f64> {
    match name {
        "accuracy" => Some(b.accuracy),
        "semantic_similarity" => b.semantic_similarity,
        "pattern_length" => Some(b.pattern_length as f64),
        "feature_count" => Some(b.feature_count as f64),
        "ted_to_ground" => b.ted_to_ground.map(|v| v as f64),
        "nfa_size" => b.nfa_size.map(|v| v as f64),
        "strictness" => b.strictness,
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundMetrics {
    pub pattern_length: usize,
    pub feature_count: usize,
    pub nfa_size: Option<usize>,
}

impl GroundMetrics {
    pub fn value(&self, name: &str) -> Option<f64> {
        match name {
            "pattern_length" => Some(self.pattern_length as f64),
            "feature_count" => Some(self.feature_count as f64),
            "nfa_size" => self.nfa_size.map(|v| v as f64),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub task_id: String,
    pub strategy: String,
    pub suite_size: usize,
    pub success: bool,
    pub compose_time_ms: f64,
    pub first_success_ms: Option<f64>,
    pub candidate_count: usize,
    pub candidates: Vec<MetricBundle>,
    /// Candidates that did not parse; they are not measured.
    pub invalid_candidates: usize,
    /// Whether the ground truth itself was among the candidates.
    pub leaked: bool,
    pub ground: GroundMetrics,
    pub means: BTreeMap<String, f64>,
    /// Absent for tasks with fewer than two candidates.
    pub variances: BTreeMap<String, f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy)]
pub struct RunConfig {
    pub settings: MeasureSettings,
    pub workers: usize,
    /// Measure at most this many candidates per task, in the order given.
    pub max_candidates: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            settings: MeasureSettings::default(),
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            max_candidates: None,
        }
    }
}

fn summarize(bundles: &[MetricBundle]) -> (BTreeMap<String, f64>, BTreeMap<String, f64>) {
    let mut means = BTreeMap::new();
    let mut variances = BTreeMap::new();
    for name in METRICS {
        let values: Vec<f64> = bundles.iter().filter_map(|b| metric_value(b, name)).collect();
        if let Some(m) = mean(&values) {
            means.insert(name.to_string(), m);
        }
        if values.len() >= 2 {
            variances.insert(name.to_string(), variance(&values).expect("non-empty"));
        }
    }
    (means, variances)
}

/// Composes and measures one task. Strategy failures become records with an
/// error and no success.
pub fn run_task(strategy: &dyn Strategy, task: &CompositionTask, config: &RunConfig) -> TaskRecord {
    let settings = MeasureSettings { mode: task.mode.unwrap_or(config.settings.mode), ..config.settings };
    let ground = Reference::new(&task.ground_truth, &settings).ok();
    let ground_metrics = GroundMetrics {
        pattern_length: pattern_length(&task.ground_truth),
        feature_count: ground.as_ref().map_or(0, |g| g.ast.feature_count()),
        nfa_size: ground.as_ref().and_then(|g| g.nfa.as_ref()).map(|n| n.size()),
    };
    let mut record = TaskRecord {
        task_id: task.id.clone(),
        strategy: strategy.id().to_string(),
        suite_size: task.suite_size(),
        success: false,
        compose_time_ms: 0.0,
        first_success_ms: None,
        candidate_count: 0,
        candidates: Vec::new(),
        invalid_candidates: 0,
        leaked: false,
        ground: ground_metrics,
        means: BTreeMap::new(),
        variances: BTreeMap::new(),
        error: None,
    };
    let composition = match strategy.compose(task, settings.mode) {
        Ok(c) => c,
        Err(e) => {
            record.error = Some(format!("strategy-error: {e}"));
            return record;
        }
    };
    record.compose_time_ms = composition.compose_time.as_secs_f64() * 1000.0;
    record.first_success_ms = composition.first_success.map(|d| d.as_secs_f64() * 1000.0);
    record.candidate_count = composition.candidates.len();
    record.leaked = composition.candidates.contains(&task.ground_truth);
    let take = config.max_candidates.unwrap_or(usize::MAX);
    let measured: Vec<Option<MetricBundle>> = composition
        .candidates
        .iter()
        .take(take)
        .map(|pattern| {
            let ast = parse(pattern).ok()?;
            let nfa = build_nfa_with(&ast, &settings.nfa_options()).ok();
            let matcher = Matcher::new(&ast).ok();
            let c = Candidate { pattern, ast: &ast, matcher: matcher.as_ref(), nfa: nfa.as_ref() };
            measure(&c, ground.as_ref(), &task.positives, &task.negatives, Duration::ZERO, &settings).ok()
        })
        .collect();
    record.invalid_candidates = measured.iter().filter(|m| m.is_none()).count();
    let mut bundles: Vec<MetricBundle> = measured.into_iter().flatten().collect();
    for b in &mut bundles {
        b.generation_time_ms = record.compose_time_ms;
    }
    record.success = bundles.iter().any(|b| b.accuracy == 1.0);
    let (means, variances) = summarize(&bundles);
    record.means = means;
    record.variances = variances;
    record.candidates = bundles;
    record
}

/// Runs a strategy over tasks on a pool of `config.workers` threads.
/// Records come back in task order.
pub fn run_strategy(
    strategy: &dyn Strategy,
    tasks: &[CompositionTask],
    config: &RunConfig,
) -> Vec<TaskRecord> {
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(config.workers.max(1)).build().expect("thread pool");
    pool.install(|| tasks.par_iter().map(|t| run_task(strategy, t, config)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategy::Composition;
    use crate::task::TaskSource;
    use forge_core::MatchMode;

    struct Fixed(Vec<&'static str>);

    impl Strategy for Fixed {
        fn id(&self) -> &str {
            "fixed"
        }
        fn compose(&self, _: &CompositionTask, _: MatchMode) -> Result<Composition, String> {
            Ok(Composition {
                candidates: self.0.iter().map(|s| s.to_string()).collect(),
                compose_time: Duration::from_millis(3),
                first_success: None,
            })
        }
    }

    struct Broken;

    impl Strategy for Broken {
        fn id(&self) -> &str {
            "broken"
        }
        fn compose(&self, _: &CompositionTask, _: MatchMode) -> Result<Composition, String> {
            Err("no".into())
        }
    }

    fn task() -> CompositionTask {
        CompositionTask {
            id: "t".into(),
            ground_truth: "^a+$".into(),
            positives: vec!["a".into(), "aa".into()],
            negatives: vec!["b".into()],
            source: TaskSource::Oss,
            mode: None,
        }
    }

    #[test]
    fn measures_candidates() {
        let r = run_task(&Fixed(vec!["^a+$", "a", "b", "("]), &task(), &RunConfig::default());
        assert!(r.success && r.leaked);
        assert_eq!((r.candidate_count, r.candidates.len(), r.invalid_candidates), (4, 3, 1));
        assert_eq!(r.candidates[0].ted_to_ground, Some(0));
        assert_eq!(r.candidates[0].semantic_similarity, Some(1.0));
        let accs: Vec<f64> = r.candidates.iter().map(|b| b.accuracy).collect();
        assert_eq!(accs, vec![1.0, 1.0, 0.0]);
        assert!((r.means["accuracy"] - 2.0 / 3.0).abs() < 1e-12);
        assert!(r.variances.contains_key("accuracy"));
        // Thompson automaton for ^a+$: 7 states, 3 symbol edges, 5 epsilon edges.
        assert_eq!(r.ground, GroundMetrics { pattern_length: 4, feature_count: 4, nfa_size: Some(15) });
    }

    #[test]
    fn single_candidate_has_no_variance() {
        let r = run_task(&Fixed(vec!["a+"]), &task(), &RunConfig::default());
        assert!(r.variances.is_empty());
        assert_eq!(r.means["pattern_length"], 2.0);
    }

    #[test]
    fn strategy_errors_recorded() {
        let r = run_task(&Broken, &task(), &RunConfig::default());
        assert!(!r.success);
        assert_eq!(r.error.as_deref(), Some("strategy-error: no"));
    }
}
