//! Example-driven retrieval: every corpus entry that accepts all positives
//! and rejects all negatives, ranked by how much of its automaton the
//! examples exercise.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering as AtomicOrdering};
use std::time::{Duration, Instant};

use forge_core::metrics::{bundle, Accuracy, Candidate};
use forge_core::{MatchMode, MeasureSettings, MetricBundle, Verdict};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entry::{RegexEntry, Source};
use crate::prefilter::QueryHints;
use crate::store::{Compiled, StoreView, StoredEntry};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("a query needs at least one positive example")]
    NoPositives,
    #[error("{0:?} is both a positive and a negative example")]
    Contradictory(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rank {
    #[default]
    StrictFirst,
    LooseFirst,
    None,
}

impl FromStr for Rank {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict-first" | "strict" => Ok(Rank::StrictFirst),
            "loose-first" | "loose" => Ok(Rank::LooseFirst),
            "none" => Ok(Rank::None),
            _ => Err(format!("unknown rank {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    positives: Vec<String>,
    negatives: Vec<String>,
    pub mode: MatchMode,
    pub rank: Rank,
    pub limit: Option<usize>,
    pub sources: Option<BTreeSet<Source>>,
    pub exclusions: Vec<String>,
    /// Skip entries the prefilter proves cannot match. Never changes results.
    pub prefilter: bool,
}

fn dedup(v: impl IntoIterator<Item = String>) -> Vec<String> {
    let mut seen = HashSet::new();
    v.into_iter().filter(|s| seen.insert(s.clone())).collect()
}

impl Query {
    /// Duplicate examples are dropped, keeping first occurrences.
    pub fn new(
        positives: impl IntoIterator<Item = String>,
        negatives: impl IntoIterator<Item = String>,
    ) -> Result<Self, QueryError> {
        let positives = dedup(positives);
        let negatives = dedup(negatives);
        if positives.is_empty() {
            return Err(QueryError::NoPositives);
        }
        let pos: HashSet<&String> = positives.iter().collect();
        if let Some(shared) = negatives.iter().find(|n| pos.contains(n)) {
            return Err(QueryError::Contradictory(shared.clone()));
        }
        Ok(Self {
            positives,
            negatives,
            mode: MatchMode::Partial,
            rank: Rank::StrictFirst,
            limit: None,
            sources: None,
            exclusions: Vec::new(),
            prefilter: false,
        })
    }

    pub fn positives(&self) -> &[String] {
        &self.positives
    }

    pub fn negatives(&self) -> &[String] {
        &self.negatives
    }

    /// The same query with more examples.
    pub fn refine(
        &self,
        positives: impl IntoIterator<Item = String>,
        negatives: impl IntoIterator<Item = String>,
    ) -> Result<Self, QueryError> {
        let merged = Self::new(
            self.positives.iter().cloned().chain(positives),
            self.negatives.iter().cloned().chain(negatives),
        )?;
        Ok(Self { positives: merged.positives, negatives: merged.negatives, ..self.clone() })
    }

    pub fn hints(&self) -> QueryHints {
        QueryHints { positives: self.positives.clone(), mode: self.mode }
    }
}

/// Engine settings that are not part of the query itself.
#[derive(Debug, Clone, Default)]
pub struct QueryOptions<'a> {
    pub settings: MeasureSettings,
    /// Entries not yet examined when the deadline passes are skipped and the
    /// outcome is marked truncated.
    pub deadline: Option<Instant>,
    pub cancel: Option<&'a AtomicBool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateResult {
    pub entry: RegexEntry,
    pub bundle: MetricBundle,
    pub rank_position: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryStats {
    /// Parsed entries visible to the query.
    pub scanned: usize,
    /// Entries the prefilter skipped without running examples.
    pub prefiltered: usize,
    /// Entries disqualified because an example evaluation timed out.
    pub timeouts: usize,
    /// Entries satisfying every example.
    pub matched: usize,
    pub returned: usize,
    pub elapsed_ms: u64,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryOutcome {
    pub candidates: Vec<CandidateResult>,
    pub stats: QueryStats,
}

enum Check {
    Pass,
    Fail,
    Timeout,
}

/// Runs examples shortest first and stops at the first unsatisfied one.
fn check(c: &Compiled, examples: &[(&String, Verdict)], q: &Query, settings: &MeasureSettings) -> Check {
    let Some(m) = &c.matcher else { return Check::Fail };
    for (ex, want) in examples {
        let v = m.run_str(ex, q.mode, &settings.match_config).verdict;
        if v == Verdict::Timeout {
            return Check::Timeout;
        }
        if v != *want {
            return Check::Fail;
        }
    }
    Check::Pass
}

/// Runs `q` over `view`. `on_match` sees each satisfying entry as soon as
/// it is found, in no particular order.
pub fn run_query_streaming(
    view: &StoreView<'_>,
    q: &Query,
    opts: &QueryOptions<'_>,
    on_match: &(dyn Fn(&StoredEntry) + Sync),
) -> QueryOutcome {
    let started = Instant::now();
    let mut view = view.clone();
    for p in &q.exclusions {
        view = view.exclude(p);
    }
    if let Some(s) = &q.sources {
        view = view.with_sources(s.iter().copied());
    }
    let settings = MeasureSettings { mode: q.mode, ..opts.settings };
    let hints = q.hints();
    let mut examples: Vec<(&String, Verdict)> = q
        .positives
        .iter()
        .map(|p| (p, Verdict::Match))
        .chain(q.negatives.iter().map(|n| (n, Verdict::NoMatch)))
        .collect();
    examples.sort_by_key(|(s, _)| s.chars().count());

    let scanned = AtomicUsize::new(0);
    let prefiltered = AtomicUsize::new(0);
    let timeouts = AtomicUsize::new(0);
    let truncated = AtomicBool::new(false);
    let stop = || {
        opts.cancel.is_some_and(|c| c.load(AtomicOrdering::Relaxed))
            || opts.deadline.is_some_and(|d| Instant::now() >= d)
    };
    let matched: Vec<&StoredEntry> = view
        .store()
        .slice()
        .par_iter()
        .filter(|e| view.shows(e))
        .filter_map(|e| {
            let c = e.compiled.as_ref()?;
            if stop() {
                truncated.store(true, AtomicOrdering::Relaxed);
                return None;
            }
            scanned.fetch_add(1, AtomicOrdering::Relaxed);
            if q.prefilter && !hints.admits(&c.prefilter) {
                prefiltered.fetch_add(1, AtomicOrdering::Relaxed);
                return None;
            }
            match check(c, &examples, q, &settings) {
                Check::Pass => {
                    on_match(e);
                    Some(e)
                }
                Check::Fail => None,
                Check::Timeout => {
                    timeouts.fetch_add(1, AtomicOrdering::Relaxed);
                    None
                }
            }
        })
        .collect();

    let scan_time = started.elapsed();
    let total = q.positives.len() + q.negatives.len();
    let acc = Accuracy { value: 1.0, satisfied: total, total, timeouts: 0 };
    let mut candidates: Vec<CandidateResult> =
        matched.par_iter().map(|e| candidate_result(e, q, &settings, scan_time, acc)).collect();
    rank_by_strictness(&mut candidates, q.rank);
    let matched_count = candidates.len();
    if let Some(limit) = q.limit {
        candidates.truncate(limit);
    }
    let stats = QueryStats {
        scanned: scanned.into_inner(),
        prefiltered: prefiltered.into_inner(),
        timeouts: timeouts.into_inner(),
        matched: matched_count,
        returned: candidates.len(),
        elapsed_ms: started.elapsed().as_millis() as u64,
        truncated: truncated.into_inner(),
    };
    QueryOutcome { candidates, stats }
}

pub fn run_query(view: &StoreView<'_>, q: &Query, opts: &QueryOptions<'_>) -> QueryOutcome {
    run_query_streaming(view, q, opts, &|_| {})
}

fn candidate_result(
    e: &StoredEntry,
    q: &Query,
    settings: &MeasureSettings,
    timing: Duration,
    acc: Accuracy,
) -> CandidateResult {
    let c = e.compiled.as_ref().expect("candidates are parsed");
    let cand =
        Candidate { pattern: &e.entry.pattern, ast: &c.ast, matcher: c.matcher.as_ref(), nfa: c.nfa() };
    CandidateResult {
        entry: e.entry.clone(),
        bundle: bundle(&cand, None, &q.positives, &q.negatives, timing, settings, acc),
        rank_position: 0,
    }
}

/// Orders candidates by strictness and renumbers their positions. Entries
/// without a score follow all scored ones in id order; ties among scored
/// entries go to the shorter pattern, then the lower id.
pub fn rank_by_strictness(candidates: &mut [CandidateResult], rank: Rank) {
    let by_id = |a: &CandidateResult, b: &CandidateResult| a.entry.id.cmp(&b.entry.id);
    candidates.sort_by(|a, b| {
        if rank == Rank::None {
            return by_id(a, b);
        }
        match (a.bundle.strictness, b.bundle.strictness) {
            (Some(x), Some(y)) => {
                let primary = if rank == Rank::StrictFirst { y.total_cmp(&x) } else { x.total_cmp(&y) };
                primary.then(a.bundle.pattern_length.cmp(&b.bundle.pattern_length)).then_with(|| by_id(a, b))
            }
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => by_id(a, b),
        }
    });
    for (i, c) in candidates.iter_mut().enumerate() {
        c.rank_position = i;
    }
}

/// Picks up to `limit` ranked candidates spread over strictness deciles,
/// taking the best remaining candidate of each decile in turn. Unscored
/// candidates form their own group. The picks keep their ranked order.
pub fn spread(ranked: &[CandidateResult], limit: usize) -> Vec<CandidateResult> {
    let mut groups: Vec<Vec<&CandidateResult>> = vec![Vec::new(); 11];
    for c in ranked {
        let g = match c.bundle.strictness {
            Some(s) => ((s * 10.0).floor() as usize).min(9),
            None => 10,
        };
        groups[g].push(c);
    }
    let mut picked = Vec::new();
    let mut round = 0;
    while picked.len() < limit.min(ranked.len()) {
        for g in &groups {
            if let Some(c) = g.get(round) {
                if picked.len() < limit {
                    picked.push((*c).clone());
                }
            }
        }
        round += 1;
    }
    picked.sort_by_key(|c| c.rank_position);
    picked
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entry::{EntryId, ParseStatus, Provenance};
    use crate::ingest::StoreBuilder;
    use crate::store::Store;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    fn store(patterns: &[&str]) -> Store {
        let mut b = StoreBuilder::new();
        for (i, p) in patterns.iter().enumerate() {
            b.add(p, Provenance { source: Source::SoPost, origin: i.to_string() }).unwrap();
        }
        Store::from_entries(b.into_entries())
    }

    fn run(store: &Store, q: &Query) -> Vec<String> {
        run_query(&store.view(), q, &QueryOptions::default())
            .candidates
            .into_iter()
            .map(|c| c.entry.pattern)
            .collect()
    }

    #[test]
    fn digits_example() {
        let st = store(&[r"^\d+$", "^[a-z]+$", "abc"]);
        let q = Query::new(s(&["123"]), s(&["abc"])).unwrap();
        assert_eq!(run(&st, &q), vec![r"^\d+$"]);
        let out = run_query(&st.view(), &q, &QueryOptions::default());
        assert_eq!(out.candidates[0].bundle.accuracy, 1.0);
        assert_eq!(out.stats.scanned, 3);
        assert_eq!((out.stats.matched, out.stats.returned), (1, 1));
    }

    #[test]
    fn query_validation() {
        assert_eq!(Query::new(s(&["x"]), s(&["x"])), Err(QueryError::Contradictory("x".into())));
        assert_eq!(Query::new(s(&[]), s(&["x"])), Err(QueryError::NoPositives));
        let q = Query::new(s(&["a", "a", "b"]), s(&["c", "c"])).unwrap();
        assert_eq!((q.positives(), q.negatives()), (&s(&["a", "b"])[..], &s(&["c"])[..]));
        assert!(q.refine(s(&[]), s(&["a"])).is_err());
    }

    #[test]
    fn empty_store_gives_empty_result() {
        let st = store(&[]);
        let q = Query::new(s(&["a"]), s(&[])).unwrap();
        assert!(run(&st, &q).is_empty());
    }

    #[test]
    fn refinement_narrows() {
        let st = store(&["a", "a+", "^a$", "b", "[ab]+", r"\w+"]);
        let q = Query::new(s(&["a"]), s(&[])).unwrap();
        let r0 = run(&st, &q);
        let q1 = q.refine(s(&[]), s(&["b"])).unwrap();
        let r1 = run(&st, &q1);
        assert!(r1.iter().all(|p| r0.contains(p)));
        assert!(!r1.contains(&"[ab]+".to_string()));
        let q2 = q1.refine(s(&["a"]), s(&[])).unwrap();
        assert_eq!(run(&st, &q2), r1);
    }

    #[test]
    fn exclusions_and_sources() {
        let st = store(&["a", "a+"]);
        let mut q = Query::new(s(&["a"]), s(&[])).unwrap();
        q.exclusions.push("a+".into());
        assert_eq!(run(&st, &q), vec!["a"]);
        q.sources = Some(BTreeSet::from([Source::OssProject]));
        assert!(run(&st, &q).is_empty());
    }

    #[test]
    fn redos_entries_time_out_without_blocking() {
        let st = store(&["(a+)+$", "a+"]);
        let q = Query::new(s(&[&format!("{}!", "a".repeat(32))]), s(&["b"])).unwrap();
        let mut opts = QueryOptions::default();
        opts.settings.match_config.budget = 100_000;
        let out = run_query(&st.view(), &q, &opts);
        let pats: Vec<&str> = out.candidates.iter().map(|c| c.entry.pattern.as_str()).collect();
        assert_eq!(pats, vec!["a+"]);
        assert_eq!(out.stats.timeouts, 1);
    }

    #[test]
    fn deadline_truncates() {
        let st = store(&["a", "a+"]);
        let q = Query::new(s(&["a"]), s(&[])).unwrap();
        let opts = QueryOptions { deadline: Some(Instant::now()), ..Default::default() };
        let out = run_query(&st.view(), &q, &opts);
        assert!(out.stats.truncated);
        assert!(out.candidates.is_empty());
    }

    fn fake(pattern: &str, strictness: Option<f64>) -> CandidateResult {
        CandidateResult {
            entry: RegexEntry {
                id: EntryId::of(pattern),
                pattern: pattern.into(),
                provenance: vec![],
                parse_status: ParseStatus::Ok,
                regularity: None,
            },
            bundle: MetricBundle {
                pattern_length: pattern.chars().count(),
                feature_count: 0,
                nfa_size: None,
                ted_to_ground: None,
                semantic_similarity: None,
                accuracy: 1.0,
                strictness,
                generation_time_ms: 0.0,
                timeouts: 0,
            },
            rank_position: 0,
        }
    }

    fn order(v: &[CandidateResult]) -> Vec<&str> {
        v.iter().map(|c| c.entry.pattern.as_str()).collect()
    }

    #[test]
    fn ranking_contract() {
        let mut v = vec![fake("loose", Some(0.4)), fake("ext", None), fake("strict", Some(0.9))];
        rank_by_strictness(&mut v, Rank::StrictFirst);
        assert_eq!(order(&v), vec!["strict", "loose", "ext"]);
        assert_eq!(v.iter().map(|c| c.rank_position).collect::<Vec<_>>(), vec![0, 1, 2]);
        rank_by_strictness(&mut v, Rank::LooseFirst);
        assert_eq!(order(&v), vec!["loose", "strict", "ext"]);
        let mut v = vec![fake("twelve chars", Some(0.5)), fake("five!", Some(0.5))];
        rank_by_strictness(&mut v, Rank::StrictFirst);
        assert_eq!(order(&v), vec!["five!", "twelve chars"]);
    }

    #[test]
    fn spread_covers_deciles() {
        let mut v: Vec<CandidateResult> =
            (0..20).map(|i| fake(&format!("p{i:02}"), Some(if i < 15 { 0.95 } else { 0.15 }))).collect();
        v.push(fake("x", None));
        rank_by_strictness(&mut v, Rank::StrictFirst);
        let picked = spread(&v, 3);
        let got: Vec<Option<f64>> = picked.iter().map(|c| c.bundle.strictness).collect();
        assert_eq!(got, vec![Some(0.95), Some(0.15), None]);
        assert_eq!(spread(&v, 100).len(), v.len());
    }
}
