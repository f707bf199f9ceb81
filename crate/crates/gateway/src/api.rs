//! Request and response types shared by the CLI and the HTTP service, and
//! the single query path both of them call.

use std::collections::BTreeSet;
use std::time::Duration;

use forge_core::metrics::{accuracy_with, bundle, Accuracy, Candidate, Reference};
use forge_core::{
    build_nfa_with, parse, syntactic_distance, MatchMode, Matcher, MeasureSettings, RegularityClass,
};
use forge_store::{
    run_query_streaming, spread, CandidateResult, ParseStatus, Provenance, Query, QueryError, QueryOptions,
    QueryStats, Rank, RegexEntry, Source, Store, StoredEntry,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_LIMIT: usize = 50;

fn default_limit() -> usize {
    DEFAULT_LIMIT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApiQueryRequest {
    pub positives: Vec<String>,
    #[serde(default)]
    pub negatives: Vec<String>,
    #[serde(default)]
    pub mode: MatchMode,
    #[serde(default)]
    pub rank: Rank,
    #[serde(default = "default_limit")]
    pub limit: usize,
    /// Sample the result across strictness deciles instead of taking the top.
    #[serde(default)]
    pub spread: bool,
    /// Only entries with provenance from one of these sources.
    #[serde(default)]
    pub sources: Option<Vec<Source>>,
    #[serde(default)]
    pub prefilter: bool,
}

impl ApiQueryRequest {
    pub fn new(positives: Vec<String>, negatives: Vec<String>) -> Self {
        Self {
            positives,
            negatives,
            mode: MatchMode::default(),
            rank: Rank::default(),
            limit: DEFAULT_LIMIT,
            spread: false,
            sources: None,
            prefilter: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiCandidate {
    pub id: String,
    pub pattern: String,
    pub source: Source,
    pub origin: String,
    pub accuracy: f64,
    pub strictness: Option<f64>,
    pub pattern_length: usize,
    pub feature_count: usize,
    pub nfa_size: Option<usize>,
    pub rank_position: usize,
}

impl From<&CandidateResult> for ApiCandidate {
    fn from(c: &CandidateResult) -> Self {
        Self {
            id: c.entry.id.to_string(),
            pattern: c.entry.pattern.clone(),
            source: c.entry.source(),
            origin: c.entry.origin().to_string(),
            accuracy: c.bundle.accuracy,
            strictness: c.bundle.strictness,
            pattern_length: c.bundle.pattern_length,
            feature_count: c.bundle.feature_count,
            nfa_size: c.bundle.nfa_size,
            rank_position: c.rank_position,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiQueryResponse {
    pub candidates: Vec<ApiCandidate>,
    pub stats: QueryStats,
}

/// An entry as it appears in streamed partial results, before measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiMatch {
    pub id: String,
    pub pattern: String,
    pub source: Source,
    pub origin: String,
}

impl From<&StoredEntry> for ApiMatch {
    fn from(e: &StoredEntry) -> Self {
        Self {
            id: e.entry.id.to_string(),
            pattern: e.entry.pattern.clone(),
            source: e.entry.source(),
            origin: e.entry.origin().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiEntry {
    pub id: String,
    pub pattern: String,
    pub provenance: Vec<Provenance>,
    pub parse_status: ParseStatus,
    pub regularity: Option<RegularityClass>,
}

impl From<&RegexEntry> for ApiEntry {
    fn from(e: &RegexEntry) -> Self {
        Self {
            id: e.id.to_string(),
            pattern: e.pattern.clone(),
            provenance: e.provenance.clone(),
            parse_status: e.parse_status,
            regularity: e.regularity,
        }
    }
}

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Unparseable(String),
    #[error("{0}")]
    NotFound(String),
}

impl From<QueryError> for ApiError {
    fn from(e: QueryError) -> Self {
        ApiError::Invalid(e.to_string())
    }
}

/// Validates the request and turns it into a store query.
pub fn to_query(req: &ApiQueryRequest) -> Result<Query, ApiError> {
    if req.limit == 0 {
        return Err(ApiError::Invalid("limit must be at least 1".into()));
    }
    let mut q = Query::new(req.positives.iter().cloned(), req.negatives.iter().cloned())?;
    q.mode = req.mode;
    q.rank = req.rank;
    q.prefilter = req.prefilter;
    q.sources = req.sources.as_ref().map(|s| s.iter().copied().collect::<BTreeSet<_>>());
    if !req.spread {
        q.limit = Some(req.limit);
    }
    Ok(q)
}

/// The one query path behind both the CLI and the HTTP service.
pub fn execute_query(
    store: &Store,
    req: &ApiQueryRequest,
    opts: &QueryOptions<'_>,
    on_match: &(dyn Fn(&StoredEntry) + Sync),
) -> Result<ApiQueryResponse, ApiError> {
    let q = to_query(req)?;
    let out = run_query_streaming(&store.view(), &q, opts, on_match);
    let mut stats = out.stats;
    let picked = if req.spread { spread(&out.candidates, req.limit) } else { out.candidates };
    stats.returned = picked.len();
    Ok(ApiQueryResponse { candidates: picked.iter().map(ApiCandidate::from).collect(), stats })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsRequest {
    pub a: String,
    pub b: String,
    #[serde(default)]
    pub positives: Vec<String>,
    #[serde(default)]
    pub negatives: Vec<String>,
    #[serde(default)]
    pub mode: MatchMode,
}

/// One side of a comparison, measured with the other side as ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternMetrics {
    pub pattern: String,
    pub pattern_length: usize,
    pub feature_count: usize,
    pub nfa_size: Option<usize>,
    /// Null without examples.
    pub accuracy: Option<f64>,
    pub strictness: Option<f64>,
    pub timeouts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsResponse {
    pub a: PatternMetrics,
    pub b: PatternMetrics,
    pub ted: usize,
    pub semantic_similarity: Option<f64>,
}

fn side(
    pattern: &str,
    other: &Reference,
    req: &MetricsRequest,
    settings: &MeasureSettings,
) -> Result<(PatternMetrics, Option<f64>), ApiError> {
    let ast = parse(pattern).map_err(|e| ApiError::Unparseable(format!("{pattern:?}: {e}")))?;
    let nfa = build_nfa_with(&ast, &settings.nfa_options()).ok();
    let matcher = Matcher::new(&ast).ok();
    let has_examples = !(req.positives.is_empty() && req.negatives.is_empty());
    let acc = match (&matcher, has_examples) {
        (Some(m), true) => {
            accuracy_with(m, &req.positives, &req.negatives, settings.mode, &settings.match_config)
                .map_err(|e| ApiError::Invalid(e.to_string()))?
        }
        (None, true) => {
            let total = req.positives.len() + req.negatives.len();
            Accuracy { value: 0.0, satisfied: 0, total, timeouts: 0 }
        }
        (_, false) => Accuracy { value: 0.0, satisfied: 0, total: 0, timeouts: 0 },
    };
    let c = Candidate { pattern, ast: &ast, matcher: matcher.as_ref(), nfa: nfa.as_ref() };
    let b = bundle(&c, Some(other), &req.positives, &req.negatives, Duration::ZERO, settings, acc);
    let metrics = PatternMetrics {
        pattern: pattern.to_string(),
        pattern_length: b.pattern_length,
        feature_count: b.feature_count,
        nfa_size: b.nfa_size,
        accuracy: has_examples.then_some(b.accuracy),
        strictness: if has_examples { b.strictness } else { None },
        timeouts: b.timeouts,
    };
    Ok((metrics, b.semantic_similarity))
}

/// Compares two patterns: each side's own metrics plus their distance and
/// semantic similarity.
pub fn compare(req: &MetricsRequest, base: &MeasureSettings) -> Result<MetricsResponse, ApiError> {
    if let Some(shared) = req.positives.iter().find(|p| req.negatives.contains(p)) {
        return Err(QueryError::Contradictory(shared.clone()).into());
    }
    let settings = MeasureSettings { mode: req.mode, ..*base };
    let reference =
        |p: &str| Reference::new(p, &settings).map_err(|e| ApiError::Unparseable(format!("{p:?}: {e}")));
    let ra = reference(&req.a)?;
    let rb = reference(&req.b)?;
    let (a, semantic_similarity) = side(&req.a, &rb, req, &settings)?;
    let (b, _) = side(&req.b, &ra, req, &settings)?;
    Ok(MetricsResponse { a, b, ted: syntactic_distance(&ra.ast, &rb.ast), semantic_similarity })
}

/// Looks up an entry by its hexadecimal id.
pub fn lookup(store: &Store, id: &str) -> Result<ApiEntry, ApiError> {
    let parsed = id.parse().map_err(|_| ApiError::Invalid(format!("{id:?} is not an entry id")))?;
    store
        .get(parsed)
        .map(|e| ApiEntry::from(&e.entry))
        .ok_or_else(|| ApiError::NotFound(format!("no entry {id}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub entries: usize,
    pub shards: usize,
    pub stats: forge_store::CorpusStats,
}

pub fn health(store: &Store) -> Health {
    Health {
        status: "ok".into(),
        entries: store.len(),
        shards: store.shard_count(),
        stats: store.stats().clone(),
    }
}
