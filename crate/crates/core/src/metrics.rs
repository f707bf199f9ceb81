//! Functional and non-functional metrics of a composed regex.

use std::collections::BTreeSet;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ast::RegexAst;
use crate::automaton::{build_nfa_with, CoverageOptions, Nfa, NfaOptions, DEFAULT_COVERING_CAP};
use crate::matcher::{MatchConfig, MatchMode, Matcher, Verdict};
use crate::parse::{parse, ParseError};
use crate::ted::syntactic_distance;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("accuracy needs at least one example")]
    NoExamples,
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Number of Unicode scalar values in the pattern text.
pub fn pattern_length(pattern: &str) -> usize {
    pattern.chars().count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub value: f64,
    pub satisfied: usize,
    pub total: usize,
    /// Examples whose evaluation timed out. They count as unsatisfied.
    pub timeouts: usize,
}

/// Fraction of examples satisfied: positives matched plus negatives rejected,
/// over all examples. Any verdict other than a completed match or non-match
/// leaves the example unsatisfied.
pub fn accuracy(
    ast: &RegexAst,
    positives: &[String],
    negatives: &[String],
    mode: MatchMode,
    config: &MatchConfig,
) -> Result<Accuracy, MetricsError> {
    match Matcher::new(ast) {
        Ok(m) => accuracy_with(&m, positives, negatives, mode, config),
        Err(_) => {
            let total = positives.len() + negatives.len();
            if total == 0 {
                return Err(MetricsError::NoExamples);
            }
            Ok(Accuracy { value: 0.0, satisfied: 0, total, timeouts: 0 })
        }
    }
}

pub fn accuracy_with(
    matcher: &Matcher,
    positives: &[String],
    negatives: &[String],
    mode: MatchMode,
    config: &MatchConfig,
) -> Result<Accuracy, MetricsError> {
    let total = positives.len() + negatives.len();
    if total == 0 {
        return Err(MetricsError::NoExamples);
    }
    let mut satisfied = 0;
    let mut timeouts = 0;
    let examples = positives.iter().map(|p| (p, Verdict::Match));
    let examples = examples.chain(negatives.iter().map(|n| (n, Verdict::NoMatch)));
    for (example, wanted) in examples {
        let verdict = matcher.run_str(example, mode, config).verdict;
        if verdict == wanted {
            satisfied += 1;
        } else if verdict == Verdict::Timeout {
            timeouts += 1;
        }
    }
    Ok(Accuracy { value: satisfied as f64 / total as f64, satisfied, total, timeouts })
}

/// Overlap of two languages, approximated by both automata's covering
/// strings: the share of that union accepted by both automata.
pub fn semantic_similarity(r: &Nfa, g: &Nfa, cap: usize) -> f64 {
    similarity_from_strings(r, g, &r.covering_strings(cap), &g.covering_strings(cap))
}

fn similarity_from_strings(r: &Nfa, g: &Nfa, r_strings: &[String], g_strings: &[String]) -> f64 {
    let union: BTreeSet<&String> = r_strings.iter().chain(g_strings).collect();
    if union.is_empty() {
        return 1.0;
    }
    let both = union.iter().filter(|s| r.accepts_str(s) && g.accepts_str(s)).count();
    both as f64 / union.len() as f64
}

/// Semantic similarity of two patterns, absent unless both have automata.
pub fn semantic_similarity_ast(r: &RegexAst, g: &RegexAst, cap: usize) -> Option<f64> {
    let r = crate::automaton::build_nfa(r).ok()?;
    let g = crate::automaton::build_nfa(g).ok()?;
    Some(semantic_similarity(&r, &g, cap))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricBundle {
    pub pattern_length: usize,
    pub feature_count: usize,
    pub nfa_size: Option<usize>,
    pub ted_to_ground: Option<usize>,
    pub semantic_similarity: Option<f64>,
    pub accuracy: f64,
    pub strictness: Option<f64>,
    pub generation_time_ms: f64,
    pub timeouts: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureSettings {
    pub mode: MatchMode,
    pub match_config: MatchConfig,
    /// Strictness measure and example choice. Its mode is taken from `mode`.
    pub coverage: CoverageOptions,
    pub covering_cap: usize,
    pub state_cap: usize,
}

impl Default for MeasureSettings {
    fn default() -> Self {
        Self {
            mode: MatchMode::default(),
            match_config: MatchConfig::default(),
            coverage: CoverageOptions::default(),
            covering_cap: DEFAULT_COVERING_CAP,
            state_cap: crate::automaton::DEFAULT_STATE_CAP,
        }
    }
}

impl MeasureSettings {
    pub fn nfa_options(&self) -> NfaOptions {
        NfaOptions { state_cap: self.state_cap, ..NfaOptions::default() }
    }

    pub fn coverage_options(&self) -> CoverageOptions {
        CoverageOptions { mode: self.mode, ..self.coverage }
    }
}

/// A parsed pattern with its automaton and covering strings, computed once
/// and reused across many comparisons.
#[derive(Debug, Clone)]
pub struct Reference {
    pub ast: RegexAst,
    pub nfa: Option<Nfa>,
    pub covering: Vec<String>,
}

impl Reference {
    pub fn new(pattern: &str, settings: &MeasureSettings) -> Result<Self, ParseError> {
        Ok(Self::from_ast(parse(pattern)?, settings))
    }

    pub fn from_ast(ast: RegexAst, settings: &MeasureSettings) -> Self {
        let nfa = build_nfa_with(&ast, &settings.nfa_options()).ok();
        let covering = nfa.as_ref().map(|n| n.covering_strings(settings.covering_cap)).unwrap_or_default();
        Self { ast, nfa, covering }
    }
}

/// A candidate ready to be measured.
pub struct Candidate<'a> {
    pub pattern: &'a str,
    pub ast: &'a RegexAst,
    pub matcher: Option<&'a Matcher>,
    pub nfa: Option<&'a Nfa>,
}

/// Measures a candidate pattern against a task's examples and, when given,
/// its ground truth.
pub fn measure_candidate(
    candidate: &str,
    ground: Option<&str>,
    positives: &[String],
    negatives: &[String],
    timing: Duration,
    settings: &MeasureSettings,
) -> Result<MetricBundle, MetricsError> {
    let ast = parse(candidate)?;
    let ground = ground.map(|g| Reference::new(g, settings)).transpose()?;
    let nfa = build_nfa_with(&ast, &settings.nfa_options()).ok();
    let matcher = Matcher::new(&ast).ok();
    let c = Candidate { pattern: candidate, ast: &ast, matcher: matcher.as_ref(), nfa: nfa.as_ref() };
    measure(&c, ground.as_ref(), positives, negatives, timing, settings)
}

/// Like [`measure_candidate`], over precomputed artifacts.
pub fn measure(
    c: &Candidate<'_>,
    ground: Option<&Reference>,
    positives: &[String],
    negatives: &[String],
    timing: Duration,
    settings: &MeasureSettings,
) -> Result<MetricBundle, MetricsError> {
    let acc = match c.matcher {
        Some(m) => accuracy_with(m, positives, negatives, settings.mode, &settings.match_config)?,
        None => accuracy(c.ast, positives, negatives, settings.mode, &settings.match_config)?,
    };
    Ok(bundle(c, ground, positives, negatives, timing, settings, acc))
}

/// Fills a bundle around an accuracy measured elsewhere, such as during a
/// corpus scan that already ran every example.
pub fn bundle(
    c: &Candidate<'_>,
    ground: Option<&Reference>,
    positives: &[String],
    negatives: &[String],
    timing: Duration,
    settings: &MeasureSettings,
    acc: Accuracy,
) -> MetricBundle {
    let semantic_similarity = match (c.nfa, ground.and_then(|g| g.nfa.as_ref().map(|n| (n, g)))) {
        (Some(r), Some((g_nfa, g))) => {
            Some(similarity_from_strings(r, g_nfa, &r.covering_strings(settings.covering_cap), &g.covering))
        }
        _ => None,
    };
    MetricBundle {
        pattern_length: pattern_length(c.pattern),
        feature_count: c.ast.feature_count(),
        nfa_size: c.nfa.map(Nfa::size),
        ted_to_ground: ground.map(|g| syntactic_distance(c.ast, &g.ast)),
        semantic_similarity,
        accuracy: acc.value,
        strictness: c.nfa.map(|n| n.coverage_with(positives, negatives, &settings.coverage_options())),
        generation_time_ms: timing.as_secs_f64() * 1000.0,
        timeouts: acc.timeouts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    fn sim(a: &str, b: &str) -> Option<f64> {
        semantic_similarity_ast(&parse(a).unwrap(), &parse(b).unwrap(), DEFAULT_COVERING_CAP)
    }

    #[test]
    fn lengths() {
        assert_eq!(pattern_length(""), 0);
        assert_eq!(pattern_length("a|b"), 3);
        assert_eq!(pattern_length(r"^\d+$"), 5);
        assert_eq!(pattern_length("é+"), 2);
    }

    #[test]
    fn accuracy_partial_counts_substring_match() {
        let ast = parse("a").unwrap();
        let acc =
            accuracy(&ast, &s(&["a"]), &s(&["ba"]), MatchMode::Partial, &MatchConfig::default()).unwrap();
        assert_eq!(acc.value, 0.5);
        let full = accuracy(&ast, &s(&["a"]), &s(&["ba"]), MatchMode::Full, &MatchConfig::default()).unwrap();
        assert_eq!(full.value, 1.0);
    }

    #[test]
    fn accuracy_needs_examples() {
        let ast = parse("a").unwrap();
        assert_eq!(
            accuracy(&ast, &[], &[], MatchMode::Partial, &MatchConfig::default()),
            Err(MetricsError::NoExamples)
        );
    }

    #[test]
    fn ipv4_ground_truth_accuracy() {
        let ast = parse(r"^127\.([0-9]{1,3})\.([0-9]{1,3})\.([0-9]{1,3})$").unwrap();
        let acc = accuracy(
            &ast,
            &s(&["127.0.0.1"]),
            &s(&["128.0.0.1"]),
            MatchMode::Partial,
            &MatchConfig::default(),
        )
        .unwrap();
        assert_eq!(acc.value, 1.0);
    }

    #[test]
    fn timeout_counts_as_unsatisfied() {
        let ast = parse("(a+)+$").unwrap();
        let evil = format!("{}b", "a".repeat(30));
        let acc = accuracy(&ast, &[], &s(&[&evil]), MatchMode::Partial, &MatchConfig::with_budget(100_000))
            .unwrap();
        assert_eq!(acc.value, 0.0);
        assert_eq!(acc.timeouts, 1);
    }

    #[test]
    fn similarity_examples() {
        assert_eq!(sim("^a$", "^b$"), Some(0.0));
        assert_eq!(sim("^ab?$", "^a$"), Some(0.5));
        assert_eq!(sim("^[0-9]+$", "^[0-9]+$"), Some(1.0));
        assert_eq!(sim("(a)\\1", "a"), None);
    }

    #[test]
    fn similarity_of_empty_languages() {
        assert_eq!(sim("[^\\x00-\\U0010FFFF]", "[^\\x00-\\U0010FFFF]"), Some(1.0));
    }

    #[test]
    fn self_measurement() {
        let p = r"^127\.([0-9]{1,3})\.([0-9]{1,3})\.([0-9]{1,3})$";
        let b = measure_candidate(
            p,
            Some(p),
            &s(&["127.0.0.1"]),
            &s(&["128.0.0.1"]),
            Duration::from_millis(3),
            &MeasureSettings::default(),
        )
        .unwrap();
        assert_eq!(b.accuracy, 1.0);
        assert_eq!(b.ted_to_ground, Some(0));
        assert_eq!(b.semantic_similarity, Some(1.0));
        assert!(b.nfa_size.is_some());
        assert!(b.strictness.unwrap() > 0.0);
        assert_eq!(b.generation_time_ms, 3.0);
    }

    #[test]
    fn extended_candidate_has_no_automaton_fields() {
        let b = measure_candidate(
            r"(a)\1",
            Some("aa"),
            &s(&["aa"]),
            &s(&["ab"]),
            Duration::ZERO,
            &MeasureSettings::default(),
        )
        .unwrap();
        assert_eq!(b.nfa_size, None);
        assert_eq!(b.strictness, None);
        assert_eq!(b.semantic_similarity, None);
        assert_eq!(b.accuracy, 1.0);
        assert!(b.ted_to_ground.is_some());
    }

    #[test]
    fn loopback_candidate_against_ground_truth() {
        let candidate = r"^127(?:\.(?:25[0-5]|2[0-4][\d]|[01]?[\d][\d]?)){3}$";
        let ground = r"^127\.([0-9]{1,3})\.([0-9]{1,3})\.([0-9]{1,3})$";
        let b = measure_candidate(
            candidate,
            Some(ground),
            &s(&["127.0.0.1", "127.1.2.3"]),
            &s(&["128.0.0.1", "127.0.0.999"]),
            Duration::ZERO,
            &MeasureSettings::default(),
        )
        .unwrap();
        assert_eq!(b.accuracy, 1.0);
        assert!(b.nfa_size.is_some() && b.strictness.is_some());
        let sim = b.semantic_similarity.unwrap();
        assert!(sim > 0.0 && sim <= 1.0);
        assert!(b.ted_to_ground.unwrap() > 0);
    }
}
