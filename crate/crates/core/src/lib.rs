//! Regex parsing, a budgeted backtracking matcher, symbolic NFAs and the
//! metrics used to compare composed regexes.

pub mod ast;
pub mod automaton;
pub mod charset;
pub mod matcher;
pub mod metrics;
pub mod parse;
pub mod ted;

pub use ast::{FeatureKind, Node, RegexAst, RegularityClass};
pub use automaton::{build_nfa, build_nfa_with, AutomatonError, Nfa, NfaOptions, TraceResult};
pub use matcher::{safe_match, MatchConfig, MatchMode, MatchOutcome, Matcher, Verdict};
pub use metrics::{
    accuracy, measure_candidate, pattern_length, semantic_similarity, MeasureSettings, MetricBundle,
};
pub use parse::{parse, ParseError, ParseErrorKind};
pub use ted::syntactic_distance;
