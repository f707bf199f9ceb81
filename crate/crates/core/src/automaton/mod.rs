//! Symbolic-edge NFAs over the ASCII projection: construction, the expanded
//! size metric, traced simulation, example coverage, and covering strings.

mod build;
mod cover;
pub mod symbols;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use build::{build_nfa, build_nfa_with, NfaOptions, DEFAULT_STATE_CAP};
pub use cover::DEFAULT_COVERING_CAP;
use symbols::{symbol_of, Symbol, SymbolSet};

use crate::matcher::MatchMode;

pub type StateId = usize;
pub type TransitionId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AutomatonError {
    #[error("pattern uses backreferences or lookaround and has no finite automaton")]
    NonRegular,
    #[error("automaton exceeds the state cap of {cap}")]
    TooLarge { cap: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Epsilon,
    Symbols(SymbolSet),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    pub from: StateId,
    pub label: Label,
    pub to: StateId,
}

#[derive(Debug, Clone)]
pub struct Nfa {
    state_count: usize,
    start: StateId,
    accepting: Vec<bool>,
    transitions: Vec<Transition>,
    out: Vec<Vec<TransitionId>>,
    trimmed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceResult {
    pub accepted: bool,
    pub visited_states: BTreeSet<StateId>,
    pub visited_transitions: BTreeSet<TransitionId>,
}

/// What counts toward the covered fraction of an automaton.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverageMeasure {
    /// Visited states plus visited transitions, each symbolic edge counted once.
    #[default]
    StatesAndTransitions,
    StatesOnly,
    /// Like the default, but each symbolic edge weighs its character count.
    ExpandedEdges,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverageExamples {
    #[default]
    All,
    PositivesOnly,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageOptions {
    pub measure: CoverageMeasure,
    pub examples: CoverageExamples,
    /// `Partial` also traces every suffix of each example, so text around a
    /// search-mode match does not hide the part of the automaton it exercises.
    pub mode: MatchMode,
}

impl CoverageOptions {
    pub fn full_match() -> Self {
        Self { mode: MatchMode::Full, ..Self::default() }
    }
}

impl Nfa {
    pub(crate) fn new(
        state_count: usize,
        start: StateId,
        accepts: Vec<StateId>,
        transitions: Vec<Transition>,
        trimmed: bool,
    ) -> Self {
        let mut accepting = vec![false; state_count];
        for a in accepts {
            accepting[a] = true;
        }
        let mut out = vec![Vec::new(); state_count];
        for (i, t) in transitions.iter().enumerate() {
            out[t.from].push(i);
        }
        Self { state_count, start, accepting, transitions, out, trimmed }
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }

    pub fn start(&self) -> StateId {
        self.start
    }

    pub fn accepts(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.state_count).filter(|&s| self.accepting[s])
    }

    pub fn is_accepting(&self, s: StateId) -> bool {
        self.accepting[s]
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn is_trimmed(&self) -> bool {
        self.trimmed
    }

    /// States plus transitions, with every symbolic edge expanded into one
    /// edge per character it accepts.
    pub fn size(&self) -> usize {
        self.state_count
            + self
                .transitions
                .iter()
                .map(|t| match t.label {
                    Label::Epsilon => 1,
                    Label::Symbols(set) => set.len(),
                })
                .sum::<usize>()
    }

    fn closure(&self, live: &mut Vec<StateId>, in_live: &mut [bool], seen_t: &mut [bool]) {
        let mut i = 0;
        while i < live.len() {
            let s = live[i];
            for &t in &self.out[s] {
                let tr = &self.transitions[t];
                if tr.label == Label::Epsilon {
                    seen_t[t] = true;
                    if !in_live[tr.to] {
                        in_live[tr.to] = true;
                        live.push(tr.to);
                    }
                }
            }
            i += 1;
        }
    }

    /// Runs the automaton on `input`, marking visited states and transitions.
    /// Returns whether the input was accepted.
    fn trace_into(&self, input: &[Symbol], seen_s: &mut [bool], seen_t: &mut [bool]) -> bool {
        let mut in_live = vec![false; self.state_count];
        let mut live = vec![self.start];
        in_live[self.start] = true;
        self.closure(&mut live, &mut in_live, seen_t);
        for &s in &live {
            seen_s[s] = true;
        }
        for &sym in input {
            let mut in_next = vec![false; self.state_count];
            let mut next = Vec::new();
            for &s in &live {
                for &t in &self.out[s] {
                    let tr = &self.transitions[t];
                    if let Label::Symbols(set) = tr.label {
                        if set.contains(sym) {
                            seen_t[t] = true;
                            if !in_next[tr.to] {
                                in_next[tr.to] = true;
                                next.push(tr.to);
                            }
                        }
                    }
                }
            }
            self.closure(&mut next, &mut in_next, seen_t);
            for &s in &next {
                seen_s[s] = true;
            }
            live = next;
            if live.is_empty() {
                return false;
            }
        }
        live.iter().any(|&s| self.accepting[s])
    }

    pub fn simulate(&self, input: &str) -> TraceResult {
        let symbols: Vec<Symbol> = input.chars().map(symbol_of).collect();
        let mut seen_s = vec![false; self.state_count];
        let mut seen_t = vec![false; self.transitions.len()];
        let accepted = self.trace_into(&symbols, &mut seen_s, &mut seen_t);
        TraceResult {
            accepted,
            visited_states: (0..self.state_count).filter(|&s| seen_s[s]).collect(),
            visited_transitions: (0..self.transitions.len()).filter(|&t| seen_t[t]).collect(),
        }
    }

    pub fn accepts_str(&self, input: &str) -> bool {
        let symbols: Vec<Symbol> = input.chars().map(symbol_of).collect();
        let mut seen_s = vec![false; self.state_count];
        let mut seen_t = vec![false; self.transitions.len()];
        self.trace_into(&symbols, &mut seen_s, &mut seen_t)
    }

    /// Fraction of the automaton exercised by the full-match runs of the
    /// examples (positives and negatives).
    pub fn coverage(&self, positives: &[String], negatives: &[String]) -> f64 {
        self.coverage_with(positives, negatives, &CoverageOptions::full_match())
    }

    pub fn coverage_with(
        &self,
        positives: &[String],
        negatives: &[String],
        options: &CoverageOptions,
    ) -> f64 {
        let mut seen_s = vec![false; self.state_count];
        let mut seen_t = vec![false; self.transitions.len()];
        let negatives = match options.examples {
            CoverageExamples::All => negatives,
            CoverageExamples::PositivesOnly => &[],
        };
        for example in positives.iter().chain(negatives) {
            let symbols: Vec<Symbol> = example.chars().map(symbol_of).collect();
            match options.mode {
                MatchMode::Full => {
                    self.trace_into(&symbols, &mut seen_s, &mut seen_t);
                }
                MatchMode::Partial => {
                    for offset in 0..=symbols.len() {
                        self.trace_into(&symbols[offset..], &mut seen_s, &mut seen_t);
                    }
                }
            }
        }
        let visited_states = seen_s.iter().filter(|&&v| v).count();
        let (covered, total) = match options.measure {
            CoverageMeasure::StatesOnly => (visited_states, self.state_count),
            CoverageMeasure::StatesAndTransitions => (
                visited_states + seen_t.iter().filter(|&&v| v).count(),
                self.state_count + self.transitions.len(),
            ),
            CoverageMeasure::ExpandedEdges => {
                let weight = |t: &Transition| match t.label {
                    Label::Epsilon => 1,
                    Label::Symbols(set) => set.len(),
                };
                let covered_edges: usize = self
                    .transitions
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| seen_t[*i])
                    .map(|(_, t)| weight(t))
                    .sum();
                (visited_states + covered_edges, self.size())
            }
        };
        covered as f64 / total as f64
    }
}
