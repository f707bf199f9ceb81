//! Thompson construction followed by assertion elimination and trimming.
//!
//! The raw construction keeps zero-width assertions (`^ $ \b \B`) as special
//! edges. They are then compiled away by a product with a small context: the
//! class of the previous character (start of input, word, non-word) and a
//! pending requirement on the next character (word, non-word or end, or
//! end of input). Context components that the pattern never inspects are
//! collapsed so that assertion-free patterns keep their plain Thompson shape.

use std::collections::{HashMap, VecDeque};

use crate::ast::{AnchorKind, GroupKind, Node, RegexAst, RegularityClass, Shorthand};
use crate::matcher::MatchMode;

use super::symbols::{symbol_of, SymbolSet};
use super::{AutomatonError, Label, Nfa, StateId, Transition};

pub const DEFAULT_STATE_CAP: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NfaOptions {
    pub state_cap: usize,
    /// `Partial` wraps the pattern as `Σ* pattern Σ*`.
    pub mode: MatchMode,
    /// Drop dead and unreachable states. Off only for testing.
    pub trim: bool,
}

impl Default for NfaOptions {
    fn default() -> Self {
        Self { state_cap: DEFAULT_STATE_CAP, mode: MatchMode::Full, trim: true }
    }
}

/// Builds the full-match automaton with the default state cap.
pub fn build_nfa(ast: &RegexAst) -> Result<Nfa, AutomatonError> {
    build_nfa_with(ast, &NfaOptions::default())
}

pub fn build_nfa_with(ast: &RegexAst, options: &NfaOptions) -> Result<Nfa, AutomatonError> {
    if ast.regularity() == RegularityClass::Extended {
        return Err(AutomatonError::NonRegular);
    }
    let mut raw = RawNfa { states: 1, edges: Vec::new(), cap: options.state_cap };
    let start = 0;
    let accept = match options.mode {
        MatchMode::Full => raw.compile(ast.root(), start, ast.case_insensitive())?,
        MatchMode::Partial => {
            raw.edge(start, RawLabel::Symbols(SymbolSet::ALL), start);
            let inner = raw.state()?;
            raw.edge(start, RawLabel::Epsilon, inner);
            let end = raw.compile(ast.root(), inner, ast.case_insensitive())?;
            let post = raw.state()?;
            raw.edge(end, RawLabel::Epsilon, post);
            raw.edge(post, RawLabel::Symbols(SymbolSet::ALL), post);
            post
        }
    };
    let (states, start, accepts, transitions) = raw.eliminate_assertions(start, accept)?;
    if options.trim {
        Ok(trim(states, start, accepts, transitions))
    } else {
        Ok(Nfa::new(states, start, accepts, transitions, false))
    }
}

#[derive(Debug, Clone, Copy)]
enum RawLabel {
    Epsilon,
    Symbols(SymbolSet),
    Assert(AnchorKind),
}

struct RawNfa {
    states: usize,
    edges: Vec<(StateId, RawLabel, StateId)>,
    cap: usize,
}

impl RawNfa {
    fn state(&mut self) -> Result<StateId, AutomatonError> {
        if self.states >= self.cap {
            return Err(AutomatonError::TooLarge { cap: self.cap });
        }
        self.states += 1;
        Ok(self.states - 1)
    }

    fn edge(&mut self, from: StateId, label: RawLabel, to: StateId) {
        if matches!(label, RawLabel::Epsilon) && from == to {
            return;
        }
        self.edges.push((from, label, to));
    }

    fn symbols(&mut self, from: StateId, set: SymbolSet) -> Result<StateId, AutomatonError> {
        let to = self.state()?;
        // An empty projection leaves `to` unreachable; trimming removes it.
        if !set.is_empty() {
            self.edge(from, RawLabel::Symbols(set), to);
        }
        Ok(to)
    }

    /// Compiles `node` starting at `from`; returns the fragment's end state.
    /// Fragments never add edges into `from`, so callers may chain fragments
    /// by passing one fragment's end as the next one's start.
    fn compile(&mut self, node: &Node, from: StateId, ci: bool) -> Result<StateId, AutomatonError> {
        match node {
            Node::Empty | Node::SetFlags(_) => Ok(from),
            Node::Literal(c) => {
                let mut set = SymbolSet::single(symbol_of(*c));
                if ci && c.is_ascii_alphabetic() {
                    set.insert(c.to_ascii_lowercase() as u8);
                    set.insert(c.to_ascii_uppercase() as u8);
                }
                self.symbols(from, set)
            }
            Node::Dot => {
                let set = SymbolSet::single(b'\n').complement();
                self.symbols(from, set)
            }
            Node::Class(class) => {
                self.symbols(from, SymbolSet::from_class(&class.item_set(), class.negated, ci))
            }
            Node::Shorthand(sh) => {
                let set = SymbolSet::from_class(&Shorthand::positive_set(sh.kind), sh.negated, ci);
                self.symbols(from, set)
            }
            Node::Anchor(kind) => {
                let to = self.state()?;
                self.edge(from, RawLabel::Assert(*kind), to);
                Ok(to)
            }
            Node::Concat(items) => {
                let mut at = from;
                for item in items {
                    at = self.compile(item, at, ci)?;
                }
                Ok(at)
            }
            Node::Alternation(branches) => {
                let mut ends = Vec::with_capacity(branches.len());
                for branch in branches {
                    ends.push(self.compile(branch, from, ci)?);
                }
                let to = self.state()?;
                for end in ends {
                    self.edge(end, RawLabel::Epsilon, to);
                }
                Ok(to)
            }
            Node::Group(group) => {
                let ci = match group.kind {
                    GroupKind::Flags(flags) => flags.case_insensitive,
                    _ => ci,
                };
                self.compile(&group.child, from, ci)
            }
            Node::Backref(_) | Node::Look(_) => Err(AutomatonError::NonRegular),
            Node::Repeat(rep) => {
                let mut at = from;
                for _ in 0..rep.min {
                    at = self.compile(&rep.child, at, ci)?;
                }
                match rep.max {
                    None => {
                        let body = self.state()?;
                        self.edge(at, RawLabel::Epsilon, body);
                        let body_end = self.compile(&rep.child, body, ci)?;
                        self.edge(body_end, RawLabel::Epsilon, body);
                        let to = self.state()?;
                        self.edge(at, RawLabel::Epsilon, to);
                        self.edge(body_end, RawLabel::Epsilon, to);
                        Ok(to)
                    }
                    Some(max) if max == rep.min => Ok(at),
                    Some(max) => {
                        let mut skips = Vec::new();
                        for _ in rep.min..max {
                            skips.push(at);
                            at = self.compile(&rep.child, at, ci)?;
                        }
                        let to = self.state()?;
                        self.edge(at, RawLabel::Epsilon, to);
                        for s in skips {
                            self.edge(s, RawLabel::Epsilon, to);
                        }
                        Ok(to)
                    }
                }
            }
        }
    }

    fn eliminate_assertions(
        self,
        start: StateId,
        accept: StateId,
    ) -> Result<(usize, StateId, Vec<StateId>, Vec<Transition>), AutomatonError> {
        let has = |pred: &dyn Fn(AnchorKind) -> bool| {
            self.edges.iter().any(|(_, l, _)| matches!(l, RawLabel::Assert(k) if pred(*k)))
        };
        let track_word = has(&|k| matches!(k, AnchorKind::WordBoundary | AnchorKind::NotWordBoundary));
        let track_begin = track_word || has(&|k| k == AnchorKind::Start);

        let mut out: Vec<Vec<usize>> = vec![Vec::new(); self.states];
        for (i, (from, _, _)) in self.edges.iter().enumerate() {
            out[*from].push(i);
        }

        let word = SymbolSet::word();
        let mut ids: HashMap<(StateId, Prev, Need), StateId> = HashMap::new();
        let mut queue = VecDeque::new();
        let mut transitions = Vec::new();
        let mut accepts = Vec::new();
        let initial = (start, Prev::Begin, Need::Any);
        ids.insert(initial, 0);
        queue.push_back(initial);

        while let Some(key @ (q, prev, need)) = queue.pop_front() {
            let id = ids[&key];
            if q == accept && need != Need::Word {
                accepts.push(id);
            }
            for &e in &out[q] {
                let (_, label, to) = self.edges[e];
                let mut targets: Vec<(Label, (StateId, Prev, Need))> = Vec::new();
                match label {
                    RawLabel::Epsilon => targets.push((Label::Epsilon, (to, prev, need))),
                    RawLabel::Assert(kind) => {
                        let required = match kind {
                            AnchorKind::Start => {
                                if prev == Prev::Begin {
                                    Some(need)
                                } else {
                                    None
                                }
                            }
                            AnchorKind::End => need.combine(Need::End),
                            AnchorKind::WordBoundary => {
                                need.combine(if prev == Prev::Word { Need::NotWord } else { Need::Word })
                            }
                            AnchorKind::NotWordBoundary => {
                                need.combine(if prev == Prev::Word { Need::Word } else { Need::NotWord })
                            }
                        };
                        if let Some(need) = required {
                            targets.push((Label::Epsilon, (to, prev, need)));
                        }
                    }
                    RawLabel::Symbols(set) => {
                        let allowed = match need {
                            Need::Any => set,
                            Need::Word => set.intersect(word),
                            Need::NotWord => set.intersect(word.complement()),
                            Need::End => SymbolSet::EMPTY,
                        };
                        if !track_begin {
                            targets.push((Label::Symbols(allowed), (to, prev, Need::Any)));
                        } else if !track_word {
                            targets.push((Label::Symbols(allowed), (to, Prev::NonWord, Need::Any)));
                        } else {
                            targets
                                .push((Label::Symbols(allowed.intersect(word)), (to, Prev::Word, Need::Any)));
                            targets.push((
                                Label::Symbols(allowed.intersect(word.complement())),
                                (to, Prev::NonWord, Need::Any),
                            ));
                        }
                        targets.retain(|(l, _)| !matches!(l, Label::Symbols(s) if s.is_empty()));
                    }
                }
                for (label, target) in targets {
                    let next_id = ids.len();
                    let target_id = *ids.entry(target).or_insert_with(|| {
                        queue.push_back(target);
                        next_id
                    });
                    if ids.len() > self.cap {
                        return Err(AutomatonError::TooLarge { cap: self.cap });
                    }
                    if !(label == Label::Epsilon && target_id == id) {
                        transitions.push(Transition { from: id, label, to: target_id });
                    }
                }
            }
        }
        Ok((ids.len(), 0, accepts, transitions))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Prev {
    Begin,
    Word,
    NonWord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Need {
    Any,
    Word,
    /// A non-word character or the end of input.
    NotWord,
    End,
}

impl Need {
    fn combine(self, other: Need) -> Option<Need> {
        use Need::*;
        match (self, other) {
            (Any, x) | (x, Any) => Some(x),
            (a, b) if a == b => Some(a),
            (NotWord, End) | (End, NotWord) => Some(End),
            _ => None,
        }
    }
}

/// Drops states that are unreachable or cannot reach an accept state, then
/// renumbers the survivors in order.
fn trim(states: usize, start: StateId, accepts: Vec<StateId>, transitions: Vec<Transition>) -> Nfa {
    let mut forward = vec![Vec::new(); states];
    let mut backward = vec![Vec::new(); states];
    for t in &transitions {
        forward[t.from].push(t.to);
        backward[t.to].push(t.from);
    }
    let reach = |adj: &Vec<Vec<StateId>>, seeds: &[StateId]| {
        let mut seen = vec![false; states];
        let mut stack: Vec<StateId> = seeds.to_vec();
        for &s in seeds {
            seen[s] = true;
        }
        while let Some(s) = stack.pop() {
            for &n in &adj[s] {
                if !seen[n] {
                    seen[n] = true;
                    stack.push(n);
                }
            }
        }
        seen
    };
    let reachable = reach(&forward, &[start]);
    let live = reach(&backward, &accepts);
    if !live[start] {
        // Empty language: a lone non-accepting start state.
        return Nfa::new(1, 0, Vec::new(), Vec::new(), true);
    }
    let mut remap = vec![usize::MAX; states];
    let mut kept = 0;
    for s in 0..states {
        if reachable[s] && live[s] {
            remap[s] = kept;
            kept += 1;
        }
    }
    let transitions = transitions
        .into_iter()
        .filter(|t| remap[t.from] != usize::MAX && remap[t.to] != usize::MAX)
        .map(|t| Transition { from: remap[t.from], label: t.label, to: remap[t.to] })
        .collect();
    let accepts = accepts.into_iter().filter(|&a| remap[a] != usize::MAX).map(|a| remap[a]).collect();
    Nfa::new(kept, remap[start], accepts, transitions, true)
}
