use std::collections::{HashSet, VecDeque};

use super::{Label, Nfa, StateId};

pub const DEFAULT_COVERING_CAP: usize = 500;

/// Shortest-path tree over 0-1 weights: epsilon edges cost nothing, symbol
/// edges cost one character.
struct PathTree {
    /// `(predecessor, character)` for each reached state; `None` at the roots.
    parent: Vec<Option<(StateId, Option<char>)>>,
    reached: Vec<bool>,
}

impl PathTree {
    fn build(
        states: usize,
        roots: &[StateId],
        edges: impl Fn(StateId) -> Vec<(StateId, Option<char>)>,
    ) -> Self {
        let mut dist = vec![usize::MAX; states];
        let mut parent = vec![None; states];
        let mut reached = vec![false; states];
        let mut deque = VecDeque::new();
        for &r in roots {
            dist[r] = 0;
            deque.push_back(r);
        }
        while let Some(s) = deque.pop_front() {
            if reached[s] {
                continue;
            }
            reached[s] = true;
            for (n, ch) in edges(s) {
                let d = dist[s] + usize::from(ch.is_some());
                if d < dist[n] {
                    dist[n] = d;
                    parent[n] = Some((s, ch));
                    if ch.is_some() {
                        deque.push_back(n);
                    } else {
                        deque.push_front(n);
                    }
                }
            }
        }
        Self { parent, reached }
    }

    /// Characters along the path from a root to `s`, root first.
    fn chars_to(&self, mut s: StateId) -> Vec<char> {
        let mut out = Vec::new();
        while let Some((p, ch)) = self.parent[s] {
            out.extend(ch);
            s = p;
        }
        out.reverse();
        out
    }
}

impl Nfa {
    /// One accepted string per symbol transition: a shortest way to reach the
    /// transition, a representative character on it, and a shortest way on to
    /// acceptance. Results are deduplicated in transition order and capped.
    pub fn covering_strings(&self, cap: usize) -> Vec<String> {
        let accepts: Vec<StateId> = self.accepts().collect();
        if accepts.is_empty() || cap == 0 {
            return Vec::new();
        }
        let rep = |label: Label| match label {
            Label::Epsilon => None,
            Label::Symbols(set) => set.representative(),
        };
        let forward = PathTree::build(self.state_count, &[self.start], |s| {
            self.out[s].iter().map(|&t| (self.transitions[t].to, rep(self.transitions[t].label))).collect()
        });
        let mut incoming = vec![Vec::new(); self.state_count];
        for t in &self.transitions {
            incoming[t.to].push((t.from, rep(t.label)));
        }
        let backward = PathTree::build(self.state_count, &accepts, |s| incoming[s].clone());

        let mut seen = HashSet::new();
        let mut out = Vec::new();
        let mut any_symbol = false;
        for t in &self.transitions {
            let Label::Symbols(set) = t.label else { continue };
            let Some(c) = set.representative() else { continue };
            any_symbol = true;
            if !forward.reached[t.from] || !backward.reached[t.to] {
                continue;
            }
            let mut chars = forward.chars_to(t.from);
            chars.push(c);
            // The backward tree's parent chain runs from `t.to` toward an
            // accept state, already in reading order.
            let mut s = t.to;
            while let Some((p, ch)) = backward.parent[s] {
                chars.extend(ch);
                s = p;
            }
            let string: String = chars.into_iter().collect();
            if seen.insert(string.clone()) {
                out.push(string);
                if out.len() >= cap {
                    break;
                }
            }
        }
        if !any_symbol && self.accepts_str("") {
            out.push(String::new());
        }
        out
    }
}
