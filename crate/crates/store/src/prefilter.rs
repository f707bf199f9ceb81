//! Conservative pruning of entries that cannot match a query's positives.
//!
//! Two facts derived from the syntax tree are checked against every
//! positive: substrings any match must contain, and bounds on match width.
//! Both are necessary conditions, so a pruned entry could never have been a
//! candidate.

use forge_core::ast::{GroupKind, Node};
use forge_core::{MatchMode, RegexAst};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PrefilterInfo {
    /// Case-sensitive substrings present in every match.
    pub required: Vec<String>,
    pub min_width: usize,
    pub max_width: Option<usize>,
}

impl PrefilterInfo {
    pub fn of(ast: &RegexAst) -> Self {
        let mut required = Vec::new();
        collect_required(ast.root(), ast.case_insensitive(), &mut required);
        required.sort();
        required.dedup();
        // A literal contained in a longer one adds nothing.
        let longer = required.clone();
        required.retain(|r| !longer.iter().any(|l| l.len() > r.len() && l.contains(r.as_str())));
        Self { required, min_width: ast.root().min_width(), max_width: ast.root().max_width() }
    }

    /// False only if no input in `positives` can be matched.
    pub fn admits(&self, positive: &str, len: usize, mode: MatchMode) -> bool {
        if len < self.min_width {
            return false;
        }
        if mode == MatchMode::Full && self.max_width.is_some_and(|max| len > max) {
            return false;
        }
        self.required.iter().all(|r| positive.contains(r.as_str()))
    }
}

fn collect_required(node: &Node, ci: bool, out: &mut Vec<String>) {
    match node {
        Node::Literal(c) if !ci => out.push(c.to_string()),
        Node::Concat(items) => {
            let mut run = String::new();
            for item in items {
                match item {
                    Node::Literal(c) if !ci => run.push(*c),
                    _ => {
                        if !run.is_empty() {
                            out.push(std::mem::take(&mut run));
                        }
                        collect_required(item, ci, out);
                    }
                }
            }
            if !run.is_empty() {
                out.push(run);
            }
        }
        Node::Group(group) => {
            let ci = match group.kind {
                GroupKind::Flags(flags) => flags.case_insensitive,
                _ => ci,
            };
            collect_required(&group.child, ci, out);
        }
        Node::Repeat(rep) if rep.min >= 1 => collect_required(&rep.child, ci, out),
        // Alternatives, optional repeats and lookaround promise nothing.
        _ => {}
    }
}

/// Query facts the store may use to skip entries during a scan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryHints {
    pub positives: Vec<String>,
    pub mode: MatchMode,
}

impl QueryHints {
    pub fn admits(&self, info: &PrefilterInfo) -> bool {
        self.positives.iter().all(|p| info.admits(p, p.chars().count(), self.mode))
    }
}
