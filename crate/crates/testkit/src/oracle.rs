//! Set-semantics reference matcher.
//!
//! Evaluates a syntax tree by computing every `(position, captures)` state a
//! node can end in, with no backtracking order and no step limit. Slow, but
//! written independently of the engine's compiler and VM. Captures inside
//! lookaround are not propagated, and repeated captures keep their last
//! iteration; the generator avoids referencing either.

use std::collections::BTreeSet;

use forge_core::ast::{AnchorKind, ClassItem, GroupKind, LookDirection, Shorthand, ShorthandKind};
use forge_core::{Node, RegexAst};

type Caps = Vec<Option<(usize, usize)>>;
type State = (usize, Caps);

struct Eval<'a> {
    input: &'a [char],
}

fn same(a: char, b: char, ci: bool) -> bool {
    a == b || ci && a.to_lowercase().eq(b.to_lowercase())
}

fn is_word(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn shorthand_hit(sh: &Shorthand, c: char) -> bool {
    let hit = match sh.kind {
        ShorthandKind::Digit => c.is_ascii_digit(),
        ShorthandKind::Word => is_word(c),
        ShorthandKind::Space => matches!(c, ' ' | '\t' | '\n' | '\r' | '\x0b' | '\x0c'),
    };
    hit != sh.negated
}

fn variants(c: char) -> Vec<char> {
    let mut v = vec![c];
    v.extend(c.to_lowercase());
    v.extend(c.to_uppercase());
    v
}

impl Eval<'_> {
    fn eval(&self, node: &Node, ci: bool, st: State) -> Vec<State> {
        let (pos, caps) = st;
        let next = self.input.get(pos).copied();
        let one = |ok: bool, caps: Caps| if ok { vec![(pos + 1, caps)] } else { vec![] };
        match node {
            Node::Empty | Node::SetFlags(_) => vec![(pos, caps)],
            Node::Literal(c) => one(next.is_some_and(|x| same(x, *c, ci)), caps),
            Node::Dot => one(next.is_some_and(|x| x != '\n'), caps),
            Node::Shorthand(sh) => {
                let ok = next.is_some_and(|x| {
                    if ci {
                        variants(x).iter().any(|&v| shorthand_hit(&Shorthand { negated: false, ..*sh }, v))
                            != sh.negated
                    } else {
                        shorthand_hit(sh, x)
                    }
                });
                one(ok, caps)
            }
            Node::Class(class) => {
                let ok = next.is_some_and(|x| {
                    let cands = if ci { variants(x) } else { vec![x] };
                    let hit = cands.iter().any(|&v| {
                        class.items.iter().any(|item| match item {
                            ClassItem::Range(lo, hi) => *lo <= v && v <= *hi,
                            ClassItem::Shorthand(sh) => shorthand_hit(sh, v),
                        })
                    });
                    hit != class.negated
                });
                one(ok, caps)
            }
            Node::Anchor(kind) => {
                let before = pos > 0 && is_word(self.input[pos - 1]);
                let after = next.is_some_and(is_word);
                let ok = match kind {
                    AnchorKind::Start => pos == 0,
                    AnchorKind::End => pos == self.input.len(),
                    AnchorKind::WordBoundary => before != after,
                    AnchorKind::NotWordBoundary => before == after,
                };
                if ok {
                    vec![(pos, caps)]
                } else {
                    vec![]
                }
            }
            Node::Concat(items) => {
                let mut cur = vec![(pos, caps)];
                for item in items {
                    let mut next: BTreeSet<State> = BTreeSet::new();
                    for s in cur {
                        next.extend(self.eval(item, ci, s));
                    }
                    cur = next.into_iter().collect();
                }
                cur
            }
            Node::Alternation(branches) => {
                let mut out = BTreeSet::new();
                for b in branches {
                    out.extend(self.eval(b, ci, (pos, caps.clone())));
                }
                out.into_iter().collect()
            }
            Node::Group(group) => match &group.kind {
                GroupKind::Capture { index } | GroupKind::Named { index, .. } => self
                    .eval(&group.child, ci, (pos, caps))
                    .into_iter()
                    .map(|(end, mut caps)| {
                        caps[*index as usize] = Some((pos, end));
                        (end, caps)
                    })
                    .collect(),
                GroupKind::NonCapture => self.eval(&group.child, ci, (pos, caps)),
                GroupKind::Flags(f) => self.eval(&group.child, f.case_insensitive, (pos, caps)),
            },
            Node::Backref(b) => match caps[b.index as usize] {
                None => vec![],
                Some((s, e)) => {
                    let len = e - s;
                    let ok = pos + len <= self.input.len()
                        && (0..len).all(|i| same(self.input[s + i], self.input[pos + i], ci));
                    if ok {
                        vec![(pos + len, caps)]
                    } else {
                        vec![]
                    }
                }
            },
            Node::Look(look) => {
                let found = match look.direction {
                    LookDirection::Ahead => !self.eval(&look.child, ci, (pos, caps.clone())).is_empty(),
                    LookDirection::Behind => {
                        let width = fixed_width(&look.child);
                        pos >= width
                            && self
                                .eval(&look.child, ci, (pos - width, caps.clone()))
                                .iter()
                                .any(|(end, _)| *end == pos)
                    }
                };
                if found != look.negated {
                    vec![(pos, caps)]
                } else {
                    vec![]
                }
            }
            Node::Repeat(rep) => {
                let step = |from: &[State]| -> BTreeSet<State> {
                    let mut out = BTreeSet::new();
                    for s in from {
                        out.extend(self.eval(&rep.child, ci, s.clone()));
                    }
                    out
                };
                let mut cur: Vec<State> = vec![(pos, caps)];
                for _ in 0..rep.min {
                    cur = step(&cur).into_iter().collect();
                }
                let mut all: BTreeSet<State> = cur.iter().cloned().collect();
                let mut frontier = cur;
                let mut extra = 0u32;
                while rep.max.is_none_or(|m| extra < m - rep.min) && !frontier.is_empty() {
                    let fresh: Vec<State> =
                        step(&frontier).into_iter().filter(|s| !all.contains(s)).collect();
                    all.extend(fresh.iter().cloned());
                    frontier = fresh;
                    extra += 1;
                }
                all.into_iter().collect()
            }
        }
    }
}

fn fixed_width(node: &Node) -> usize {
    match node {
        Node::Literal(_) | Node::Dot | Node::Class(_) | Node::Shorthand(_) => 1,
        Node::Concat(items) => items.iter().map(fixed_width).sum(),
        Node::Alternation(items) => items.first().map(fixed_width).unwrap_or(0),
        Node::Group(g) => fixed_width(&g.child),
        Node::Repeat(r) => fixed_width(&r.child) * r.min as usize,
        _ => 0,
    }
}

/// Whether `ast` matches `input`: the whole input when `full`, otherwise
/// some substring.
pub fn oracle_match(ast: &RegexAst, input: &str, full: bool) -> bool {
    let chars: Vec<char> = input.chars().collect();
    let e = Eval { input: &chars };
    let caps: Caps = vec![None; ast.capture_count() as usize + 1];
    let ci = ast.case_insensitive();
    let starts = if full { 0..=0 } else { 0..=chars.len() };
    for start in starts {
        let ends = e.eval(ast.root(), ci, (start, caps.clone()));
        if ends.iter().any(|(end, _)| !full || *end == chars.len()) {
            return true;
        }
    }
    false
}
