//! Regex syntax tree for the supported dialect.
//!
//! The dialect follows Python's `re` module for the constructs it accepts:
//! literals and escapes, `.`, bracket classes, `\d \w \s` and their negations,
//! `^ $ \b \B`, greedy and lazy quantifiers, alternation, capturing,
//! non-capturing and named groups, backreferences, lookaround, and the `i`
//! flag (global `(?i)` at the start of the pattern or scoped `(?i:...)`).
//!
//! Shorthand classes are ASCII-only (`\d` = `[0-9]`, `\w` = `[A-Za-z0-9_]`,
//! `\s` = `[ \t\n\r\f\v]`), the same as `re.ASCII`.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::charset::CharSet;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegexAst {
    root: Node,
    capture_count: u32,
}

impl RegexAst {
    pub(crate) fn new(root: Node, capture_count: u32) -> Self {
        Self { root, capture_count }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn capture_count(&self) -> u32 {
        self.capture_count
    }

    /// Whether a leading `(?i)` makes the whole pattern case-insensitive.
    pub fn case_insensitive(&self) -> bool {
        match &self.root {
            Node::SetFlags(flags) => flags.case_insensitive,
            Node::Concat(items) => items
                .iter()
                .take_while(|n| matches!(n, Node::SetFlags(_)))
                .any(|n| matches!(n, Node::SetFlags(f) if f.case_insensitive)),
            _ => false,
        }
    }

    pub fn features(&self) -> BTreeSet<FeatureKind> {
        self.root.features()
    }

    pub fn feature_count(&self) -> usize {
        self.features().len()
    }

    pub fn regularity(&self) -> RegularityClass {
        if self.root.any(&|n| matches!(n, Node::Backref(_) | Node::Look(_))) {
            RegularityClass::Extended
        } else {
            RegularityClass::Regular
        }
    }

    /// Renders the tree back to pattern syntax that parses to an isomorphic tree.
    pub fn render(&self) -> String {
        self.root.to_string()
    }

    pub fn node_count(&self) -> usize {
        self.root.node_count()
    }
}

impl fmt::Display for RegexAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    /// Matches the empty string (empty pattern, empty alternative, `()`).
    Empty,
    Literal(char),
    Dot,
    Class(ClassNode),
    Shorthand(Shorthand),
    Anchor(AnchorKind),
    Repeat(Box<Repeat>),
    Concat(Vec<Node>),
    Alternation(Vec<Node>),
    Group(Box<Group>),
    Backref(Backref),
    Look(Box<Look>),
    /// Global inline flags, only legal at the start of the pattern.
    SetFlags(Flags),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ShorthandKind {
    Digit,
    Word,
    Space,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shorthand {
    pub kind: ShorthandKind,
    pub negated: bool,
}

impl Shorthand {
    /// The members of the non-negated class.
    pub fn positive_set(kind: ShorthandKind) -> CharSet {
        match kind {
            ShorthandKind::Digit => CharSet::from_ranges([('0', '9')]),
            ShorthandKind::Word => CharSet::from_ranges([('0', '9'), ('A', 'Z'), ('_', '_'), ('a', 'z')]),
            ShorthandKind::Space => CharSet::from_ranges([('\t', '\r'), (' ', ' ')]),
        }
    }

    pub fn char_set(&self) -> CharSet {
        let set = Self::positive_set(self.kind);
        if self.negated {
            set.complement()
        } else {
            set
        }
    }

    fn letter(&self) -> char {
        let c = match self.kind {
            ShorthandKind::Digit => 'd',
            ShorthandKind::Word => 'w',
            ShorthandKind::Space => 's',
        };
        if self.negated {
            c.to_ascii_uppercase()
        } else {
            c
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClassItem {
    Range(char, char),
    Shorthand(Shorthand),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassNode {
    pub negated: bool,
    pub items: Vec<ClassItem>,
}

impl ClassNode {
    /// Union of the items, before negation.
    pub fn item_set(&self) -> CharSet {
        self.items.iter().fold(CharSet::empty(), |acc, item| match item {
            ClassItem::Range(lo, hi) => acc.union(&CharSet::from_ranges([(*lo, *hi)])),
            ClassItem::Shorthand(sh) => acc.union(&sh.char_set()),
        })
    }

    pub fn char_set(&self) -> CharSet {
        let set = self.item_set();
        if self.negated {
            set.complement()
        } else {
            set
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AnchorKind {
    Start,
    End,
    WordBoundary,
    NotWordBoundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RepeatForm {
    Star,
    Plus,
    Optional,
    /// `{m}`
    Exact,
    /// `{m,}`
    AtLeast,
    /// `{m,n}`
    Range,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Repeat {
    pub child: Node,
    pub min: u32,
    /// `None` means unbounded.
    pub max: Option<u32>,
    pub greedy: bool,
    pub form: RepeatForm,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Flags {
    pub case_insensitive: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GroupKind {
    Capture {
        index: u32,
    },
    Named {
        index: u32,
        name: String,
    },
    NonCapture,
    /// `(?i:...)` or `(?-i:...)`
    Flags(Flags),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    pub kind: GroupKind,
    pub child: Node,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Backref {
    pub index: u32,
    /// Set for `(?P=name)` references.
    pub name: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LookDirection {
    Ahead,
    Behind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Look {
    pub direction: LookDirection,
    pub negated: bool,
    pub child: Node,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureKind {
    Literal,
    Dot,
    CharClass,
    NegatedClass,
    ShorthandClass,
    AnchorStart,
    AnchorEnd,
    WordBoundary,
    QuantifierStar,
    QuantifierPlus,
    QuantifierOptional,
    QuantifierBounded,
    LazyModifier,
    Alternation,
    CaptureGroup,
    NonCapturingGroup,
    NamedGroup,
    Backreference,
    Lookahead,
    NegativeLookahead,
    Lookbehind,
    NegativeLookbehind,
    InlineFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegularityClass {
    Regular,
    Extended,
}

impl Node {
    pub fn children(&self) -> &[Node] {
        match self {
            Node::Concat(items) | Node::Alternation(items) => items,
            Node::Repeat(rep) => std::slice::from_ref(&rep.child),
            Node::Group(group) => std::slice::from_ref(&group.child),
            Node::Look(look) => std::slice::from_ref(&look.child),
            _ => &[],
        }
    }

    /// The construct this node contributes to the feature set. Concatenation
    /// and empty nodes are structural and contribute nothing.
    pub fn feature(&self) -> Option<FeatureKind> {
        Some(match self {
            Node::Empty | Node::Concat(_) => return None,
            Node::Literal(_) => FeatureKind::Literal,
            Node::Dot => FeatureKind::Dot,
            Node::Class(class) if class.negated => FeatureKind::NegatedClass,
            Node::Class(_) => FeatureKind::CharClass,
            Node::Shorthand(_) => FeatureKind::ShorthandClass,
            Node::Anchor(AnchorKind::Start) => FeatureKind::AnchorStart,
            Node::Anchor(AnchorKind::End) => FeatureKind::AnchorEnd,
            Node::Anchor(_) => FeatureKind::WordBoundary,
            Node::Repeat(rep) => match rep.form {
                RepeatForm::Star => FeatureKind::QuantifierStar,
                RepeatForm::Plus => FeatureKind::QuantifierPlus,
                RepeatForm::Optional => FeatureKind::QuantifierOptional,
                _ => FeatureKind::QuantifierBounded,
            },
            Node::Alternation(_) => FeatureKind::Alternation,
            Node::Group(group) => match group.kind {
                GroupKind::Capture { .. } => FeatureKind::CaptureGroup,
                GroupKind::Named { .. } => FeatureKind::NamedGroup,
                GroupKind::NonCapture => FeatureKind::NonCapturingGroup,
                GroupKind::Flags(_) => FeatureKind::InlineFlags,
            },
            Node::Backref(_) => FeatureKind::Backreference,
            Node::Look(look) => match (look.direction, look.negated) {
                (LookDirection::Ahead, false) => FeatureKind::Lookahead,
                (LookDirection::Ahead, true) => FeatureKind::NegativeLookahead,
                (LookDirection::Behind, false) => FeatureKind::Lookbehind,
                (LookDirection::Behind, true) => FeatureKind::NegativeLookbehind,
            },
            Node::SetFlags(_) => FeatureKind::InlineFlags,
        })
    }

    pub fn features(&self) -> BTreeSet<FeatureKind> {
        let mut out = BTreeSet::new();
        self.collect_features(&mut out);
        out
    }

    fn collect_features(&self, out: &mut BTreeSet<FeatureKind>) {
        out.extend(self.feature());
        // A lazy quantifier is a quantifier plus the lazy modifier.
        if let Node::Repeat(rep) = self {
            if !rep.greedy {
                out.insert(FeatureKind::LazyModifier);
            }
        }
        for child in self.children() {
            child.collect_features(out);
        }
    }

    pub fn any(&self, pred: &dyn Fn(&Node) -> bool) -> bool {
        pred(self) || self.children().iter().any(|c| c.any(pred))
    }

    pub fn node_count(&self) -> usize {
        1 + self.children().iter().map(Node::node_count).sum::<usize>()
    }

    /// Node label used for tree comparison: kind plus canonical payload.
    /// Class payloads are normalized to sorted disjoint ranges; capture
    /// indices are omitted since they depend on surrounding groups.
    pub fn label(&self) -> String {
        match self {
            Node::Empty => "empty".into(),
            Node::Literal(c) => format!("lit:{:x}", *c as u32),
            Node::Dot => "dot".into(),
            Node::Class(class) => {
                format!("class:{}{}", if class.negated { "^" } else { "" }, class.item_set())
            }
            Node::Shorthand(sh) => format!("shorthand:{}", sh.letter()),
            Node::Anchor(kind) => format!("anchor:{kind:?}"),
            Node::Repeat(rep) => format!(
                "repeat:{},{}{}",
                rep.min,
                rep.max.map(|m| m.to_string()).unwrap_or_default(),
                if rep.greedy { "" } else { "?" }
            ),
            Node::Concat(_) => "concat".into(),
            Node::Alternation(_) => "alt".into(),
            Node::Group(group) => match &group.kind {
                GroupKind::Capture { .. } => "group:capture".into(),
                GroupKind::Named { name, .. } => format!("group:named:{name}"),
                GroupKind::NonCapture => "group:non-capture".into(),
                GroupKind::Flags(flags) => format!("group:flags:{}", flags.case_insensitive),
            },
            Node::Backref(b) => match &b.name {
                Some(name) => format!("backref:{name}"),
                None => format!("backref:{}", b.index),
            },
            Node::Look(look) => format!("look:{:?}:{}", look.direction, look.negated),
            Node::SetFlags(flags) => format!("flags:{}", flags.case_insensitive),
        }
    }

    /// Lower bound on the number of characters any match consumes.
    pub fn min_width(&self) -> usize {
        match self {
            Node::Empty | Node::Anchor(_) | Node::Look(_) | Node::SetFlags(_) | Node::Backref(_) => 0,
            Node::Literal(_) | Node::Dot | Node::Class(_) | Node::Shorthand(_) => 1,
            Node::Concat(items) => items.iter().map(Node::min_width).fold(0, usize::saturating_add),
            Node::Alternation(items) => items.iter().map(Node::min_width).min().unwrap_or(0),
            Node::Repeat(rep) => rep.child.min_width().saturating_mul(rep.min as usize),
            Node::Group(group) => group.child.min_width(),
        }
    }

    /// Upper bound on the characters any match consumes; `None` when unbounded.
    pub fn max_width(&self) -> Option<usize> {
        match self {
            Node::Empty | Node::Anchor(_) | Node::Look(_) | Node::SetFlags(_) => Some(0),
            Node::Literal(_) | Node::Dot | Node::Class(_) | Node::Shorthand(_) => Some(1),
            Node::Backref(_) => None,
            Node::Concat(items) => {
                items.iter().map(Node::max_width).try_fold(0usize, |acc, w| Some(acc.saturating_add(w?)))
            }
            Node::Alternation(items) => {
                items.iter().map(Node::max_width).try_fold(0usize, |acc, w| Some(acc.max(w?)))
            }
            Node::Repeat(rep) => match (rep.child.max_width()?, rep.max) {
                (0, _) => Some(0),
                (w, Some(max)) => Some(w.saturating_mul(max as usize)),
                (_, None) => None,
            },
            Node::Group(group) => group.child.max_width(),
        }
    }

    /// Exact match width in characters, when every match has the same length.
    pub fn fixed_width(&self) -> Option<usize> {
        match self {
            Node::Empty | Node::Anchor(_) | Node::Look(_) | Node::SetFlags(_) => Some(0),
            Node::Literal(_) | Node::Dot | Node::Class(_) | Node::Shorthand(_) => Some(1),
            Node::Concat(items) => items.iter().map(Node::fixed_width).sum(),
            Node::Alternation(items) => {
                let first = items.first()?.fixed_width()?;
                items[1..].iter().all(|n| n.fixed_width() == Some(first)).then_some(first)
            }
            Node::Repeat(rep) => match rep.max {
                Some(max) if max == rep.min => Some(rep.child.fixed_width()? * max as usize),
                _ => None,
            },
            Node::Group(group) => group.child.fixed_width(),
            Node::Backref(_) => None,
        }
    }

    fn fmt_atom(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Quantified operands that are not single atoms need a group.
        let needs_group =
            matches!(self, Node::Concat(_) | Node::Alternation(_) | Node::Repeat(_) | Node::Empty);
        if needs_group {
            write!(f, "(?:{self})")
        } else {
            fmt::Display::fmt(self, f)
        }
    }
}

fn write_literal(out: &mut String, c: char, in_class: bool) {
    let special = if in_class {
        matches!(c, '\\' | ']' | '[' | '^' | '-')
    } else {
        matches!(c, '\\' | '.' | '^' | '$' | '|' | '?' | '*' | '+' | '(' | ')' | '[' | ']' | '{' | '}')
    };
    match c {
        '\n' => out.push_str("\\n"),
        '\t' => out.push_str("\\t"),
        '\r' => out.push_str("\\r"),
        '\x0B' => out.push_str("\\v"),
        '\x0C' => out.push_str("\\f"),
        c if special => {
            out.push('\\');
            out.push(c);
        }
        c if (c as u32) < 0x20 || c as u32 == 0x7F => {
            let _ = write!(out, "\\x{:02x}", c as u32);
        }
        c => out.push(c),
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Empty => Ok(()),
            Node::Literal(c) => {
                let mut s = String::new();
                write_literal(&mut s, *c, false);
                f.write_str(&s)
            }
            Node::Dot => f.write_str("."),
            Node::Class(class) => {
                let mut s = String::from("[");
                if class.negated {
                    s.push('^');
                }
                for item in &class.items {
                    match item {
                        ClassItem::Range(lo, hi) => {
                            write_literal(&mut s, *lo, true);
                            if lo != hi {
                                s.push('-');
                                write_literal(&mut s, *hi, true);
                            }
                        }
                        ClassItem::Shorthand(sh) => {
                            s.push('\\');
                            s.push(sh.letter());
                        }
                    }
                }
                s.push(']');
                f.write_str(&s)
            }
            Node::Shorthand(sh) => write!(f, "\\{}", sh.letter()),
            Node::Anchor(kind) => f.write_str(match kind {
                AnchorKind::Start => "^",
                AnchorKind::End => "$",
                AnchorKind::WordBoundary => "\\b",
                AnchorKind::NotWordBoundary => "\\B",
            }),
            Node::Repeat(rep) => {
                rep.child.fmt_atom(f)?;
                match rep.form {
                    RepeatForm::Star => f.write_str("*")?,
                    RepeatForm::Plus => f.write_str("+")?,
                    RepeatForm::Optional => f.write_str("?")?,
                    RepeatForm::Exact => write!(f, "{{{}}}", rep.min)?,
                    RepeatForm::AtLeast => write!(f, "{{{},}}", rep.min)?,
                    RepeatForm::Range => write!(f, "{{{},{}}}", rep.min, rep.max.unwrap_or(rep.min))?,
                }
                if !rep.greedy {
                    f.write_str("?")?;
                }
                Ok(())
            }
            Node::Concat(items) => {
                let mut prev: Option<&Node> = None;
                for item in items {
                    match item {
                        // Nested alternation inside a sequence must be grouped.
                        Node::Alternation(_) | Node::Concat(_) => write!(f, "(?:{item})")?,
                        _ if matches!(prev, Some(Node::Backref(b)) if b.name.is_none()) => {
                            // `\1` followed by `0` would read back as `\10`.
                            let text = item.to_string();
                            match text.chars().next() {
                                Some(c) if c.is_ascii_digit() => {
                                    write!(f, "\\x{:02x}{}", c as u32, &text[1..])?
                                }
                                _ => f.write_str(&text)?,
                            }
                        }
                        _ => item.fmt(f)?,
                    }
                    prev = Some(item);
                }
                Ok(())
            }
            Node::Alternation(items) => {
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str("|")?;
                    }
                    match item {
                        Node::Alternation(_) => write!(f, "(?:{item})")?,
                        _ => item.fmt(f)?,
                    }
                }
                Ok(())
            }
            Node::Group(group) => {
                match &group.kind {
                    GroupKind::Capture { .. } => f.write_str("(")?,
                    GroupKind::Named { name, .. } => write!(f, "(?P<{name}>")?,
                    GroupKind::NonCapture => f.write_str("(?:")?,
                    GroupKind::Flags(flags) => {
                        f.write_str(if flags.case_insensitive { "(?i:" } else { "(?-i:" })?
                    }
                }
                write!(f, "{})", group.child)
            }
            Node::Backref(b) => match &b.name {
                Some(name) => write!(f, "(?P={name})"),
                None => write!(f, "\\{}", b.index),
            },
            Node::Look(look) => {
                let open = match (look.direction, look.negated) {
                    (LookDirection::Ahead, false) => "(?=",
                    (LookDirection::Ahead, true) => "(?!",
                    (LookDirection::Behind, false) => "(?<=",
                    (LookDirection::Behind, true) => "(?<!",
                };
                write!(f, "{open}{})", look.child)
            }
            Node::SetFlags(flags) => {
                if flags.case_insensitive {
                    f.write_str("(?i)")
                } else {
                    Ok(())
                }
            }
        }
    }
}
