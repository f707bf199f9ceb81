//! Recursive-descent parser for the supported dialect.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::ast::{
    AnchorKind, Backref, ClassItem, ClassNode, Flags, Group, GroupKind, Look, LookDirection, Node, RegexAst,
    Repeat, RepeatForm, Shorthand, ShorthandKind,
};

/// Largest accepted `{m,n}` bound.
pub const MAX_REPEAT: u32 = 10_000;
const MAX_NESTING: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at byte offset {offset}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    /// True for syntax outside the dialect, as opposed to malformed syntax.
    pub fn is_unsupported(&self) -> bool {
        matches!(self.kind, ParseErrorKind::Unsupported(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("missing ), unterminated group")]
    UnbalancedGroup,
    #[error("unbalanced parenthesis")]
    UnmatchedClose,
    #[error("nothing to repeat")]
    NothingToRepeat,
    #[error("multiple repeat")]
    MultipleRepeat,
    #[error("unterminated character set")]
    UnterminatedClass,
    #[error("bad character range")]
    InvalidRange,
    #[error("bad escape \\{0}")]
    BadEscape(char),
    #[error("bad escape (end of pattern)")]
    TrailingBackslash,
    #[error("invalid group reference")]
    InvalidGroupReference,
    #[error("unknown group name {0:?}")]
    UnknownGroupName(String),
    #[error("redefinition of group name {0:?}")]
    DuplicateGroupName(String),
    #[error("bad group name")]
    BadGroupName,
    #[error("unknown extension")]
    UnknownExtension,
    #[error("min repeat greater than max repeat")]
    RepeatBounds,
    #[error("look-behind requires fixed-width pattern")]
    VariableLookbehind,
    #[error("global flags not at the start of the expression")]
    MisplacedFlags,
    #[error("unsupported construct: {0}")]
    Unsupported(Unsupported),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum Unsupported {
    #[error("conditional group")]
    Conditional,
    #[error("recursion")]
    Recursion,
    #[error("atomic group")]
    AtomicGroup,
    #[error("possessive quantifier")]
    PossessiveQuantifier,
    #[error("comment group")]
    Comment,
    #[error("inline flag {0:?}")]
    Flag(char),
    #[error("escape \\{0}")]
    Escape(char),
    #[error("repetition bound above {MAX_REPEAT}")]
    LargeRepeat,
    #[error("nesting deeper than {MAX_NESTING}")]
    DeepNesting,
}

pub fn parse(pattern: &str) -> Result<RegexAst, ParseError> {
    let mut parser = Parser {
        len: pattern.len(),
        chars: pattern.char_indices().collect(),
        pos: 0,
        capture_count: 0,
        closed: HashSet::new(),
        names: HashMap::new(),
        only_flags_so_far: true,
    };
    let root = parser.parse_alternation(0)?;
    if parser.pos < parser.chars.len() {
        // Only a stray `)` stops the top-level alternation early.
        return Err(parser.error(ParseErrorKind::UnmatchedClose));
    }
    Ok(RegexAst::new(root, parser.capture_count))
}

enum Escaped {
    Char(char),
    Shorthand(Shorthand),
    Anchor(AnchorKind),
    Backref(u32),
}

struct Parser {
    len: usize,
    chars: Vec<(usize, char)>,
    pos: usize,
    capture_count: u32,
    closed: HashSet<u32>,
    names: HashMap<String, u32>,
    only_flags_so_far: bool,
}

impl Parser {
    fn offset(&self) -> usize {
        self.chars.get(self.pos).map_or(self.len, |&(o, _)| o)
    }

    fn error(&self, kind: ParseErrorKind) -> ParseError {
        ParseError { offset: self.offset(), kind }
    }

    fn error_at(&self, pos: usize, kind: ParseErrorKind) -> ParseError {
        let offset = self.chars.get(pos).map_or(self.len, |&(o, _)| o);
        ParseError { offset, kind }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|&(_, c)| c)
    }

    fn peek_at(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.pos + ahead).map(|&(_, c)| c)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        Some(c)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_str(&mut self, s: &str) -> bool {
        let n = s.chars().count();
        if s.chars().enumerate().all(|(i, c)| self.peek_at(i) == Some(c)) {
            self.pos += n;
            true
        } else {
            false
        }
    }

    fn parse_alternation(&mut self, depth: usize) -> Result<Node, ParseError> {
        if depth > MAX_NESTING {
            return Err(self.error(ParseErrorKind::Unsupported(Unsupported::DeepNesting)));
        }
        let mut branches = vec![self.parse_concat(depth)?];
        while self.eat('|') {
            branches.push(self.parse_concat(depth)?);
        }
        Ok(if branches.len() == 1 { branches.pop().unwrap() } else { Node::Alternation(branches) })
    }

    fn parse_concat(&mut self, depth: usize) -> Result<Node, ParseError> {
        let mut items = Vec::new();
        loop {
            match self.peek() {
                None | Some('|') => break,
                Some(')') if depth > 0 => break,
                Some(')') => return Err(self.error(ParseErrorKind::UnmatchedClose)),
                Some(_) => {}
            }
            let atom = self.parse_atom(depth)?;
            let atom = self.parse_quantifier(atom)?;
            items.push(atom);
        }
        Ok(match items.len() {
            0 => Node::Empty,
            1 => items.pop().unwrap(),
            _ => Node::Concat(items),
        })
    }

    fn parse_atom(&mut self, depth: usize) -> Result<Node, ParseError> {
        let c = self.peek().expect("caller checked for end of input");
        if c != '(' {
            self.only_flags_so_far = false;
        }
        match c {
            '(' => {
                self.pos += 1;
                self.parse_group(depth)
            }
            '[' => {
                self.pos += 1;
                self.parse_class()
            }
            '.' => {
                self.pos += 1;
                Ok(Node::Dot)
            }
            '^' => {
                self.pos += 1;
                Ok(Node::Anchor(AnchorKind::Start))
            }
            '$' => {
                self.pos += 1;
                Ok(Node::Anchor(AnchorKind::End))
            }
            '\\' => {
                self.pos += 1;
                Ok(match self.parse_escape(false)? {
                    Escaped::Char(c) => Node::Literal(c),
                    Escaped::Shorthand(sh) => Node::Shorthand(sh),
                    Escaped::Anchor(kind) => Node::Anchor(kind),
                    Escaped::Backref(index) => Node::Backref(Backref { index, name: None }),
                })
            }
            '*' | '+' | '?' => Err(self.error(ParseErrorKind::NothingToRepeat)),
            '{' => {
                if self.scan_bounds().is_some() {
                    Err(self.error(ParseErrorKind::NothingToRepeat))
                } else {
                    self.pos += 1;
                    Ok(Node::Literal('{'))
                }
            }
            c => {
                self.pos += 1;
                Ok(Node::Literal(c))
            }
        }
    }

    /// Reads `{m}`, `{m,}`, `{,n}` or `{m,n}` at the cursor without consuming.
    /// Returns the bounds, the form, and the number of chars spanned.
    fn scan_bounds(&self) -> Option<(u64, Option<u64>, RepeatForm, usize)> {
        if self.peek() != Some('{') {
            return None;
        }
        let mut i = 1;
        let read_num = |i: &mut usize| -> Option<u64> {
            let start = *i;
            let mut value: u64 = 0;
            while let Some(d) = self.peek_at(*i).and_then(|c| c.to_digit(10)) {
                value = value.saturating_mul(10).saturating_add(d as u64);
                *i += 1;
            }
            (*i > start).then_some(value)
        };
        let min = read_num(&mut i);
        match self.peek_at(i) {
            Some('}') => {
                let min = min?;
                Some((min, Some(min), RepeatForm::Exact, i + 1))
            }
            Some(',') => {
                i += 1;
                let max = read_num(&mut i);
                if self.peek_at(i) != Some('}') {
                    return None;
                }
                match (min, max) {
                    (Some(m), None) => Some((m, None, RepeatForm::AtLeast, i + 1)),
                    (min, Some(n)) => Some((min.unwrap_or(0), Some(n), RepeatForm::Range, i + 1)),
                    (None, None) => None,
                }
            }
            _ => None,
        }
    }

    fn scan_quantifier(&self) -> Option<(u64, Option<u64>, RepeatForm, usize)> {
        match self.peek()? {
            '*' => Some((0, None, RepeatForm::Star, 1)),
            '+' => Some((1, None, RepeatForm::Plus, 1)),
            '?' => Some((0, Some(1), RepeatForm::Optional, 1)),
            '{' => self.scan_bounds(),
            _ => None,
        }
    }

    fn parse_quantifier(&mut self, atom: Node) -> Result<Node, ParseError> {
        let Some((min, max, form, span)) = self.scan_quantifier() else {
            return Ok(atom);
        };
        if matches!(atom, Node::Anchor(_) | Node::SetFlags(_) | Node::Look(_)) {
            return Err(self.error(ParseErrorKind::NothingToRepeat));
        }
        let quant_pos = self.pos;
        self.pos += span;
        if let Some(max) = max {
            if min > max {
                return Err(self.error_at(quant_pos, ParseErrorKind::RepeatBounds));
            }
        }
        if min > MAX_REPEAT as u64 || max.is_some_and(|m| m > MAX_REPEAT as u64) {
            return Err(self.error_at(quant_pos, ParseErrorKind::Unsupported(Unsupported::LargeRepeat)));
        }
        let greedy = !self.eat('?');
        if greedy && self.peek() == Some('+') {
            return Err(self.error(ParseErrorKind::Unsupported(Unsupported::PossessiveQuantifier)));
        }
        if self.scan_quantifier().is_some() {
            return Err(self.error(ParseErrorKind::MultipleRepeat));
        }
        Ok(Node::Repeat(Box::new(Repeat {
            child: atom,
            min: min as u32,
            max: max.map(|m| m as u32),
            greedy,
            form,
        })))
    }

    fn parse_group_name(&mut self, terminator: char) -> Result<String, ParseError> {
        let start = self.pos;
        let mut name = String::new();
        loop {
            match self.bump() {
                Some(c) if c == terminator => break,
                Some(c) if c.is_alphanumeric() || c == '_' => name.push(c),
                Some(_) => return Err(self.error_at(start, ParseErrorKind::BadGroupName)),
                None => return Err(self.error(ParseErrorKind::BadGroupName)),
            }
        }
        if name.is_empty() || name.starts_with(|c: char| c.is_ascii_digit()) {
            return Err(self.error_at(start, ParseErrorKind::BadGroupName));
        }
        Ok(name)
    }

    fn parse_group(&mut self, depth: usize) -> Result<Node, ParseError> {
        let open = self.pos - 1;
        let unsupported = |p: &Self, u| Err(p.error_at(open, ParseErrorKind::Unsupported(u)));
        if !self.eat('?') {
            self.only_flags_so_far = false;
            self.capture_count += 1;
            let index = self.capture_count;
            let child = self.parse_group_body(depth)?;
            self.closed.insert(index);
            return Ok(Node::Group(Box::new(Group { kind: GroupKind::Capture { index }, child })));
        }
        let Some(c) = self.peek() else {
            return Err(self.error(ParseErrorKind::UnknownExtension));
        };
        if c != 'i' && c != '-' {
            self.only_flags_so_far = false;
        }
        if self.eat(':') {
            let child = self.parse_group_body(depth)?;
            return Ok(Node::Group(Box::new(Group { kind: GroupKind::NonCapture, child })));
        }
        if self.eat_str("P<")
            || (self.peek() == Some('<') && !matches!(self.peek_at(1), Some('=' | '!')) && self.eat('<'))
        {
            let name = self.parse_group_name('>')?;
            if self.names.contains_key(&name) {
                return Err(self.error_at(open, ParseErrorKind::DuplicateGroupName(name)));
            }
            self.capture_count += 1;
            let index = self.capture_count;
            self.names.insert(name.clone(), index);
            let child = self.parse_group_body(depth)?;
            self.closed.insert(index);
            return Ok(Node::Group(Box::new(Group { kind: GroupKind::Named { index, name }, child })));
        }
        if self.eat_str("P=") {
            let name = self.parse_group_name(')')?;
            return match self.names.get(&name) {
                Some(&index) if self.closed.contains(&index) => {
                    Ok(Node::Backref(Backref { index, name: Some(name) }))
                }
                Some(_) => Err(self.error_at(open, ParseErrorKind::InvalidGroupReference)),
                None => Err(self.error_at(open, ParseErrorKind::UnknownGroupName(name))),
            };
        }
        if self.eat_str("P>") {
            return unsupported(self, Unsupported::Recursion);
        }
        let look = if self.eat('=') {
            Some((LookDirection::Ahead, false))
        } else if self.eat('!') {
            Some((LookDirection::Ahead, true))
        } else if self.eat_str("<=") {
            Some((LookDirection::Behind, false))
        } else if self.eat_str("<!") {
            Some((LookDirection::Behind, true))
        } else {
            None
        };
        if let Some((direction, negated)) = look {
            let child = self.parse_group_body(depth)?;
            if direction == LookDirection::Behind && child.fixed_width().is_none() {
                return Err(self.error_at(open, ParseErrorKind::VariableLookbehind));
            }
            return Ok(Node::Look(Box::new(Look { direction, negated, child })));
        }
        match c {
            '#' => return unsupported(self, Unsupported::Comment),
            '(' => return unsupported(self, Unsupported::Conditional),
            '>' => return unsupported(self, Unsupported::AtomicGroup),
            'R' | '&' | '+' | '0'..='9' => return unsupported(self, Unsupported::Recursion),
            _ => {}
        }
        self.parse_flags(open, depth)
    }

    fn parse_flags(&mut self, open: usize, depth: usize) -> Result<Node, ParseError> {
        let was_leading = self.only_flags_so_far;
        let mut negate = false;
        let mut seen_flag = false;
        loop {
            match self.bump() {
                Some('i') => seen_flag = true,
                Some('-') if !negate => negate = true,
                Some(':') if seen_flag => {
                    self.only_flags_so_far = false;
                    let child = self.parse_group_body(depth)?;
                    let flags = Flags { case_insensitive: !negate };
                    return Ok(Node::Group(Box::new(Group { kind: GroupKind::Flags(flags), child })));
                }
                Some(')') if seen_flag && !negate => {
                    if !was_leading {
                        return Err(self.error_at(open, ParseErrorKind::MisplacedFlags));
                    }
                    return Ok(Node::SetFlags(Flags { case_insensitive: true }));
                }
                Some(c) if c.is_ascii_alphabetic() => {
                    return Err(self.error_at(open, ParseErrorKind::Unsupported(Unsupported::Flag(c))));
                }
                None => return Err(self.error(ParseErrorKind::UnbalancedGroup)),
                Some(_) => return Err(self.error_at(open, ParseErrorKind::UnknownExtension)),
            }
        }
    }

    fn parse_group_body(&mut self, depth: usize) -> Result<Node, ParseError> {
        let child = self.parse_alternation(depth + 1)?;
        if !self.eat(')') {
            return Err(self.error(ParseErrorKind::UnbalancedGroup));
        }
        Ok(child)
    }

    fn parse_hex(&mut self, digits: usize, escape: char) -> Result<char, ParseError> {
        let start = self.pos;
        let mut value = 0u32;
        for _ in 0..digits {
            match self.bump().and_then(|c| c.to_digit(16)) {
                Some(d) => value = value * 16 + d,
                None => return Err(self.error_at(start - 1, ParseErrorKind::BadEscape(escape))),
            }
        }
        char::from_u32(value).ok_or_else(|| self.error_at(start - 1, ParseErrorKind::BadEscape(escape)))
    }

    fn parse_octal(&mut self, first: u32) -> char {
        let mut value = first;
        for _ in 0..2 {
            match self.peek().and_then(|c| c.to_digit(8)) {
                Some(d) => {
                    value = value * 8 + d;
                    self.pos += 1;
                }
                None => break,
            }
        }
        char::from_u32(value).unwrap_or('\0')
    }

    /// Parses the escape after a consumed backslash.
    fn parse_escape(&mut self, in_class: bool) -> Result<Escaped, ParseError> {
        let start = self.pos - 1;
        let Some(c) = self.bump() else {
            return Err(self.error_at(start, ParseErrorKind::TrailingBackslash));
        };
        let shorthand = |kind, negated| Ok(Escaped::Shorthand(Shorthand { kind, negated }));
        match c {
            'd' => shorthand(ShorthandKind::Digit, false),
            'D' => shorthand(ShorthandKind::Digit, true),
            'w' => shorthand(ShorthandKind::Word, false),
            'W' => shorthand(ShorthandKind::Word, true),
            's' => shorthand(ShorthandKind::Space, false),
            'S' => shorthand(ShorthandKind::Space, true),
            'b' if in_class => Ok(Escaped::Char('\x08')),
            'b' => Ok(Escaped::Anchor(AnchorKind::WordBoundary)),
            'B' if !in_class => Ok(Escaped::Anchor(AnchorKind::NotWordBoundary)),
            'n' => Ok(Escaped::Char('\n')),
            't' => Ok(Escaped::Char('\t')),
            'r' => Ok(Escaped::Char('\r')),
            'f' => Ok(Escaped::Char('\x0C')),
            'v' => Ok(Escaped::Char('\x0B')),
            'a' => Ok(Escaped::Char('\x07')),
            'x' => self.parse_hex(2, 'x').map(Escaped::Char),
            'u' => self.parse_hex(4, 'u').map(Escaped::Char),
            'U' => self.parse_hex(8, 'U').map(Escaped::Char),
            '0' => Ok(Escaped::Char(self.parse_octal(0))),
            '1'..='9' if in_class => {
                let d = c.to_digit(8).ok_or_else(|| self.error_at(start, ParseErrorKind::BadEscape(c)))?;
                Ok(Escaped::Char(self.parse_octal(d)))
            }
            '1'..='9' => {
                let mut index = c.to_digit(10).unwrap();
                if let Some(d) = self.peek().and_then(|c| c.to_digit(10)) {
                    index = index * 10 + d;
                    self.pos += 1;
                }
                if self.closed.contains(&index) {
                    Ok(Escaped::Backref(index))
                } else {
                    Err(self.error_at(start, ParseErrorKind::InvalidGroupReference))
                }
            }
            'A' | 'Z' | 'N' | 'G' | 'z' | 'p' | 'P' | 'k' => {
                Err(self.error_at(start, ParseErrorKind::Unsupported(Unsupported::Escape(c))))
            }
            c if c.is_ascii_alphanumeric() => Err(self.error_at(start, ParseErrorKind::BadEscape(c))),
            c => Ok(Escaped::Char(c)),
        }
    }

    fn parse_class_atom(&mut self) -> Result<Result<char, Shorthand>, ParseError> {
        match self.bump() {
            Some('\\') => match self.parse_escape(true)? {
                Escaped::Char(c) => Ok(Ok(c)),
                Escaped::Shorthand(sh) => Ok(Err(sh)),
                Escaped::Anchor(_) | Escaped::Backref(_) => unreachable!("rejected in class"),
            },
            Some(c) => Ok(Ok(c)),
            None => unreachable!("caller checked for end of input"),
        }
    }

    fn parse_class(&mut self) -> Result<Node, ParseError> {
        let open = self.pos - 1;
        let negated = self.eat('^');
        let mut items = Vec::new();
        let mut first = true;
        loop {
            match self.peek() {
                None => return Err(self.error_at(open, ParseErrorKind::UnterminatedClass)),
                Some(']') if !first => {
                    self.pos += 1;
                    break;
                }
                _ => {}
            }
            first = false;
            let item_start = self.pos;
            let lo = self.parse_class_atom()?;
            let is_range = self.peek() == Some('-') && !matches!(self.peek_at(1), None | Some(']'));
            if !is_range {
                items.push(match lo {
                    Ok(c) => ClassItem::Range(c, c),
                    Err(sh) => ClassItem::Shorthand(sh),
                });
                continue;
            }
            self.pos += 1;
            let hi = self.parse_class_atom()?;
            match (lo, hi) {
                (Ok(lo), Ok(hi)) if lo <= hi => items.push(ClassItem::Range(lo, hi)),
                _ => return Err(self.error_at(item_start, ParseErrorKind::InvalidRange)),
            }
        }
        Ok(Node::Class(ClassNode { negated, items }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::FeatureKind;

    fn err(p: &str) -> ParseError {
        parse(p).unwrap_err()
    }

    #[test]
    fn minimal_alternation() {
        let ast = parse("a|b").unwrap();
        assert_eq!(ast.root(), &Node::Alternation(vec![Node::Literal('a'), Node::Literal('b')]));
    }

    #[test]
    fn ipv4_loopback_ground_truth() {
        let ast = parse(r"^127\.([0-9]{1,3})\.([0-9]{1,3})\.([0-9]{1,3})$").unwrap();
        assert_eq!(ast.capture_count(), 3);
        let Node::Concat(items) = ast.root() else { panic!("expected concat") };
        let bounded = items
            .iter()
            .filter_map(|n| match n {
                Node::Group(g) => Some(&g.child),
                _ => None,
            })
            .filter(|c| matches!(c, Node::Repeat(r) if r.min == 1 && r.max == Some(3)))
            .count();
        assert_eq!(bounded, 3);
    }

    #[test]
    fn unbalanced_group_reports_offset() {
        let e = err("(a");
        assert_eq!(e.offset, 2);
        assert_eq!(e.kind, ParseErrorKind::UnbalancedGroup);
        assert!(!e.is_unsupported());
    }

    #[test]
    fn malformed_inputs() {
        assert_eq!(err("a)").kind, ParseErrorKind::UnmatchedClose);
        assert_eq!(err("*a").kind, ParseErrorKind::NothingToRepeat);
        assert_eq!(err("a**").kind, ParseErrorKind::MultipleRepeat);
        assert_eq!(err("[z-a]").kind, ParseErrorKind::InvalidRange);
        assert_eq!(err("[abc").kind, ParseErrorKind::UnterminatedClass);
        assert_eq!(err("a{3,1}").kind, ParseErrorKind::RepeatBounds);
        assert_eq!(err(r"\q").kind, ParseErrorKind::BadEscape('q'));
        assert_eq!(err("a\\").kind, ParseErrorKind::TrailingBackslash);
        assert_eq!(err(r"(a)\2").kind, ParseErrorKind::InvalidGroupReference);
        assert_eq!(err(r"(a\1)").kind, ParseErrorKind::InvalidGroupReference);
        assert_eq!(err("(?<=a+)b").kind, ParseErrorKind::VariableLookbehind);
        assert_eq!(err("a(?i)").kind, ParseErrorKind::MisplacedFlags);
        assert_eq!(err("^*").kind, ParseErrorKind::NothingToRepeat);
    }

    #[test]
    fn unsupported_constructs_have_distinct_code() {
        for p in ["(?(1)a|b)", "(?>a)", "a*+", "(?R)", "(?#note)", "(?m)^a", r"\Aabc"] {
            assert!(err(p).is_unsupported(), "{p}");
        }
    }

    #[test]
    fn literal_brace_when_not_a_quantifier() {
        let ast = parse("a{x}").unwrap();
        assert_eq!(ast.render(), r"a\{x\}");
        assert!(matches!(parse("a{,3}").unwrap().root(), Node::Concat(_) | Node::Repeat(_)));
    }

    #[test]
    fn named_groups_and_refs() {
        let ast = parse("(?P<word>a+)-(?P=word)").unwrap();
        assert_eq!(ast.capture_count(), 1);
        assert!(ast.features().contains(&FeatureKind::NamedGroup));
        assert!(ast.features().contains(&FeatureKind::Backreference));
        assert!(parse("(?<y>a)").is_ok());
        assert_eq!(err("(?P=nope)").kind, ParseErrorKind::UnknownGroupName("nope".into()));
    }

    #[test]
    fn leading_global_flag() {
        let ast = parse("(?i)abc").unwrap();
        assert!(ast.case_insensitive());
        assert!(!parse("(?i:a)b").unwrap().case_insensitive());
    }

    #[test]
    fn class_edge_cases() {
        let ast = parse("[]a-]").unwrap();
        let Node::Class(class) = ast.root() else { panic!() };
        assert!(class.char_set().contains(']'));
        assert!(class.char_set().contains('-'));
        assert!(class.char_set().contains('a'));
        assert_eq!(err(r"[\d-z]").kind, ParseErrorKind::InvalidRange);
    }
}
