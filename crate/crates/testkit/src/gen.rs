//! Random pattern generation over a small alphabet.

use rand::seq::SliceRandom;
use rand::Rng;

use forge_core::{parse, Node};

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub alphabet: Vec<char>,
    pub max_depth: u32,
    pub anchors: bool,
    pub word_boundaries: bool,
    /// Backreferences and lookaround.
    pub extended: bool,
    pub case_insensitive: bool,
}

impl GenConfig {
    /// Regular constructs only, no zero-width assertions.
    pub fn plain(alphabet: &[char]) -> Self {
        Self {
            alphabet: alphabet.to_vec(),
            max_depth: 4,
            anchors: false,
            word_boundaries: false,
            extended: false,
            case_insensitive: false,
        }
    }

    /// Every regular construct, including anchors, boundaries and flags.
    pub fn regular(alphabet: &[char]) -> Self {
        Self { anchors: true, word_boundaries: true, case_insensitive: true, ..Self::plain(alphabet) }
    }

    pub fn full(alphabet: &[char]) -> Self {
        Self { extended: true, ..Self::regular(alphabet) }
    }
}

struct Gen<'a, R> {
    rng: &'a mut R,
    cfg: &'a GenConfig,
    groups: u32,
    /// Groups a backreference may point at: closed, and not inside a
    /// repetition or lookaround.
    referable: Vec<u32>,
}

/// A random pattern whose syntax tree has depth at most `cfg.max_depth`
/// (a lone leaf has depth 1).
pub fn random_pattern<R: Rng>(rng: &mut R, cfg: &GenConfig) -> String {
    loop {
        let mut g = Gen { rng: &mut *rng, cfg, groups: 0, referable: Vec::new() };
        let body = g.node(cfg.max_depth, false);
        let pattern = if cfg.case_insensitive && g.rng.gen_bool(0.15) { format!("(?i){body}") } else { body };
        let ast = parse(&pattern).unwrap_or_else(|e| panic!("generated {pattern:?}: {e}"));
        if depth(ast.root()) <= cfg.max_depth as usize {
            return pattern;
        }
    }
}

pub fn depth(node: &Node) -> usize {
    1 + node.children().iter().map(depth).max().unwrap_or(0)
}

/// True for a single escaped or plain character, class, shorthand or
/// non-assertion group.
fn quantifiable(s: &str) -> bool {
    let n = s.chars().count();
    if n == 1 {
        return !"^$".contains(s);
    }
    if s.starts_with('\\') && n == 2 {
        return !s.ends_with('b') && !s.ends_with('B');
    }
    let bracketed = |open: char, close: char| {
        s.starts_with(open) && s.ends_with(close) && {
            // The opening bracket must close at the very end.
            let mut level = 0i32;
            let mut escaped = false;
            let mut in_class = false;
            let mut closes_at_end = true;
            for (i, c) in s.char_indices() {
                if escaped {
                    escaped = false;
                    continue;
                }
                match c {
                    '\\' => escaped = true,
                    '[' if !in_class && open == '(' => in_class = true,
                    ']' if in_class && open == '(' => in_class = false,
                    '(' if !in_class && open == '(' => level += 1,
                    ')' if !in_class && open == '(' => {
                        level -= 1;
                        if level == 0 && i + 1 != s.len() {
                            closes_at_end = false;
                        }
                    }
                    _ => {}
                }
            }
            closes_at_end
        }
    };
    if bracketed('[', ']') && !s[1..s.len() - 1].contains(']') {
        return true;
    }
    bracketed('(', ')') && !s.starts_with("(?=") && !s.starts_with("(?!") && !s.starts_with("(?<")
}

fn escape(c: char) -> String {
    if r"\.^$|?*+()[]{}".contains(c) {
        format!("\\{c}")
    } else {
        c.to_string()
    }
}

fn class_escape(c: char) -> String {
    if r"\]^-[".contains(c) {
        format!("\\{c}")
    } else {
        c.to_string()
    }
}

impl<R: Rng> Gen<'_, R> {
    fn letter(&mut self) -> char {
        *self.cfg.alphabet.choose(self.rng).expect("non-empty alphabet")
    }

    fn atom(&mut self, no_capture: bool) -> String {
        loop {
            match self.rng.gen_range(0..12) {
                0..=4 => return escape(self.letter()),
                5 => return ".".into(),
                6 | 7 => return self.class(),
                8 => return [r"\d", r"\w", r"\s", r"\D", r"\W", r"\S"].choose(self.rng).unwrap().to_string(),
                9 if self.cfg.anchors => return ["^", "$"].choose(self.rng).unwrap().to_string(),
                10 if self.cfg.word_boundaries => {
                    return [r"\b", r"\B"].choose(self.rng).unwrap().to_string()
                }
                11 if self.cfg.extended && !no_capture && !self.referable.is_empty() => {
                    let g = *self.referable.choose(self.rng).unwrap();
                    // A following digit would extend the group number.
                    return format!("(?:\\{g})");
                }
                _ => {}
            }
        }
    }

    fn class(&mut self) -> String {
        let mut out = String::from("[");
        if self.rng.gen_bool(0.3) {
            out.push('^');
        }
        for _ in 0..self.rng.gen_range(1..=3) {
            let a = self.letter();
            if self.rng.gen_bool(0.3) {
                let b = self.letter();
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                out += &format!("{}-{}", class_escape(lo), class_escape(hi));
            } else {
                out += &class_escape(a);
            }
        }
        out.push(']');
        out
    }

    /// A fixed-width body for lookbehind.
    fn fixed(&mut self) -> String {
        (0..self.rng.gen_range(1..=2))
            .map(|_| if self.rng.gen_bool(0.7) { escape(self.letter()) } else { self.class() })
            .collect()
    }

    /// `restricted` forbids captures and marks the subtree as unreferable.
    fn node(&mut self, depth: u32, restricted: bool) -> String {
        if depth <= 1 || self.rng.gen_bool(0.25) {
            return self.atom(restricted);
        }
        let d = depth - 1;
        match self.rng.gen_range(0..if self.cfg.extended { 7 } else { 5 }) {
            0 => {
                let n = self.rng.gen_range(2..=3);
                (0..n).map(|_| self.node(d, restricted)).collect()
            }
            1 => {
                let n = self.rng.gen_range(2..=3);
                let branches: Vec<String> = (0..n).map(|_| self.node(d, restricted)).collect();
                format!("(?:{})", branches.join("|"))
            }
            2 => {
                let child = self.node(d, true);
                let child = if quantifiable(&child) { child } else { format!("(?:{child})") };
                let q = match self.rng.gen_range(0..6) {
                    0 => "*".to_string(),
                    1 => "+".to_string(),
                    2 => "?".to_string(),
                    3 => format!("{{{}}}", self.rng.gen_range(0..=3)),
                    4 => format!("{{{},}}", self.rng.gen_range(0..=2)),
                    _ => {
                        let m = self.rng.gen_range(0..=2);
                        format!("{{{},{}}}", m, m + self.rng.gen_range(0..=2))
                    }
                };
                let lazy = if self.rng.gen_bool(0.3) { "?" } else { "" };
                format!("{child}{q}{lazy}")
            }
            3 | 4 if !restricted => {
                self.groups += 1;
                let index = self.groups;
                let child = self.node(d, false);
                self.referable.push(index);
                if self.rng.gen_bool(0.3) {
                    format!("(?P<g{index}>{child})")
                } else {
                    format!("({child})")
                }
            }
            3 | 4 => format!("(?:{})", self.node(d, true)),
            5 => {
                let child = self.node(d, true);
                let op = if self.rng.gen_bool(0.5) { "?=" } else { "?!" };
                format!("({op}{child})")
            }
            _ => {
                let child = self.fixed();
                let op = if self.rng.gen_bool(0.5) { "?<=" } else { "?<!" };
                format!("({op}{child})")
            }
        }
    }
}
