//! Synthetic corpora shaped like mined regexes.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticEntry {
    pub pattern: String,
    pub source: &'static str,
    pub origin: String,
}

const WORDS: &[&str] = &[
    "id", "user", "name", "foo", "bar", "api", "v", "tmp", "log", "img", "key", "com", "org", "net", "http",
    "https", "www", "mail", "test", "data", "file", "src", "px", "em", "rgb",
];

const SEPARATORS: &[&str] = &[r"\.", "-", "_", "@", ":", "/", r"\s", ",", " ", "#"];

/// Catastrophic-backtracking shapes.
pub const REDOS_PATTERNS: &[&str] =
    &["(a+)+$", r"(\w+)+$", r"(\d+)+x$", "(a|aa)+$", r"^(\w+\s?)*$", "([a-z]+)*!$", "(.*a){12}"];

fn piece<R: Rng>(rng: &mut R) -> String {
    let (m, n) = {
        let m = rng.gen_range(1..=4);
        (m, m + rng.gen_range(0..=4))
    };
    match rng.gen_range(0..22) {
        0 => r"\d".into(),
        1 => r"\d+".into(),
        2 => format!(r"\d{{{m}}}"),
        3 => format!(r"\d{{{m},{n}}}"),
        4 => format!("[0-9]{{{m},{n}}}"),
        5 => "[a-z]+".into(),
        6 => "[A-Za-z]+".into(),
        7 => format!("[a-fA-F0-9]{{{m}}}"),
        8 => r"\w+".into(),
        9 => r"\s*".into(),
        10 | 11 => SEPARATORS.choose(rng).unwrap().to_string(),
        12 | 13 => WORDS.choose(rng).unwrap().to_string(),
        14 => {
            let k = rng.gen_range(2..=4);
            let alts: Vec<&str> = WORDS.choose_multiple(rng, k).copied().collect();
            format!("(?:{})", alts.join("|"))
        }
        15 => r"[^\s]+".into(),
        16 => ".".into(),
        17 => ".*".into(),
        18 => r"\b".into(),
        19 => format!(r"(?:{}\d+)?", SEPARATORS.choose(rng).unwrap()),
        20 => format!("({})", piece(rng)),
        _ => format!(
            "[{}]",
            ["a-z", "A-Z", "0-9", "_", r"\-", "."].choose_multiple(rng, 2).copied().collect::<String>()
        ),
    }
}

/// One synthetic pattern. Mostly regular; a few extended, pathological or
/// malformed ones.
pub fn synthetic_pattern<R: Rng>(rng: &mut R) -> String {
    let roll = rng.gen_range(0..1000);
    if roll < 5 {
        let base = REDOS_PATTERNS.choose(rng).unwrap();
        let letter = &WORDS.choose(rng).unwrap()[..1];
        return base.replace('a', letter);
    }
    let mut body: String = (0..rng.gen_range(1..=5)).map(|_| piece(rng)).collect();
    if roll < 25 {
        body = match rng.gen_range(0..3) {
            0 => format!(r"(\w){body}\1"),
            1 => format!(r"(?=.*\d){body}"),
            _ => format!("(?!{}){body}", WORDS.choose(rng).unwrap()),
        };
    } else if roll < 28 {
        body = match rng.gen_range(0..3) {
            0 => format!("({body}"),
            1 => format!("{body}[z-a]"),
            _ => format!("{body}(?#c)"),
        };
    }
    let start = if rng.gen_bool(0.5) { "^" } else { "" };
    let end = if rng.gen_bool(0.5) { "$" } else { "" };
    format!("{start}{body}{end}")
}

/// `n` distinct patterns with sources drawn roughly in mined proportions.
pub fn synthetic_corpus(n: usize, seed: u64) -> Vec<SyntheticEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let pattern = synthetic_pattern(&mut rng);
        if !seen.insert(pattern.clone()) {
            continue;
        }
        let source = match rng.gen_range(0..100) {
            0..=34 => "oss-project",
            35 => "regexlib",
            36..=87 => "so-post",
            _ => "so-comment",
        };
        let origin = format!("{source}/{}", rng.gen_range(0..50_000));
        out.push(SyntheticEntry { pattern, source, origin });
    }
    out
}

/// A short string built from the same tokens as the synthetic patterns.
pub fn random_example<R: Rng>(rng: &mut R) -> String {
    let mut s = String::new();
    for _ in 0..rng.gen_range(1..=4) {
        match rng.gen_range(0..5) {
            0 | 1 => {
                for _ in 0..rng.gen_range(1..=4) {
                    s.push(char::from(b'0' + rng.gen_range(0..10)));
                }
            }
            2 => s.push_str(WORDS.choose(rng).unwrap()),
            3 => s.push(*['.', '-', '_', '@', ':', '/', ' ', ','].choose(rng).unwrap()),
            _ => s.push(char::from(b'A' + rng.gen_range(0..26))),
        }
    }
    s
}
