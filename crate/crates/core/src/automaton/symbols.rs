//! The automaton alphabet: ASCII 0..=127 plus one reserved symbol standing
//! for every non-ASCII scalar.

use crate::charset::CharSet;

pub type Symbol = u8;

/// The symbol for all non-ASCII scalars.
pub const OTHER: Symbol = 128;
pub const ALPHABET_SIZE: usize = 129;

/// Character used when a covering string needs a non-ASCII scalar.
pub const OTHER_REPRESENTATIVE: char = '\u{80}';

pub fn symbol_of(c: char) -> Symbol {
    if c.is_ascii() {
        c as u8
    } else {
        OTHER
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct SymbolSet {
    ascii: u128,
    other: bool,
}

impl SymbolSet {
    pub const EMPTY: SymbolSet = SymbolSet { ascii: 0, other: false };
    pub const ALL: SymbolSet = SymbolSet { ascii: u128::MAX, other: true };

    pub fn single(s: Symbol) -> Self {
        let mut set = Self::EMPTY;
        set.insert(s);
        set
    }

    pub fn insert(&mut self, s: Symbol) {
        if s == OTHER {
            self.other = true;
        } else {
            self.ascii |= 1u128 << s;
        }
    }

    pub fn contains(&self, s: Symbol) -> bool {
        if s == OTHER {
            self.other
        } else {
            self.ascii & (1u128 << s) != 0
        }
    }

    pub fn len(&self) -> usize {
        self.ascii.count_ones() as usize + usize::from(self.other)
    }

    pub fn is_empty(&self) -> bool {
        self.ascii == 0 && !self.other
    }

    pub fn union(self, other: Self) -> Self {
        Self { ascii: self.ascii | other.ascii, other: self.other || other.other }
    }

    pub fn intersect(self, other: Self) -> Self {
        Self { ascii: self.ascii & other.ascii, other: self.other && other.other }
    }

    pub fn complement(self) -> Self {
        Self { ascii: !self.ascii, other: !self.other }
    }

    pub fn iter(&self) -> impl Iterator<Item = Symbol> + '_ {
        (0..ALPHABET_SIZE as u16).map(|s| s as Symbol).filter(move |&s| self.contains(s))
    }

    /// `[A-Za-z0-9_]`
    pub fn word() -> Self {
        let mut set = Self::EMPTY;
        for c in ('0'..='9').chain('A'..='Z').chain('a'..='z').chain(['_']) {
            set.insert(c as Symbol);
        }
        set
    }

    /// Projects a scalar set onto the alphabet. Case-insensitive projection
    /// adds the other case of every ASCII letter.
    pub fn from_char_set(set: &CharSet, case_insensitive: bool) -> Self {
        let mut out = Self::EMPTY;
        for c in 0u8..128 {
            let ch = c as char;
            let hit = set.contains(ch)
                || case_insensitive
                    && ch.is_ascii_alphabetic()
                    && (set.contains(ch.to_ascii_lowercase()) || set.contains(ch.to_ascii_uppercase()));
            if hit {
                out.insert(c);
            }
        }
        if set.has_non_ascii() {
            out.insert(OTHER);
        }
        out
    }

    /// Projects a class given by its positive items. Case folding applies to
    /// the items before negation, so `(?i)[^a]` rejects `A`.
    pub fn from_class(items: &CharSet, negated: bool, case_insensitive: bool) -> Self {
        let set = Self::from_char_set(items, case_insensitive);
        if negated {
            set.complement()
        } else {
            set
        }
    }

    /// Smallest member, preferring printable ASCII.
    pub fn representative(&self) -> Option<char> {
        let printable = (0x20u8..0x7F).find(|&s| self.contains(s));
        printable
            .or_else(|| (0u8..128).find(|&s| self.contains(s)))
            .map(|s| s as char)
            .or_else(|| self.other.then_some(OTHER_REPRESENTATIVE))
    }
}
