//! Sets of Unicode scalar values stored as sorted, disjoint, non-adjacent
//! inclusive ranges.

use std::fmt;

const MAX_SCALAR: u32 = 0x10FFFF;

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct CharSet {
    ranges: Vec<(u32, u32)>,
}

impl CharSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_ranges<I: IntoIterator<Item = (char, char)>>(ranges: I) -> Self {
        let mut set = Self { ranges: ranges.into_iter().map(|(lo, hi)| (lo as u32, hi as u32)).collect() };
        set.canonicalize();
        set
    }

    pub fn single(c: char) -> Self {
        Self::from_ranges([(c, c)])
    }

    fn canonicalize(&mut self) {
        self.ranges.retain(|&(lo, hi)| lo <= hi);
        self.ranges.sort_unstable();
        let mut merged: Vec<(u32, u32)> = Vec::with_capacity(self.ranges.len());
        for &(lo, hi) in &self.ranges {
            match merged.last_mut() {
                Some(last) if lo <= last.1.saturating_add(1) => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        self.ranges = merged;
    }

    pub fn union(&self, other: &CharSet) -> CharSet {
        let mut set = CharSet { ranges: self.ranges.iter().chain(&other.ranges).copied().collect() };
        set.canonicalize();
        set
    }

    /// Complement over the full scalar range.
    pub fn complement(&self) -> CharSet {
        let mut out = Vec::with_capacity(self.ranges.len() + 1);
        let mut next = 0u32;
        for &(lo, hi) in &self.ranges {
            if lo > next {
                out.push((next, lo - 1));
            }
            next = hi + 1;
        }
        if next <= MAX_SCALAR {
            out.push((next, MAX_SCALAR));
        }
        CharSet { ranges: out }
    }

    pub fn contains(&self, c: char) -> bool {
        let c = c as u32;
        self.ranges
            .binary_search_by(|&(lo, hi)| {
                if hi < c {
                    std::cmp::Ordering::Less
                } else if lo > c {
                    std::cmp::Ordering::Greater
                } else {
                    std::cmp::Ordering::Equal
                }
            })
            .is_ok()
    }

    /// True when any member lies outside ASCII.
    pub fn has_non_ascii(&self) -> bool {
        self.ranges.last().is_some_and(|&(_, hi)| hi > 0x7F)
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn ranges(&self) -> &[(u32, u32)] {
        &self.ranges
    }
}

impl fmt::Display for CharSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, &(lo, hi)) in self.ranges.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            if lo == hi {
                write!(f, "{lo:x}")?;
            } else {
                write!(f, "{lo:x}-{hi:x}")?;
            }
        }
        Ok(())
    }
}
