use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use forge_core::RegularityClass;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    OssProject,
    Regexlib,
    SoPost,
    SoComment,
}

impl Source {
    pub const ALL: [Source; 4] = [Source::OssProject, Source::Regexlib, Source::SoPost, Source::SoComment];

    pub fn as_str(self) -> &'static str {
        match self {
            Source::OssProject => "oss-project",
            Source::Regexlib => "regexlib",
            Source::SoPost => "so-post",
            Source::SoComment => "so-comment",
        }
    }

    pub(crate) fn code(self) -> u8 {
        self as u8
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|src| src.as_str() == s).ok_or_else(|| format!("unknown source {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParseStatus {
    Ok,
    ParseError,
    Unsupported,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Provenance {
    pub source: Source,
    pub origin: String,
}

/// Content address of a pattern: the first 8 bytes of its SHA-256, big-endian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntryId(pub u64);

impl EntryId {
    pub fn of(pattern: &str) -> Self {
        let digest = Sha256::digest(pattern.as_bytes());
        let mut bytes = [0u8; 8];
        bytes.copy_from_slice(&digest[..8]);
        EntryId(u64::from_be_bytes(bytes))
    }
}

impl fmt::Display for EntryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl FromStr for EntryId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        u64::from_str_radix(s, 16).map(EntryId)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegexEntry {
    pub id: EntryId,
    pub pattern: String,
    /// In ingestion order; the first record is the contributing one.
    pub provenance: Vec<Provenance>,
    pub parse_status: ParseStatus,
    pub regularity: Option<RegularityClass>,
}

impl RegexEntry {
    /// Source of the record that first contributed this pattern.
    pub fn source(&self) -> Source {
        self.provenance[0].source
    }

    pub fn origin(&self) -> &str {
        &self.provenance[0].origin
    }

    pub fn sources(&self) -> BTreeSet<Source> {
        self.provenance.iter().map(|p| p.source).collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceStats {
    /// Distinct origins (projects, pages, posts) that yielded a regex.
    pub targets: u64,
    /// Provenance records, counting a pattern once per origin.
    pub regexes: u64,
    /// Distinct patterns first seen from this source.
    pub unique_contributed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub sources: BTreeMap<Source, SourceStats>,
    pub total: SourceStats,
    pub entries: u64,
    pub parse_errors: u64,
    pub unsupported: u64,
    pub regular: u64,
    pub extended: u64,
}

impl CorpusStats {
    /// Builds the table from per-source rows; totals are column sums.
    pub fn from_rows(rows: impl IntoIterator<Item = (Source, SourceStats)>) -> Self {
        let sources: BTreeMap<Source, SourceStats> = rows.into_iter().collect();
        let mut total = SourceStats::default();
        for s in sources.values() {
            total.targets += s.targets;
            total.regexes += s.regexes;
            total.unique_contributed += s.unique_contributed;
        }
        Self { entries: total.unique_contributed, sources, total, ..Self::default() }
    }

    pub fn from_entries<'a>(entries: impl IntoIterator<Item = &'a RegexEntry>) -> Self {
        let mut origins: BTreeMap<Source, BTreeSet<&str>> = BTreeMap::new();
        let mut rows: BTreeMap<Source, SourceStats> =
            Source::ALL.iter().map(|s| (*s, SourceStats::default())).collect();
        let mut stats = CorpusStats::default();
        for e in entries {
            rows.get_mut(&e.source()).unwrap().unique_contributed += 1;
            for p in &e.provenance {
                rows.get_mut(&p.source).unwrap().regexes += 1;
                origins.entry(p.source).or_default().insert(&p.origin);
            }
            match (e.parse_status, e.regularity) {
                (ParseStatus::ParseError, _) => stats.parse_errors += 1,
                (ParseStatus::Unsupported, _) => stats.unsupported += 1,
                (ParseStatus::Ok, Some(RegularityClass::Regular)) => stats.regular += 1,
                (ParseStatus::Ok, _) => stats.extended += 1,
            }
        }
        for (source, set) in origins {
            rows.get_mut(&source).unwrap().targets = set.len() as u64;
        }
        let table = Self::from_rows(rows);
        Self { sources: table.sources, total: table.total, entries: table.entries, ..stats }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_content_hashes() {
        assert_eq!(EntryId::of("a+"), EntryId::of("a+"));
        assert_ne!(EntryId::of("a+"), EntryId::of("a*"));
        let id = EntryId::of(r"^\d+$");
        assert_eq!(id.to_string().parse::<EntryId>().unwrap(), id);
        assert_eq!(id.to_string().len(), 16);
    }

    #[test]
    fn mined_corpus_table_totals() {
        let row = |targets, regexes, unique_contributed| SourceStats { targets, regexes, unique_contributed };
        let stats = CorpusStats::from_rows([
            (Source::OssProject, row(380_526, 1_307_691, 314_889)),
            (Source::Regexlib, row(4_154, 4_154, 3_878)),
            (Source::SoPost, row(768_321, 882_220, 472_951)),
            (Source::SoComment, row(1_324_749, 294_519, 109_798)),
        ]);
        assert_eq!(stats.total, row(2_477_750, 2_488_584, 901_516));
        assert_eq!(stats.entries, 901_516);
        for s in stats.sources.values() {
            assert!(s.unique_contributed <= s.regexes);
        }
    }

    #[test]
    fn source_names_round_trip() {
        for s in Source::ALL {
            assert_eq!(s.as_str().parse::<Source>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{s}\""));
            assert_eq!(Source::from_code(s.code()), Some(s));
        }
    }
}
