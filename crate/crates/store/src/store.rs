use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::io::BufReader;
use std::path::Path;
use std::sync::OnceLock;

use forge_core::automaton::{build_nfa_with, NfaOptions};
use forge_core::{parse, Matcher, Nfa, RegexAst};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entry::{CorpusStats, EntryId, ParseStatus, RegexEntry, Source};
use crate::prefilter::{PrefilterInfo, QueryHints};
use crate::segment::read_segment;
use crate::StoreError;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SHARDS_DIR: &str = "shards";
pub const STORE_FORMAT: &str = "regex-forge-store";
pub const STORE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub shard_count: usize,
    pub entry_count: u64,
    pub stats: CorpusStats,
}

impl Manifest {
    pub fn new(shard_count: usize, stats: CorpusStats) -> Self {
        Self {
            format: STORE_FORMAT.into(),
            version: STORE_VERSION,
            shard_count,
            entry_count: stats.entries,
            stats,
        }
    }
}

/// Parsed artifacts of an entry whose pattern parsed.
#[derive(Debug)]
pub struct Compiled {
    pub ast: RegexAst,
    /// Absent when the program exceeds the compiler's size limit; such an
    /// entry can never satisfy a query.
    pub matcher: Option<Matcher>,
    pub prefilter: PrefilterInfo,
    nfa: OnceLock<Option<Nfa>>,
}

impl Compiled {
    fn new(ast: RegexAst) -> Self {
        let matcher = Matcher::new(&ast).ok();
        let prefilter = PrefilterInfo::of(&ast);
        Self { ast, matcher, prefilter, nfa: OnceLock::new() }
    }

    /// Full-mode automaton, built on first use. Absent for extended
    /// patterns and automata over the state cap.
    pub fn nfa(&self) -> Option<&Nfa> {
        self.nfa.get_or_init(|| build_nfa_with(&self.ast, &NfaOptions::default()).ok()).as_ref()
    }
}

#[derive(Debug)]
pub struct StoredEntry {
    pub entry: RegexEntry,
    pub compiled: Option<Compiled>,
}

impl StoredEntry {
    fn new(entry: RegexEntry) -> Self {
        let compiled = match entry.parse_status {
            ParseStatus::Ok => parse(&entry.pattern).ok().map(Compiled::new),
            _ => None,
        };
        Self { entry, compiled }
    }
}

/// An immutable corpus held in memory, ordered by id.
#[derive(Debug, Default)]
pub struct Store {
    entries: Vec<StoredEntry>,
    index: HashMap<EntryId, usize>,
    stats: CorpusStats,
    shard_count: usize,
}

impl Store {
    pub fn open(dir: &Path) -> Result<Self, StoreError> {
        let file = fs::File::open(dir.join(MANIFEST_FILE))?;
        let manifest: Manifest = serde_json::from_reader(BufReader::new(file))?;
        if manifest.format != STORE_FORMAT || manifest.version != STORE_VERSION {
            return Err(StoreError::Invalid(format!(
                "unsupported format {} v{}",
                manifest.format, manifest.version
            )));
        }
        if manifest.shard_count == 0 {
            return Err(StoreError::Invalid("zero shards".into()));
        }
        let n = manifest.shard_count;
        let shards: Vec<Vec<RegexEntry>> = (0..n)
            .into_par_iter()
            .map(|i| -> Result<Vec<RegexEntry>, StoreError> {
                let path = dir.join(SHARDS_DIR).join(format!("{i:02}.seg"));
                let entries = read_segment(BufReader::new(fs::File::open(&path)?))?;
                for e in &entries {
                    if e.id != EntryId::of(&e.pattern) || e.id.0 % n as u64 != i as u64 {
                        return Err(StoreError::Invalid(format!(
                            "entry {} misplaced or corrupt in {}",
                            e.id,
                            path.display()
                        )));
                    }
                }
                Ok(entries)
            })
            .collect::<Result<_, _>>()?;
        let entries: Vec<RegexEntry> = shards.into_iter().flatten().collect();
        if entries.len() as u64 != manifest.entry_count {
            return Err(StoreError::Invalid(format!(
                "manifest lists {} entries, shards hold {}",
                manifest.entry_count,
                entries.len()
            )));
        }
        let mut store = Self::from_entries(entries);
        store.shard_count = n;
        Ok(store)
    }

    /// Builds a store directly from entries, compiling them in parallel.
    pub fn from_entries(mut entries: Vec<RegexEntry>) -> Self {
        entries.sort_by_key(|e| e.id);
        entries.dedup_by_key(|e| e.id);
        let stats = CorpusStats::from_entries(&entries);
        let entries: Vec<StoredEntry> = entries.into_par_iter().map(StoredEntry::new).collect();
        let index = entries.iter().enumerate().map(|(i, e)| (e.entry.id, i)).collect();
        Self { entries, index, stats, shard_count: 1 }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn shard_count(&self) -> usize {
        self.shard_count
    }

    pub fn stats(&self) -> &CorpusStats {
        &self.stats
    }

    pub fn get(&self, id: EntryId) -> Option<&StoredEntry> {
        self.index.get(&id).map(|&i| &self.entries[i])
    }

    pub fn find(&self, pattern: &str) -> Option<&StoredEntry> {
        self.get(EntryId::of(pattern)).filter(|e| e.entry.pattern == pattern)
    }

    /// Every entry, including unparseable ones, in id order.
    pub fn entries(&self) -> impl Iterator<Item = &StoredEntry> {
        self.entries.iter()
    }

    pub(crate) fn slice(&self) -> &[StoredEntry] {
        &self.entries
    }

    pub fn view(&self) -> StoreView<'_> {
        StoreView { store: self, excluded: HashSet::new(), sources: None }
    }

    /// Parsed entries in id order, skipping those `hints` rule out.
    pub fn scan<'a>(&'a self, hints: Option<&'a QueryHints>) -> impl Iterator<Item = &'a StoredEntry> {
        self.entries.iter().filter(move |e| {
            e.compiled.as_ref().is_some_and(|c| hints.is_none_or(|h| h.admits(&c.prefilter)))
        })
    }
}

/// A read-only window onto a store that hides some entries. Nothing about a
/// view is persisted.
#[derive(Debug, Clone)]
pub struct StoreView<'a> {
    store: &'a Store,
    excluded: HashSet<EntryId>,
    sources: Option<BTreeSet<Source>>,
}

impl<'a> StoreView<'a> {
    pub fn store(&self) -> &'a Store {
        self.store
    }

    /// Hides `pattern`. Excluding a pattern the store lacks changes nothing.
    pub fn exclude(mut self, pattern: &str) -> Self {
        if let Some(e) = self.store.find(pattern) {
            self.excluded.insert(e.entry.id);
        }
        self
    }

    /// Keeps only entries with at least one provenance record from `sources`.
    pub fn with_sources(mut self, sources: impl IntoIterator<Item = Source>) -> Self {
        self.sources = Some(sources.into_iter().collect());
        self
    }

    /// Whether the view shows this entry, ignoring parse status and hints.
    pub fn shows(&self, e: &StoredEntry) -> bool {
        !self.excluded.contains(&e.entry.id)
            && self.sources.as_ref().is_none_or(|s| e.entry.provenance.iter().any(|p| s.contains(&p.source)))
    }

    pub fn scan(&self, hints: Option<&'a QueryHints>) -> impl Iterator<Item = &'a StoredEntry> + '_ {
        self.store.entries.iter().filter(move |e| {
            self.shows(e) && e.compiled.as_ref().is_some_and(|c| hints.is_none_or(|h| h.admits(&c.prefilter)))
        })
    }
}
