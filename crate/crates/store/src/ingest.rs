use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use forge_core::parse;
use serde::{Deserialize, Serialize};

use crate::entry::{CorpusStats, EntryId, ParseStatus, Provenance, RegexEntry, Source};
use crate::segment::write_segment;
use crate::store::{Manifest, Store, MANIFEST_FILE, SHARDS_DIR};
use crate::StoreError;

#[derive(Debug, Deserialize)]
struct RawRecord {
    pattern: String,
    #[serde(default)]
    source: Option<Source>,
    origin: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Added {
    NewEntry,
    NewProvenance,
    Duplicate,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub lines: usize,
    pub new_entries: usize,
    pub new_provenance: usize,
    pub duplicates: usize,
    pub skipped: usize,
    /// Line number and reason for the first few skipped lines.
    pub skipped_examples: Vec<(usize, String)>,
}

const SKIP_EXAMPLES: usize = 20;

/// Accumulates entries before they are written as a store.
#[derive(Debug, Default, Clone)]
pub struct StoreBuilder {
    entries: HashMap<EntryId, RegexEntry>,
}

pub fn classify(pattern: &str) -> (ParseStatus, Option<forge_core::RegularityClass>) {
    match parse(pattern) {
        Ok(ast) => (ParseStatus::Ok, Some(ast.regularity())),
        Err(e) if e.is_unsupported() => (ParseStatus::Unsupported, None),
        Err(_) => (ParseStatus::ParseError, None),
    }
}

impl StoreBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Starts from the entries of an existing store.
    pub fn from_store(store: &Store) -> Self {
        Self { entries: store.entries().map(|e| (e.entry.id, e.entry.clone())).collect() }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn add(&mut self, pattern: &str, provenance: Provenance) -> Result<Added, StoreError> {
        let id = EntryId::of(pattern);
        if let Some(e) = self.entries.get_mut(&id) {
            if e.pattern != pattern {
                return Err(StoreError::IdCollision { id, a: e.pattern.clone(), b: pattern.into() });
            }
            if e.provenance.contains(&provenance) {
                return Ok(Added::Duplicate);
            }
            e.provenance.push(provenance);
            return Ok(Added::NewProvenance);
        }
        let (parse_status, regularity) = classify(pattern);
        self.entries.insert(
            id,
            RegexEntry {
                id,
                pattern: pattern.into(),
                provenance: vec![provenance],
                parse_status,
                regularity,
            },
        );
        Ok(Added::NewEntry)
    }

    /// Reads JSONL records. Lines that violate the schema are skipped and
    /// counted. A read error leaves the builder untouched.
    pub fn ingest_reader(
        &mut self,
        reader: impl BufRead,
        default_source: Option<Source>,
    ) -> Result<IngestReport, StoreError> {
        let mut report = IngestReport::default();
        let mut staged = Vec::new();
        let skip = |report: &mut IngestReport, line: usize, why: String| {
            report.skipped += 1;
            if report.skipped_examples.len() < SKIP_EXAMPLES {
                report.skipped_examples.push((line, why));
            }
        };
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            report.lines += 1;
            match serde_json::from_str::<RawRecord>(&line) {
                Ok(rec) => match rec.source.or(default_source) {
                    Some(source) => {
                        staged.push((i + 1, rec.pattern, Provenance { source, origin: rec.origin }))
                    }
                    None => skip(&mut report, i + 1, "missing source".into()),
                },
                Err(e) => skip(&mut report, i + 1, e.to_string()),
            }
        }
        for (line, pattern, provenance) in staged {
            match self.add(&pattern, provenance) {
                Ok(Added::NewEntry) => report.new_entries += 1,
                Ok(Added::NewProvenance) => report.new_provenance += 1,
                Ok(Added::Duplicate) => report.duplicates += 1,
                Err(e) => skip(&mut report, line, e.to_string()),
            }
        }
        Ok(report)
    }

    pub fn stats(&self) -> CorpusStats {
        CorpusStats::from_entries(self.entries.values())
    }

    pub fn into_entries(self) -> Vec<RegexEntry> {
        let mut v: Vec<RegexEntry> = self.entries.into_values().collect();
        v.sort_by_key(|e| e.id);
        v
    }

    /// Writes the store to `dir`, replacing any previous store there. The new
    /// store is assembled in a sibling directory and moved into place, so a
    /// failure never leaves a half-written store at `dir`.
    pub fn write(&self, dir: &Path, shard_count: usize) -> Result<CorpusStats, StoreError> {
        let shard_count = shard_count.max(1);
        let name = dir
            .file_name()
            .ok_or_else(|| StoreError::Invalid(format!("bad store path {}", dir.display())))?
            .to_string_lossy()
            .into_owned();
        let parent = dir.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        fs::create_dir_all(parent)?;
        let staging = parent.join(format!(".{name}.staging-{}", std::process::id()));
        if staging.exists() {
            fs::remove_dir_all(&staging)?;
        }
        let result = self.write_into(&staging, shard_count);
        let stats = match result {
            Ok(stats) => stats,
            Err(e) => {
                let _ = fs::remove_dir_all(&staging);
                return Err(e);
            }
        };
        if dir.exists() {
            let old = parent.join(format!(".{name}.old-{}", std::process::id()));
            fs::rename(dir, &old)?;
            fs::rename(&staging, dir)?;
            fs::remove_dir_all(&old)?;
        } else {
            fs::rename(&staging, dir)?;
        }
        Ok(stats)
    }

    fn write_into(&self, dir: &Path, shard_count: usize) -> Result<CorpusStats, StoreError> {
        fs::create_dir_all(dir.join(SHARDS_DIR))?;
        let mut shards: Vec<Vec<&RegexEntry>> = vec![Vec::new(); shard_count];
        for e in self.entries.values() {
            shards[(e.id.0 % shard_count as u64) as usize].push(e);
        }
        for (i, shard) in shards.iter_mut().enumerate() {
            shard.sort_by_key(|e| e.id);
            let file = fs::File::create(dir.join(SHARDS_DIR).join(format!("{i:02}.seg")))?;
            let mut w = BufWriter::new(file);
            write_segment(&mut w, shard.iter().copied())?;
            w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        }
        let stats = self.stats();
        let manifest = Manifest::new(shard_count, stats.clone());
        let mut w = BufWriter::new(fs::File::create(dir.join(MANIFEST_FILE))?);
        serde_json::to_writer_pretty(&mut w, &manifest)?;
        w.flush()?;
        Ok(stats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prov(source: Source, origin: &str) -> Provenance {
        Provenance { source, origin: origin.into() }
    }

    #[test]
    fn dedup_merges_provenance() {
        let mut b = StoreBuilder::new();
        assert_eq!(b.add("a+", prov(Source::OssProject, "x")).unwrap(), Added::NewEntry);
        assert_eq!(b.add("a+", prov(Source::SoPost, "y")).unwrap(), Added::NewProvenance);
        assert_eq!(b.add("a+", prov(Source::SoPost, "y")).unwrap(), Added::Duplicate);
        let entries = b.into_entries();
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0].provenance.len(), 2);
        assert_eq!(entries[0].source(), Source::OssProject);
    }

    #[test]
    fn malformed_patterns_are_kept_and_flagged() {
        let mut b = StoreBuilder::new();
        b.add("(a", prov(Source::Regexlib, "1")).unwrap();
        b.add("(?(1)a|b)", prov(Source::Regexlib, "2")).unwrap();
        b.add(r"(a)\1", prov(Source::Regexlib, "3")).unwrap();
        let stats = b.stats();
        assert_eq!((stats.parse_errors, stats.unsupported, stats.extended), (1, 1, 1));
        let e = b.into_entries().into_iter().find(|e| e.pattern == "(a").unwrap();
        assert_eq!((e.parse_status, e.regularity), (ParseStatus::ParseError, None));
    }

    #[test]
    fn schema_violations_skipped() {
        let input = concat!(
            r#"{"pattern":"a","source":"so-post","origin":"1"}"#,
            "\n",
            r#"{"pattern":"b","source":"nowhere","origin":"1"}"#,
            "\n",
            "not json\n",
            "\n",
            r#"{"pattern":"c","origin":"2"}"#,
            "\n",
            r#"{"source":"regexlib","origin":"2"}"#,
            "\n",
        );
        let mut b = StoreBuilder::new();
        let r = b.ingest_reader(input.as_bytes(), None).unwrap();
        assert_eq!((r.lines, r.new_entries, r.skipped), (5, 1, 4));
        let mut b = StoreBuilder::new();
        let r = b.ingest_reader(input.as_bytes(), Some(Source::Regexlib)).unwrap();
        assert_eq!((r.new_entries, r.skipped), (2, 3));
    }

    #[test]
    fn reingest_is_idempotent() {
        let input = concat!(
            r#"{"pattern":"a","source":"so-post","origin":"1"}"#,
            "\n",
            r#"{"pattern":"a","source":"oss-project","origin":"p"}"#,
            "\n",
            r#"{"pattern":"b","source":"so-post","origin":"1"}"#,
            "\n",
        );
        let mut b = StoreBuilder::new();
        b.ingest_reader(input.as_bytes(), None).unwrap();
        let first = b.stats();
        let r = b.ingest_reader(input.as_bytes(), None).unwrap();
        assert_eq!(r.duplicates, 3);
        assert_eq!(b.stats(), first);
        let so = first.sources[&Source::SoPost];
        assert_eq!((so.targets, so.regexes, so.unique_contributed), (1, 2, 2));
    }

    #[test]
    fn read_failure_rolls_back() {
        struct Failing(usize);
        impl std::io::Read for Failing {
            fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
                if self.0 == 0 {
                    return Err(std::io::Error::other("disk gone"));
                }
                self.0 -= 1;
                let line = b"{\"pattern\":\"x\",\"source\":\"so-post\",\"origin\":\"1\"}\n";
                buf[..line.len()].copy_from_slice(line);
                Ok(line.len())
            }
        }
        let mut b = StoreBuilder::new();
        let err = b.ingest_reader(std::io::BufReader::new(Failing(1)), None);
        assert!(err.is_err());
        assert!(b.is_empty());
    }
}
