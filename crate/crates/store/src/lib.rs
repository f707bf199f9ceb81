//! Content-addressed regex corpus with an example-driven query engine.

pub mod entry;
pub mod ingest;
pub mod prefilter;
pub mod query;
pub mod segment;
pub mod store;

use thiserror::Error;

pub use entry::{CorpusStats, EntryId, ParseStatus, Provenance, RegexEntry, Source, SourceStats};
pub use ingest::{Added, IngestReport, StoreBuilder};
pub use prefilter::{PrefilterInfo, QueryHints};
pub use query::{
    rank_by_strictness, run_query, run_query_streaming, spread, CandidateResult, Query, QueryError,
    QueryOptions, QueryOutcome, QueryStats, Rank,
};
pub use store::{Compiled, Manifest, Store, StoreView, StoredEntry};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid store: {0}")]
    Invalid(String),
    #[error("id {id} shared by {a:?} and {b:?}")]
    IdCollision { id: EntryId, a: String, b: String },
}
