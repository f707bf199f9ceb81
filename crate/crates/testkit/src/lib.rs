//! Oracles, generators and fixtures shared by the workspace test suites.

pub mod corpus;
pub mod gen;
pub mod oracle;
pub mod strings;
pub mod tai;

pub use corpus::{random_example, synthetic_corpus, SyntheticEntry};
pub use gen::{random_pattern, GenConfig};
pub use oracle::oracle_match;
pub use strings::all_strings;
pub use tai::{exhaustive_ted, Tree};
