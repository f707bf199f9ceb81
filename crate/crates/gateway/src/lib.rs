//! Command-line interface and HTTP/JSON service for the regex reuse corpus.

pub mod api;
pub mod cli;
pub mod http;
