//! IO, file formats, the pipeline runner, the scanner service and the CLI
//! on top of `wikiscan-core`.

pub mod cli;
pub mod config;
pub mod embeddings;
pub mod error;
pub mod fixture;
pub mod ingest;
pub mod par;
pub mod pipeline;
pub mod reports;
pub mod scanner;
pub mod server;
pub mod xtools;

pub use error::{Error, Result};
