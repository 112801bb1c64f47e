//! Algorithms for detecting template-translated articles in Wikipedia-style
//! corpora.
//!
//! Everything here is `no_std` with `alloc`: text cleaning and tokenization,
//! corpus density and lexical diversity statistics, exact n-gram profiling,
//! contributor typing, the before/after heuristic labeling rules, feature
//! assembly, five supervised classifiers with their evaluation protocol,
//! three clusterers with silhouette scoring, and the trigram title search
//! used by the scanner. File formats, HTTP and the CLI live in the `wikiscan`
//! crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod article;
pub mod classify;
pub mod cluster;
pub mod contrib;
pub mod error;
pub mod features;
pub mod lexstats;
pub mod ngrams;
pub mod rules;
pub mod scan;
pub mod search;
pub mod seed;
pub mod textprep;

mod math;

pub use article::{ArticleMetadata, ArticleRecord, BotRegistry, MetaField, TopEditor};
pub use error::{Error, Result};
