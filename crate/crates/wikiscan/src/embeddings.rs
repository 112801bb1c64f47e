//! Text formats for precomputed vectors: `token v1 .. vd` word tables (an
//! optional `count dim` header line is skipped) and `page_id v1 .. vd` page
//! tables.

use std::io::BufRead;
use std::path::Path;

use wikiscan_core::features::{Embedder, PageVectors, ProviderKind, WordVectors};

use crate::error::{Error, Result};
use crate::ingest::open;

fn bad(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Record { path: path.into(), line: line as u64, message: message.into() }
}

fn floats(path: &Path, line: usize, fields: &[&str]) -> Result<Vec<f64>> {
    fields.iter().map(|f| f.parse::<f64>().map_err(|_| bad(path, line, format!("not a number: `{f}`")))).collect()
}

fn is_header(fields: &[&str]) -> bool {
    fields.len() == 2 && fields.iter().all(|f| f.parse::<u64>().is_ok())
}

pub fn load_word_vectors(path: &Path) -> Result<WordVectors> {
    let mut table: Option<WordVectors> = None;
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() || (i == 0 && is_header(&fields)) {
            continue;
        }
        let v = floats(path, i + 1, &fields[1..])?;
        let t = table.get_or_insert_with(|| WordVectors::new(v.len()));
        t.insert(fields[0], v).map_err(|e| bad(path, i + 1, e.to_string()))?;
    }
    table.ok_or_else(|| bad(path, 0, "word-vector table is empty"))
}

pub fn load_page_vectors(path: &Path) -> Result<PageVectors> {
    let mut table: Option<PageVectors> = None;
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let id: u64 = fields[0].parse().map_err(|_| bad(path, i + 1, format!("bad page_id `{}`", fields[0])))?;
        let v = floats(path, i + 1, &fields[1..])?;
        let t = table.get_or_insert_with(|| PageVectors::new(v.len()));
        t.insert(id, v).map_err(|e| bad(path, i + 1, e.to_string()))?;
    }
    table.ok_or_else(|| bad(path, 0, "page-vector table is empty"))
}

/// Builds the embedder a provider needs. `dim` only applies to hashing.
pub fn load_embedder(
    provider: ProviderKind,
    dim: Option<usize>,
    word_vectors: Option<&Path>,
    page_vectors: Option<&Path>,
) -> Result<Embedder> {
    match provider {
        ProviderKind::HashedTest => Ok(Embedder::Hashed { dim: dim.unwrap_or(provider.default_dim()) }),
        ProviderKind::Static300 => {
            let p = word_vectors.ok_or_else(|| Error::config("static-300 needs a word-vector file"))?;
            Ok(Embedder::Static(load_word_vectors(p)?))
        }
        ProviderKind::Contextual768 => {
            let p = page_vectors.ok_or_else(|| Error::config("contextual-768 needs a page-vector file"))?;
            Ok(Embedder::Contextual(load_page_vectors(p)?))
        }
    }
}
