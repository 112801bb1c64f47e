//! Model inputs: article embeddings, metadata columns, or both, plus a
//! z-score scaler fit on the training split.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use hashbrown::HashMap;
use rustc_hash::FxBuildHasher;
use serde::{Deserialize, Serialize};

use crate::article::ArticleMetadata;
use crate::error::{invalid, Error, Result};
use crate::math::sqrt;
use crate::seed::fnv1a64;

/// The five numeric metadata features, lettered A to E.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MetaFeature {
    #[serde(rename = "A")]
    TotalEdits,
    #[serde(rename = "B")]
    TotalEditors,
    #[serde(rename = "C")]
    TotalBytes,
    #[serde(rename = "D")]
    TotalCharacters,
    #[serde(rename = "E")]
    TotalWords,
}

impl MetaFeature {
    pub const ALL: [MetaFeature; 5] = [
        MetaFeature::TotalEdits,
        MetaFeature::TotalEditors,
        MetaFeature::TotalBytes,
        MetaFeature::TotalCharacters,
        MetaFeature::TotalWords,
    ];

    pub fn letter(self) -> char {
        match self {
            MetaFeature::TotalEdits => 'A',
            MetaFeature::TotalEditors => 'B',
            MetaFeature::TotalBytes => 'C',
            MetaFeature::TotalCharacters => 'D',
            MetaFeature::TotalWords => 'E',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        MetaFeature::ALL.into_iter().find(|f| f.letter() == c.to_ascii_uppercase())
    }

    pub fn value(self, meta: &ArticleMetadata) -> f64 {
        (match self {
            MetaFeature::TotalEdits => meta.total_edits,
            MetaFeature::TotalEditors => meta.total_editors,
            MetaFeature::TotalBytes => meta.total_bytes,
            MetaFeature::TotalCharacters => meta.total_characters,
            MetaFeature::TotalWords => meta.total_words,
        }) as f64
    }

    pub fn field(self) -> crate::MetaField {
        match self {
            MetaFeature::TotalEdits => crate::MetaField::TotalEdits,
            MetaFeature::TotalEditors => crate::MetaField::TotalEditors,
            MetaFeature::TotalBytes => crate::MetaField::TotalBytes,
            MetaFeature::TotalCharacters => crate::MetaField::TotalCharacters,
            MetaFeature::TotalWords => crate::MetaField::TotalWords,
        }
    }
}

/// Parses `A`, `A+B`, `C+D+E`, `All`.
pub fn parse_fields(s: &str) -> Result<Vec<MetaFeature>> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(MetaFeature::ALL.to_vec());
    }
    let mut out = Vec::new();
    for part in s.split(['+', ',']) {
        let part = part.trim();
        let mut chars = part.chars();
        let f = match (chars.next(), chars.next()) {
            (Some(c), None) => MetaFeature::from_letter(c),
            _ => None,
        }
        .ok_or_else(|| invalid(alloc::format!("unknown metadata feature `{part}`")))?;
        if !out.contains(&f) {
            out.push(f);
        }
    }
    out.sort();
    Ok(out)
}

pub fn fields_name(fields: &[MetaFeature]) -> String {
    if fields.len() == MetaFeature::ALL.len() {
        return String::from("All");
    }
    let mut s = String::new();
    for (i, f) in fields.iter().enumerate() {
        if i > 0 {
            s.push('+');
        }
        s.push(f.letter());
    }
    s
}

/// The metadata ablation grid: each feature alone, then A+B, C+D+E and All.
pub fn ablation_sets() -> Vec<Vec<MetaFeature>> {
    use MetaFeature::*;
    vec![
        vec![TotalEdits],
        vec![TotalEditors],
        vec![TotalBytes],
        vec![TotalCharacters],
        vec![TotalWords],
        vec![TotalEdits, TotalEditors],
        vec![TotalBytes, TotalCharacters, TotalWords],
        MetaFeature::ALL.to_vec(),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMode {
    Embeddings,
    Metadata,
    Both,
}

impl FromStr for FeatureMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "embeddings" => Ok(FeatureMode::Embeddings),
            "metadata" => Ok(FeatureMode::Metadata),
            "both" => Ok(FeatureMode::Both),
            _ => Err(invalid("mode must be one of embeddings, metadata, both")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProviderKind {
    /// Averaged 300-d word vectors from a word-vector table.
    #[serde(rename = "static-300")]
    Static300,
    /// 768-d per-page vectors from a page-vector table.
    #[serde(rename = "contextual-768")]
    Contextual768,
    /// Signed feature hashing of the article's tokens.
    HashedTest,
}

impl ProviderKind {
    pub fn default_dim(self) -> usize {
        match self {
            ProviderKind::Static300 | ProviderKind::HashedTest => 300,
            ProviderKind::Contextual768 => 768,
        }
    }
}

impl FromStr for ProviderKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "static-300" => Ok(ProviderKind::Static300),
            "contextual-768" => Ok(ProviderKind::Contextual768),
            "hashed-test" => Ok(ProviderKind::HashedTest),
            _ => Err(invalid("provider must be one of static-300, contextual-768, hashed-test")),
        }
    }
}

impl fmt::Display for ProviderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProviderKind::Static300 => "static-300",
            ProviderKind::Contextual768 => "contextual-768",
            ProviderKind::HashedTest => "hashed-test",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub mode: FeatureMode,
    #[serde(default)]
    pub metadata_fields: Vec<MetaFeature>,
    #[serde(default)]
    pub embedding_provider: Option<ProviderKind>,
    /// Embedding width; defaults to the provider's nominal width.
    #[serde(default)]
    pub embedding_dim: Option<usize>,
    /// `None` picks the per-model default (on for linear, Bayesian and
    /// distance-based models, off for tree ensembles).
    #[serde(default)]
    pub standardize: Option<bool>,
}

impl FeatureConfig {
    pub fn metadata(fields: Vec<MetaFeature>) -> Self {
        FeatureConfig {
            mode: FeatureMode::Metadata,
            metadata_fields: fields,
            embedding_provider: None,
            embedding_dim: None,
            standardize: None,
        }
    }

    pub fn embeddings(provider: ProviderKind) -> Self {
        FeatureConfig {
            mode: FeatureMode::Embeddings,
            metadata_fields: Vec::new(),
            embedding_provider: Some(provider),
            embedding_dim: None,
            standardize: None,
        }
    }

    pub fn both(provider: ProviderKind, fields: Vec<MetaFeature>) -> Self {
        FeatureConfig { mode: FeatureMode::Both, metadata_fields: fields, ..FeatureConfig::embeddings(provider) }
    }

    pub fn uses_embeddings(&self) -> bool {
        self.mode != FeatureMode::Metadata
    }

    pub fn uses_metadata(&self) -> bool {
        self.mode != FeatureMode::Embeddings
    }

    pub fn embedding_width(&self) -> usize {
        match (self.uses_embeddings(), self.embedding_provider) {
            (true, Some(p)) => self.embedding_dim.unwrap_or_else(|| p.default_dim()),
            _ => 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.embedding_width() + if self.uses_metadata() { self.metadata_fields.len() } else { 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.uses_metadata() && self.metadata_fields.is_empty() {
            return Err(invalid("metadata mode needs at least one metadata field"));
        }
        if self.uses_embeddings() && self.embedding_provider.is_none() {
            return Err(invalid("embedding mode needs an embedding provider"));
        }
        if self.embedding_dim == Some(0) {
            return Err(invalid("embedding dim must be positive"));
        }
        let mut sorted = self.metadata_fields.clone();
        sorted.sort();
        sorted.dedup();
        if sorted != self.metadata_fields {
            return Err(invalid("metadata fields must be listed once each in A..E order"));
        }
        Ok(())
    }
}

/// An article embedding; `all_oov` marks a static embedding where no token
/// had a vector (the values are then all zero).
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub values: Vec<f64>,
    pub all_oov: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Embedder {
    Static(WordVectors),
    Contextual(PageVectors),
    Hashed { dim: usize },
}

/// Word-vector table, `token v1 ... vd`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WordVectors {
    pub dim: usize,
    table: HashMap<String, Vec<f64>, FxBuildHasher>,
}

impl WordVectors {
    pub fn new(dim: usize) -> Self {
        WordVectors { dim, table: HashMap::default() }
    }

    pub fn insert(&mut self, token: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: vector.len() });
        }
        self.table.insert(token.into(), vector);
        Ok(())
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.table.get(token).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

/// Precomputed per-page vectors, `page_id v1 ... vd`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PageVectors {
    pub dim: usize,
    table: BTreeMap<u64, Vec<f64>>,
}

impl PageVectors {
    pub fn new(dim: usize) -> Self {
        PageVectors { dim, table: BTreeMap::new() }
    }

    pub fn insert(&mut self, page_id: u64, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: vector.len() });
        }
        self.table.insert(page_id, vector);
        Ok(())
    }

    pub fn get(&self, page_id: u64) -> Option<&[f64]> {
        self.table.get(&page_id).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

/// Signed feature hashing: each token adds `±1 / len` at
/// `fnv1a64(token) mod dim`, with the sign taken from the hash's top bit.
pub fn hashed_embedding<S: AsRef<str>>(tokens: &[S], dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    if tokens.is_empty() || dim == 0 {
        return v;
    }
    let w = 1.0 / tokens.len() as f64;
    for t in tokens {
        let h = fnv1a64(t.as_ref().as_bytes());
        let idx = (h % dim as u64) as usize;
        if h >> 63 == 1 {
            v[idx] -= w;
        } else {
            v[idx] += w;
        }
    }
    v
}

impl Embedder {
    pub fn kind(&self) -> ProviderKind {
        match self {
            Embedder::Static(_) => ProviderKind::Static300,
            Embedder::Contextual(_) => ProviderKind::Contextual768,
            Embedder::Hashed { .. } => ProviderKind::HashedTest,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Embedder::Static(w) => w.dim,
            Embedder::Contextual(p) => p.dim,
            Embedder::Hashed { dim } => *dim,
        }
    }

    pub fn embed<S: AsRef<str>>(&self, page_id: u64, tokens: &[S]) -> Result<Embedding> {
        match self {
            Embedder::Contextual(p) => p
                .get(page_id)
                .map(|v| Embedding { values: v.to_vec(), all_oov: false })
                .ok_or(Error::EmbeddingMiss(page_id)),
            _ if tokens.is_empty() => Err(Error::Empty("token list")),
            Embedder::Static(w) => {
                let mut sum = vec![0.0; w.dim];
                let mut hits = 0usize;
                for t in tokens {
                    if let Some(v) = w.get(t.as_ref()) {
                        hits += 1;
                        for (s, x) in sum.iter_mut().zip(v) {
                            *s += x;
                        }
                    }
                }
                if hits > 0 {
                    let inv = 1.0 / hits as f64;
                    sum.iter_mut().for_each(|s| *s *= inv);
                }
                Ok(Embedding { values: sum, all_oov: hits == 0 })
            }
            Embedder::Hashed { dim } => Ok(Embedding { values: hashed_embedding(tokens, *dim), all_oov: false }),
        }
    }
}

/// Input row for assembly.
#[derive(Debug, Clone, Copy)]
pub struct ArticleInput<'a, S> {
    pub page_id: u64,
    pub tokens: &'a [S],
    pub metadata: &'a ArticleMetadata,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub page_id: u64,
    pub values: Vec<f64>,
}

/// Embedding first, then metadata columns in A..E order.
pub fn assemble_one<S: AsRef<str>>(
    input: &ArticleInput<'_, S>,
    config: &FeatureConfig,
    embedder: Option<&Embedder>,
) -> Result<FeatureVector> {
    let mut values = Vec::with_capacity(config.dim());
    if config.uses_embeddings() {
        let emb = embedder.ok_or_else(|| invalid("feature config needs an embedding provider"))?;
        if Some(emb.kind()) != config.embedding_provider {
            return Err(invalid("embedding provider differs from the feature config"));
        }
        let e = emb.embed(input.page_id, input.tokens)?;
        if e.values.len() != config.embedding_width() {
            return Err(Error::DimensionMismatch { expected: config.embedding_width(), found: e.values.len() });
        }
        values.extend(e.values);
    }
    if config.uses_metadata() {
        for f in &config.metadata_fields {
            input.metadata.require(input.page_id, f.field())?;
            values.push(f.value(input.metadata));
        }
    }
    Ok(FeatureVector { page_id: input.page_id, values })
}

/// Order-preserving assembly. Articles that cannot be resolved (missing
/// embedding, missing metadata field, no tokens) are collected into one
/// [`Error::Unresolvable`].
pub fn assemble<S: AsRef<str>>(
    inputs: &[ArticleInput<'_, S>],
    config: &FeatureConfig,
    embedder: Option<&Embedder>,
) -> Result<Vec<FeatureVector>> {
    config.validate()?;
    let mut out = Vec::with_capacity(inputs.len());
    let mut failed = Vec::new();
    for input in inputs {
        match assemble_one(input, config, embedder) {
            Ok(v) => out.push(v),
            Err(Error::InvalidArgument(m)) => return Err(Error::InvalidArgument(m)),
            Err(Error::DimensionMismatch { expected, found }) => {
                return Err(Error::DimensionMismatch { expected, found })
            }
            Err(_) => failed.push(input.page_id),
        }
    }
    if failed.is_empty() {
        Ok(out)
    } else {
        Err(Error::Unresolvable(failed))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Dimensions with zero variance on the training split; their std is 1.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constant_dims: Vec<usize>,
}

/// Per-dimension mean and population standard deviation.
pub fn fit_scaler(rows: &[Vec<f64>]) -> Result<ScalerParams> {
    if rows.len() < 2 {
        return Err(invalid("scaler needs at least 2 training vectors"));
    }
    let d = rows[0].len();
    if let Some(r) = rows.iter().find(|r| r.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, found: r.len() });
    }
    let n = rows.len() as f64;
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, x) in mean.iter_mut().zip(r) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for r in rows {
        for ((v, x), m) in var.iter_mut().zip(r).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    let mut constant_dims = Vec::new();
    let std = var
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let s = sqrt(v / n);
            if s > 0.0 {
                s
            } else {
                constant_dims.push(j);
                1.0
            }
        })
        .collect();
    Ok(ScalerParams { mean, std, constant_dims })
}

impl ScalerParams {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: row.len() });
        }
        Ok(row.iter().zip(&self.mean).zip(&self.std).map(|((x, m), s)| (x - m) / s).collect())
    }
}

pub fn apply_scaler(rows: &[Vec<f64>], params: &ScalerParams) -> Result<Vec<Vec<f64>>> {
    rows.iter().map(|r| params.transform(r)).collect()
}
