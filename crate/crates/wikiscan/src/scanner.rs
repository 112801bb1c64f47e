//! Title lookup, metadata retrieval and single-article verdicts, shared by
//! the `scan` subcommand and the HTTP service.

use std::collections::HashMap;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};
use wikiscan_core::classify::{ModelType, TrainedModel, TrainingSummary};
use wikiscan_core::features::{Embedder, FeatureConfig};
use wikiscan_core::scan::{scan, ScanInput, ScanVerdict};
use wikiscan_core::search::{SearchHit, TitleIndex};
use wikiscan_core::textprep::TokenizedArticle;
use wikiscan_core::{ArticleMetadata, ArticleRecord};

use crate::config::{MetadataMode, PipelineConfig};
use crate::embeddings::load_embedder;
use crate::error::{Error, Result};
use crate::ingest::{read_corpus, CorpusFormat};
use crate::pipeline::hex;
use crate::xtools::{fetch_fixture, page_url, LiveClient, MetadataSource};

pub const DEFAULT_SEARCH_LIMIT: usize = 10;
pub const MAX_SEARCH_LIMIT: usize = 100;

#[derive(Debug, Clone, Serialize)]
pub struct ModelInfo {
    pub model_id: String,
    pub model_type: ModelType,
    pub schema_version: u32,
    pub feature_config: FeatureConfig,
    pub summary: TrainingSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArticleView {
    pub title: String,
    pub page_url: String,
    pub metadata: ArticleMetadata,
}

pub struct Scanner {
    model: TrainedModel,
    model_id: String,
    index: TitleIndex,
    articles: HashMap<String, ArticleRecord>,
    source: MetadataSource,
    embedder: Option<Embedder>,
    wiki_base: String,
}

/// `{model_type}-{first 12 hex digits of the SHA-256 of the model file}`.
pub fn model_id(model_type: ModelType, model_json: &[u8]) -> String {
    let digest = hex(&Sha256::digest(model_json));
    format!("{}-{}", model_type.name(), &digest[..12])
}

pub fn load_model(path: &Path) -> Result<(TrainedModel, String)> {
    let bytes = std::fs::read(path).map_err(|e| Error::config(format!("model {}: {e}", path.display())))?;
    let model: TrainedModel =
        serde_json::from_slice(&bytes).map_err(|e| Error::config(format!("model {}: {e}", path.display())))?;
    if model.schema_version != wikiscan_core::classify::SCHEMA_VERSION {
        return Err(Error::config(format!("model {}: unsupported schema version {}", path.display(), model.schema_version)));
    }
    let id = model_id(model.model_type, &bytes);
    Ok((model, id))
}

impl Scanner {
    pub fn new(
        model: TrainedModel,
        model_id: String,
        corpus: Vec<ArticleRecord>,
        source: MetadataSource,
        embedder: Option<Embedder>,
        wiki_base: String,
    ) -> Self {
        let index = TitleIndex::new(corpus.iter().map(|a| a.title.clone()));
        let articles = corpus.into_iter().map(|a| (a.title.clone(), a)).collect();
        Scanner { model, model_id, index, articles, source, embedder, wiki_base }
    }

    /// Everything from the service section of a config. Fails without a
    /// readable model.
    pub fn from_config(cfg: &PipelineConfig) -> Result<Self> {
        let (model, id) = load_model(&cfg.model_path())?;
        let corpus_path = cfg.index_corpus();
        let format = if cfg.service.corpus.is_some() { CorpusFormat::from_path(corpus_path) } else { cfg.paths.format() };
        let corpus = read_corpus(corpus_path, format)?.records;
        let s = &cfg.service;
        let source = match s.metadata {
            MetadataMode::Corpus => MetadataSource::Corpus,
            MetadataMode::Fixture => MetadataSource::FixtureDir(
                cfg.fixture_dir().ok_or_else(|| Error::config("fixture metadata needs a fixture directory"))?.into(),
            ),
            MetadataMode::Live => MetadataSource::Live(LiveClient::new(
                &s.xtools_base,
                &s.project,
                cfg.paths.metadata_dir.clone(),
                s.concurrency,
            )?),
        };
        let fc = &model.feature_config;
        let embedder = match (fc.uses_embeddings(), fc.embedding_provider) {
            (true, Some(p)) => Some(load_embedder(
                p,
                fc.embedding_dim,
                cfg.paths.word_vectors.as_deref(),
                cfg.paths.page_vectors.as_deref(),
            )?),
            _ => None,
        };
        Ok(Scanner::new(model, id, corpus, source, embedder, s.wiki_base.clone()))
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn model_info(&self) -> ModelInfo {
        ModelInfo {
            model_id: self.model_id.clone(),
            model_type: self.model.model_type,
            schema_version: self.model.schema_version,
            feature_config: self.model.feature_config.clone(),
            summary: self.model.summary.clone(),
        }
    }

    pub fn titles(&self) -> usize {
        self.index.len()
    }

    pub fn search(&self, query: &str, limit: usize) -> Result<Vec<SearchHit>> {
        Ok(self.index.search(query, limit.min(MAX_SEARCH_LIMIT))?)
    }

    fn known(&self, title: &str) -> Result<()> {
        if self.index.contains(title) {
            Ok(())
        } else {
            Err(Error::UnknownTitle(title.into()))
        }
    }

    pub async fn metadata(&self, title: &str) -> Result<ArticleMetadata> {
        self.known(title)?;
        match &self.source {
            MetadataSource::Corpus => Ok(self.articles[title].metadata.clone()),
            MetadataSource::FixtureDir(dir) => fetch_fixture(dir, title),
            MetadataSource::Live(client) => client.fetch(title).await,
        }
    }

    pub async fn article(&self, title: &str) -> Result<ArticleView> {
        let metadata = self.metadata(title).await?;
        Ok(ArticleView { title: title.into(), page_url: page_url(&self.wiki_base, title), metadata })
    }

    pub async fn scan(&self, title: &str) -> Result<ScanVerdict> {
        let metadata = self.metadata(title).await?;
        let article = &self.articles[title];
        let tokenized = TokenizedArticle::from_text(article.page_id, &article.text);
        let tokens: Vec<&str> = tokenized.tokens.iter().map(String::as_str).collect();
        let url = page_url(&self.wiki_base, title);
        let input = ScanInput {
            page_id: article.page_id,
            title,
            page_url: &url,
            metadata: &metadata,
            tokens: &tokens,
            text: Some(&article.text),
        };
        Ok(scan(&input, &self.model, &self.model_id, self.embedder.as_ref())?)
    }
}
