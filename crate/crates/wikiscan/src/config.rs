//! TOML configuration for the pipeline and the scanner service. Relative
//! paths are resolved against the directory holding the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wikiscan_core::classify::{Hyperparams, ModelType};
use wikiscan_core::features::{FeatureConfig, MetaFeature};
use wikiscan_core::rules::RuleConfig;

use crate::error::{Error, Result};
use crate::ingest::CorpusFormat;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub corpus: PathBuf,
    #[serde(default)]
    pub corpus_format: Option<CorpusFormat>,
    #[serde(default)]
    pub bots: Option<PathBuf>,
    /// XTools fixture directory; when set, its metadata replaces the
    /// corpus metadata.
    #[serde(default)]
    pub metadata_dir: Option<PathBuf>,
    #[serde(default)]
    pub word_vectors: Option<PathBuf>,
    #[serde(default)]
    pub page_vectors: Option<PathBuf>,
    pub out_dir: PathBuf,
}

impl Paths {
    pub fn format(&self) -> CorpusFormat {
        self.corpus_format.unwrap_or_else(|| CorpusFormat::from_path(&self.corpus))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrepConfig {
    pub min_tokens: usize,
}

impl Default for PrepConfig {
    fn default() -> Self {
        PrepConfig { min_tokens: wikiscan_core::textprep::MIN_TOKENS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleConfig {
    pub per_class: usize,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig { per_class: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub model_type: ModelType,
    pub test_fraction: f64,
    pub cv_folds: usize,
    pub hyperparams: Hyperparams,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { model_type: ModelType::Gbt, test_fraction: 0.2, cv_folds: 5, hyperparams: Hyperparams::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetadataMode {
    Corpus,
    Fixture,
    Live,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub host: String,
    pub port: u16,
    /// Model JSON; defaults to the pipeline's `model.json`.
    pub model: Option<PathBuf>,
    /// Corpus the title index is built from; defaults to `paths.corpus`.
    pub corpus: Option<PathBuf>,
    pub metadata: MetadataMode,
    pub fixture_dir: Option<PathBuf>,
    pub project: String,
    pub wiki_base: String,
    pub xtools_base: String,
    pub concurrency: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            host: "127.0.0.1".into(),
            port: 8080,
            model: None,
            corpus: None,
            metadata: MetadataMode::Corpus,
            fixture_dir: None,
            project: "arz.wikipedia.org".into(),
            wiki_base: "https://arz.wikipedia.org".into(),
            xtools_base: "https://xtools.wmcloud.org".into(),
            concurrency: 4,
        }
    }
}

fn default_features() -> FeatureConfig {
    FeatureConfig::metadata(MetaFeature::ALL.to_vec())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
    pub paths: Paths,
    #[serde(default)]
    pub prep: PrepConfig,
    #[serde(default)]
    pub rules: RuleConfig,
    #[serde(default)]
    pub sample: SampleConfig,
    #[serde(default = "default_features")]
    pub features: FeatureConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub service: ServiceConfig,
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

fn resolve_opt(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(p) = p {
        resolve(base, p);
    }
}

impl PipelineConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.resolve_paths(base_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn resolve_paths(&mut self, base: &Path) {
        let p = &mut self.paths;
        resolve(base, &mut p.corpus);
        resolve(base, &mut p.out_dir);
        for o in [&mut p.bots, &mut p.metadata_dir, &mut p.word_vectors, &mut p.page_vectors] {
            resolve_opt(base, o);
        }
        let s = &mut self.service;
        for o in [&mut s.model, &mut s.corpus, &mut s.fixture_dir] {
            resolve_opt(base, o);
        }
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: wikiscan_core::Error| Error::config(e.to_string());
        self.rules.validate().map_err(cfg_err)?;
        self.features.validate().map_err(cfg_err)?;
        if !(0.0..1.0).contains(&self.train.test_fraction) {
            return Err(Error::config("train.test_fraction must lie in [0, 1)"));
        }
        if self.sample.per_class == 0 {
            return Err(Error::config("sample.per_class must be positive"));
        }
        if self.service.metadata == MetadataMode::Fixture && self.fixture_dir().is_none() {
            return Err(Error::config("service.metadata = \"fixture\" needs service.fixture_dir or paths.metadata_dir"));
        }
        Ok(())
    }

    pub fn model_path(&self) -> PathBuf {
        self.service.model.clone().unwrap_or_else(|| self.paths.out_dir.join("model.json"))
    }

    pub fn index_corpus(&self) -> &Path {
        self.service.corpus.as_deref().unwrap_or(&self.paths.corpus)
    }

    pub fn fixture_dir(&self) -> Option<&Path> {
        self.service.fixture_dir.as_deref().or(self.paths.metadata_dir.as_deref())
    }
}
