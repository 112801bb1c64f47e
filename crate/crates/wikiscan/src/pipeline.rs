//! prep -> contrib -> filter -> sample -> featurize -> train -> evaluate, each stage
//! writing its artifacts under `out_dir` and skipping itself when a stamp of
//! its inputs (file hashes plus the relevant config) is unchanged.

use std::collections::HashMap;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use wikiscan_core::contrib::{creator_editor_percentages, rank_creators};
use wikiscan_core::classify::{self, EvalReport, LabeledExample, TrainedModel};
use wikiscan_core::features::{assemble, ArticleInput, FeatureVector};
use wikiscan_core::rules::{label_corpus, sample_training_pool, LabeledArticle, TrainingPool};
use wikiscan_core::seed::derive_seed;
use wikiscan_core::textprep::TokenizedArticle;
use wikiscan_core::ArticleRecord;

use crate::config::PipelineConfig;
use crate::embeddings::load_embedder;
use crate::error::{Error, Result};
use crate::ingest::{load_bot_registry, read_corpus, read_jsonl, write_jsonl};
use crate::par::{par_map, threads};
use crate::reports;
use crate::xtools::fetch_fixture;

pub const STAGES: [&str; 7] = ["prep", "contrib", "filter", "sample", "featurize", "train", "evaluate"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Ran,
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub stages: Vec<(&'static str, StageStatus)>,
    pub evaluation: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepSummary {
    pub records: usize,
    pub kept: usize,
    pub discarded: usize,
    pub record_errors: Vec<String>,
}

/// Held-out split written by `train` and read by `evaluate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<u64>,
    pub test: Vec<u64>,
}

pub struct Artifacts {
    pub dir: PathBuf,
}

impl Artifacts {
    pub fn tokens(&self) -> PathBuf {
        self.dir.join("tokens.jsonl")
    }
    pub fn articles(&self) -> PathBuf {
        self.dir.join("articles.jsonl")
    }
    pub fn prep_summary(&self) -> PathBuf {
        self.dir.join("prep.json")
    }
    pub fn creators(&self) -> PathBuf {
        self.dir.join("creators.csv")
    }
    pub fn contributor_types(&self) -> PathBuf {
        self.dir.join("contributor_types.csv")
    }
    pub fn labeled(&self) -> PathBuf {
        self.dir.join("labeled.jsonl")
    }
    pub fn attrition(&self) -> PathBuf {
        self.dir.join("attrition.csv")
    }
    pub fn pool(&self) -> PathBuf {
        self.dir.join("pool.json")
    }
    pub fn features(&self) -> PathBuf {
        self.dir.join("features.jsonl")
    }
    pub fn model(&self) -> PathBuf {
        self.dir.join("model.json")
    }
    pub fn split(&self) -> PathBuf {
        self.dir.join("split.json")
    }
    pub fn evaluation(&self) -> PathBuf {
        self.dir.join("evaluation.csv")
    }
    pub fn metrics(&self) -> PathBuf {
        self.dir.join("metrics.json")
    }
    fn stamp(&self, stage: &str) -> PathBuf {
        self.dir.join("stamps").join(format!("{stage}.sha256"))
    }
}

pub fn hash_file(path: &Path) -> Result<String> {
    let mut f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex(&h.finalize()))
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn hash_dir(dir: &Path, h: &mut Sha256) -> Result<()> {
    let mut entries: Vec<PathBuf> =
        std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?.filter_map(|e| e.ok().map(|e| e.path())).collect();
    entries.sort();
    for p in entries {
        if p.is_file() {
            h.update(p.file_name().map(|n| n.as_encoded_bytes()).unwrap_or_default());
            h.update(hash_file(&p)?.as_bytes());
        }
    }
    Ok(())
}

fn stamp_of(stage: &str, inputs: &[&Path], settings: &impl Serialize) -> Result<String> {
    let mut h = Sha256::new();
    h.update(stage.as_bytes());
    h.update(serde_json::to_vec(settings).expect("settings serialize"));
    for p in inputs {
        if p.is_dir() {
            hash_dir(p, &mut h)?;
        } else {
            h.update(hash_file(p)?.as_bytes());
        }
    }
    Ok(hex(&h.finalize()))
}

fn write_json(path: &Path, v: &impl Serialize) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v).expect("artifact serializes");
    s.push('\n');
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&s).map_err(|e| Error::Record { path: path.into(), line: e.line() as u64, message: e.to_string() })
}

struct Runner<'a> {
    art: &'a Artifacts,
    force: bool,
    statuses: Vec<(&'static str, StageStatus)>,
}

impl Runner<'_> {
    fn stage(
        &mut self,
        name: &'static str,
        inputs: &[&Path],
        settings: &impl Serialize,
        outputs: &[PathBuf],
        run: impl FnOnce() -> Result<()>,
    ) -> Result<()> {
        let wrap = |e: Error| Error::Stage { stage: name, source: Box::new(e) };
        for p in inputs {
            if !p.exists() {
                return Err(wrap(Error::io(*p, std::io::Error::new(std::io::ErrorKind::NotFound, "input not found"))));
            }
        }
        let stamp = stamp_of(name, inputs, settings).map_err(wrap)?;
        let stamp_path = self.art.stamp(name);
        let fresh = !self.force
            && outputs.iter().all(|o| o.exists())
            && std::fs::read_to_string(&stamp_path).is_ok_and(|s| s.trim() == stamp);
        if fresh {
            self.statuses.push((name, StageStatus::Skipped));
            return Ok(());
        }
        run().map_err(wrap)?;
        std::fs::write(&stamp_path, format!("{stamp}\n")).map_err(|e| wrap(Error::io(&stamp_path, e)))?;
        self.statuses.push((name, StageStatus::Ran));
        Ok(())
    }
}

fn by_id<T, K: Fn(&T) -> u64>(items: Vec<T>, key: K) -> HashMap<u64, T> {
    items.into_iter().map(|x| (key(&x), x)).collect()
}

/// Runs every stage; `force` ignores stamps.
pub fn run_pipeline(cfg: &PipelineConfig, force: bool) -> Result<PipelineReport> {
    let art = Artifacts { dir: cfg.paths.out_dir.clone() };
    let stamps = art.dir.join("stamps");
    std::fs::create_dir_all(&stamps).map_err(|e| Error::io(&stamps, e))?;
    let workers = threads(cfg.threads);
    let mut r = Runner { art: &art, force, statuses: Vec::new() };

    // prep
    let mut prep_inputs: Vec<&Path> = vec![&cfg.paths.corpus];
    if let Some(d) = &cfg.paths.metadata_dir {
        prep_inputs.push(d);
    }
    r.stage("prep", &prep_inputs, &(&cfg.prep, cfg.paths.format()), &[art.tokens(), art.articles(), art.prep_summary()], || {
        let loaded = read_corpus(&cfg.paths.corpus, cfg.paths.format())?;
        let tokenized = par_map(&loaded.records, workers, |a| TokenizedArticle::from_text(a.page_id, &a.text));
        let min = cfg.prep.min_tokens.max(1);
        let mut kept_tokens = Vec::new();
        let mut kept_articles = Vec::new();
        for (mut a, t) in loaded.records.iter().cloned().zip(tokenized) {
            if t.len() < min {
                continue;
            }
            if let Some(dir) = &cfg.paths.metadata_dir {
                a.metadata = fetch_fixture(dir, &a.title)?;
            }
            kept_tokens.push(t);
            kept_articles.push(a);
        }
        let summary = PrepSummary {
            records: loaded.records.len(),
            kept: kept_tokens.len(),
            discarded: loaded.records.len() - kept_tokens.len(),
            record_errors: loaded.errors.iter().map(|e| e.to_string()).collect(),
        };
        write_jsonl(&art.tokens(), &kept_tokens)?;
        write_jsonl(&art.articles(), &kept_articles)?;
        write_json(&art.prep_summary(), &summary)
    })?;

    // contrib
    let articles_path = art.articles();
    let bots = cfg.paths.bots.clone().ok_or_else(|| Error::Stage {
        stage: "contrib",
        source: Box::new(Error::config("paths.bots (bot registry) is not set")),
    })?;
    r.stage("contrib", &[&articles_path, &bots], &(), &[art.creators(), art.contributor_types()], || {
        let registry = load_bot_registry(&bots)?;
        let articles: Vec<ArticleRecord> = read_jsonl(&art.articles())?;
        reports::creators(&rank_creators(&articles, &registry, 10)).save(&art.creators())?;
        reports::type_percentages(&creator_editor_percentages(&articles, &registry)?).save(&art.contributor_types())
    })?;

    // filter
    r.stage("filter", &[&articles_path, &bots], &cfg.rules, &[art.labeled(), art.attrition()], || {
        let registry = load_bot_registry(&bots)?;
        let articles: Vec<ArticleRecord> = read_jsonl(&art.articles())?;
        let rep = label_corpus(&articles, &registry, &cfg.rules)?;
        write_jsonl(&art.labeled(), &rep.labeled)?;
        reports::attrition(&rep.attrition).save(&art.attrition())
    })?;

    // sample
    let labeled_path = art.labeled();
    let sample_seed = derive_seed(cfg.seed, "sample");
    r.stage("sample", &[&labeled_path], &(&cfg.sample, sample_seed), &[art.pool()], || {
        let labeled: Vec<LabeledArticle> = read_jsonl(&art.labeled())?;
        let pool = sample_training_pool(&labeled, cfg.sample.per_class, sample_seed)?;
        write_json(&art.pool(), &pool)
    })?;

    // featurize
    let (pool_path, tokens_path) = (art.pool(), art.tokens());
    let mut feat_inputs: Vec<&Path> = vec![&pool_path, &tokens_path, &articles_path];
    for p in [&cfg.paths.word_vectors, &cfg.paths.page_vectors].into_iter().flatten() {
        feat_inputs.push(p);
    }
    r.stage("featurize", &feat_inputs, &cfg.features, &[art.features()], || {
        let pool: TrainingPool = read_json(&art.pool())?;
        let tokens = by_id(read_jsonl::<TokenizedArticle>(&art.tokens())?, |t| t.page_id);
        let articles = by_id(read_jsonl::<ArticleRecord>(&art.articles())?, |a| a.page_id);
        let embedder = match (cfg.features.uses_embeddings(), cfg.features.embedding_provider) {
            (true, Some(p)) => Some(load_embedder(
                p,
                cfg.features.embedding_dim,
                cfg.paths.word_vectors.as_deref(),
                cfg.paths.page_vectors.as_deref(),
            )?),
            _ => None,
        };
        let examples: Vec<(u64, u8)> = pool.examples().collect();
        let mut inputs = Vec::with_capacity(examples.len());
        for (id, _) in &examples {
            let a = articles.get(id).ok_or_else(|| Error::Core(wikiscan_core::Error::Unresolvable(vec![*id])))?;
            let t = tokens.get(id).ok_or_else(|| Error::Core(wikiscan_core::Error::Unresolvable(vec![*id])))?;
            inputs.push(ArticleInput { page_id: *id, tokens: t.tokens.as_slice(), metadata: &a.metadata });
        }
        let chunks: Vec<&[ArticleInput<'_, String>]> = inputs.chunks(inputs.len().div_ceil(workers).max(1)).collect();
        let parts = par_map(&chunks, workers, |c| assemble(c, &cfg.features, embedder.as_ref()));
        let mut vectors: Vec<FeatureVector> = Vec::with_capacity(inputs.len());
        for p in parts {
            vectors.extend(p?);
        }
        let out: Vec<LabeledExample> =
            vectors.into_iter().zip(&examples).map(|(features, &(_, label))| LabeledExample { features, label }).collect();
        write_jsonl(&art.features(), &out)
    })?;

    // train
    let features_path = art.features();
    let split_seed = derive_seed(cfg.seed, "split");
    let mut hp = cfg.train.hyperparams;
    hp.seed = derive_seed(cfg.seed, "train");
    let train_settings = (&cfg.train.model_type, cfg.train.test_fraction, split_seed, &hp, &cfg.features);
    r.stage("train", &[&features_path], &train_settings, &[art.model(), art.split()], || {
        let examples: Vec<LabeledExample> = read_jsonl(&art.features())?;
        let labels: Vec<u8> = examples.iter().map(|e| e.label).collect();
        let (tr, te) = classify::stratified_split(&labels, cfg.train.test_fraction, split_seed)?;
        let train_set: Vec<LabeledExample> = tr.iter().map(|&i| examples[i].clone()).collect();
        let model = classify::train(cfg.train.model_type, &train_set, &cfg.features, &hp)?;
        let ids = |idx: &[usize]| idx.iter().map(|&i| examples[i].features.page_id).collect();
        write_json(&art.split(), &Split { train: ids(&tr), test: ids(&te) })?;
        write_json(&art.model(), &model)
    })?;

    // evaluate
    let (model_path, split_path) = (art.model(), art.split());
    let cv_seed = derive_seed(cfg.seed, "cv");
    r.stage("evaluate", &[&model_path, &split_path, &features_path], &(cfg.train.cv_folds, cv_seed, &hp), &[art.evaluation(), art.metrics()], || {
        let model: TrainedModel = read_json(&art.model())?;
        let split: Split = read_json(&art.split())?;
        let examples: Vec<LabeledExample> = read_jsonl(&art.features())?;
        let by_page = by_id(examples.clone(), |e| e.features.page_id);
        let test: Vec<LabeledExample> = split.test.iter().filter_map(|id| by_page.get(id).cloned()).collect();
        let mut report = classify::evaluate(&model, &test)?;
        if cfg.train.cv_folds >= 2 {
            report.cv_fold_accuracies =
                classify::cross_validate(model.model_type, &examples, &model.feature_config, &hp, cfg.train.cv_folds, cv_seed)?;
        }
        reports::evaluation(model.model_type.name(), &report).save(&art.evaluation())?;
        write_json(&art.metrics(), &report)
    })?;

    let evaluation: EvalReport = read_json(&art.metrics())?;
    Ok(PipelineReport { stages: r.statuses, evaluation })
}
