//! Command-line entry point.

use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use wikiscan_core::classify::{self, Hyperparams, LabeledExample, ModelType, TrainedModel};
use wikiscan_core::cluster::{run_cluster_ablation, run_standardized, Algorithm, ClusterAblationRow};
use wikiscan_core::contrib::{creator_editor_percentages, rank_creators};
use wikiscan_core::features::{assemble, parse_fields, ArticleInput, FeatureConfig, FeatureMode, MetaFeature, ProviderKind};
use wikiscan_core::lexstats::{length_distribution, lexical_diversity, summarize_corpus, ArticleSize, MTLD_THRESHOLD};
use wikiscan_core::ngrams::{diagnose_decay, profile, InternedCorpus, DEFAULT_BAND, DEFAULT_DECAY_THRESHOLD, DEFAULT_N_VALUES};
use wikiscan_core::rules::{label_corpus, sample_training_pool, LabeledArticle, TrainingPool};
use wikiscan_core::seed::derive_seed;
use wikiscan_core::textprep::TokenizedArticle;
use wikiscan_core::ArticleRecord;

use crate::config::PipelineConfig;
use crate::embeddings::load_embedder;
use crate::error::{Error, Result};
use crate::ingest::{load_bot_registry, read_corpus, read_jsonl, write_jsonl, CorpusFormat};
use crate::par::{par_map, threads};
use crate::pipeline::{run_pipeline, StageStatus};
use crate::reports::{self, Table};
use crate::scanner::{load_model, Scanner, DEFAULT_SEARCH_LIMIT};
use crate::xtools::fetch_fixture;

#[derive(Debug, Parser)]
#[command(name = "wikiscan", version, about = "Detect template-translated Wikipedia articles")]
pub struct Cli {
    /// Pipeline/service config (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Upper bound on worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Corpus file (JSONL or MediaWiki XML); defaults to `paths.corpus`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<CorpusFormat>,
    /// Directory of articleinfo JSON replacing the corpus metadata.
    #[arg(long)]
    pub metadata_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FeatureArgs {
    #[arg(long)]
    pub mode: Option<FeatureMode>,
    /// Metadata fields as letters, e.g. `ABCDE` or `A,B`.
    #[arg(long)]
    pub fields: Option<String>,
    #[arg(long)]
    pub provider: Option<ProviderKind>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub standardize: Option<bool>,
    #[arg(long)]
    pub word_vectors: Option<PathBuf>,
    #[arg(long)]
    pub page_vectors: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tokenize a corpus into JSONL, dropping short articles.
    Prep {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        min_tokens: Option<usize>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Corpus size summary; optionally the per-article length CSV.
    Stats {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        lengths: Option<PathBuf>,
    },
    /// TTR, RTTR, CTTR and MTLD over the corpus.
    Lexdiv {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, default_value_t = MTLD_THRESHOLD)]
        threshold: f64,
    },
    /// Top-k n-grams, the top-1 decay series and its diagnosis.
    Ngrams {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_N_VALUES)]
        n: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 50)]
        n_max: usize,
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[arg(long)]
        top1: Option<PathBuf>,
    },
    /// Top creators and bot/human creator and editor shares.
    Contrib {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        bots: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        top: usize,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Apply the labeling rules.
    Filter {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        bots: Option<PathBuf>,
        #[arg(long, short)]
        output: PathBuf,
        #[arg(long)]
        attrition: Option<PathBuf>,
    },
    /// Draw the balanced training pool from labeled JSONL.
    Sample {
        #[arg(long)]
        labeled: PathBuf,
        #[arg(long)]
        per_class: Option<usize>,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Feature vectors for a training pool.
    Featurize {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        pool: PathBuf,
        #[command(flatten)]
        features: FeatureArgs,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Fit a model on the training side of the stratified split.
    Train {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        model_type: Option<ModelType>,
        #[arg(long)]
        test_fraction: Option<f64>,
        #[arg(long)]
        standardize: Option<bool>,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Score a model on the held-out side of the same split, plus k-fold CV.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        test_fraction: Option<f64>,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Metadata ablation accuracies for each model; features must hold A..E.
    Ablate {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, value_delimiter = ',')]
        models: Vec<ModelType>,
        #[arg(long)]
        test_fraction: Option<f64>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Silhouette scores of unlabeled clusterings per metadata ablation set.
    Cluster {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = ["kmeans".to_string(), "agglomerative".to_string(), "dbscan".to_string()])]
        algorithms: Vec<String>,
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
        standardize: bool,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Verdict for one title, as JSON.
    Scan { title: String },
    /// Fuzzy title search.
    Search {
        query: String,
        #[arg(long, default_value_t = DEFAULT_SEARCH_LIMIT)]
        limit: usize,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        host: Option<String>,
        #[arg(long)]
        port: Option<u16>,
    },
    /// Run every pipeline stage, skipping those whose inputs are unchanged.
    Run {
        #[arg(long)]
        force: bool,
    },
    /// Write a synthetic corpus with known labels plus a config.
    Fixture {
        #[arg(long, short)]
        output: PathBuf,
        #[arg(long, default_value_t = 2000)]
        articles: usize,
        /// Articles that also get an articleinfo JSON file.
        #[arg(long, default_value_t = 50)]
        xtools: usize,
    },
}

struct Ctx {
    cfg: Option<PipelineConfig>,
    seed: u64,
    threads: usize,
}

impl Ctx {
    fn cfg(&self) -> Result<&PipelineConfig> {
        self.cfg.as_ref().ok_or_else(|| Error::config("this command needs --config"))
    }

    fn corpus(&self, a: &CorpusArgs) -> Result<Vec<ArticleRecord>> {
        let (path, cfg_format) = match (&a.input, &self.cfg) {
            (Some(p), _) => (p.clone(), None),
            (None, Some(c)) => (c.paths.corpus.clone(), Some(c.paths.format())),
            (None, None) => return Err(Error::config("no corpus: pass --input or --config")),
        };
        let format = a.format.or(cfg_format).unwrap_or_else(|| CorpusFormat::from_path(&path));
        let loaded = read_corpus(&path, format)?;
        for e in &loaded.errors {
            eprintln!("skipped: {e}");
        }
        let mut records = loaded.records;
        let dir = a.metadata_dir.clone().or_else(|| a.input.is_none().then(|| self.cfg.as_ref()?.paths.metadata_dir.clone()).flatten());
        if let Some(dir) = dir {
            for r in &mut records {
                r.metadata = fetch_fixture(&dir, &r.title)?;
            }
        }
        Ok(records)
    }

    fn tokenize(&self, records: &[ArticleRecord]) -> Vec<TokenizedArticle> {
        par_map(records, self.threads, |a| TokenizedArticle::from_text(a.page_id, &a.text))
    }

    fn bots(&self, explicit: &Option<PathBuf>) -> Result<PathBuf> {
        explicit
            .clone()
            .or_else(|| self.cfg.as_ref()?.paths.bots.clone())
            .ok_or_else(|| Error::config("no bot registry: pass --bots or set paths.bots"))
    }

    fn hyperparams(&self, stage: &str) -> Hyperparams {
        let mut hp = self.cfg.as_ref().map(|c| c.train.hyperparams).unwrap_or_default();
        hp.seed = derive_seed(self.seed, stage);
        hp
    }

    fn test_fraction(&self, explicit: Option<f64>) -> f64 {
        explicit.or(self.cfg.as_ref().map(|c| c.train.test_fraction)).unwrap_or(0.2)
    }
}

fn emit(output: Option<&Path>, table: &Table) -> Result<()> {
    match output {
        Some(p) => table.save(p),
        None => table.write_to(std::io::stdout().lock()).map_err(|e| Error::io("<stdout>", e)),
    }
}

fn print_json(v: &impl serde::Serialize) {
    let mut out = std::io::stdout().lock();
    let _ = serde_json::to_writer_pretty(&mut out, v);
    let _ = writeln!(out);
}

fn feature_config(ctx: &Ctx, a: &FeatureArgs) -> Result<FeatureConfig> {
    let mut fc = ctx.cfg.as_ref().map(|c| c.features.clone()).unwrap_or_else(|| FeatureConfig::metadata(MetaFeature::ALL.to_vec()));
    if let Some(m) = a.mode {
        fc.mode = m;
    }
    if let Some(f) = &a.fields {
        fc.metadata_fields = parse_fields(f)?;
    }
    if a.provider.is_some() {
        fc.embedding_provider = a.provider;
    }
    if a.dim.is_some() {
        fc.embedding_dim = a.dim;
    }
    if a.standardize.is_some() {
        fc.standardize = a.standardize;
    }
    fc.validate()?;
    Ok(fc)
}

fn read_features(path: &Path) -> Result<Vec<LabeledExample>> {
    read_jsonl(path)
}

fn runtime() -> Result<tokio::runtime::Runtime> {
    tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(|e| Error::config(format!("runtime: {e}")))
}

fn execute(cli: Cli) -> Result<()> {
    let mut cfg = cli.config.as_deref().map(PipelineConfig::load).transpose()?;
    if let Some(c) = cfg.as_mut() {
        if let Some(s) = cli.seed {
            c.seed = s;
        }
        if cli.threads.is_some() {
            c.threads = cli.threads;
        }
    }
    let seed = cli.seed.or(cfg.as_ref().map(|c| c.seed)).unwrap_or(0);
    let workers = threads(cli.threads.or(cfg.as_ref().and_then(|c| c.threads)));
    let ctx = Ctx { cfg, seed, threads: workers };

    match cli.command {
        Command::Prep { corpus, min_tokens, output } => {
            let records = ctx.corpus(&corpus)?;
            let min = min_tokens.or(ctx.cfg.as_ref().map(|c| c.prep.min_tokens)).unwrap_or(wikiscan_core::textprep::MIN_TOKENS);
            let tokenized = ctx.tokenize(&records);
            let total = tokenized.len();
            let kept: Vec<_> = tokenized.into_iter().filter(|t| t.len() >= min.max(1)).collect();
            eprintln!("kept {} of {total} articles", kept.len());
            match output {
                Some(p) => write_jsonl(&p, &kept)?,
                None => {
                    let mut out = std::io::stdout().lock();
                    for t in &kept {
                        let _ = serde_json::to_writer(&mut out, t);
                        let _ = writeln!(out);
                    }
                }
            }
        }
        Command::Stats { corpus, lengths } => {
            let records = ctx.corpus(&corpus)?;
            let tokens = ctx.tokenize(&records);
            let sizes: Vec<ArticleSize> = tokens.iter().zip(&records).map(|(t, a)| ArticleSize::new(t, &a.metadata)).collect();
            print_json(&summarize_corpus(&sizes)?);
            if let Some(p) = lengths {
                reports::lengths(&length_distribution(&sizes)?).save(&p)?;
            }
        }
        Command::Lexdiv { corpus, threshold } => {
            let records = ctx.corpus(&corpus)?;
            print_json(&lexical_diversity(&ctx.tokenize(&records), threshold)?);
        }
        Command::Ngrams { corpus, n, k, n_max, output, top1 } => {
            let records = ctx.corpus(&corpus)?;
            let interned = InternedCorpus::new(&ctx.tokenize(&records));
            let prof = profile(&interned, &n, k, n_max)?;
            emit(output.as_deref(), &reports::ngrams(&prof))?;
            if let Some(p) = top1 {
                reports::top1(&prof.top1_series).save(&p)?;
            }
            match diagnose_decay(&prof.top1_series, DEFAULT_BAND, DEFAULT_DECAY_THRESHOLD) {
                Ok(d) => eprintln!("decay anomaly: {} (geometric mean {:?})", d.anomaly_flag, d.geometric_mean),
                Err(e) => eprintln!("decay diagnosis unavailable: {e}"),
            }
        }
        Command::Contrib { corpus, bots, top, output } => {
            let bots = ctx.bots(&bots)?;
            let registry = load_bot_registry(&bots)?;
            let records = ctx.corpus(&corpus)?;
            emit(output.as_deref(), &reports::creators(&rank_creators(&records, &registry, top)))?;
            reports::type_percentages(&creator_editor_percentages(&records, &registry)?)
                .write_to(std::io::stderr().lock())
                .map_err(|e| Error::io("<stderr>", e))?;
        }
        Command::Filter { corpus, bots, output, attrition } => {
            let registry = load_bot_registry(&ctx.bots(&bots)?)?;
            let records = ctx.corpus(&corpus)?;
            let rep = label_corpus(&records, &registry, &ctx.cfg.as_ref().map(|c| c.rules.clone()).unwrap_or_default())?;
            write_jsonl(&output, &rep.labeled)?;
            emit(attrition.as_deref(), &reports::attrition(&rep.attrition))?;
        }
        Command::Sample { labeled, per_class, output } => {
            let labeled: Vec<LabeledArticle> = read_jsonl(&labeled)?;
            let per_class = per_class.or(ctx.cfg.as_ref().map(|c| c.sample.per_class)).unwrap_or(10_000);
            let pool = sample_training_pool(&labeled, per_class, derive_seed(ctx.seed, "sample"))?;
            std::fs::write(&output, serde_json::to_string_pretty(&pool).expect("pool serializes") + "\n")
                .map_err(|e| Error::io(&output, e))?;
        }
        Command::Featurize { corpus, pool, features, output } => {
            let fc = feature_config(&ctx, &features)?;
            let pool: TrainingPool = serde_json::from_str(&std::fs::read_to_string(&pool).map_err(|e| Error::io(&pool, e))?)
                .map_err(|e| Error::Record { path: pool.clone(), line: e.line() as u64, message: e.to_string() })?;
            let records = ctx.corpus(&corpus)?;
            let tokens = ctx.tokenize(&records);
            let pos: std::collections::HashMap<u64, usize> = records.iter().enumerate().map(|(i, a)| (a.page_id, i)).collect();
            let cfg_paths = ctx.cfg.as_ref().map(|c| &c.paths);
            let wv = features.word_vectors.clone().or_else(|| cfg_paths?.word_vectors.clone());
            let pv = features.page_vectors.clone().or_else(|| cfg_paths?.page_vectors.clone());
            let embedder = match (fc.uses_embeddings(), fc.embedding_provider) {
                (true, Some(p)) => Some(load_embedder(p, fc.embedding_dim, wv.as_deref(), pv.as_deref())?),
                _ => None,
            };
            let examples: Vec<(u64, u8)> = pool.examples().collect();
            let missing: Vec<u64> = examples.iter().map(|e| e.0).filter(|id| !pos.contains_key(id)).collect();
            if !missing.is_empty() {
                return Err(wikiscan_core::Error::Unresolvable(missing).into());
            }
            let inputs: Vec<ArticleInput<'_, String>> = examples
                .iter()
                .map(|(id, _)| {
                    let i = pos[id];
                    ArticleInput { page_id: *id, tokens: tokens[i].tokens.as_slice(), metadata: &records[i].metadata }
                })
                .collect();
            let vectors = assemble(&inputs, &fc, embedder.as_ref())?;
            let out: Vec<LabeledExample> =
                vectors.into_iter().zip(&examples).map(|(features, &(_, label))| LabeledExample { features, label }).collect();
            write_jsonl(&output, &out)?;
        }
        Command::Train { features, model_type, test_fraction, standardize, output } => {
            let examples = read_features(&features)?;
            let mt = model_type.or(ctx.cfg.as_ref().map(|c| c.train.model_type)).unwrap_or(ModelType::Gbt);
            let mut fc = match &ctx.cfg {
                Some(c) => c.features.clone(),
                None => FeatureConfig::metadata(MetaFeature::ALL.to_vec()),
            };
            if standardize.is_some() {
                fc.standardize = standardize;
            }
            let labels: Vec<u8> = examples.iter().map(|e| e.label).collect();
            let (tr, _) = classify::stratified_split(&labels, ctx.test_fraction(test_fraction), derive_seed(ctx.seed, "split"))?;
            let train: Vec<LabeledExample> = tr.iter().map(|&i| examples[i].clone()).collect();
            let model = classify::train(mt, &train, &fc, &ctx.hyperparams("train"))?;
            std::fs::write(&output, serde_json::to_string_pretty(&model).expect("model serializes") + "\n")
                .map_err(|e| Error::io(&output, e))?;
        }
        Command::Evaluate { model, features, test_fraction, folds, output } => {
            let (model, _): (TrainedModel, _) = load_model(&model)?;
            let examples = read_features(&features)?;
            let labels: Vec<u8> = examples.iter().map(|e| e.label).collect();
            let (_, te) = classify::stratified_split(&labels, ctx.test_fraction(test_fraction), derive_seed(ctx.seed, "split"))?;
            let test: Vec<LabeledExample> = te.iter().map(|&i| examples[i].clone()).collect();
            let mut report = classify::evaluate(&model, &test)?;
            let k = folds.or(ctx.cfg.as_ref().map(|c| c.train.cv_folds)).unwrap_or(5);
            if k >= 2 {
                report.cv_fold_accuracies = classify::cross_validate(
                    model.model_type,
                    &examples,
                    &model.feature_config,
                    &ctx.hyperparams("train"),
                    k,
                    derive_seed(ctx.seed, "cv"),
                )?;
            }
            emit(output.as_deref(), &reports::evaluation(model.model_type.name(), &report))?;
        }
        Command::Ablate { features, models, test_fraction, output } => {
            let examples = read_features(&features)?;
            let models = if models.is_empty() { ModelType::ALL.to_vec() } else { models };
            let hp = ctx.hyperparams("train");
            let tf = ctx.test_fraction(test_fraction);
            let split_seed = derive_seed(ctx.seed, "split");
            let rows = par_map(&models, ctx.threads, |&m| {
                classify::run_ablation(m, &examples, &hp, None, tf, split_seed).map(|r| (m.name().to_string(), r))
            })
            .into_iter()
            .collect::<wikiscan_core::Result<Vec<_>>>()?;
            emit(output.as_deref(), &reports::ablation(&rows))?;
        }
        Command::Cluster { features, algorithms, standardize, output } => {
            let examples = read_features(&features)?;
            let vectors: Vec<_> = examples.into_iter().map(|e| e.features).collect();
            let algos = algorithms.iter().map(|a| Algorithm::from_name(a)).collect::<wikiscan_core::Result<Vec<_>>>()?;
            let seed = derive_seed(ctx.seed, "cluster");
            // Anything other than the five metadata columns is clustered whole.
            let ablate = vectors.iter().all(|v| v.values.len() == MetaFeature::ALL.len());
            let rows = par_map(&algos, ctx.threads, |a| {
                let r = if ablate {
                    run_cluster_ablation(&vectors, a, standardize, seed)
                } else {
                    let rows: Vec<Vec<f64>> = vectors.iter().map(|v| v.values.clone()).collect();
                    run_standardized(&rows, a, standardize, seed).map(|c| {
                        vec![ClusterAblationRow {
                            fields: "full".into(),
                            k_found: c.k_found,
                            silhouette_pct: c.silhouette_pct,
                            noise_fraction: c.noise_fraction,
                        }]
                    })
                };
                r.map(|r| (a.name().to_string(), r))
            })
            .into_iter()
            .collect::<wikiscan_core::Result<Vec<_>>>()?;
            emit(output.as_deref(), &reports::clusters(&rows))?;
        }
        Command::Scan { title } => {
            let scanner = Scanner::from_config(ctx.cfg()?)?;
            let verdict = runtime()?.block_on(scanner.scan(&title))?;
            print_json(&verdict);
        }
        Command::Search { query, limit } => {
            let scanner = Scanner::from_config(ctx.cfg()?)?;
            print_json(&scanner.search(&query, limit)?);
        }
        Command::Serve { host, port } => {
            let cfg = ctx.cfg()?;
            let scanner = Arc::new(Scanner::from_config(cfg)?);
            let host = host.unwrap_or_else(|| cfg.service.host.clone());
            let addr: SocketAddr = format!("{host}:{}", port.unwrap_or(cfg.service.port))
                .parse()
                .map_err(|e| Error::config(format!("listen address: {e}")))?;
            runtime()?.block_on(crate::server::serve(scanner, addr))?;
        }
        Command::Run { force } => {
            let report = run_pipeline(ctx.cfg()?, force)?;
            for (stage, status) in &report.stages {
                let s = if *status == StageStatus::Ran { "ran" } else { "skipped" };
                eprintln!("{stage:<10} {s}");
            }
            print_json(&report.evaluation);
        }
        Command::Fixture { output, articles, xtools } => {
            crate::fixture::write(&output, articles, seed, xtools)?;
            eprintln!("wrote {articles} articles to {}", output.display());
        }
    }
    Ok(())
}

/// Parses arguments, runs, and maps failures to exit codes.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run_args<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::config(e.to_string()))?;
    execute(cli)
}
