//! One PASS/FAIL line per headline criterion. Each check computes its own
//! expectation; none reuse library code for the expected side.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::panic::AssertUnwindSafe;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use rand::Rng;
use serde_json::{json, Value};
use wikiscan::config::PipelineConfig;
use wikiscan::fixture::{self, Kind};
use wikiscan::ingest::read_jsonl;
use wikiscan::pipeline::{hash_file, run_pipeline, StageStatus};
use wikiscan::scanner::Scanner;
use wikiscan_core::classify::{
    logistic_gradient, logistic_objective, roc_auc, run_ablation, stratified_kfold, Confusion, Hyperparams,
    LabeledExample, LinearModel, ModelType,
};
use wikiscan_core::cluster::{
    agglomerative, dbscan_labels, kmeans_pp_init, lloyd, run_cluster_ablation, run_standardized, silhouette, Algorithm,
    MAX_ITER,
};
use wikiscan_core::features::{assemble, ArticleInput, Embedder, FeatureConfig, ProviderKind};
use wikiscan_core::lexstats::{cttr, mtld, rttr, ttr, MTLD_THRESHOLD};
use wikiscan_core::ngrams::{count_ngrams, diagnose_decay, top1_decay, InternedCorpus, DEFAULT_BAND, DEFAULT_DECAY_THRESHOLD};
use wikiscan_core::rules::{label_corpus, Label, RuleConfig, TrainingPool};
use wikiscan_core::seed::rng;
use wikiscan_core::textprep::TokenizedArticle;
use wikiscan_core::{ArticleMetadata, ArticleRecord, BotRegistry, TopEditor};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration, what: &str) -> Result<(), String> {
    ensure(elapsed < limit, || format!("{what} took {elapsed:?}, limit {limit:?}"))
}

// ---------------------------------------------------------------- lexical

fn lexical_formulas() -> Check {
    let t = Instant::now();
    let close = |got: f64, want: f64| (got - want).abs() <= 0.01;
    let (n, v) = (1_154_058u64, 94_827u64);
    let row = (ttr(n, v).unwrap(), rttr(n, v).unwrap(), cttr(n, v).unwrap());
    ensure(close(row.0, 0.082) && close(row.1, 88.27) && close(row.2, 62.41), || format!("Moroccan row {row:?}"))?;
    let (n, v) = (264_777_392u64, 2_867_782u64);
    let row = (rttr(n, v).unwrap(), cttr(n, v).unwrap());
    ensure(close(row.0, 176.24) && close(row.1, 124.62), || format!("Arabic row {row:?}"))?;
    within(t.elapsed(), Duration::from_millis(100), "formulas")?;
    Ok(format!("ARY TTR/RTTR/CTTR within 0.01, AR RTTR {:.2} CTTR {:.2}", row.0, row.1))
}

/// Forward pass over a window of tokens, recounting types at every step.
fn mtld_direction(tokens: &[u8]) -> Option<f64> {
    let mut factors = 0.0;
    let mut start = 0;
    for end in 1..=tokens.len() {
        let window = &tokens[start..end];
        let types = window.iter().collect::<HashSet<_>>().len() as f64;
        if types / (window.len() as f64) < MTLD_THRESHOLD {
            factors += 1.0;
            start = end;
        }
    }
    let rest = &tokens[start..];
    if !rest.is_empty() {
        let ratio = rest.iter().collect::<HashSet<_>>().len() as f64 / rest.len() as f64;
        factors += (1.0 - ratio) / (1.0 - MTLD_THRESHOLD);
    }
    (factors > 0.0).then(|| tokens.len() as f64 / factors)
}

fn mtld_oracle() -> Check {
    let t = Instant::now();
    let mut r = rng(2024);
    for case in 0..50 {
        let len = r.random_range(10..=200);
        let toks: Vec<u8> = (0..len).map(|_| r.random_range(0..5)).collect();
        let rev: Vec<u8> = toks.iter().rev().copied().collect();
        let want = match (mtld_direction(&toks), mtld_direction(&rev)) {
            (Some(f), Some(b)) => Some((f + b) / 2.0),
            _ => None,
        };
        let words: Vec<String> = toks.iter().map(|x| format!("w{x}")).collect();
        let got = mtld(&words, MTLD_THRESHOLD).map_err(|e| e.to_string())?.value;
        ensure(got == want, || format!("case {case}: {got:?} vs {want:?}"))?;
    }
    let periodic = mtld(&["a"; 6], MTLD_THRESHOLD).unwrap().value;
    ensure(periodic == Some(2.0), || format!("periodic sequence gave {periodic:?}"))?;
    within(t.elapsed(), Duration::from_secs(1), "MTLD")?;
    Ok("50/50 sequences equal the reference, periodic = 2.0".into())
}

// ----------------------------------------------------------------- ngrams

fn brute_counts(arts: &[Vec<String>], n: usize) -> HashMap<Vec<String>, u64> {
    let mut c = HashMap::new();
    for a in arts {
        for w in a.windows(n) {
            *c.entry(w.to_vec()).or_insert(0) += 1;
        }
    }
    c
}

fn ngram_profiler() -> Check {
    let t = Instant::now();
    let mut r = rng(77);
    for case in 0..50 {
        let vocab = r.random_range(3..40);
        let mut budget = r.random_range(50..10_000usize);
        let mut arts = Vec::new();
        while budget > 0 {
            let len = r.random_range(0..=budget.min(300));
            budget -= len.max(1).min(budget);
            arts.push((0..len).map(|_| format!("w{}", r.random_range(0..vocab))).collect::<Vec<String>>());
        }
        let corpus = InternedCorpus::from_token_lists(&arts);
        for n in [1usize, 2, 3, 5] {
            let mut want: Vec<(Vec<String>, u64)> = brute_counts(&arts, n).into_iter().collect();
            want.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            want.truncate(10);
            let got: Vec<(Vec<String>, u64)> = count_ngrams(&corpus, n, 10)
                .map_err(|e| e.to_string())?
                .into_iter()
                .map(|g| (g.text().split(' ').map(String::from).collect(), g.count))
                .collect();
            ensure(got == want, || format!("corpus {case}, n={n}: top-k differs"))?;
        }
        let series = top1_decay(&corpus, 12).map_err(|e| e.to_string())?;
        for p in &series {
            let want = brute_counts(&arts, p.n).values().copied().max();
            ensure(p.count == want, || format!("corpus {case}: top1 at n={} is {:?}, want {want:?}", p.n, p.count))?;
        }
        let counts: Vec<u64> = series.iter().map(|p| p.count.unwrap_or(0)).collect();
        ensure(counts.windows(2).all(|w| w[1] <= w[0]), || format!("corpus {case}: top-1 series rises"))?;
    }
    let template: Vec<String> = (0..60).map(|i| format!("tpl{i}")).collect();
    let injected = InternedCorpus::from_token_lists(&vec![template; 100]);
    let d = diagnose_decay(&top1_decay(&injected, 60).unwrap(), DEFAULT_BAND, DEFAULT_DECAY_THRESHOLD).unwrap();
    ensure(d.anomaly_flag, || "template corpus not flagged".into())?;
    let random: Vec<Vec<String>> =
        (0..100).map(|_| (0..100).map(|_| format!("w{}", r.random_range(0..1000))).collect()).collect();
    let d = diagnose_decay(&top1_decay(&InternedCorpus::from_token_lists(&random), 20).unwrap(), DEFAULT_BAND, DEFAULT_DECAY_THRESHOLD)
        .unwrap();
    ensure(!d.anomaly_flag, || "random corpus flagged".into())?;
    within(t.elapsed(), Duration::from_secs(30), "n-gram checks")?;
    Ok("50 corpora equal brute force, series monotone, template flagged, random not".into())
}

// ------------------------------------------------------------------ rules

fn d(y: i32, m: u32, day: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, day).unwrap()
}

/// Direct predicate evaluation: label plus first failing rule per chain.
fn predicates(m: &ArticleMetadata, bots: &BTreeSet<&str>, cfg: &RuleConfig) -> (Label, Option<usize>, Option<usize>) {
    let editors: BTreeSet<&str> = m.top_editors.iter().map(|e| e.username.as_str()).collect();
    let bot_share = editors.iter().filter(|u| bots.contains(*u)).count() as f64 / editors.len() as f64;
    let age = (cfg.snapshot_date - m.creation_date).num_days();
    let before = [
        m.creation_date < cfg.before_cutoff,
        m.total_edits > cfg.before_min_edits,
        m.total_editors > cfg.before_min_editors,
        1.0 - bot_share >= cfg.share_threshold,
    ];
    let after = [
        m.creation_date >= cfg.before_cutoff && m.creation_date < cfg.after_end && age >= cfg.young_age_days,
        m.total_edits < cfg.after_max_edits,
        m.total_editors < cfg.after_max_editors,
        bot_share >= cfg.share_threshold,
        cfg.flagged_creators.contains(&m.creator_name),
    ];
    let bf = before.iter().position(|ok| !ok);
    let af = after.iter().position(|ok| !ok);
    let label = match (bf, af) {
        (None, _) => Label::HumanGenerated,
        (_, None) => Label::TemplateTranslated,
        _ => Label::Uncategorized,
    };
    (label, bf, af)
}

fn article(edits: u64, editors: &[&str], creator: &str, created: NaiveDate) -> ArticleRecord {
    ArticleRecord {
        page_id: 1,
        title: "t".into(),
        text: String::new(),
        metadata: ArticleMetadata {
            total_edits: edits,
            total_editors: editors.len() as u64,
            top_editors: editors.iter().map(|u| TopEditor::new(*u, 1)).collect(),
            creator_name: creator.into(),
            creation_date: created,
            ..Default::default()
        },
    }
}

fn rule_engine() -> Check {
    let t = Instant::now();
    let fx = fixture::generate(2000, 7);
    let registry = BotRegistry::new("arz", fixture::BOTS);
    let bots: BTreeSet<&str> = fixture::BOTS.into_iter().collect();
    let cfg = RuleConfig::default();
    let rep = label_corpus(&fx.articles, &registry, &cfg).map_err(|e| e.to_string())?;
    let (mut before, mut after, mut labels) = ([0u64; 4], [0u64; 5], [0u64; 3]);
    for ((a, l), kind) in fx.articles.iter().zip(&rep.labeled).zip(&fx.kinds) {
        let (label, bf, af) = predicates(&a.metadata, &bots, &cfg);
        ensure(l.label == label, || format!("page {}: {:?} vs {label:?}", a.page_id, l.label))?;
        // The generator's intent agrees with the predicates.
        let intended = match kind {
            Kind::Human => Label::HumanGenerated,
            Kind::Template | Kind::Stub => Label::TemplateTranslated,
            _ => Label::Uncategorized,
        };
        ensure(label == intended, || format!("page {} ({kind:?}) labeled {label:?}", a.page_id))?;
        let expected_after = match kind {
            Kind::FiveEdits => Some(1),
            Kind::TooYoung => Some(0),
            Kind::UnflaggedCreator => Some(4),
            _ => af,
        };
        ensure(af == expected_after, || format!("page {} ({kind:?}) fails after at {af:?}", a.page_id))?;
        if *kind == Kind::BotHeavy {
            ensure(bf == Some(3), || format!("page {} bot-heavy fails before at {bf:?}", a.page_id))?;
        }
        if *kind == Kind::CutoffDate {
            ensure(bf == Some(0), || format!("page {} cutoff-date fails before at {bf:?}", a.page_id))?;
        }
        bf.map(|i| before[i] += 1);
        af.map(|i| after[i] += 1);
        labels[label as usize] += 1;
    }
    ensure(rep.attrition.before_filtered == before, || format!("before attrition {:?} vs {before:?}", rep.attrition.before_filtered))?;
    ensure(rep.attrition.after_filtered == after, || format!("after attrition {:?} vs {after:?}", rep.attrition.after_filtered))?;
    let got = [rep.attrition.human_generated, rep.attrition.template_translated, rep.attrition.uncategorized];
    ensure(got == labels, || format!("label counts {got:?} vs {labels:?}"))?;

    // Boundaries: (article, config, expected label, expected first after failure).
    let young = RuleConfig { snapshot_date: d(2023, 11, 30), ..RuleConfig::default() };
    let flagged = "HitomiAkane";
    let cases: Vec<(&str, ArticleRecord, &RuleConfig, Label)> = vec![
        ("after chain, edits = 5", article(5, &["JarBot"], flagged, d(2021, 1, 1)), &cfg, Label::Uncategorized),
        ("after chain, edits = 4", article(4, &["JarBot"], flagged, d(2021, 1, 1)), &cfg, Label::TemplateTranslated),
        ("before chain, edits = 5", article(5, &["A", "B", "C", "D"], "A", d(2015, 1, 1)), &cfg, Label::Uncategorized),
        ("before chain, edits = 6", article(6, &["A", "B", "C", "D"], "A", d(2015, 1, 1)), &cfg, Label::HumanGenerated),
        ("created 2019-12-01, busy", article(40, &["A", "B", "C", "D"], "A", d(2019, 12, 1)), &cfg, Label::Uncategorized),
        ("created 2019-12-01, quiet", article(2, &["JarBot"], flagged, d(2019, 12, 1)), &cfg, Label::TemplateTranslated),
        ("created 2019-11-30, busy", article(40, &["A", "B", "C", "D"], "A", d(2019, 11, 30)), &cfg, Label::HumanGenerated),
        ("after chain, bot share 0.5", article(2, &["JarBot", "Sama"], flagged, d(2021, 1, 1)), &cfg, Label::TemplateTranslated),
        ("before chain, human share 0.5", article(40, &["JarBot", "ZkBot", "A", "B"], "A", d(2015, 1, 1)), &cfg, Label::HumanGenerated),
        ("age 29 days", article(2, &["JarBot"], flagged, d(2023, 11, 1)), &young, Label::Uncategorized),
        ("age 30 days", article(2, &["JarBot"], flagged, d(2023, 10, 31)), &young, Label::TemplateTranslated),
    ];
    for (name, a, c, want) in &cases {
        let got = label_corpus(std::slice::from_ref(a), &registry, c).map_err(|e| e.to_string())?.labeled[0].label;
        ensure(got == *want, || format!("{name}: {got:?}, want {want:?}"))?;
        ensure(predicates(&a.metadata, &bots, c).0 == *want, || format!("{name}: predicate table disagrees"))?;
    }
    within(t.elapsed(), Duration::from_secs(5), "rule engine")?;
    Ok(format!("2000 articles and attrition {before:?}/{after:?} exact, {} boundary cases", cases.len()))
}

// ---------------------------------------------------- fixture pool helpers

struct Pool {
    _dir: tempfile::TempDir,
    metadata: Vec<LabeledExample>,
    hashed: Vec<LabeledExample>,
}

/// Rule-labeled fixture pool of 1,000 examples per class, with all five
/// metadata columns and with hashed 300-d embeddings.
fn pool() -> Result<Pool, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    fixture::write(dir.path(), 2500, 11, 0).map_err(|e| e.to_string())?;
    let mut cfg = PipelineConfig::load(&dir.path().join("pipeline.toml")).map_err(|e| e.to_string())?;
    cfg.sample.per_class = 1000;
    run_pipeline(&cfg, false).map_err(|e| e.to_string())?;
    let metadata: Vec<LabeledExample> = read_jsonl(&cfg.paths.out_dir.join("features.jsonl")).map_err(|e| e.to_string())?;
    let pool: TrainingPool =
        serde_json::from_str(&std::fs::read_to_string(cfg.paths.out_dir.join("pool.json")).unwrap()).map_err(|e| e.to_string())?;
    let tokens: HashMap<u64, TokenizedArticle> = read_jsonl::<TokenizedArticle>(&cfg.paths.out_dir.join("tokens.jsonl"))
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|t| (t.page_id, t))
        .collect();
    let articles: HashMap<u64, ArticleRecord> = read_jsonl::<ArticleRecord>(&cfg.paths.out_dir.join("articles.jsonl"))
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|a| (a.page_id, a))
        .collect();
    let examples: Vec<(u64, u8)> = pool.examples().collect();
    let inputs: Vec<ArticleInput<'_, String>> = examples
        .iter()
        .map(|(id, _)| ArticleInput { page_id: *id, tokens: tokens[id].tokens.as_slice(), metadata: &articles[id].metadata })
        .collect();
    let fc = FeatureConfig::embeddings(ProviderKind::HashedTest);
    let vectors = assemble(&inputs, &fc, Some(&Embedder::Hashed { dim: 300 })).map_err(|e| e.to_string())?;
    let hashed = vectors.into_iter().zip(&examples).map(|(features, &(_, label))| LabeledExample { features, label }).collect();
    Ok(Pool { _dir: dir, metadata, hashed })
}

fn classifier_separability(pool: &Pool) -> Check {
    ensure(pool.metadata.len() == 2000, || format!("pool has {} examples", pool.metadata.len()))?;
    let t = Instant::now();
    let hp = Hyperparams::default();
    let mut cells = Vec::new();
    for m in ModelType::ALL {
        let rows = run_ablation(m, &pool.metadata, &hp, None, 0.2, 5).map_err(|e| e.to_string())?;
        let a = rows.iter().find(|r| r.fields == "A").ok_or("no A column")?.accuracy;
        let floor = if m == ModelType::LinearSvm { 0.99 } else { 1.0 };
        ensure(a >= floor, || format!("{m} on A: {a}"))?;
        cells.push(format!("{m} {a:.3}"));
    }
    within(t.elapsed(), Duration::from_secs(120), "ablation grid")?;
    Ok(format!("feature A: {} (grid {:.1?})", cells.join(", "), t.elapsed()))
}

// ---------------------------------------------------------------- metrics

fn metric_oracles() -> Check {
    let mut r = rng(31);
    for case in 0..100 {
        let n = r.random_range(2..=200);
        let mut labels: Vec<u8> = (0..n).map(|_| r.random_range(0..2)).collect();
        labels[0] = 0;
        labels[1] = 1;
        let scores: Vec<f64> = (0..n).map(|_| f64::from(r.random_range(0..25u8)) / 25.0).collect();
        let (mut twice, mut pairs) = (0u64, 0u64);
        for i in 0..n {
            for j in 0..n {
                if labels[i] == 1 && labels[j] == 0 {
                    pairs += 1;
                    twice += if scores[i] > scores[j] { 2 } else if scores[i] == scores[j] { 1 } else { 0 };
                }
            }
        }
        let want = twice as f64 / (2 * pairs) as f64;
        let got = roc_auc(&scores, &labels).map_err(|e| e.to_string())?;
        ensure(got == want, || format!("AUC case {case}: {got} vs {want}"))?;
    }
    for case in 0..100 {
        let n = r.random_range(10..400);
        let mut labels: Vec<u8> = (0..n).map(|_| u8::from(r.random_bool(0.35))).collect();
        labels[0] = 0;
        labels[1] = 1;
        let folds = stratified_kfold(&labels, 5, r.random()).map_err(|e| e.to_string())?;
        let pos = labels.iter().filter(|&&y| y == 1).count() as f64;
        for f in &folds {
            let fp = f.iter().filter(|&&i| labels[i] == 1).count() as f64;
            let expect = pos * f.len() as f64 / n as f64;
            ensure((fp - expect).abs() <= 1.0, || format!("fold case {case}: {fp} positives vs {expect:.2}"))?;
        }
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        ensure(all == (0..n).collect::<Vec<_>>(), || format!("fold case {case}: not a partition"))?;
    }
    for _ in 0..100 {
        let n = r.random_range(1..300);
        let actual: Vec<u8> = (0..n).map(|_| r.random_range(0..2)).collect();
        let predicted: Vec<u8> = (0..n).map(|_| r.random_range(0..2)).collect();
        let c = Confusion::from_predictions(&actual, &predicted);
        let hits = actual.iter().zip(&predicted).filter(|(a, p)| a == p).count();
        ensure(c.total() == n as u64, || "confusion total".into())?;
        ensure(c.accuracy() == hits as f64 / n as f64, || "accuracy identity".into())?;
        ensure(c.matrix[0][0] + c.matrix[1][1] == hits as u64, || "diagonal".into())?;
    }
    Ok("100 AUC sets exact, 100 fold splits within +-1, 100 confusion identities".into())
}

fn gradient_check() -> Check {
    let mut r = rng(8);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = r.random_range(2..=50);
        let dim = r.random_range(1..=10);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| r.random_range(-2.0..2.0)).collect()).collect();
        let labels: Vec<u8> = (0..n).map(|_| r.random_range(0..2)).collect();
        let model =
            LinearModel { weights: (0..dim).map(|_| r.random_range(-1.0..1.0)).collect(), bias: r.random_range(-1.0..1.0) };
        let lambda = 0.1;
        let (gw, gb) = logistic_gradient(&model, &rows, &labels, lambda);
        let h = 1e-5;
        for j in 0..=dim {
            let (mut p, mut m) = (model.clone(), model.clone());
            if j < dim {
                p.weights[j] += h;
                m.weights[j] -= h;
            } else {
                p.bias += h;
                m.bias -= h;
            }
            let numeric = (logistic_objective(&p, &rows, &labels, lambda) - logistic_objective(&m, &rows, &labels, lambda)) / (2.0 * h);
            let analytic = if j < dim { gw[j] } else { gb };
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
            worst = worst.max(rel);
        }
    }
    ensure(worst < 1e-6, || format!("worst relative error {worst:e}"))?;
    Ok(format!("20 instances, worst relative error {worst:.1e}"))
}

// ------------------------------------------------------------- clustering

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn lloyd_oracle(x: &[Vec<f64>], mut centers: Vec<Vec<f64>>) -> Vec<usize> {
    let mut prev: Option<Vec<usize>> = None;
    for _ in 0..MAX_ITER {
        let assign: Vec<usize> = x
            .iter()
            .map(|p| {
                let mut best = 0;
                for c in 1..centers.len() {
                    if sq(p, &centers[c]) < sq(p, &centers[best]) {
                        best = c;
                    }
                }
                best
            })
            .collect();
        if prev.as_ref() == Some(&assign) {
            break;
        }
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = x.iter().zip(&assign).filter(|(_, &a)| a == c).map(|(p, _)| p).collect();
            if !members.is_empty() {
                for k in 0..center.len() {
                    center[k] = members.iter().map(|m| m[k]).sum::<f64>() / members.len() as f64;
                }
            }
        }
        prev = Some(assign);
    }
    prev.unwrap()
}

/// Greedy merging by Ward cost on explicit cluster member lists.
fn ward_oracle(x: &[Vec<f64>], k: usize) -> Vec<usize> {
    let mut clusters: Vec<Vec<usize>> = (0..x.len()).map(|i| vec![i]).collect();
    let centroid = |c: &[usize]| -> Vec<f64> {
        (0..x[0].len()).map(|k| c.iter().map(|&i| x[i][k]).sum::<f64>() / c.len() as f64).collect()
    };
    while clusters.len() > k {
        let mut best = (f64::INFINITY, 0, 0);
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let (na, nb) = (clusters[a].len() as f64, clusters[b].len() as f64);
                let cost = na * nb / (na + nb) * sq(&centroid(&clusters[a]), &centroid(&clusters[b]));
                if cost < best.0 {
                    best = (cost, a, b);
                }
            }
        }
        let merged = clusters.remove(best.2);
        clusters[best.1].extend(merged);
    }
    let mut label = vec![0; x.len()];
    for (c, members) in clusters.iter().enumerate() {
        for &i in members {
            label[i] = c;
        }
    }
    label
}

/// Core points linked within eps form clusters numbered by their lowest
/// core index; a border point joins the lowest-numbered adjacent cluster.
fn dbscan_oracle(x: &[Vec<f64>], eps: f64, min_pts: usize) -> Vec<i64> {
    let n = x.len();
    let near = |i: usize, j: usize| sq(&x[i], &x[j]) <= eps * eps;
    let core: Vec<bool> = (0..n).map(|i| (0..n).filter(|&j| near(i, j)).count() >= min_pts).collect();
    let mut comp = vec![usize::MAX; n];
    for s in 0..n {
        if core[s] && comp[s] == usize::MAX {
            let mut stack = vec![s];
            comp[s] = s;
            while let Some(p) = stack.pop() {
                for q in 0..n {
                    if core[q] && comp[q] == usize::MAX && near(p, q) {
                        comp[q] = s;
                        stack.push(q);
                    }
                }
            }
        }
    }
    let roots: Vec<usize> = (0..n).filter(|&i| core[i] && comp[i] == i).collect();
    let id = |root: usize| roots.iter().position(|&r| r == root).unwrap() as i64;
    (0..n)
        .map(|i| {
            if core[i] {
                id(comp[i])
            } else {
                (0..n).filter(|&j| core[j] && near(i, j)).map(|j| id(comp[j])).min().unwrap_or(-1)
            }
        })
        .collect()
}

fn silhouette_oracle(x: &[Vec<f64>], labels: &[i64]) -> f64 {
    let kept: Vec<usize> = (0..x.len()).filter(|&i| labels[i] >= 0).collect();
    let ids: BTreeSet<i64> = kept.iter().map(|&i| labels[i]).collect();
    let mut total = 0.0;
    for &i in &kept {
        let mean_to = |c: i64| {
            let others: Vec<usize> = kept.iter().copied().filter(|&j| labels[j] == c && j != i).collect();
            (others.iter().map(|&j| sq(&x[i], &x[j]).sqrt()).sum::<f64>() / others.len() as f64, others.len())
        };
        let (a, own) = mean_to(labels[i]);
        if own == 0 {
            continue;
        }
        let b = ids.iter().filter(|&&c| c != labels[i]).map(|&c| mean_to(c).0).fold(f64::INFINITY, f64::min);
        total += (b - a) / a.max(b);
    }
    total / kept.len() as f64
}

fn canon(labels: &[usize]) -> Vec<usize> {
    let mut map = BTreeMap::new();
    labels.iter().map(|l| { let next = map.len(); *map.entry(*l).or_insert(next) }).collect()
}

fn clustering(pool: &Pool) -> Check {
    let t = Instant::now();
    let four = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![10.0, 0.0], vec![10.0, 1.0]];
    let s4 = silhouette(&four, &[0, 0, 1, 1]).map_err(|e| e.to_string())? * 100.0;
    ensure((s4 - 90.02).abs() <= 0.01, || format!("4-point silhouette {s4}"))?;

    let mut r = rng(64);
    for case in 0..20 {
        let n = r.random_range(10..=100);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let off = [0.0, 6.0, 12.0][i % 3];
                vec![off + r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)]
            })
            .collect();
        let init = kmeans_pp_init(&x, 3, &mut rng(case)).map_err(|e| e.to_string())?;
        let got = lloyd(&x, init.clone(), MAX_ITER).assignments;
        ensure(got == lloyd_oracle(&x, init), || format!("k-means case {case} differs"))?;
        let ward = agglomerative(&x, 3).map_err(|e| e.to_string())?;
        let ward_labels: Vec<usize> = ward.assignments.iter().map(|&a| a as usize).collect();
        ensure(canon(&ward_labels) == canon(&ward_oracle(&x, 3)), || format!("Ward case {case} differs"))?;
        let eps = r.random_range(0.4..1.5);
        let db = dbscan_labels(&x, eps, 4);
        ensure(db == dbscan_oracle(&x, eps, 4), || format!("DBSCAN case {case} differs"))?;
        for labels in [ward.assignments.clone(), db] {
            if labels.iter().filter(|&&l| l >= 0).collect::<BTreeSet<_>>().len() >= 2 {
                let (got, want) = (silhouette(&x, &labels).unwrap(), silhouette_oracle(&x, &labels));
                ensure((got - want).abs() < 1e-12, || format!("silhouette case {case}: {got} vs {want}"))?;
            }
        }
    }

    let vectors: Vec<_> = pool.metadata.iter().map(|e| e.features.clone()).collect();
    let mut worst_meta = f64::INFINITY;
    for algo in [Algorithm::kmeans(), Algorithm::agglomerative()] {
        for row in run_cluster_ablation(&vectors, &algo, true, 3).map_err(|e| e.to_string())? {
            let s = row.silhouette_pct.ok_or("undefined silhouette")?;
            ensure(s >= 90.0, || format!("{} on {}: {s:.2}", algo.name(), row.fields))?;
            worst_meta = worst_meta.min(s);
        }
    }
    let emb: Vec<Vec<f64>> = pool.hashed.iter().map(|e| e.features.values.clone()).collect();
    let mut worst_emb = f64::NEG_INFINITY;
    for algo in [Algorithm::kmeans(), Algorithm::agglomerative()] {
        let s = run_standardized(&emb, &algo, true, 3).map_err(|e| e.to_string())?.silhouette_pct.ok_or("undefined")?;
        ensure(s < 20.0, || format!("{} on hashed embeddings: {s:.2}", algo.name()))?;
        worst_emb = worst_emb.max(s);
    }
    within(t.elapsed(), Duration::from_secs(120), "clustering")?;
    Ok(format!(
        "metadata min {worst_meta:.2} >= 90, hashed embeddings max {worst_emb:.2} < 20, 4-point {s4:.2}, 20 oracle instances exact"
    ))
}

// --------------------------------------------------------------- pipeline

fn copy_bundled(dst: &Path) {
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    for name in ["corpus.jsonl", "bots.txt", "pipeline.toml", "kinds.json"] {
        std::fs::copy(src.join(name), dst.join(name)).unwrap();
    }
    std::fs::create_dir_all(dst.join("xtools")).unwrap();
    for e in std::fs::read_dir(src.join("xtools")).unwrap() {
        let p = e.unwrap().path();
        std::fs::copy(&p, dst.join("xtools").join(p.file_name().unwrap())).unwrap();
    }
}

fn hashes(dir: &Path) -> BTreeMap<String, String> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), hash_file(&p).unwrap()))
        .collect()
}

fn end_to_end() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    copy_bundled(dir.path());
    let cfg = PipelineConfig::load(&dir.path().join("pipeline.toml")).map_err(|e| e.to_string())?;
    let t = Instant::now();
    let first = run_pipeline(&cfg, false).map_err(|e| e.to_string())?;
    let took = t.elapsed();
    within(took, Duration::from_secs(300), "pipeline")?;
    ensure(first.evaluation.accuracy == 1.0, || format!("gbt accuracy {}", first.evaluation.accuracy))?;
    let before = hashes(&cfg.paths.out_dir);
    let second = run_pipeline(&cfg, false).map_err(|e| e.to_string())?;
    ensure(second.stages.iter().all(|s| s.1 == StageStatus::Skipped), || "rerun did not skip".into())?;
    ensure(hashes(&cfg.paths.out_dir) == before, || "rerun changed artifacts".into())?;
    run_pipeline(&cfg, true).map_err(|e| e.to_string())?;
    ensure(hashes(&cfg.paths.out_dir) == before, || "forced rerun changed artifacts".into())?;
    Ok(format!("{} stages in {took:.2?}, gbt accuracy 1.0, {} artifacts byte-identical on rerun", first.stages.len(), before.len()))
}

// ---------------------------------------------------------------- service

async fn service_equivalence() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    copy_bundled(dir.path());
    let cfg_path = dir.path().join("pipeline.toml");
    let cfg = PipelineConfig::load(&cfg_path).map_err(|e| e.to_string())?;
    run_pipeline(&cfg, false).map_err(|e| e.to_string())?;
    let scanner = Arc::new(Scanner::from_config(&cfg).map_err(|e| e.to_string())?);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.map_err(|e| e.to_string())?;
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, wikiscan::server::router(scanner)).await.unwrap() });
    let http = reqwest::Client::new();
    let base = format!("http://{addr}");

    let health = http.get(format!("{base}/health")).send().await.map_err(|e| e.to_string())?;
    ensure(health.status().is_success(), || format!("/health {}", health.status()))?;

    let mut titles: Vec<String> = std::fs::read_dir(dir.path().join("xtools"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().trim_end_matches(".json").to_string())
        .map(|f| percent_encoding::percent_decode_str(&f).decode_utf8_lossy().replace('_', " "))
        .collect();
    titles.sort();
    titles.truncate(20);
    ensure(titles.len() == 20, || format!("only {} fixture titles", titles.len()))?;
    let mut seen_labels = BTreeSet::new();
    for title in &titles {
        let hits: Value = http.get(format!("{base}/search?q={}", percent_encoding::utf8_percent_encode(title, percent_encoding::NON_ALPHANUMERIC))).send().await.unwrap().json().await.unwrap();
        ensure(hits[0]["title"] == title.as_str(), || format!("search for {title} ranked {}", hits[0]["title"]))?;
        let seg = percent_encoding::utf8_percent_encode(title, percent_encoding::NON_ALPHANUMERIC);
        let meta = http.get(format!("{base}/article/{seg}/metadata")).send().await.unwrap();
        ensure(meta.status().is_success(), || format!("metadata for {title}: {}", meta.status()))?;
        let online: Value = http.post(format!("{base}/scan")).json(&json!({ "title": title })).send().await.unwrap().json().await.unwrap();
        let out = std::process::Command::new(env!("CARGO_BIN_EXE_wikiscan"))
            .args(["--config", cfg_path.to_str().unwrap(), "scan", title])
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.success(), || format!("CLI scan {title}: {}", String::from_utf8_lossy(&out.stderr)))?;
        let offline: Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
        ensure(online == offline, || format!("{title}: HTTP {online} vs CLI {offline}"))?;
        seen_labels.insert(online["label"].as_str().unwrap_or_default().to_string());
    }
    Ok(format!("20 titles field-identical over HTTP and CLI, labels seen {seen_labels:?}"))
}

// ------------------------------------------------------------------ driver

fn guarded(f: impl FnOnce() -> Check) -> Check {
    match std::panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(r) => r,
        Err(p) => Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into())),
    }
}

#[test]
fn acceptance() {
    let pool = pool();
    let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(4).enable_all().build().unwrap();
    let criteria: Vec<(&str, Box<dyn FnOnce() -> Check + '_>)> = vec![
        ("lexical formulas vs published table", Box::new(lexical_formulas)),
        ("MTLD oracle equivalence", Box::new(mtld_oracle)),
        ("n-gram profiler", Box::new(ngram_profiler)),
        ("rule engine", Box::new(rule_engine)),
        ("classifier separability on feature A", Box::new(|| classifier_separability(pool.as_ref().map_err(Clone::clone)?))),
        ("metric oracles", Box::new(metric_oracles)),
        ("logistic gradient check", Box::new(gradient_check)),
        ("clustering", Box::new(|| clustering(pool.as_ref().map_err(Clone::clone)?))),
        ("end-to-end pipeline", Box::new(end_to_end)),
        ("service equivalence", Box::new(|| rt.block_on(service_equivalence()))),
    ];
    let mut failed = Vec::new();
    for (name, f) in criteria {
        let t = Instant::now();
        let outcome = guarded(f);
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d.clone()),
            Err(e) => ("FAIL", e.clone()),
        };
        println!("{tag}  {name}: {detail} [{:.2?}]", t.elapsed());
        if outcome.is_err() {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
