//! CSV tables. Writers take any `io::Write` so the CLI can print to stdout.

use std::io::Write;
use std::path::Path;

use wikiscan_core::classify::{AblationRow, EvalReport};
use wikiscan_core::cluster::ClusterAblationRow;
use wikiscan_core::contrib::{CreatorRank, TypePercentages};
use wikiscan_core::lexstats::LengthDistribution;
use wikiscan_core::ngrams::{NGramProfile, Top1Point};
use wikiscan_core::rules::{Attrition, Chain, RuleId};

use crate::error::{Error, Result};

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push<S: ToString>(&mut self, row: impl IntoIterator<Item = S>) {
        self.rows.push(row.into_iter().map(|c| c.to_string()).collect());
    }

    pub fn write_to(&self, w: impl Write) -> std::io::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for r in &self.rows {
            out.write_record(r)?;
        }
        out.flush()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(std::io::BufWriter::new(f)).map_err(|e| Error::io(path, e))
    }

    pub fn to_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn lengths(dist: &LengthDistribution) -> Table {
    let mut t = Table::new(["page_id", "tokens", "chars"]);
    for r in &dist.rows {
        t.push([r.page_id, r.tokens, r.chars]);
    }
    t
}

pub fn ngrams(profile: &NGramProfile) -> Table {
    let mut t = Table::new(["n", "rank", "gram", "count", "log10"]);
    for (n, grams) in profile.n_values.iter().zip(&profile.top_k) {
        for (rank, g) in grams.iter().enumerate() {
            t.push([n.to_string(), (rank + 1).to_string(), g.text(), g.count.to_string(), (g.count as f64).log10().to_string()]);
        }
    }
    t
}

pub fn top1(series: &[Top1Point]) -> Table {
    let mut t = Table::new(["n", "count", "log10"]);
    for p in series {
        t.push([p.n.to_string(), opt(p.count), opt(p.log10)]);
    }
    t
}

pub fn creators(ranks: &[CreatorRank]) -> Table {
    let mut t = Table::new(["rank", "username", "created_count", "percentage", "type"]);
    for (i, r) in ranks.iter().enumerate() {
        let kind = serde_json::to_value(r.creator_type).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        t.push([(i + 1).to_string(), r.username.clone(), r.created_count.to_string(), r.percentage.to_string(), kind]);
    }
    t
}

pub fn type_percentages(p: &TypePercentages) -> Table {
    let mut t = Table::new(["role", "bot_pct", "human_pct", "articles"]);
    t.push(["creators".to_string(), p.creators_bot.to_string(), p.creators_human.to_string(), p.articles.to_string()]);
    t.push(["editors".to_string(), p.editors_bot.to_string(), p.editors_human.to_string(), p.articles.to_string()]);
    t
}

/// One row per rule with the articles it removed and the survivors after
/// it, then one row per label.
pub fn attrition(a: &Attrition) -> Table {
    let mut t = Table::new(["chain", "rule", "description", "filtered", "remaining"]);
    for chain in [Chain::Before, Chain::After] {
        let filtered: &[u64] = match chain {
            Chain::Before => &a.before_filtered,
            Chain::After => &a.after_filtered,
        };
        for (i, (f, left)) in filtered.iter().zip(a.survivors(chain)).enumerate() {
            let id = RuleId { chain, index: i as u8 + 1 };
            t.push([chain.name().to_string(), id.to_string(), id.description().to_string(), f.to_string(), left.to_string()]);
        }
    }
    for (name, n) in [
        ("human-generated", a.human_generated),
        ("template-translated", a.template_translated),
        ("uncategorized", a.uncategorized),
    ] {
        t.push(["label".to_string(), name.to_string(), String::new(), String::new(), n.to_string()]);
    }
    t
}

pub fn evaluation(model: &str, r: &EvalReport) -> Table {
    let mut t = Table::new(["model", "accuracy", "roc_auc", "tn", "fp", "fn", "tp", "cv_mean", "cv_folds"]);
    let cv = &r.cv_fold_accuracies;
    let mean = (!cv.is_empty()).then(|| cv.iter().sum::<f64>() / cv.len() as f64);
    let folds = cv.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(";");
    let m = r.confusion.matrix;
    t.push([
        model.to_string(),
        r.accuracy.to_string(),
        opt(r.roc_auc),
        m[0][0].to_string(),
        m[0][1].to_string(),
        m[1][0].to_string(),
        m[1][1].to_string(),
        opt(mean),
        folds,
    ]);
    t
}

/// Models as rows and ablation sets as columns, accuracy in percent.
pub fn ablation(rows: &[(String, Vec<AblationRow>)]) -> Table {
    let sets: Vec<String> = rows.first().map(|(_, r)| r.iter().map(|a| a.fields.clone()).collect()).unwrap_or_default();
    let mut t = Table::new(std::iter::once("model".to_string()).chain(sets));
    for (model, r) in rows {
        t.push(std::iter::once(model.clone()).chain(r.iter().map(|a| format!("{:.2}", a.accuracy * 100.0))));
    }
    t
}

pub fn clusters(rows: &[(String, Vec<ClusterAblationRow>)]) -> Table {
    let mut t = Table::new(["algorithm", "features", "k_found", "silhouette_pct", "noise_fraction"]);
    for (algo, r) in rows {
        for c in r {
            t.push([algo.clone(), c.fields.clone(), c.k_found.to_string(), opt(c.silhouette_pct.map(|s| format!("{s:.2}"))), c.noise_fraction.to_string()]);
        }
    }
    t
}
