//! Deterministic synthetic corpus whose labels follow from its metadata:
//! a before-chain class (old, many edits and editors, human-edited), an
//! after-chain class (recent, few edits, bot-edited, flagged creator), a
//! set of near-miss articles that each break one rule, and a few stubs
//! below the token minimum.

use std::collections::BTreeSet;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use rand::Rng;
use serde::{Deserialize, Serialize};
use wikiscan_core::seed::{stage_rng, Rng as ChaRng};
use wikiscan_core::{ArticleMetadata, ArticleRecord, TopEditor};

use crate::error::{Error, Result};
use crate::ingest::write_jsonl;
use crate::xtools::fixture_path;

pub const BOTS: [&str; 5] = ["JarBot", "ElphiBot", "DarijaBot", "ZkBot", "AlaaBot"];

const LETTERS: [char; 28] = [
    'ا', 'ب', 'ت', 'ث', 'ج', 'ح', 'خ', 'د', 'ذ', 'ر', 'ز', 'س', 'ش', 'ص', 'ض', 'ط', 'ظ', 'ع', 'غ', 'ف', 'ق', 'ك', 'ل', 'م',
    'ن', 'ه', 'و', 'ي',
];

/// What the generator meant each article to be.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Human,
    Template,
    /// After-chain shape, but the creator is not flagged.
    UnflaggedCreator,
    /// After-chain shape with exactly 5 edits.
    FiveEdits,
    /// After-chain shape created 29 days before the snapshot.
    TooYoung,
    /// Before-chain shape created on the cutoff date.
    CutoffDate,
    /// Before-chain shape dominated by bot editors.
    BotHeavy,
    /// Fewer tokens than the extraction minimum.
    Stub,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub articles: Vec<ArticleRecord>,
    pub kinds: Vec<Kind>,
}

fn word(r: &mut ChaRng) -> String {
    (0..r.random_range(2..7)).map(|_| LETTERS[r.random_range(0..LETTERS.len())]).collect()
}

fn text(r: &mut ChaRng, tokens: usize) -> String {
    let mut s = String::new();
    for i in 0..tokens {
        if i > 0 {
            s.push(' ');
        }
        s.push_str(&word(r));
        if i % 12 == 11 {
            s.push('.');
        }
    }
    s.push('.');
    s
}

fn date_between(r: &mut ChaRng, from: NaiveDate, to: NaiveDate) -> NaiveDate {
    from + Duration::days(r.random_range(0..=(to - from).num_days()))
}

fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid date")
}

fn human(r: &mut ChaRng) -> String {
    format!("User{}", r.random_range(1..400))
}

/// Spreads `edits` over `editors` (each at least one edit).
fn editor_list(r: &mut ChaRng, names: Vec<String>, edits: u64) -> Vec<TopEditor> {
    let n = names.len() as u64;
    let mut counts = vec![1u64; names.len()];
    for _ in 0..edits.saturating_sub(n) {
        let i = r.random_range(0..counts.len());
        counts[i] += 1;
    }
    names.into_iter().zip(counts).map(|(u, c)| TopEditor::new(u, c)).collect()
}

fn distinct_humans(r: &mut ChaRng, n: usize) -> Vec<String> {
    let mut set = BTreeSet::new();
    while set.len() < n {
        set.insert(human(r));
    }
    set.into_iter().collect()
}

fn before_meta(r: &mut ChaRng, bot_heavy: bool) -> ArticleMetadata {
    let edits = r.random_range(24..=27);
    let editors = r.random_range(10..=11);
    // Bot-heavy lists hold 5 bots among 9 editors, a share above one half.
    let (listed, bots) = if bot_heavy { (9usize, 5) } else { (10, r.random_range(0..=2)) };
    let mut names: Vec<String> = BOTS.iter().take(bots).map(|s| s.to_string()).collect();
    let mut humans = distinct_humans(r, listed - names.len());
    names.append(&mut humans);
    let bytes = r.random_range(12_000..=12_400);
    ArticleMetadata {
        total_edits: edits,
        total_editors: editors,
        top_editors: editor_list(r, names, edits - 2),
        total_bytes: bytes,
        total_characters: bytes * 55 / 100 + r.random_range(0..20),
        total_words: bytes / 11 + r.random_range(0..10),
        creator_name: human(r),
        creation_date: date_between(r, ymd(2004, 1, 1), ymd(2019, 11, 30)),
        ..Default::default()
    }
}

fn after_meta(r: &mut ChaRng, creator: &str) -> ArticleMetadata {
    let edits = r.random_range(1..=4);
    let editors = r.random_range(1..=2u64).min(edits);
    let mut names = vec![BOTS[r.random_range(0..BOTS.len())].to_string()];
    if editors == 2 {
        let other = if r.random_bool(0.5) { human(r) } else { BOTS[r.random_range(0..BOTS.len())].to_string() };
        if other != names[0] {
            names.push(other);
        }
    }
    let bytes = r.random_range(2_000..=2_400);
    ArticleMetadata {
        total_edits: edits,
        total_editors: names.len() as u64,
        top_editors: editor_list(r, names, edits),
        total_bytes: bytes,
        total_characters: bytes * 55 / 100 + r.random_range(0..20),
        total_words: bytes / 11 + r.random_range(0..10),
        creator_name: creator.to_string(),
        creation_date: date_between(r, ymd(2020, 1, 1), ymd(2023, 10, 31)),
        ..Default::default()
    }
}

fn flagged(r: &mut ChaRng) -> &'static str {
    if r.random_bool(0.88) {
        "HitomiAkane"
    } else {
        "Al-Dandoon"
    }
}

/// `n` articles: 40% each class, 2% stubs, the rest near misses.
pub fn generate(n: usize, seed: u64) -> Fixture {
    let mut r = stage_rng(seed, "fixture");
    let n_stub = n / 50;
    let n_class = n * 2 / 5;
    let mut kinds = Vec::with_capacity(n);
    kinds.extend(std::iter::repeat_n(Kind::Human, n_class));
    kinds.extend(std::iter::repeat_n(Kind::Template, n_class));
    kinds.extend(std::iter::repeat_n(Kind::Stub, n_stub));
    let near = [Kind::UnflaggedCreator, Kind::FiveEdits, Kind::TooYoung, Kind::CutoffDate, Kind::BotHeavy];
    let mut i = 0;
    while kinds.len() < n {
        kinds.push(near[i % near.len()]);
        i += 1;
    }
    // Interleave so that file order carries no class information.
    for j in (1..kinds.len()).rev() {
        let k = r.random_range(0..=j);
        kinds.swap(j, k);
    }

    let mut titles = BTreeSet::new();
    let mut articles = Vec::with_capacity(n);
    for (idx, &kind) in kinds.iter().enumerate() {
        let metadata = match kind {
            Kind::Human => before_meta(&mut r, false),
            Kind::BotHeavy => before_meta(&mut r, true),
            Kind::CutoffDate => ArticleMetadata { creation_date: ymd(2019, 12, 1), ..before_meta(&mut r, false) },
            Kind::Template | Kind::Stub => {
                let c = flagged(&mut r);
                after_meta(&mut r, c)
            }
            Kind::UnflaggedCreator => {
                let c = ["Raafat", "Ghaly", "HamdyBot"][r.random_range(0..3)];
                after_meta(&mut r, c)
            }
            Kind::FiveEdits => {
                let c = flagged(&mut r);
                let mut m = after_meta(&mut r, c);
                m.total_edits = 5;
                m
            }
            Kind::TooYoung => {
                let c = flagged(&mut r);
                ArticleMetadata { creation_date: ymd(2023, 12, 3), ..after_meta(&mut r, c) }
            }
        };
        let title = loop {
            let t = format!("{} {}", word(&mut r), word(&mut r));
            if titles.insert(t.clone()) {
                break t;
            }
        };
        let tokens = if kind == Kind::Stub { r.random_range(10..40) } else { r.random_range(55..90) };
        articles.push(ArticleRecord { page_id: 1000 + idx as u64, title, text: text(&mut r, tokens), metadata });
    }
    Fixture { articles, kinds }
}

/// articleinfo-shaped JSON for one article.
pub fn articleinfo_json(a: &ArticleRecord) -> String {
    let m = &a.metadata;
    let doc = serde_json::json!({
        "project": "arz.wikipedia.org",
        "page": a.title,
        "revisions": m.total_edits,
        "editors": m.total_editors.to_string(),
        "author": m.creator_name,
        "created_at": format!("{}T00:00:00Z", m.creation_date),
        "bytes": m.total_bytes,
        "characters": m.total_characters,
        "words": m.total_words.to_string(),
        "top_editors": m.top_editors.iter().map(|e| serde_json::json!({"username": e.username, "count": e.edit_count})).collect::<Vec<_>>(),
    });
    serde_json::to_string_pretty(&doc).expect("JSON value serializes")
}

pub const CONFIG: &str = r#"seed = 7

[paths]
corpus = "corpus.jsonl"
bots = "bots.txt"
out_dir = "out"

[sample]
per_class = 600

[features]
mode = "metadata"
metadata_fields = ["A", "B", "C", "D", "E"]

[train]
model_type = "gbt"
test_fraction = 0.2
cv_folds = 5

[service]
metadata = "fixture"
fixture_dir = "xtools"
"#;

/// Writes `corpus.jsonl`, `bots.txt`, `pipeline.toml`, `kinds.json` and
/// articleinfo fixtures for the first `xtools_count` articles.
pub fn write(dir: &Path, n: usize, seed: u64, xtools_count: usize) -> Result<Fixture> {
    let fx = generate(n, seed);
    let xdir = dir.join("xtools");
    std::fs::create_dir_all(&xdir).map_err(|e| Error::io(&xdir, e))?;
    write_jsonl(&dir.join("corpus.jsonl"), &fx.articles)?;
    let mut bots = String::from("#wiki=arz\n");
    for b in BOTS {
        bots.push_str(b);
        bots.push('\n');
    }
    let put = |name: &str, body: &str| {
        let p = dir.join(name);
        std::fs::write(&p, body).map_err(|e| Error::io(&p, e))
    };
    put("bots.txt", &bots)?;
    put("pipeline.toml", CONFIG)?;
    let kinds: Vec<(u64, Kind)> = fx.articles.iter().map(|a| a.page_id).zip(fx.kinds.iter().copied()).collect();
    put("kinds.json", &serde_json::to_string(&kinds).expect("serializable"))?;
    for a in fx.articles.iter().filter(|a| a.text.split(' ').count() >= 50).take(xtools_count) {
        let p = fixture_path(&xdir, &a.title);
        std::fs::write(&p, articleinfo_json(a)).map_err(|e| Error::io(&p, e))?;
    }
    Ok(fx)
}
