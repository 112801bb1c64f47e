//! Exact n-gram profiling, top-1 decay series and the flat-decay template
//! diagnosis.
//!
//! Tokens are interned once into a [`Vocab`]; grams are counted as id slices
//! and never span article boundaries. Ranking is by count descending, then by
//! the gram's token sequence in lexicographic order.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use hashbrown::HashMap;
use rustc_hash::FxBuildHasher;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::math::log10;
use crate::textprep::TokenizedArticle;

/// Gram sizes profiled by default.
pub const DEFAULT_N_VALUES: [usize; 6] = [1, 2, 3, 5, 10, 50];

type Map<K, V> = HashMap<K, V, FxBuildHasher>;

/// Token interner plus the corpus as id sequences.
#[derive(Debug, Clone, Default)]
pub struct Vocab {
    ids: Map<String, u32>,
    words: Vec<String>,
}

impl Vocab {
    pub fn intern(&mut self, token: &str) -> u32 {
        if let Some(&id) = self.ids.get(token) {
            return id;
        }
        let id = self.words.len() as u32;
        self.words.push(String::from(token));
        self.ids.insert(String::from(token), id);
        id
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    fn cmp_grams(&self, a: &[u32], b: &[u32]) -> Ordering {
        a.iter().map(|&i| self.word(i)).cmp(b.iter().map(|&i| self.word(i)))
    }
}

/// A corpus interned against one vocabulary.
#[derive(Debug, Clone, Default)]
pub struct InternedCorpus {
    pub vocab: Vocab,
    pub articles: Vec<Vec<u32>>,
}

impl InternedCorpus {
    pub fn new(articles: &[TokenizedArticle]) -> Self {
        let mut c = InternedCorpus::default();
        for a in articles {
            c.push(&a.tokens);
        }
        c
    }

    pub fn from_token_lists<S: AsRef<str>>(articles: &[Vec<S>]) -> Self {
        let mut c = InternedCorpus::default();
        for a in articles {
            c.push(a);
        }
        c
    }

    pub fn push<S: AsRef<str>>(&mut self, tokens: &[S]) {
        let ids = tokens.iter().map(|t| self.vocab.intern(t.as_ref())).collect();
        self.articles.push(ids);
    }

    pub fn token_count(&self) -> usize {
        self.articles.iter().map(Vec::len).sum()
    }
}

/// Exact counts of all n-grams of one size. Counts from disjoint article
/// partitions merge associatively.
#[derive(Debug, Clone, Default)]
pub struct GramCounts {
    pub n: usize,
    counts: Map<Box<[u32]>, u64>,
}

impl GramCounts {
    pub fn new(n: usize) -> Self {
        GramCounts { n, counts: Map::default() }
    }

    pub fn add_article(&mut self, ids: &[u32]) {
        if ids.len() < self.n {
            return;
        }
        for w in ids.windows(self.n) {
            if let Some(c) = self.counts.get_mut(w) {
                *c += 1;
            } else {
                self.counts.insert(w.into(), 1);
            }
        }
    }

    pub fn merge(&mut self, other: GramCounts) {
        for (g, c) in other.counts {
            *self.counts.entry(g).or_insert(0) += c;
        }
    }

    pub fn get(&self, gram: &[u32]) -> u64 {
        self.counts.get(gram).copied().unwrap_or(0)
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn top_k(&self, vocab: &Vocab, k: usize) -> Vec<(Box<[u32]>, u64)> {
        let mut all: Vec<(&[u32], u64)> = self.counts.iter().map(|(g, &c)| (&**g, c)).collect();
        let ord = |a: &(&[u32], u64), b: &(&[u32], u64)| b.1.cmp(&a.1).then_with(|| vocab.cmp_grams(a.0, b.0));
        if k < all.len() {
            all.select_nth_unstable_by(k, ord);
            all.truncate(k);
        }
        all.sort_unstable_by(ord);
        all.into_iter().map(|(g, c)| (g.into(), c)).collect()
    }
}

pub fn count_ids(corpus: &InternedCorpus, n: usize) -> GramCounts {
    let mut counts = GramCounts::new(n);
    for a in &corpus.articles {
        counts.add_article(a);
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedGram {
    pub gram: Vec<String>,
    pub count: u64,
}

impl RankedGram {
    pub fn text(&self) -> String {
        self.gram.join(" ")
    }
}

fn resolve(vocab: &Vocab, grams: Vec<(Box<[u32]>, u64)>) -> Vec<RankedGram> {
    grams
        .into_iter()
        .map(|(g, count)| RankedGram { gram: g.iter().map(|&i| String::from(vocab.word(i))).collect(), count })
        .collect()
}

/// Memory strategy for top-k selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountMode {
    /// One hash map over every distinct gram.
    Exact,
    /// Count-then-select: a first pass accumulates counts of hashed buckets,
    /// a second pass counts exactly only grams whose bucket reaches a cut-off.
    /// Bucket counts bound member counts from above, so every gram at or above
    /// the cut-off is a candidate and the result is identical to `Exact`.
    TwoPass { buckets: usize },
}

fn gram_hash(ids: &[u32]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &i in ids {
        for b in i.to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

fn two_pass_top_k(corpus: &InternedCorpus, n: usize, k: usize, buckets: usize) -> Vec<(Box<[u32]>, u64)> {
    if k == 0 {
        return Vec::new();
    }
    let buckets = buckets.max(1);
    let mut hist = vec![0u64; buckets];
    for a in &corpus.articles {
        if a.len() >= n {
            for w in a.windows(n) {
                hist[(gram_hash(w) % buckets as u64) as usize] += 1;
            }
        }
    }
    let mut sorted: Vec<u64> = hist.iter().copied().filter(|&c| c > 0).collect();
    if sorted.is_empty() {
        return Vec::new();
    }
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let mut cutoff = sorted[(k - 1).min(sorted.len() - 1)];
    loop {
        let mut cand = GramCounts::new(n);
        for a in &corpus.articles {
            if a.len() >= n {
                for w in a.windows(n) {
                    if hist[(gram_hash(w) % buckets as u64) as usize] >= cutoff {
                        *cand.counts.entry(w.into()).or_insert(0) += 1;
                    }
                }
            }
        }
        let confirmed = cand.counts.values().filter(|&&c| c >= cutoff).count();
        if confirmed >= k || cutoff == 1 {
            // Any gram outside the candidate set has count < cutoff, below
            // the k confirmed ones.
            cand.counts.retain(|_, c| *c >= cutoff);
            return cand.top_k(&corpus.vocab, k);
        }
        cutoff = (cutoff / 2).max(1);
    }
}

pub fn top_k_ids(corpus: &InternedCorpus, n: usize, k: usize, mode: CountMode) -> Vec<(Box<[u32]>, u64)> {
    match mode {
        CountMode::Exact => count_ids(corpus, n).top_k(&corpus.vocab, k),
        CountMode::TwoPass { buckets } => two_pass_top_k(corpus, n, k, buckets),
    }
}

/// The `k` most frequent `n`-grams.
pub fn count_ngrams(corpus: &InternedCorpus, n: usize, k: usize) -> Result<Vec<RankedGram>> {
    count_ngrams_with(corpus, n, k, CountMode::Exact)
}

pub fn count_ngrams_with(corpus: &InternedCorpus, n: usize, k: usize, mode: CountMode) -> Result<Vec<RankedGram>> {
    if n == 0 || k == 0 {
        return Err(invalid("n and k must be at least 1"));
    }
    Ok(resolve(&corpus.vocab, top_k_ids(corpus, n, k, mode)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NGramProfile {
    pub k: usize,
    pub n_values: Vec<usize>,
    pub top_k: Vec<Vec<RankedGram>>,
    pub top1_series: Vec<Top1Point>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Top1Point {
    pub n: usize,
    /// `None` when the corpus has no gram of this size.
    pub count: Option<u64>,
    pub log10: Option<f64>,
}

fn top1(corpus: &InternedCorpus, n: usize) -> Top1Point {
    let counts = count_ids(corpus, n);
    let best = counts.counts.values().copied().max();
    Top1Point { n, count: best, log10: best.map(|c| log10(c as f64)) }
}

/// Top-1 counts for `n = 1..=n_max`.
pub fn top1_decay(corpus: &InternedCorpus, n_max: usize) -> Result<Vec<Top1Point>> {
    if n_max < 2 {
        return Err(invalid("n_max must be at least 2"));
    }
    Ok((1..=n_max).map(|n| top1(corpus, n)).collect())
}

pub fn profile(corpus: &InternedCorpus, n_values: &[usize], k: usize, n_max: usize) -> Result<NGramProfile> {
    let top_k = n_values.iter().map(|&n| count_ngrams(corpus, n, k)).collect::<Result<Vec<_>>>()?;
    Ok(NGramProfile { k, n_values: n_values.to_vec(), top_k, top1_series: top1_decay(corpus, n_max)? })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayDiagnosis {
    /// `(n, top1[n] / top1[n + 1])` for each consecutive pair inside the band.
    pub ratios: Vec<(usize, f64)>,
    /// Geometric mean of `ratios`; `None` when counts vanish inside the band.
    pub geometric_mean: Option<f64>,
    pub anomaly_flag: bool,
    pub band: (usize, usize),
    pub threshold: f64,
}

pub const DEFAULT_BAND: (usize, usize) = (5, 15);
pub const DEFAULT_DECAY_THRESHOLD: f64 = 1.2;

/// Flags templated text: the top-1 count barely decays across the band while
/// the top gram at the band's upper end is still a duplicate (count >= 2).
/// Singleton counts are flat in any corpus and carry no signal.
pub fn diagnose_decay(series: &[Top1Point], band: (usize, usize), threshold: f64) -> Result<DecayDiagnosis> {
    let (lo, hi) = band;
    if lo == 0 || hi <= lo {
        return Err(invalid("decay band must satisfy 1 <= lo < hi"));
    }
    let at = |n: usize| series.iter().find(|p| p.n == n);
    let mut counts = Vec::with_capacity(hi - lo + 1);
    for n in lo..=hi {
        let p = at(n).ok_or_else(|| invalid("decay band lies outside the series"))?;
        counts.push(p.count.unwrap_or(0));
    }
    let mut ratios = Vec::with_capacity(hi - lo);
    let mut log_sum = 0.0;
    let mut defined = true;
    for (i, w) in counts.windows(2).enumerate() {
        if w[0] == 0 || w[1] == 0 {
            defined = false;
            break;
        }
        let r = w[0] as f64 / w[1] as f64;
        log_sum += crate::math::ln(r);
        ratios.push((lo + i, r));
    }
    let geometric_mean = if defined { Some(crate::math::exp(log_sum / (hi - lo) as f64)) } else { None };
    let duplicated = counts[counts.len() - 1] >= 2;
    let anomaly_flag = duplicated && geometric_mean.is_some_and(|g| g < threshold);
    Ok(DecayDiagnosis { ratios, geometric_mean, anomaly_flag, band, threshold })
}

/// ASCII tokens typical of leaked wikitext / timeline markup.
pub const MARKUP_LEXICON: &[&str] = &[
    "align", "alignbars", "anchor", "bar", "barincrement", "bgcolor", "black", "blue", "border", "bottom", "cellpadding",
    "cellspacing", "center", "class", "color", "colors", "colspan", "columns", "dateformat", "fontsize", "from", "gray",
    "green", "gridcolor", "height", "horizontal", "id", "imagesize", "increment", "justify", "left", "legend", "mark",
    "orientation", "period", "plotarea", "plotdata", "px", "red", "right", "rowspan", "scalemajor", "scaleminor",
    "shift", "start", "style", "text", "textcolor", "till", "timeaxis", "top", "unit", "value", "vertical", "white",
    "width", "year", "yyyy",
];

/// Fraction of tokens above which an article counts as markup-leaked.
pub const MARKUP_SHARE: f64 = 0.3;

pub fn is_markup_token(tok: &str) -> bool {
    tok.is_ascii() && MARKUP_LEXICON.iter().any(|m| m.eq_ignore_ascii_case(tok))
}

pub fn has_markup_leak<S: AsRef<str>>(tokens: &[S]) -> bool {
    if tokens.is_empty() {
        return false;
    }
    let hits = tokens.iter().filter(|t| is_markup_token(t.as_ref())).count();
    hits as f64 / tokens.len() as f64 > MARKUP_SHARE
}

pub fn detect_markup_leak(articles: &[TokenizedArticle]) -> usize {
    articles.iter().filter(|a| has_markup_leak(&a.tokens)).count()
}
