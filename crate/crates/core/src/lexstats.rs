//! Corpus density statistics and lexical richness / diversity metrics.

use alloc::vec::Vec;

use hashbrown::HashSet;
use rustc_hash::FxBuildHasher;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::math::sqrt;
use crate::textprep::TokenizedArticle;
use crate::ArticleMetadata;

/// Default MTLD factor threshold.
pub const MTLD_THRESHOLD: f64 = 0.72;

/// Size of one extracted article in the three Table-1 units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleSize {
    pub page_id: u64,
    pub bytes: u64,
    pub chars: u64,
    pub tokens: u64,
}

impl ArticleSize {
    /// Bytes come from the page metadata; characters and tokens from the
    /// cleaned text.
    pub fn new(article: &TokenizedArticle, meta: &ArticleMetadata) -> Self {
        ArticleSize {
            page_id: article.page_id,
            bytes: meta.total_bytes,
            chars: article.char_count as u64,
            tokens: article.tokens.len() as u64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldStats {
    pub total: u64,
    pub min: u64,
    pub max: u64,
    pub mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub article_count: u64,
    pub bytes: FieldStats,
    pub chars: FieldStats,
    pub tokens: FieldStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Acc {
    total: u64,
    min: u64,
    max: u64,
}

impl Acc {
    const EMPTY: Acc = Acc { total: 0, min: u64::MAX, max: 0 };

    fn push(&mut self, v: u64) {
        self.total += v;
        self.min = self.min.min(v);
        self.max = self.max.max(v);
    }

    fn merge(&mut self, o: &Acc) {
        self.total += o.total;
        self.min = self.min.min(o.min);
        self.max = self.max.max(o.max);
    }

    fn finish(&self, n: u64) -> FieldStats {
        FieldStats { total: self.total, min: self.min, max: self.max, mean: self.total as f64 / n as f64 }
    }
}

/// Associative accumulator for [`CorpusSummary`]; partitions may be summed
/// independently and merged in any order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SummaryAccumulator {
    count: u64,
    bytes: Acc,
    chars: Acc,
    tokens: Acc,
}

impl Default for SummaryAccumulator {
    fn default() -> Self {
        SummaryAccumulator { count: 0, bytes: Acc::EMPTY, chars: Acc::EMPTY, tokens: Acc::EMPTY }
    }
}

impl SummaryAccumulator {
    pub fn push(&mut self, size: &ArticleSize) {
        self.count += 1;
        self.bytes.push(size.bytes);
        self.chars.push(size.chars);
        self.tokens.push(size.tokens);
    }

    pub fn merge(&mut self, other: &SummaryAccumulator) {
        self.count += other.count;
        self.bytes.merge(&other.bytes);
        self.chars.merge(&other.chars);
        self.tokens.merge(&other.tokens);
    }

    pub fn finish(&self) -> Result<CorpusSummary> {
        if self.count == 0 {
            return Err(Error::Empty("corpus"));
        }
        Ok(CorpusSummary {
            article_count: self.count,
            bytes: self.bytes.finish(self.count),
            chars: self.chars.finish(self.count),
            tokens: self.tokens.finish(self.count),
        })
    }
}

pub fn summarize_corpus<'a, I>(sizes: I) -> Result<CorpusSummary>
where
    I: IntoIterator<Item = &'a ArticleSize>,
{
    let mut acc = SummaryAccumulator::default();
    for s in sizes {
        acc.push(s);
    }
    acc.finish()
}

/// Per-article plot series for token and character lengths with mean lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthDistribution {
    pub rows: Vec<LengthRow>,
    pub mean_tokens: f64,
    pub mean_chars: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthRow {
    pub page_id: u64,
    pub tokens: u64,
    pub chars: u64,
}

impl LengthDistribution {
    pub fn below_mean_tokens(&self) -> usize {
        self.rows.iter().filter(|r| (r.tokens as f64) < self.mean_tokens).count()
    }
}

pub fn length_distribution(sizes: &[ArticleSize]) -> Result<LengthDistribution> {
    let summary = summarize_corpus(sizes)?;
    Ok(LengthDistribution {
        rows: sizes.iter().map(|s| LengthRow { page_id: s.page_id, tokens: s.tokens, chars: s.chars }).collect(),
        mean_tokens: summary.tokens.mean,
        mean_chars: summary.chars.mean,
    })
}

fn check_counts(n: u64, v: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::Empty("token count N"));
    }
    if v == 0 || v > n {
        return Err(invalid("unique token count V must satisfy 1 <= V <= N"));
    }
    Ok(())
}

/// Type-token ratio `V / N`.
pub fn ttr(n: u64, v: u64) -> Result<f64> {
    check_counts(n, v)?;
    Ok(v as f64 / n as f64)
}

/// Root TTR `V / sqrt(N)`.
pub fn rttr(n: u64, v: u64) -> Result<f64> {
    check_counts(n, v)?;
    Ok(v as f64 / sqrt(n as f64))
}

/// Corrected TTR `V / sqrt(2N)`.
pub fn cttr(n: u64, v: u64) -> Result<f64> {
    check_counts(n, v)?;
    Ok(v as f64 / sqrt(2.0 * n as f64))
}

/// One directional MTLD pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MtldPass {
    /// Full factors plus the partial factor of the trailing segment.
    pub factors: f64,
    /// `N / factors`, `None` when no factor was completed or started.
    pub value: Option<f64>,
}

fn mtld_pass<'a, T, I>(tokens: I, n: usize, threshold: f64) -> MtldPass
where
    T: Eq + core::hash::Hash + ?Sized + 'a,
    I: Iterator<Item = &'a T>,
{
    let mut types: HashSet<&T, FxBuildHasher> = HashSet::default();
    let mut window = 0usize;
    let mut factors = 0.0;
    let mut running_ttr = 1.0;
    for tok in tokens {
        window += 1;
        types.insert(tok);
        running_ttr = types.len() as f64 / window as f64;
        if running_ttr < threshold {
            factors += 1.0;
            window = 0;
            types.clear();
        }
    }
    if window > 0 {
        factors += (1.0 - running_ttr) / (1.0 - threshold);
    }
    let value = if factors > 0.0 { Some(n as f64 / factors) } else { None };
    MtldPass { factors, value }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mtld {
    pub forward: MtldPass,
    pub backward: MtldPass,
    /// Mean of both directions; `None` when either direction is undefined.
    pub value: Option<f64>,
}

/// Bidirectional MTLD (McCarthy and Jarvis). The window resets the first time
/// its running TTR drops strictly below `threshold`.
pub fn mtld<T: AsRef<str>>(tokens: &[T], threshold: f64) -> Result<Mtld> {
    if tokens.is_empty() {
        return Err(Error::Empty("token list"));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(invalid("MTLD threshold must lie in (0, 1)"));
    }
    let n = tokens.len();
    let forward = mtld_pass(tokens.iter().map(AsRef::as_ref), n, threshold);
    let backward = mtld_pass(tokens.iter().rev().map(AsRef::as_ref), n, threshold);
    let value = match (forward.value, backward.value) {
        (Some(f), Some(b)) => Some((f + b) / 2.0),
        _ => None,
    };
    Ok(Mtld { forward, backward, value })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LexicalDiversityReport {
    pub total_tokens: u64,
    pub unique_tokens: u64,
    pub ttr: f64,
    pub rttr: f64,
    pub cttr: f64,
    /// `None` flags an undefined MTLD; never reported as zero or infinity.
    pub mtld: Option<f64>,
    pub mtld_threshold: f64,
}

/// Corpus-level diversity over the concatenated token stream, in article
/// order.
pub fn lexical_diversity(articles: &[TokenizedArticle], threshold: f64) -> Result<LexicalDiversityReport> {
    let stream: Vec<&str> = articles.iter().flat_map(|a| a.tokens.iter().map(|t| t.as_str())).collect();
    if stream.is_empty() {
        return Err(Error::Empty("token stream"));
    }
    let unique: HashSet<&str, FxBuildHasher> = stream.iter().copied().collect();
    let n = stream.len() as u64;
    let v = unique.len() as u64;
    Ok(LexicalDiversityReport {
        total_tokens: n,
        unique_tokens: v,
        ttr: ttr(n, v)?,
        rttr: rttr(n, v)?,
        cttr: cttr(n, v)?,
        mtld: mtld(&stream, threshold)?.value,
        mtld_threshold: threshold,
    })
}
