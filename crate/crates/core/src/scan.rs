//! Single-article verdicts from a trained model.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::article::ArticleMetadata;
use crate::classify::TrainedModel;
use crate::error::{Error, Result};
use crate::features::{assemble_one, ArticleInput, Embedder};
use crate::rules::Label;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanVerdict {
    pub title: String,
    pub page_url: String,
    pub metadata: ArticleMetadata,
    pub label: Label,
    pub score: f64,
    pub model_id: String,
    /// First two sentences of the stored text, when the text is available.
    #[serde(default)]
    pub summary: Option<String>,
}

/// What the scanner knows about one article.
#[derive(Debug, Clone, Copy)]
pub struct ScanInput<'a> {
    pub page_id: u64,
    pub title: &'a str,
    pub page_url: &'a str,
    pub metadata: &'a ArticleMetadata,
    pub tokens: &'a [&'a str],
    pub text: Option<&'a str>,
}

pub fn scan(input: &ScanInput<'_>, model: &TrainedModel, model_id: &str, embedder: Option<&Embedder>) -> Result<ScanVerdict> {
    let fv = assemble_one(
        &ArticleInput { page_id: input.page_id, tokens: input.tokens, metadata: input.metadata },
        &model.feature_config,
        embedder,
    )?;
    if fv.values.len() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), found: fv.values.len() });
    }
    let p = model.predict(&fv.values)?;
    Ok(ScanVerdict {
        title: input.title.into(),
        page_url: input.page_url.into(),
        metadata: input.metadata.clone(),
        label: Label::from_class(p.label),
        score: p.score,
        model_id: model_id.into(),
        summary: input.text.map(|t| first_sentences(t, 2)),
    })
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '\u{061F}' | '\u{06D4}')
}

/// The first `n` sentences. A sentence ends at `.`, `!`, `?`, the Arabic
/// question mark or full stop when followed by whitespace or the end.
pub fn first_sentences(text: &str, n: usize) -> String {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut found = 0;
    for (k, &(i, c)) in chars.iter().enumerate() {
        if is_terminator(c) && chars.get(k + 1).is_none_or(|&(_, d)| d.is_whitespace()) {
            found += 1;
            if found == n {
                return String::from(text[..i + c.len_utf8()].trim());
            }
        }
    }
    String::from(text.trim())
}
