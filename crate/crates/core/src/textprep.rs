//! Light preprocessing: everything that is not a letter, a digit or an
//! Arabic-script character becomes a space. No stemming, lemmatization,
//! orthographic normalization or diacritic stripping.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory as Gc};

use crate::article::ArticleRecord;

/// Minimum article length kept by [`extract_corpus`].
pub const MIN_TOKENS: usize = 50;

/// Arabic, Arabic Supplement, Arabic Extended-A, and Presentation Forms A/B.
pub const ARABIC_BLOCKS: [(char, char); 5] = [
    ('\u{0600}', '\u{06FF}'),
    ('\u{0750}', '\u{077F}'),
    ('\u{08A0}', '\u{08FF}'),
    ('\u{FB50}', '\u{FDFF}'),
    ('\u{FE70}', '\u{FEFF}'),
];

pub fn is_arabic_block(c: char) -> bool {
    ARABIC_BLOCKS.iter().any(|&(lo, hi)| c >= lo && c <= hi)
}

/// Letter (L*) or number (N*) general category.
pub fn is_letter_or_number(c: char) -> bool {
    matches!(
        get_general_category(c),
        Gc::UppercaseLetter
            | Gc::LowercaseLetter
            | Gc::TitlecaseLetter
            | Gc::ModifierLetter
            | Gc::OtherLetter
            | Gc::DecimalNumber
            | Gc::LetterNumber
            | Gc::OtherNumber
    )
}

#[inline]
pub fn is_kept(c: char) -> bool {
    is_arabic_block(c) || is_letter_or_number(c)
}

pub fn preprocess(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for c in text.chars() {
        if is_kept(c) && !c.is_whitespace() {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(c);
        } else {
            pending_space = true;
        }
    }
    out
}

pub fn tokenize(text: &str) -> Vec<&str> {
    text.split(' ').filter(|t| !t.is_empty()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedArticle {
    pub page_id: u64,
    pub tokens: Vec<String>,
    /// Characters of the cleaned text, single separating spaces included.
    pub char_count: usize,
}

impl TokenizedArticle {
    pub fn from_text(page_id: u64, text: &str) -> Self {
        let cleaned = preprocess(text);
        let char_count = cleaned.chars().count();
        let tokens = tokenize(&cleaned).into_iter().map(String::from).collect();
        TokenizedArticle { page_id, tokens, char_count }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Streaming extraction: yields articles with at least `min_tokens` tokens
/// and counts the rest.
pub struct Extract<I> {
    inner: I,
    min_tokens: usize,
    discarded: usize,
}

impl<I> Extract<I> {
    pub fn discarded(&self) -> usize {
        self.discarded
    }
}

impl<'a, I> Iterator for Extract<I>
where
    I: Iterator<Item = &'a ArticleRecord>,
{
    type Item = TokenizedArticle;

    fn next(&mut self) -> Option<TokenizedArticle> {
        for record in self.inner.by_ref() {
            let art = TokenizedArticle::from_text(record.page_id, &record.text);
            if art.len() >= self.min_tokens {
                return Some(art);
            }
            self.discarded += 1;
        }
        None
    }
}

/// `min_tokens` below 1 is treated as 1.
pub fn extract<'a, I>(articles: I, min_tokens: usize) -> Extract<I::IntoIter>
where
    I: IntoIterator<Item = &'a ArticleRecord>,
{
    Extract { inner: articles.into_iter(), min_tokens: min_tokens.max(1), discarded: 0 }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extraction {
    pub kept: Vec<TokenizedArticle>,
    pub discarded: usize,
}

pub fn extract_corpus<'a, I>(articles: I, min_tokens: usize) -> Extraction
where
    I: IntoIterator<Item = &'a ArticleRecord>,
{
    let mut it = extract(articles, min_tokens);
    let kept = it.by_ref().collect();
    Extraction { kept, discarded: it.discarded() }
}
