//! Fuzzy title lookup by character-trigram Jaccard similarity.
//!
//! A string is lowercased, its whitespace runs collapsed to one space, and
//! padded as `"  " + s + " "`; its trigrams are all windows of three chars.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type Trigram = [char; 3];

pub fn trigrams(s: &str) -> Vec<Trigram> {
    let mut padded: Vec<char> = Vec::with_capacity(s.len() + 3);
    padded.extend(['\u{20}', '\u{20}']);
    let mut space = false;
    for c in s.trim().chars().flat_map(char::to_lowercase) {
        if c.is_whitespace() {
            if !space {
                padded.push(' ');
            }
            space = true;
        } else {
            padded.push(c);
            space = false;
        }
    }
    padded.push(' ');
    let mut out: Vec<Trigram> = padded.windows(3).map(|w| [w[0], w[1], w[2]]).collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Jaccard similarity of two sorted, deduplicated trigram sets.
pub fn jaccard(a: &[Trigram], b: &[Trigram]) -> f64 {
    let (mut i, mut j, mut shared) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => {
                shared += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - shared;
    if union == 0 {
        0.0
    } else {
        shared as f64 / union as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub title: String,
    pub score: f64,
}

/// Titles are kept sorted and deduplicated, so ties resolve by title order.
#[derive(Debug, Clone, Default)]
pub struct TitleIndex {
    titles: Vec<String>,
    grams: Vec<Vec<Trigram>>,
}

impl TitleIndex {
    pub fn new<I, S>(titles: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut titles: Vec<String> = titles.into_iter().map(Into::into).collect();
        titles.sort();
        titles.dedup();
        let grams = titles.iter().map(|t| trigrams(t)).collect();
        TitleIndex { titles, grams }
    }

    pub fn len(&self) -> usize {
        self.titles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.titles.is_empty()
    }

    pub fn contains(&self, title: &str) -> bool {
        self.titles.binary_search_by(|t| t.as_str().cmp(title)).is_ok()
    }

    pub fn titles(&self) -> &[String] {
        &self.titles
    }

    /// Up to `limit` titles with positive similarity, best first.
    pub fn search(&self, query: &str, limit: usize) -> Result<Vec<SearchHit>> {
        if query.trim().is_empty() {
            return Err(invalid("search query is empty"));
        }
        if self.titles.is_empty() {
            return Err(Error::Empty("title index"));
        }
        let q = trigrams(query);
        let mut scored: Vec<(f64, usize)> = self
            .grams
            .iter()
            .enumerate()
            .map(|(i, g)| (jaccard(&q, g), i))
            .filter(|(s, _)| *s > 0.0)
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        Ok(scored
            .into_iter()
            .take(limit)
            .map(|(score, i)| SearchHit { title: self.titles[i].clone(), score })
            .collect())
    }
}
