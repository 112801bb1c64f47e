//! Per-article unit of analysis: text plus XTools-style edit metadata.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticleRecord {
    pub page_id: u64,
    pub title: String,
    pub text: String,
    pub metadata: ArticleMetadata,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopEditor {
    pub username: String,
    pub edit_count: u64,
}

impl TopEditor {
    pub fn new(username: impl Into<String>, edit_count: u64) -> Self {
        TopEditor { username: username.into(), edit_count }
    }
}

/// Metadata fields as collected from the articleinfo API.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetaField {
    TotalEdits,
    TotalEditors,
    TopEditors,
    TotalBytes,
    TotalCharacters,
    TotalWords,
    CreatorName,
    CreationDate,
}

impl MetaField {
    pub const ALL: [MetaField; 8] = [
        MetaField::TotalEdits,
        MetaField::TotalEditors,
        MetaField::TopEditors,
        MetaField::TotalBytes,
        MetaField::TotalCharacters,
        MetaField::TotalWords,
        MetaField::CreatorName,
        MetaField::CreationDate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetaField::TotalEdits => "total_edits",
            MetaField::TotalEditors => "total_editors",
            MetaField::TopEditors => "top_editors",
            MetaField::TotalBytes => "total_bytes",
            MetaField::TotalCharacters => "total_characters",
            MetaField::TotalWords => "total_words",
            MetaField::CreatorName => "creator_name",
            MetaField::CreationDate => "creation_date",
        }
    }
}

impl fmt::Display for MetaField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Edit metadata of one article.
///
/// Fields that were not present in the source are left at their zero value
/// and listed in `missing`; consumers that need a field call [`require`].
///
/// [`require`]: ArticleMetadata::require
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ArticleMetadata {
    pub total_edits: u64,
    pub total_editors: u64,
    pub top_editors: Vec<TopEditor>,
    pub total_bytes: u64,
    pub total_characters: u64,
    pub total_words: u64,
    pub creator_name: String,
    pub creation_date: NaiveDate,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub missing: BTreeSet<MetaField>,
}

impl ArticleMetadata {
    pub fn is_complete(&self) -> bool {
        self.missing.is_empty()
    }

    pub fn require(&self, page_id: u64, field: MetaField) -> Result<()> {
        if self.missing.contains(&field) {
            Err(Error::MissingField { page_id, field })
        } else {
            Ok(())
        }
    }

    /// Checks the structural invariants between counts.
    pub fn validate(&self) -> Result<()> {
        if self.total_edits > 0 && self.total_editors > self.total_edits {
            return Err(invalid("total_editors exceeds total_edits"));
        }
        let top: u64 = self.top_editors.iter().map(|e| e.edit_count).sum();
        if !self.missing.contains(&MetaField::TotalEdits) && top > self.total_edits {
            return Err(invalid("top editor edit counts exceed total_edits"));
        }
        Ok(())
    }
}

/// Usernames of approved bots on one wiki.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BotRegistry {
    pub wiki_code: String,
    pub bot_usernames: BTreeSet<String>,
}

impl BotRegistry {
    pub fn new<I, S>(wiki_code: impl Into<String>, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        BotRegistry {
            wiki_code: wiki_code.into(),
            bot_usernames: names.into_iter().map(Into::into).collect(),
        }
    }

    /// Parses the newline-delimited registry format: a `#wiki=<code>` header
    /// followed by one username per line. A registry with no bots must say so
    /// with a single `none` line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(|l| l.trim_end_matches('\r')).filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or(Error::Empty("bot registry"))?;
        let wiki_code = header
            .trim()
            .strip_prefix("#wiki=")
            .map(str::trim)
            .filter(|c| !c.is_empty())
            .ok_or_else(|| invalid("bot registry must start with a `#wiki=<code>` header"))?;

        let mut names = BTreeSet::new();
        let mut sentinel = false;
        for line in lines {
            let name = line.trim();
            if name.starts_with('#') {
                continue;
            }
            if name == "none" {
                sentinel = true;
                continue;
            }
            names.insert(String::from(name));
        }
        if names.is_empty() && !sentinel {
            return Err(invalid("bot registry lists no usernames (use a `none` line for an empty registry)"));
        }
        if sentinel && !names.is_empty() {
            return Err(invalid("bot registry mixes the `none` sentinel with usernames"));
        }
        Ok(BotRegistry { wiki_code: String::from(wiki_code), bot_usernames: names })
    }

    pub fn contains(&self, username: &str) -> bool {
        self.bot_usernames.contains(username)
    }

    pub fn len(&self) -> usize {
        self.bot_usernames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bot_usernames.is_empty()
    }
}
