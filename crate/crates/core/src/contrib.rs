//! Bot / human typing of creators and editors.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::article::{ArticleMetadata, ArticleRecord, BotRegistry};
use crate::error::{Error, Result};

/// Bot-editor share above which an article is bot-edited.
pub const BOT_EDITED_SHARE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContributorType {
    Bot,
    Human,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EditedBy {
    BotEdited,
    HumanEdited,
}

/// Registry membership decides; with `suffix_heuristic` a trailing
/// `Bot`/`bot` also marks a bot.
pub fn classify_contributor(username: &str, registry: &BotRegistry, suffix_heuristic: bool) -> ContributorType {
    if registry.contains(username) || (suffix_heuristic && (username.ends_with("Bot") || username.ends_with("bot"))) {
        ContributorType::Bot
    } else {
        ContributorType::Human
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContributorBreakdown {
    pub creator_type: ContributorType,
    pub bot_editor_share: f64,
    pub edited_by: EditedBy,
    /// Distinct editors seen in `top_editors`.
    pub editors_seen: u64,
    /// Set when `top_editors` lists fewer editors than `total_editors`, i.e.
    /// the share is computed over a partial editor list.
    pub partial_editor_list: bool,
}

impl ContributorBreakdown {
    pub fn human_editor_share(&self) -> f64 {
        1.0 - self.bot_editor_share
    }
}

/// Share of distinct bot editors among the distinct editors in
/// `top_editors`, unweighted by edit count.
pub fn breakdown_article(page_id: u64, meta: &ArticleMetadata, registry: &BotRegistry) -> Result<ContributorBreakdown> {
    let editors: BTreeSet<&str> = meta.top_editors.iter().map(|e| e.username.as_str()).collect();
    if editors.is_empty() {
        return Err(Error::MissingField { page_id, field: crate::MetaField::TopEditors });
    }
    let bots = editors.iter().filter(|u| registry.contains(u)).count();
    let share = bots as f64 / editors.len() as f64;
    let edited_by = if share > BOT_EDITED_SHARE { EditedBy::BotEdited } else { EditedBy::HumanEdited };
    Ok(ContributorBreakdown {
        creator_type: classify_contributor(&meta.creator_name, registry, false),
        bot_editor_share: share,
        edited_by,
        editors_seen: editors.len() as u64,
        partial_editor_list: (editors.len() as u64) < meta.total_editors,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreatorRank {
    pub username: String,
    pub created_count: u64,
    pub percentage: f64,
    pub creator_type: ContributorType,
}

/// Creators ordered by article count (descending, then name); percentages
/// are relative to the whole corpus.
pub fn rank_creators(articles: &[ArticleRecord], registry: &BotRegistry, top_n: usize) -> Vec<CreatorRank> {
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for a in articles {
        *counts.entry(a.metadata.creator_name.as_str()).or_insert(0) += 1;
    }
    let total = articles.len() as f64;
    let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked
        .into_iter()
        .take(top_n)
        .map(|(name, count)| CreatorRank {
            username: String::from(name),
            created_count: count,
            percentage: count as f64 / total * 100.0,
            creator_type: classify_contributor(name, registry, false),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypePercentages {
    pub creators_bot: f64,
    pub creators_human: f64,
    pub editors_bot: f64,
    pub editors_human: f64,
    pub articles: u64,
}

/// Creator percentages count creator types directly; editor percentages
/// count articles by their bot-edited / human-edited classification.
pub fn creator_editor_percentages(articles: &[ArticleRecord], registry: &BotRegistry) -> Result<TypePercentages> {
    if articles.is_empty() {
        return Err(Error::Empty("corpus"));
    }
    let mut bot_created = 0u64;
    let mut bot_edited = 0u64;
    for a in articles {
        if classify_contributor(&a.metadata.creator_name, registry, false) == ContributorType::Bot {
            bot_created += 1;
        }
        if breakdown_article(a.page_id, &a.metadata, registry)?.edited_by == EditedBy::BotEdited {
            bot_edited += 1;
        }
    }
    let n = articles.len() as u64;
    let pct = |c: u64| c as f64 / n as f64 * 100.0;
    Ok(TypePercentages {
        creators_bot: pct(bot_created),
        creators_human: pct(n - bot_created),
        editors_bot: pct(bot_edited),
        editors_human: pct(n - bot_edited),
        articles: n,
    })
}
