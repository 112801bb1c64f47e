//! Heuristic filtration rules that label articles as written before the
//! template translation campaign (human-generated) or produced by it
//! (template-translated). Everything else stays uncategorized with the rule
//! that rejected it.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::article::{ArticleRecord, BotRegistry, MetaField};
use crate::contrib::{breakdown_article, ContributorBreakdown};
use crate::error::{invalid, Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleConfig {
    /// Before-chain creation cutoff (exclusive) and start of the after window.
    pub before_cutoff: NaiveDate,
    /// End of the after-chain creation window (exclusive).
    pub after_end: NaiveDate,
    pub young_age_days: i64,
    pub snapshot_date: NaiveDate,
    /// Before chain: `total_edits > before_min_edits`.
    pub before_min_edits: u64,
    /// Before chain: `total_editors > before_min_editors`.
    pub before_min_editors: u64,
    /// After chain: `total_edits < after_max_edits`.
    pub after_max_edits: u64,
    /// After chain: `total_editors < after_max_editors`.
    pub after_max_editors: u64,
    /// Minimum human share (before) and bot share (after), inclusive.
    pub share_threshold: f64,
    pub flagged_creators: BTreeSet<String>,
}

fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid calendar date")
}

impl Default for RuleConfig {
    fn default() -> Self {
        RuleConfig {
            before_cutoff: ymd(2019, 12, 1),
            after_end: ymd(2023, 12, 1),
            young_age_days: 30,
            snapshot_date: ymd(2024, 1, 1),
            before_min_edits: 5,
            before_min_editors: 3,
            after_max_edits: 5,
            after_max_editors: 3,
            share_threshold: 0.5,
            flagged_creators: ["HitomiAkane", "Al-Dandoon"].into_iter().map(String::from).collect(),
        }
    }
}

impl RuleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.after_end <= self.before_cutoff {
            return Err(invalid("after window end must follow the before cutoff"));
        }
        if self.young_age_days < 0 {
            return Err(invalid("young_age_days must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Chain {
    Before,
    After,
}

impl Chain {
    pub fn len(self) -> usize {
        match self {
            Chain::Before => 4,
            Chain::After => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Chain::Before => "before",
            Chain::After => "after",
        }
    }
}

/// A rule position within its chain, 1-based as listed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RuleId {
    pub chain: Chain,
    pub index: u8,
}

impl RuleId {
    pub const fn before(index: u8) -> Self {
        RuleId { chain: Chain::Before, index }
    }

    pub const fn after(index: u8) -> Self {
        RuleId { chain: Chain::After, index }
    }

    pub fn description(self) -> &'static str {
        match (self.chain, self.index) {
            (Chain::Before, 1) => "created before the cutoff",
            (Chain::Before, 2) => "more than the minimum edits",
            (Chain::Before, 3) => "more than the minimum editors",
            (Chain::Before, 4) => "human editor share at or above threshold",
            (Chain::After, 1) => "created inside the window and old enough",
            (Chain::After, 2) => "fewer than the maximum edits",
            (Chain::After, 3) => "fewer than the maximum editors",
            (Chain::After, 4) => "bot editor share at or above threshold",
            (Chain::After, 5) => "created by a flagged account",
            _ => "unknown rule",
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.chain.name(), self.index)
    }
}

impl FromStr for RuleId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (chain, idx) = s.split_once('-').ok_or_else(|| invalid("rule id must look like `before-2`"))?;
        let chain = match chain {
            "before" => Chain::Before,
            "after" => Chain::After,
            _ => return Err(invalid("unknown rule chain")),
        };
        let index: u8 = idx.parse().map_err(|_| invalid("rule index is not a number"))?;
        if index == 0 || usize::from(index) > chain.len() {
            return Err(invalid("rule index out of range"));
        }
        Ok(RuleId { chain, index })
    }
}

impl Serialize for RuleId {
    fn serialize<S: Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RuleId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let s: String = Deserialize::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainOutcome {
    pub passed: Vec<RuleId>,
    pub first_failure: Option<RuleId>,
}

impl ChainOutcome {
    pub fn is_pass(&self) -> bool {
        self.first_failure.is_none()
    }
}

fn run_chain(chain: Chain, checks: &[bool]) -> ChainOutcome {
    let mut passed = Vec::new();
    for (i, &ok) in checks.iter().enumerate() {
        let id = RuleId { chain, index: (i + 1) as u8 };
        if !ok {
            return ChainOutcome { passed, first_failure: Some(id) };
        }
        passed.push(id);
    }
    ChainOutcome { passed, first_failure: None }
}

fn require(article: &ArticleRecord, fields: &[MetaField]) -> Result<()> {
    fields.iter().try_for_each(|&f| article.metadata.require(article.page_id, f))
}

pub fn apply_before_rules(
    article: &ArticleRecord,
    breakdown: &ContributorBreakdown,
    cfg: &RuleConfig,
) -> Result<ChainOutcome> {
    require(article, &[MetaField::CreationDate, MetaField::TotalEdits, MetaField::TotalEditors, MetaField::TopEditors])?;
    let m = &article.metadata;
    Ok(run_chain(
        Chain::Before,
        &[
            m.creation_date < cfg.before_cutoff,
            m.total_edits > cfg.before_min_edits,
            m.total_editors > cfg.before_min_editors,
            breakdown.human_editor_share() >= cfg.share_threshold,
        ],
    ))
}

pub fn apply_after_rules(
    article: &ArticleRecord,
    breakdown: &ContributorBreakdown,
    cfg: &RuleConfig,
) -> Result<ChainOutcome> {
    require(
        article,
        &[
            MetaField::CreationDate,
            MetaField::TotalEdits,
            MetaField::TotalEditors,
            MetaField::TopEditors,
            MetaField::CreatorName,
        ],
    )?;
    let m = &article.metadata;
    let age = (cfg.snapshot_date - m.creation_date).num_days();
    Ok(run_chain(
        Chain::After,
        &[
            m.creation_date >= cfg.before_cutoff && m.creation_date < cfg.after_end && age >= cfg.young_age_days,
            m.total_edits < cfg.after_max_edits,
            m.total_editors < cfg.after_max_editors,
            breakdown.bot_editor_share >= cfg.share_threshold,
            cfg.flagged_creators.contains(&m.creator_name),
        ],
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Label {
    HumanGenerated,
    TemplateTranslated,
    Uncategorized,
}

impl Label {
    pub fn name(self) -> &'static str {
        match self {
            Label::HumanGenerated => "human-generated",
            Label::TemplateTranslated => "template-translated",
            Label::Uncategorized => "uncategorized",
        }
    }

    /// Binary class used for training: 0 = human-generated,
    /// 1 = template-translated.
    pub fn class(self) -> Option<u8> {
        match self {
            Label::HumanGenerated => Some(0),
            Label::TemplateTranslated => Some(1),
            Label::Uncategorized => None,
        }
    }

    pub fn from_class(class: u8) -> Label {
        if class == 1 {
            Label::TemplateTranslated
        } else {
            Label::HumanGenerated
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledArticle {
    pub page_id: u64,
    pub label: Label,
    /// Rules passed, before chain first.
    pub matched_rules: Vec<RuleId>,
    /// First failing rule of each chain that did not pass.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rejected_by: Vec<RuleId>,
}

pub fn label_article(article: &ArticleRecord, breakdown: &ContributorBreakdown, cfg: &RuleConfig) -> Result<LabeledArticle> {
    evaluate(article, breakdown, cfg).map(|(l, _, _)| l)
}

fn evaluate(
    article: &ArticleRecord,
    breakdown: &ContributorBreakdown,
    cfg: &RuleConfig,
) -> Result<(LabeledArticle, Option<RuleId>, Option<RuleId>)> {
    let before = apply_before_rules(article, breakdown, cfg)?;
    let after = apply_after_rules(article, breakdown, cfg)?;
    let (bf, af) = (before.first_failure, after.first_failure);
    let label = match (bf.is_none(), af.is_none()) {
        (true, true) => return Err(Error::Consistency(article.page_id)),
        (true, false) => Label::HumanGenerated,
        (false, true) => Label::TemplateTranslated,
        (false, false) => Label::Uncategorized,
    };
    let matched_rules = match label {
        Label::HumanGenerated => before.passed,
        Label::TemplateTranslated => after.passed,
        Label::Uncategorized => before.passed.into_iter().chain(after.passed).collect(),
    };
    let rejected_by = match label {
        Label::Uncategorized => bf.into_iter().chain(af).collect(),
        _ => Vec::new(),
    };
    Ok((LabeledArticle { page_id: article.page_id, label, matched_rules, rejected_by }, bf, af))
}

/// Per-rule attrition for both chains.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attrition {
    pub total: u64,
    /// `before_filtered[i]`: articles whose first before-chain failure is
    /// rule `i + 1`.
    pub before_filtered: [u64; 4],
    pub after_filtered: [u64; 5],
    pub human_generated: u64,
    pub template_translated: u64,
    pub uncategorized: u64,
}

impl Attrition {
    pub fn record(&mut self, labeled: &LabeledArticle, before: Option<RuleId>, after: Option<RuleId>) {
        self.total += 1;
        if let Some(r) = before {
            self.before_filtered[usize::from(r.index) - 1] += 1;
        }
        if let Some(r) = after {
            self.after_filtered[usize::from(r.index) - 1] += 1;
        }
        match labeled.label {
            Label::HumanGenerated => self.human_generated += 1,
            Label::TemplateTranslated => self.template_translated += 1,
            Label::Uncategorized => self.uncategorized += 1,
        }
    }

    pub fn merge(&mut self, o: &Attrition) {
        self.total += o.total;
        for (a, b) in self.before_filtered.iter_mut().zip(o.before_filtered) {
            *a += b;
        }
        for (a, b) in self.after_filtered.iter_mut().zip(o.after_filtered) {
            *a += b;
        }
        self.human_generated += o.human_generated;
        self.template_translated += o.template_translated;
        self.uncategorized += o.uncategorized;
    }

    /// Articles still in the chain after each rule, starting from `total`.
    pub fn survivors(&self, chain: Chain) -> Vec<u64> {
        let filtered: &[u64] = match chain {
            Chain::Before => &self.before_filtered,
            Chain::After => &self.after_filtered,
        };
        let mut left = self.total;
        filtered
            .iter()
            .map(|f| {
                left -= f;
                left
            })
            .collect()
    }

    pub fn reconciles(&self) -> bool {
        self.human_generated + self.template_translated + self.uncategorized == self.total
            && self.survivors(Chain::Before).last() == Some(&self.human_generated)
            && self.survivors(Chain::After).last() == Some(&self.template_translated)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelingReport {
    pub labeled: Vec<LabeledArticle>,
    pub attrition: Attrition,
}

pub fn label_corpus(articles: &[ArticleRecord], registry: &BotRegistry, cfg: &RuleConfig) -> Result<LabelingReport> {
    cfg.validate()?;
    let mut labeled = Vec::with_capacity(articles.len());
    let mut attrition = Attrition::default();
    for a in articles {
        let breakdown = breakdown_article(a.page_id, &a.metadata, registry)?;
        let (l, before, after) = evaluate(a, &breakdown, cfg)?;
        attrition.record(&l, before, after);
        labeled.push(l);
    }
    Ok(LabelingReport { labeled, attrition })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingPool {
    pub human_generated: Vec<u64>,
    pub template_translated: Vec<u64>,
}

impl TrainingPool {
    /// `(page_id, class)` pairs, human-generated first.
    pub fn examples(&self) -> impl Iterator<Item = (u64, u8)> + '_ {
        self.human_generated.iter().map(|&id| (id, 0)).chain(self.template_translated.iter().map(|&id| (id, 1)))
    }

    pub fn len(&self) -> usize {
        self.human_generated.len() + self.template_translated.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn draw(ids: &mut Vec<u64>, n: usize, class: &'static str, rng: &mut seed::Rng) -> Result<Vec<u64>> {
    if ids.len() < n {
        return Err(Error::Deficit { class, available: ids.len(), requested: n });
    }
    ids.sort_unstable();
    let (picked, _) = ids.partial_shuffle(rng, n);
    let mut picked = picked.to_vec();
    picked.sort_unstable();
    Ok(picked)
}

/// Uniform sample without replacement of `per_class` ids from each labeled
/// class. Output ids are sorted within each class.
pub fn sample_training_pool(labeled: &[LabeledArticle], per_class: usize, seed: u64) -> Result<TrainingPool> {
    let mut human: Vec<u64> = labeled.iter().filter(|l| l.label == Label::HumanGenerated).map(|l| l.page_id).collect();
    let mut tmpl: Vec<u64> =
        labeled.iter().filter(|l| l.label == Label::TemplateTranslated).map(|l| l.page_id).collect();
    let mut rng = seed::rng(seed);
    let human_generated = draw(&mut human, per_class, Label::HumanGenerated.name(), &mut rng)?;
    let template_translated = draw(&mut tmpl, per_class, Label::TemplateTranslated.name(), &mut rng)?;
    Ok(TrainingPool { human_generated, template_translated })
}
