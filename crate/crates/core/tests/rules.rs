use std::collections::BTreeSet;

use chrono::NaiveDate;
use proptest::prelude::*;
use rand::Rng;
use wikiscan_core::article::{ArticleMetadata, ArticleRecord, BotRegistry, MetaField, TopEditor};
use wikiscan_core::contrib::{
    breakdown_article, classify_contributor, creator_editor_percentages, rank_creators, ContributorType, EditedBy,
};
use wikiscan_core::rules::{
    apply_after_rules, apply_before_rules, label_corpus, sample_training_pool, Chain, Label, LabeledArticle,
    RuleConfig, RuleId,
};
use wikiscan_core::seed::rng;
use wikiscan_core::Error;

fn d(y: i32, m: u32, day: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, day).unwrap()
}

fn registry() -> BotRegistry {
    BotRegistry::new("arz", ["JarBot", "BotA", "BotB"])
}

fn article(page_id: u64, created: NaiveDate, edits: u64, editors: &[&str], creator: &str) -> ArticleRecord {
    ArticleRecord {
        page_id,
        title: format!("T{page_id}"),
        text: String::new(),
        metadata: ArticleMetadata {
            total_edits: edits,
            total_editors: editors.len() as u64,
            top_editors: editors.iter().map(|e| TopEditor::new(*e, 1)).collect(),
            creator_name: creator.into(),
            creation_date: created,
            ..Default::default()
        },
    }
}

#[test]
fn contributor_types() {
    let reg = registry();
    assert_eq!(classify_contributor("JarBot", &reg, false), ContributorType::Bot);
    assert_eq!(classify_contributor("HitomiAkane", &reg, false), ContributorType::Human);
    assert_eq!(classify_contributor("FooBot", &reg, true), ContributorType::Bot);
    assert_eq!(classify_contributor("FooBot", &reg, false), ContributorType::Human);
}

#[test]
fn editor_shares() {
    let reg = registry();
    let b = breakdown_article(1, &article(1, d(2020, 1, 1), 3, &["JarBot", "UserX", "UserY"], "x").metadata, &reg)
        .unwrap();
    assert!((b.bot_editor_share - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(b.edited_by, EditedBy::HumanEdited);
    let b = breakdown_article(1, &article(1, d(2020, 1, 1), 3, &["BotA", "BotB", "UserX"], "x").metadata, &reg)
        .unwrap();
    assert_eq!(b.edited_by, EditedBy::BotEdited);
    let b = breakdown_article(1, &article(1, d(2020, 1, 1), 3, &["BotA", "UserX"], "x").metadata, &reg).unwrap();
    assert_eq!(b.bot_editor_share, 0.5);
    assert_eq!(b.edited_by, EditedBy::HumanEdited);
    let err = breakdown_article(7, &article(7, d(2020, 1, 1), 3, &[], "x").metadata, &reg);
    assert_eq!(err, Err(Error::MissingField { page_id: 7, field: MetaField::TopEditors }));
}

#[test]
fn creator_ranking() {
    let reg = registry();
    let mut arts: Vec<ArticleRecord> = (0..885).map(|i| article(i, d(2020, 1, 1), 1, &["U"], "X")).collect();
    arts.extend((885..1000).map(|i| article(i, d(2020, 1, 1), 1, &["U"], &format!("other{i}"))));
    let top = rank_creators(&arts, &reg, 5);
    assert_eq!((top[0].username.as_str(), top[0].created_count), ("X", 885));
    assert!((top[0].percentage - 88.5).abs() < 1e-9);
    assert!(top.windows(2).all(|w| w[0].created_count >= w[1].created_count));

    let distinct: Vec<ArticleRecord> = (0..8).map(|i| article(i, d(2020, 1, 1), 1, &["U"], &format!("c{i}"))).collect();
    assert!(rank_creators(&distinct, &reg, 8).iter().all(|r| (r.percentage - 12.5).abs() < 1e-12));
}

#[test]
fn scaled_creator_table() {
    // Top Egyptian creators divided by 1000, the rest spread over singletons.
    let rows = [("HitomiAkane", 1436), ("Al-Dandoon", 113), ("Raafat", 18), ("Ghaly", 7), ("Hamdy", 3)];
    let total = 1622;
    let mut arts = Vec::new();
    for (name, n) in rows {
        for _ in 0..n {
            let id = arts.len() as u64;
            arts.push(article(id, d(2020, 1, 1), 1, &["U"], name));
        }
    }
    while arts.len() < total {
        let id = arts.len() as u64;
        arts.push(article(id, d(2020, 1, 1), 1, &["U"], &format!("u{id}")));
    }
    let top = rank_creators(&arts, &registry(), 5);
    assert!((top[0].percentage - 88.6).abs() <= 0.1);
    assert!((top[1].percentage - 7.0).abs() <= 0.1);
}

#[test]
fn type_percentages() {
    let reg = registry();
    let arts: Vec<ArticleRecord> = (0..10).map(|i| article(i, d(2020, 1, 1), 1, &["U", "BotA", "BotB"], "H")).collect();
    let p = creator_editor_percentages(&arts, &reg).unwrap();
    assert_eq!(p.creators_human, 100.0);
    assert_eq!(p.editors_bot, 100.0);
    assert!(creator_editor_percentages(&[], &reg).is_err());
}

fn outcome_before(a: &ArticleRecord) -> Option<RuleId> {
    let b = breakdown_article(a.page_id, &a.metadata, &registry()).unwrap();
    apply_before_rules(a, &b, &RuleConfig::default()).unwrap().first_failure
}

fn outcome_after(a: &ArticleRecord) -> Option<RuleId> {
    let b = breakdown_article(a.page_id, &a.metadata, &registry()).unwrap();
    apply_after_rules(a, &b, &RuleConfig::default()).unwrap().first_failure
}

#[test]
fn rule_examples() {
    let humans = ["H1", "H2", "H3", "H4", "BotA"];
    assert_eq!(outcome_before(&article(1, d(2018, 5, 1), 10, &humans, "x")), None);
    assert_eq!(outcome_before(&article(1, d(2018, 5, 1), 5, &humans, "x")), Some(RuleId::before(2)));
    assert_eq!(outcome_before(&article(1, d(2019, 12, 1), 10, &humans, "x")), Some(RuleId::before(1)));
    assert_eq!(outcome_after(&article(1, d(2021, 6, 1), 2, &["BotA"], "HitomiAkane")), None);
    assert_eq!(outcome_after(&article(1, d(2021, 6, 1), 2, &["BotA"], "Raafat")), Some(RuleId::after(5)));
    assert_eq!(outcome_after(&article(1, d(2023, 12, 15), 2, &["BotA"], "HitomiAkane")), Some(RuleId::after(1)));
    // 29 days before the snapshot is too young; the window is closed at its end.
    assert_eq!(outcome_after(&article(1, d(2023, 12, 3), 2, &["BotA"], "HitomiAkane")), Some(RuleId::after(1)));
    assert_eq!(outcome_after(&article(1, d(2023, 11, 30), 2, &["BotA"], "HitomiAkane")), None);
    assert_eq!(outcome_after(&article(1, d(2019, 12, 1), 2, &["BotA"], "HitomiAkane")), None);
    // Shares at exactly one half pass both share rules.
    assert_eq!(outcome_after(&article(1, d(2021, 6, 1), 2, &["BotA", "U"], "HitomiAkane")), None);
    assert_eq!(outcome_before(&article(1, d(2018, 5, 1), 10, &["H1", "H2", "BotA", "BotB"], "x")), None);
}

#[test]
fn missing_field_is_named() {
    let mut a = article(3, d(2018, 5, 1), 10, &["H1"], "x");
    a.metadata.missing.insert(MetaField::CreationDate);
    let b = breakdown_article(3, &a.metadata, &registry()).unwrap();
    assert_eq!(
        apply_before_rules(&a, &b, &RuleConfig::default()),
        Err(Error::MissingField { page_id: 3, field: MetaField::CreationDate })
    );
}

/// Random metadata concentrated on the rule boundaries.
fn random_article(r: &mut impl Rng, page_id: u64) -> ArticleRecord {
    let dates = [d(2010, 3, 4), d(2019, 11, 30), d(2019, 12, 1), d(2021, 6, 1), d(2023, 11, 30), d(2023, 12, 2), d(2023, 12, 3), d(2023, 12, 15)];
    let created = dates[r.random_range(0..dates.len())];
    let editors: Vec<String> = (0..r.random_range(1..=6))
        .map(|i| if r.random_bool(0.4) { ["JarBot", "BotA", "BotB"][i % 3].to_string() } else { format!("H{i}") })
        .collect();
    let refs: Vec<&str> = editors.iter().map(String::as_str).collect();
    let creator = ["HitomiAkane", "Al-Dandoon", "Raafat", "JarBot"][r.random_range(0..4)];
    let edits = r.random_range(refs.len() as u64..=9);
    article(page_id, created, edits, &refs, creator)
}

/// The listed rules, evaluated directly on the raw fields.
fn oracle(a: &ArticleRecord) -> (Label, Option<usize>, Option<usize>) {
    let m = &a.metadata;
    let distinct: BTreeSet<&str> = m.top_editors.iter().map(|e| e.username.as_str()).collect();
    let bots = distinct.iter().filter(|u| ["JarBot", "BotA", "BotB"].contains(u)).count() as f64;
    let bot_share = bots / distinct.len() as f64;
    let age = (d(2024, 1, 1) - m.creation_date).num_days();
    let before = [
        m.creation_date < d(2019, 12, 1),
        m.total_edits > 5,
        m.total_editors > 3,
        1.0 - bot_share >= 0.5,
    ];
    let after = [
        m.creation_date >= d(2019, 12, 1) && m.creation_date < d(2023, 12, 1) && age >= 30,
        m.total_edits < 5,
        m.total_editors < 3,
        bot_share >= 0.5,
        m.creator_name == "HitomiAkane" || m.creator_name == "Al-Dandoon",
    ];
    let bf = before.iter().position(|ok| !ok);
    let af = after.iter().position(|ok| !ok);
    let label = match (bf, af) {
        (None, _) => Label::HumanGenerated,
        (_, None) => Label::TemplateTranslated,
        _ => Label::Uncategorized,
    };
    (label, bf, af)
}

#[test]
fn label_corpus_matches_predicates() {
    let mut r = rng(42);
    let arts: Vec<ArticleRecord> = (0..1000).map(|i| random_article(&mut r, i)).collect();
    let rep = label_corpus(&arts, &registry(), &RuleConfig::default()).unwrap();
    let mut before = [0u64; 4];
    let mut after = [0u64; 5];
    let mut labels = [0u64; 3];
    for (a, l) in arts.iter().zip(&rep.labeled) {
        let (label, bf, af) = oracle(a);
        assert_eq!(l.label, label, "page {}", a.page_id);
        if let Some(i) = bf {
            before[i] += 1;
        }
        if let Some(i) = af {
            after[i] += 1;
        }
        labels[label as usize] += 1;
    }
    assert_eq!(rep.attrition.before_filtered, before);
    assert_eq!(rep.attrition.after_filtered, after);
    assert_eq!(
        [rep.attrition.human_generated, rep.attrition.template_translated, rep.attrition.uncategorized],
        labels
    );
    assert!(rep.attrition.reconciles());
    assert!(labels.iter().all(|&c| c > 0), "fixture should exercise every label: {labels:?}");
    for chain in [Chain::Before, Chain::After] {
        let s = rep.attrition.survivors(chain);
        assert!(s.windows(2).all(|w| w[1] <= w[0]));
    }
}

#[test]
fn old_busy_corpus_and_empty() {
    let arts: Vec<ArticleRecord> =
        (0..20).map(|i| article(i, d(2010, 1, 1), 40, &["H1", "H2", "H3", "H4", "H5"], "Raafat")).collect();
    let rep = label_corpus(&arts, &registry(), &RuleConfig::default()).unwrap();
    assert_eq!(rep.attrition.human_generated, 20);
    assert_eq!(rep.attrition.after_filtered, [20, 0, 0, 0, 0]);
    let empty = label_corpus(&[], &registry(), &RuleConfig::default()).unwrap();
    assert_eq!(empty.attrition.total, 0);
    assert!(empty.labeled.is_empty());
}

fn labeled(ids: impl Iterator<Item = (u64, Label)>) -> Vec<LabeledArticle> {
    ids.map(|(page_id, label)| LabeledArticle { page_id, label, matched_rules: vec![], rejected_by: vec![] }).collect()
}

#[test]
fn training_pool_sampling() {
    let l = labeled((0..11_126).map(|i| (i, Label::HumanGenerated)).chain((20_000..175_275).map(|i| (i, Label::TemplateTranslated))));
    let pool = sample_training_pool(&l, 10_000, 3).unwrap();
    assert_eq!(pool.human_generated.len(), 10_000);
    assert_eq!(pool.template_translated.len(), 10_000);
    assert_eq!(pool, sample_training_pool(&l, 10_000, 3).unwrap());

    let small = labeled((0..5).map(|i| (i, Label::HumanGenerated)).chain((5..10).map(|i| (i, Label::TemplateTranslated))));
    for seed in 0..5 {
        let p = sample_training_pool(&small, 5, seed).unwrap();
        assert_eq!(p.human_generated, [0, 1, 2, 3, 4]);
    }
    assert!(matches!(sample_training_pool(&small, 6, 0), Err(Error::Deficit { available: 5, requested: 6, .. })));
}

proptest! {
    #[test]
    fn relaxing_edit_threshold_never_shrinks_before_set(seed in 0u64..1000) {
        let mut r = rng(seed);
        let arts: Vec<ArticleRecord> = (0..200).map(|i| random_article(&mut r, i)).collect();
        let strict = RuleConfig::default();
        let relaxed = RuleConfig { before_min_edits: 4, ..RuleConfig::default() };
        let a = label_corpus(&arts, &registry(), &strict).unwrap();
        let b = label_corpus(&arts, &registry(), &relaxed).unwrap();
        for (x, y) in a.labeled.iter().zip(&b.labeled) {
            if x.label == Label::HumanGenerated {
                prop_assert_eq!(y.label, Label::HumanGenerated);
            }
        }
    }

    #[test]
    fn chains_never_both_pass(seed in 0u64..1000) {
        let mut r = rng(seed);
        for i in 0..100 {
            let a = random_article(&mut r, i);
            prop_assert!(outcome_before(&a).is_some() || outcome_after(&a).is_some());
        }
    }

    #[test]
    fn registry_growth_never_turns_bots_human(name in "[A-Za-z]{1,8}", extra in "[A-Za-z]{1,8}") {
        let small = registry();
        let mut names: Vec<String> = small.bot_usernames.iter().cloned().collect();
        names.push(extra);
        let big = BotRegistry::new("arz", names);
        if classify_contributor(&name, &small, false) == ContributorType::Bot {
            prop_assert_eq!(classify_contributor(&name, &big, false), ContributorType::Bot);
        }
    }

    #[test]
    fn breakdown_ignores_editor_order(mut editors in proptest::collection::vec("(JarBot|BotA|U[0-9])", 1..8)) {
        let refs: Vec<&str> = editors.iter().map(String::as_str).collect();
        let a = breakdown_article(1, &article(1, d(2020, 1, 1), 9, &refs, "x").metadata, &registry()).unwrap();
        editors.reverse();
        let refs: Vec<&str> = editors.iter().map(String::as_str).collect();
        let b = breakdown_article(1, &article(1, d(2020, 1, 1), 9, &refs, "x").metadata, &registry()).unwrap();
        prop_assert_eq!(a, b);
    }
}
