//! Supervised models over assembled feature vectors, plus the split, CV and
//! ablation protocol.

mod forest;
mod gbt;
mod gnb;
mod linear;
pub mod metrics;
pub mod split;
mod tree;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

pub use forest::{ForestParams, RandomForest};
pub use gbt::{fit_traced as fit_gbt_traced, logistic_loss, BoostedTrees, GbtParams};
pub use gnb::{GaussianNb, GnbParams};
pub use linear::{logistic_gradient, logistic_objective, LinearModel, LogRegParams, SvmParams};
pub use metrics::{roc_auc, Confusion};
pub use split::{stratified_kfold, stratified_split};
pub use tree::{Node, Tree};

use crate::error::{invalid, Error, Result};
use crate::features::{ablation_sets, fields_name, fit_scaler, FeatureConfig, FeatureVector, MetaFeature, ScalerParams};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelType {
    Logreg,
    LinearSvm,
    Gnb,
    RandomForest,
    Gbt,
}

impl ModelType {
    pub const ALL: [ModelType; 5] =
        [ModelType::Logreg, ModelType::LinearSvm, ModelType::Gnb, ModelType::RandomForest, ModelType::Gbt];

    pub fn name(self) -> &'static str {
        match self {
            ModelType::Logreg => "logreg",
            ModelType::LinearSvm => "linear-svm",
            ModelType::Gnb => "gnb",
            ModelType::RandomForest => "random-forest",
            ModelType::Gbt => "gbt",
        }
    }

    /// Standardization is on for everything but the tree ensembles.
    pub fn default_standardize(self) -> bool {
        !matches!(self, ModelType::RandomForest | ModelType::Gbt)
    }
}

impl fmt::Display for ModelType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ModelType::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| invalid(alloc::format!("unknown model type `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub logreg: LogRegParams,
    pub svm: SvmParams,
    pub gnb: GnbParams,
    pub forest: ForestParams,
    pub gbt: GbtParams,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Parameters {
    Logreg(LinearModel),
    LinearSvm(LinearModel),
    Gnb(GaussianNb),
    RandomForest(RandomForest),
    Gbt(BoostedTrees),
}

impl Parameters {
    /// P(class 1) for logreg/gnb/gbt, sigmoid of the margin for the SVM,
    /// vote fraction for the forest.
    pub fn score(&self, x: &[f64]) -> f64 {
        match self {
            Parameters::Logreg(m) | Parameters::LinearSvm(m) => m.score(x),
            Parameters::Gnb(m) => m.score(x),
            Parameters::RandomForest(m) => m.score(x),
            Parameters::Gbt(m) => m.score(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub n_train: usize,
    pub class_counts: [usize; 2],
    pub dim: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub schema_version: u32,
    pub model_type: ModelType,
    pub feature_config: FeatureConfig,
    pub scaler: Option<ScalerParams>,
    pub parameters: Parameters,
    pub summary: TrainingSummary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: u8,
    pub score: f64,
}

impl Prediction {
    pub fn from_score(score: f64) -> Self {
        Prediction { label: u8::from(score >= 0.5), score }
    }
}

impl TrainedModel {
    pub fn dim(&self) -> usize {
        self.summary.dim
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        let score = match &self.scaler {
            Some(s) => self.parameters.score(&s.transform(x)?),
            None => self.parameters.score(x),
        };
        Ok(Prediction::from_score(score))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub features: FeatureVector,
    pub label: u8,
}

fn check_examples(examples: &[LabeledExample]) -> Result<(usize, [usize; 2])> {
    let first = examples.first().ok_or(Error::Empty("training set"))?;
    let d = first.features.values.len();
    let mut counts = [0usize; 2];
    for e in examples {
        if e.features.values.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: e.features.values.len() });
        }
        if e.label > 1 {
            return Err(invalid("labels must be 0 or 1"));
        }
        counts[e.label as usize] += 1;
    }
    Ok((d, counts))
}

pub fn train(
    model_type: ModelType,
    examples: &[LabeledExample],
    feature_config: &FeatureConfig,
    hp: &Hyperparams,
) -> Result<TrainedModel> {
    let (d, counts) = check_examples(examples)?;
    if counts.contains(&0) {
        return Err(Error::SingleClass);
    }
    if d == 0 {
        return Err(invalid("feature vectors are empty"));
    }
    if d != feature_config.dim() {
        return Err(Error::DimensionMismatch { expected: feature_config.dim(), found: d });
    }
    let raw: Vec<Vec<f64>> = examples.iter().map(|e| e.features.values.clone()).collect();
    let labels: Vec<u8> = examples.iter().map(|e| e.label).collect();
    let scaler = if feature_config.standardize.unwrap_or(model_type.default_standardize()) {
        Some(fit_scaler(&raw)?)
    } else {
        None
    };
    let rows = match &scaler {
        Some(s) => raw.iter().map(|r| s.transform(r)).collect::<Result<Vec<_>>>()?,
        None => raw,
    };
    let parameters = match model_type {
        ModelType::Logreg => Parameters::Logreg(linear::fit_logreg(&rows, &labels, &hp.logreg)),
        ModelType::LinearSvm => Parameters::LinearSvm(linear::fit_svm(&rows, &labels, &hp.svm, hp.seed)),
        ModelType::Gnb => Parameters::Gnb(gnb::fit(&rows, &labels, &hp.gnb)),
        ModelType::RandomForest => Parameters::RandomForest(forest::fit(&rows, &labels, &hp.forest, hp.seed)),
        ModelType::Gbt => Parameters::Gbt(gbt::fit(&rows, &labels, &hp.gbt)),
    };
    Ok(TrainedModel {
        schema_version: SCHEMA_VERSION,
        model_type,
        feature_config: feature_config.clone(),
        scaler,
        parameters,
        summary: TrainingSummary { n_train: examples.len(), class_counts: counts, dim: d, seed: hp.seed },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub confusion: Confusion,
    /// `None` when the test set holds a single class.
    pub roc_auc: Option<f64>,
    #[serde(default)]
    pub cv_fold_accuracies: Vec<f64>,
}

pub fn evaluate(model: &TrainedModel, test: &[LabeledExample]) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::Empty("test set"));
    }
    let mut scores = Vec::with_capacity(test.len());
    let mut predicted = Vec::with_capacity(test.len());
    for e in test {
        let p = model.predict(&e.features.values)?;
        scores.push(p.score);
        predicted.push(p.label);
    }
    let actual: Vec<u8> = test.iter().map(|e| e.label).collect();
    let confusion = Confusion::from_predictions(&actual, &predicted);
    let roc_auc = match metrics::roc_auc(&scores, &actual) {
        Ok(a) => Some(a),
        Err(Error::Undefined(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(EvalReport { accuracy: confusion.accuracy(), confusion, roc_auc, cv_fold_accuracies: Vec::new() })
}

fn pick(examples: &[LabeledExample], idx: &[usize]) -> Vec<LabeledExample> {
    idx.iter().map(|&i| examples[i].clone()).collect()
}

/// Per-fold accuracies of stratified k-fold cross-validation.
pub fn cross_validate(
    model_type: ModelType,
    examples: &[LabeledExample],
    feature_config: &FeatureConfig,
    hp: &Hyperparams,
    k: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let labels: Vec<u8> = examples.iter().map(|e| e.label).collect();
    let folds = stratified_kfold(&labels, k, seed)?;
    let mut acc = Vec::with_capacity(k);
    for (f, test_idx) in folds.iter().enumerate() {
        let train_idx: Vec<usize> =
            folds.iter().enumerate().filter(|(g, _)| *g != f).flat_map(|(_, v)| v.iter().copied()).collect();
        let model = train(model_type, &pick(examples, &train_idx), feature_config, hp)?;
        acc.push(evaluate(&model, &pick(examples, test_idx))?.accuracy);
    }
    Ok(acc)
}

/// 80/20 stratified holdout: train on the split, evaluate on the rest.
pub fn holdout(
    model_type: ModelType,
    examples: &[LabeledExample],
    feature_config: &FeatureConfig,
    hp: &Hyperparams,
    test_fraction: f64,
    seed: u64,
) -> Result<(TrainedModel, EvalReport)> {
    let labels: Vec<u8> = examples.iter().map(|e| e.label).collect();
    let (train_idx, test_idx) = stratified_split(&labels, test_fraction, seed)?;
    let model = train(model_type, &pick(examples, &train_idx), feature_config, hp)?;
    let report = evaluate(&model, &pick(examples, &test_idx))?;
    Ok((model, report))
}

/// Keeps the columns of `fields` from vectors laid out as all five
/// metadata features in A..E order.
pub fn project_metadata(examples: &[LabeledExample], fields: &[MetaFeature]) -> Result<Vec<LabeledExample>> {
    let cols: Vec<usize> = fields.iter().map(|f| MetaFeature::ALL.iter().position(|g| g == f).unwrap_or(0)).collect();
    examples
        .iter()
        .map(|e| {
            if e.features.values.len() != MetaFeature::ALL.len() {
                return Err(Error::DimensionMismatch { expected: MetaFeature::ALL.len(), found: e.features.values.len() });
            }
            let values = cols.iter().map(|&c| e.features.values[c]).collect();
            Ok(LabeledExample { features: FeatureVector { page_id: e.features.page_id, values }, label: e.label })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub fields: String,
    pub accuracy: f64,
    pub roc_auc: Option<f64>,
}

/// One stratified holdout per metadata ablation set (A..E, A+B, C+D+E, All),
/// all with the same split seed. `examples` carry all five metadata columns.
pub fn run_ablation(
    model_type: ModelType,
    examples: &[LabeledExample],
    hp: &Hyperparams,
    standardize: Option<bool>,
    test_fraction: f64,
    seed: u64,
) -> Result<Vec<AblationRow>> {
    ablation_sets()
        .into_iter()
        .map(|fields| {
            let data = project_metadata(examples, &fields)?;
            let mut cfg = FeatureConfig::metadata(fields.clone());
            cfg.standardize = standardize;
            let (_, report) = holdout(model_type, &data, &cfg, hp, test_fraction, seed)?;
            Ok(AblationRow { fields: fields_name(&fields), accuracy: report.accuracy, roc_auc: report.roc_auc })
        })
        .collect()
}
