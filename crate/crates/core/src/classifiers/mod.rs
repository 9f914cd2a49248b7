//! Classifiers over global feature vectors.
//!
//! [`SimpleLogistic`] fits a multinomial logistic model stagewise with
//! LogitBoost, one single-attribute linear regression per class per
//! iteration. [`LogisticModelTree`] grows an information-gain tree whose
//! nodes continue the parent's boosting on their own data, then prunes it by
//! cross-validated cost complexity.
//!
//! Both standardize features with training-set statistics stored in the
//! model, and both are deterministic for a given [`TrainConfig::seed`].

mod logitboost;
mod lmt;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lmt::{LogisticModelTree, PruningSummary, TreeNode, TreeSplit};
pub use logitboost::{SimpleLogistic, StumpTerm};

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("training data has fewer than two classes")]
    SingleClass,
    #[error("no training data")]
    Empty,
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("non-finite feature value in row {0}")]
    NonFinite(usize),
    #[error("unsupported model file: {0}")]
    Format(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub n_classes: usize,
    pub max_iterations: usize,
    /// Fraction of the training rows held out to pick the iteration count.
    pub holdout_fraction: f64,
    /// Stop the holdout search after this many iterations without improvement.
    pub patience: usize,
    pub min_split: usize,
    pub min_leaf: usize,
    pub cv_folds: usize,
    pub max_depth: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            n_classes: crate::NUM_CLASSES,
            max_iterations: 200,
            holdout_fraction: 0.2,
            patience: 50,
            min_split: 15,
            min_leaf: 2,
            cv_folds: 5,
            max_depth: 30,
            seed: 42,
        }
    }
}

/// Per-attribute z-score parameters. Attributes with zero spread are marked
/// unusable and map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    0.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn usable(&self, attribute: usize) -> bool {
        self.scale[attribute] > 0.0
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| if *s > 0.0 { (v - m) / s } else { 0.0 })
            .collect()
    }
}

pub(crate) fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub(crate) fn validate_training(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
) -> Result<(), ClassifierError> {
    if x.is_empty() || x.len() != y.len() {
        return Err(ClassifierError::Empty);
    }
    let d = x[0].len();
    for (i, row) in x.iter().enumerate() {
        if row.len() != d {
            return Err(ClassifierError::DimensionMismatch {
                expected: d,
                got: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(ClassifierError::NonFinite(i));
        }
    }
    if let Some(&label) = y.iter().find(|&&l| l >= n_classes) {
        return Err(ClassifierError::LabelOutOfRange { label, n_classes });
    }
    if y.iter().all(|&l| l == y[0]) {
        return Err(ClassifierError::SingleClass);
    }
    Ok(())
}

/// A trained global-feature model as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GfModel {
    SimpleLogistic(SimpleLogistic),
    Lmt(LogisticModelTree),
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    model: GfModel,
}

const MODEL_FORMAT: &str = "gitract-gf-model";
const MODEL_VERSION: u32 = 1;

impl GfModel {
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>, ClassifierError> {
        match self {
            GfModel::SimpleLogistic(m) => m.predict_proba(x),
            GfModel::Lmt(m) => m.predict_proba(x),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize, ClassifierError> {
        Ok(crate::util::argmax(&self.predict_proba(x)?))
    }

    pub fn name(&self) -> &'static str {
        match self {
            GfModel::SimpleLogistic(_) => "simple_logistic",
            GfModel::Lmt(_) => "lmt",
        }
    }

    pub fn to_json(&self) -> Result<String, ClassifierError> {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            model: self.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self, ClassifierError> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(ClassifierError::Format(format!(
                "{} v{}",
                file.format, file.version
            )));
        }
        Ok(file.model)
    }

    pub fn save(&self, path: &Path) -> Result<(), ClassifierError> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ClassifierError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
