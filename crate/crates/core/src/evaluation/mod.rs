//! Precision, recall and F1 for the negated class, cross-validated reports,
//! Cohen's kappa and the error-analysis workflow.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Category, Corpus};
use crate::label::{EntityKey, Label};
use crate::predictions::{PredictionError, PredictionSet};

mod errors;
mod kappa;
mod report;

pub use errors::{
    aggregate_errors, assign_categories, extract_errors, parse_tags, tag_agreement, ErrorCase, ErrorCategory, ErrorKind, ErrorTable, Tag,
};
pub use kappa::{cohens_kappa, AgreementResult};
pub use report::{evaluate, evaluate_cv, split_by_folds, CvReport, FoldRow, MetricsReport, ReportRow};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Predictions(#[from] PredictionError),
    #[error("{key} predicted in fold {fold} but its record belongs to fold {expected:?}")]
    WrongFold {
        key: EntityKey,
        fold: usize,
        expected: Option<usize>,
    },
    #[error("{0} predicted in more than one fold")]
    MultipleFolds(EntityKey),
    #[error("expected predictions for {expected} folds, got {got}")]
    MissingFold { expected: usize, got: usize },
    #[error("fold prediction sets disagree on method: {0} vs {1}")]
    MixedMethods(String, String),
    #[error("label lists differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("cannot compute agreement over zero items")]
    NoItems,
    #[error("error case {0} has no category assigned")]
    Untagged(EntityKey),
    #[error("tag file line {line}: {message}")]
    MalformedTag { line: usize, message: String },
}

/// Confusion counts with `Negated` as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn add(&mut self, predicted: Label, gold: Label) {
        match (predicted, gold) {
            (Label::Negated, Label::Negated) => self.tp += 1,
            (Label::Negated, Label::NotNegated) => self.fp += 1,
            (Label::NotNegated, Label::Negated) => self.fn_ += 1,
            (Label::NotNegated, Label::NotNegated) => self.tn += 1,
        }
    }
}

impl std::ops::Add for ConfusionCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
            tn: self.tn + o.tn,
        }
    }
}

impl std::iter::Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), |a, b| a + b)
    }
}

/// Precision, recall and F1. A zero denominator yields 1.0 with the matching
/// `*_vacuous` flag set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub precision_vacuous: bool,
    pub recall_vacuous: bool,
}

impl Metrics {
    /// Metrics from already-known precision and recall.
    pub fn from_precision_recall(precision: f64, recall: f64) -> Self {
        Self {
            precision,
            recall,
            f1: f1_score(precision, recall),
            precision_vacuous: false,
            recall_vacuous: false,
        }
    }
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn metrics(c: &ConfusionCounts) -> Metrics {
    let ratio = |num: usize, den: usize| if den == 0 { (1.0, true) } else { (num as f64 / den as f64, false) };
    let (precision, precision_vacuous) = ratio(c.tp, c.tp + c.fp);
    let (recall, recall_vacuous) = ratio(c.tp, c.tp + c.fn_);
    Metrics {
        precision,
        recall,
        f1: f1_score(precision, recall),
        precision_vacuous,
        recall_vacuous,
    }
}

/// Restricts evaluation to a category and/or a set of records.
#[derive(Debug, Clone, Default)]
pub struct Subset {
    pub category: Option<Category>,
    pub records: Option<BTreeSet<String>>,
}

impl Subset {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn category(category: Category) -> Self {
        Self {
            category: Some(category),
            records: None,
        }
    }

    fn admits(&self, record_id: &str, category: Category) -> bool {
        self.category.is_none_or(|c| c == category) && self.records.as_ref().is_none_or(|r| r.contains(record_id))
    }
}

/// Count agreement between `pred` and the gold labels of the entities in
/// `subset`. Every such entity must be predicted, and `pred` may not contain
/// entities unknown to the corpus.
pub fn confusion(pred: &PredictionSet, gold: &Corpus, subset: &Subset) -> Result<ConfusionCounts, EvalError> {
    let mut counts = ConfusionCounts::default();
    let mut missing = Vec::new();
    let mut known = 0;
    for record in &gold.records {
        for e in &record.entities {
            let key = EntityKey::new(record.id.clone(), e.entity_id.clone());
            let predicted = pred.label(&key);
            known += usize::from(predicted.is_some());
            if !subset.admits(&record.id, record.category) {
                continue;
            }
            match predicted {
                Some(p) => counts.add(p, e.gold_label),
                None => missing.push(key),
            }
        }
    }
    let extra = pred.len() - known;
    if !missing.is_empty() || extra > 0 {
        let gold_keys: BTreeSet<EntityKey> = gold.records.iter().flat_map(|r| r.keys()).collect();
        let example = missing
            .first()
            .map(|k| format!("missing {k}"))
            .or_else(|| pred.keys().find(|k| !gold_keys.contains(*k)).map(|k| format!("unexpected {k}")))
            .unwrap_or_default();
        return Err(PredictionError::Coverage {
            missing: missing.len(),
            extra,
            example,
        }
        .into());
    }
    Ok(counts)
}
