use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::Serialize;

use super::{confusion, metrics, ConfusionCounts, EvalError, Metrics, Subset};
use crate::corpus::{Category, Corpus, FoldAssignment};
use crate::label::EntityKey;
use crate::predictions::PredictionSet;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    /// `None` for the all-categories row.
    pub category: Option<Category>,
    pub method: String,
    pub counts: ConfusionCounts,
    pub metrics: Metrics,
}

impl ReportRow {
    fn category_title(&self) -> &'static str {
        self.category.map_or("All letters", Category::title)
    }
}

/// Pooled metrics per (category, method), laid out like a results table:
/// one block per category, the all-categories block last.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MetricsReport {
    pub rows: Vec<ReportRow>,
}

#[derive(Serialize)]
struct RowLine<'a> {
    category: &'a str,
    method: &'a str,
    tp: usize,
    fp: usize,
    #[serde(rename = "fn")]
    fn_: usize,
    tn: usize,
    precision: f64,
    recall: f64,
    f1: f64,
    precision_vacuous: bool,
    recall_vacuous: bool,
}

impl MetricsReport {
    pub fn row(&self, category: Option<Category>, method: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.category == category && r.method == method)
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let mw = self.rows.iter().map(|r| r.method.len()).max().unwrap_or(0).max(17);
        let _ = writeln!(
            out,
            "{:>28} {:>mw$} {:>10} {:>7} {:>7} {:>6}",
            "Letter category", "Prediction method", "Precision", "Recall", "F1", "n"
        );
        let mut last = None;
        for row in &self.rows {
            if last != Some(row.category) {
                let _ = writeln!(out, "{:-<w$}", "", w = 28 + mw + 36);
                last = Some(row.category);
            }
            let flag = |v: bool| if v { "*" } else { " " };
            let _ = writeln!(
                out,
                "{:>28} {:>mw$} {:>9.3}{} {:>6.3}{} {:>7.3} {:>6}",
                row.category_title(),
                row.method,
                row.metrics.precision,
                flag(row.metrics.precision_vacuous),
                row.metrics.recall,
                flag(row.metrics.recall_vacuous),
                row.metrics.f1,
                row.counts.total()
            );
        }
        if self.rows.iter().any(|r| r.metrics.precision_vacuous || r.metrics.recall_vacuous) {
            out.push_str("* vacuous: zero denominator, reported as 1.000\n");
        }
        out
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            let line = RowLine {
                category: row.category.map_or("all", Category::code),
                method: &row.method,
                tp: row.counts.tp,
                fp: row.counts.fp,
                fn_: row.counts.fn_,
                tn: row.counts.tn,
                precision: row.metrics.precision,
                recall: row.metrics.recall,
                f1: row.metrics.f1,
                precision_vacuous: row.metrics.precision_vacuous,
                recall_vacuous: row.metrics.recall_vacuous,
            };
            out.push_str(&serde_json::to_string(&line).expect("serializable"));
            out.push('\n');
        }
        out
    }
}

fn categories_present(gold: &Corpus) -> Vec<Category> {
    let present: BTreeSet<Category> = gold.records.iter().map(|r| r.category).collect();
    present.into_iter().collect()
}

/// Single-pass evaluation of whole-corpus prediction sets.
pub fn evaluate(sets: &[&PredictionSet], gold: &Corpus) -> Result<MetricsReport, EvalError> {
    let mut rows = Vec::new();
    let subsets = categories_present(gold)
        .into_iter()
        .map(Some)
        .chain(std::iter::once(None));
    for category in subsets {
        let subset = Subset {
            category,
            records: None,
        };
        for set in sets {
            let counts = confusion(set, gold, &subset)?;
            rows.push(ReportRow {
                category,
                method: set.method().to_string(),
                counts,
                metrics: metrics(&counts),
            });
        }
    }
    Ok(MetricsReport { rows })
}

/// Metrics of one test fold (all categories pooled).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldRow {
    pub fold: usize,
    pub counts: ConfusionCounts,
    pub metrics: Metrics,
}

/// Cross-validated evaluation of one method: pooled (micro) metrics per
/// category and overall, plus per-fold metrics for dispersion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvReport {
    pub method: String,
    pub pooled: MetricsReport,
    pub folds: Vec<FoldRow>,
}

impl CvReport {
    /// Mean and population standard deviation of per-fold F1.
    pub fn f1_dispersion(&self) -> (f64, f64) {
        let n = self.folds.len() as f64;
        let mean = self.folds.iter().map(|f| f.metrics.f1).sum::<f64>() / n;
        let var = self.folds.iter().map(|f| (f.metrics.f1 - mean).powi(2)).sum::<f64>() / n;
        (mean, var.sqrt())
    }

    pub fn folds_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} per-fold results", self.method);
        let _ = writeln!(out, "{:>5} {:>10} {:>7} {:>7} {:>6}", "fold", "Precision", "Recall", "F1", "n");
        for f in &self.folds {
            let _ = writeln!(
                out,
                "{:>5} {:>10.3} {:>7.3} {:>7.3} {:>6}",
                f.fold,
                f.metrics.precision,
                f.metrics.recall,
                f.metrics.f1,
                f.counts.total()
            );
        }
        let (mean, sd) = self.f1_dispersion();
        let _ = writeln!(out, "F1 mean {mean:.3}, sd {sd:.3}");
        out
    }
}

/// Split whole-corpus predictions into per-fold test sets.
pub fn split_by_folds(set: &PredictionSet, folds: &FoldAssignment) -> Vec<PredictionSet> {
    (0..folds.k)
        .map(|f| set.filtered(|k| folds.fold_of(&k.record_id) == Some(f)))
        .collect()
}

/// Pool per-fold test predictions. `per_fold[f]` holds the predictions made
/// on fold `f`'s held-out records; together they must cover every gold entity
/// exactly once.
pub fn evaluate_cv(per_fold: &[PredictionSet], gold: &Corpus, folds: &FoldAssignment) -> Result<CvReport, EvalError> {
    if per_fold.len() != folds.k {
        return Err(EvalError::MissingFold {
            expected: folds.k,
            got: per_fold.len(),
        });
    }
    let method = per_fold[0].method().to_string();
    let mut merged: BTreeMap<EntityKey, (usize, crate::label::Label)> = BTreeMap::new();
    for (f, set) in per_fold.iter().enumerate() {
        if set.method() != method {
            return Err(EvalError::MixedMethods(method, set.method().to_string()));
        }
        for p in set.iter() {
            let key = p.key();
            let expected = folds.fold_of(&p.record_id);
            if expected != Some(f) {
                return Err(EvalError::WrongFold { key, fold: f, expected });
            }
            if merged.insert(key.clone(), (f, p.label)).is_some() {
                return Err(EvalError::MultipleFolds(key));
            }
        }
    }
    let pooled_set = PredictionSet::from_labels(method.clone(), merged.iter().map(|(k, (_, l))| (k.clone(), *l)))?;
    let pooled = evaluate(&[&pooled_set], gold)?;

    let mut fold_rows = Vec::with_capacity(folds.k);
    for f in 0..folds.k {
        let subset = Subset {
            category: None,
            records: Some(folds.test_records(f).into_iter().map(String::from).collect()),
        };
        let counts = confusion(&pooled_set, gold, &subset)?;
        fold_rows.push(FoldRow {
            fold: f,
            counts,
            metrics: metrics(&counts),
        });
    }
    Ok(CvReport {
        method,
        pooled,
        folds: fold_rows,
    })
}
