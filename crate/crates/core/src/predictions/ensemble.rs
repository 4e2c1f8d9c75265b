use std::collections::BTreeMap;
use std::fmt::Write;

use serde::Serialize;

use super::{Prediction, PredictionError, PredictionSet};
use crate::label::{EntityKey, Label};

pub const ENSEMBLE_METHOD: &str = "voting_ensemble";

/// Members of a majority-vote ensemble. Only odd member counts of at least
/// three are accepted, so a strict majority always exists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnsembleConfig {
    pub members: Vec<String>,
}

impl EnsembleConfig {
    pub fn new(members: Vec<String>) -> Result<Self, PredictionError> {
        if members.len() < 3 || members.len().is_multiple_of(2) {
            return Err(PredictionError::MemberCount(members.len()));
        }
        Ok(Self { members })
    }
}

fn check_same_coverage(sets: &[&PredictionSet]) -> Result<(), PredictionError> {
    let reference: Vec<&EntityKey> = sets[0].keys().collect();
    for set in &sets[1..] {
        set.check_coverage(reference.iter().copied())?;
    }
    Ok(())
}

/// Label chosen by at least two of the three members, per entity.
pub fn majority_vote(a: &PredictionSet, b: &PredictionSet, c: &PredictionSet) -> Result<PredictionSet, PredictionError> {
    majority_vote_all(&[a, b, c])
}

/// Strict-majority vote over an odd number (≥ 3) of prediction sets with
/// identical coverage. Scores are not propagated.
pub fn majority_vote_all(sets: &[&PredictionSet]) -> Result<PredictionSet, PredictionError> {
    let config = EnsembleConfig::new(sets.iter().map(|s| s.method().to_string()).collect())?;
    check_same_coverage(sets)?;
    let needed = sets.len() / 2 + 1;
    let preds = sets[0]
        .keys()
        .map(|key| {
            let votes = sets.iter().filter(|s| s.label(key) == Some(Label::Negated)).count();
            Prediction {
                record_id: key.record_id.clone(),
                entity_id: key.entity_id.clone(),
                label: if votes >= needed {
                    Label::Negated
                } else {
                    Label::NotNegated
                },
                score: None,
                method: ENSEMBLE_METHOD.to_string(),
            }
        })
        .collect();
    Ok(PredictionSet::new(ENSEMBLE_METHOD, crate::DEFAULT_THRESHOLD, preds)?.with_members(config.members))
}

/// Entities misclassified by exactly each non-empty subset of methods.
///
/// Cell keys are bit masks over `methods` (bit `i` set when method `i` erred).
/// Every mask from 1 to 2^n - 1 is present, zero counts included.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DisagreementPartition {
    pub methods: Vec<String>,
    pub cells: BTreeMap<u32, usize>,
}

#[derive(Serialize)]
struct CellLine<'a> {
    methods: Vec<&'a str>,
    errors: usize,
}

impl DisagreementPartition {
    pub fn cell(&self, mask: u32) -> usize {
        self.cells.get(&mask).copied().unwrap_or(0)
    }

    /// Number of entities misclassified by at least one method.
    pub fn union_size(&self) -> usize {
        self.cells.values().sum()
    }

    pub fn cell_name(&self, mask: u32) -> String {
        let full = (1u32 << self.methods.len()) - 1;
        if mask == full && self.methods.len() > 1 {
            return "All".to_string();
        }
        self.members(mask).join(" & ")
    }

    fn members(&self, mask: u32) -> Vec<&str> {
        self.methods
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, m)| m.as_str())
            .collect()
    }

    /// Cells ordered by subset size, then mask.
    fn ordered_masks(&self) -> Vec<u32> {
        let mut masks: Vec<u32> = self.cells.keys().copied().collect();
        masks.sort_by_key(|m| (m.count_ones(), *m));
        masks
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let width = self
            .cells
            .keys()
            .map(|&m| self.cell_name(m).len())
            .max()
            .unwrap_or(0)
            .max(12);
        let _ = writeln!(out, "{:<width$} {:>8}", "Misclassified by", "Errors");
        let _ = writeln!(out, "{:-<w$}", "", w = width + 9);
        for mask in self.ordered_masks() {
            let _ = writeln!(out, "{:<width$} {:>8}", self.cell_name(mask), self.cell(mask));
        }
        let _ = writeln!(out, "{:<width$} {:>8}", "Union", self.union_size());
        out
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for mask in self.ordered_masks() {
            let line = CellLine {
                methods: self.members(mask),
                errors: self.cell(mask),
            };
            out.push_str(&serde_json::to_string(&line).expect("serializable"));
            out.push('\n');
        }
        out
    }
}

/// Partition the union of the methods' error sets by exactly which methods
/// erred.
pub fn disagreement_partition(sets: &[&PredictionSet], gold: &BTreeMap<EntityKey, Label>) -> Result<DisagreementPartition, PredictionError> {
    assert!(sets.len() < 32, "at most 31 methods");
    for set in sets {
        set.check_coverage(gold.keys())?;
    }
    let mut cells: BTreeMap<u32, usize> = (1..(1u32 << sets.len())).map(|m| (m, 0)).collect();
    for (key, truth) in gold {
        let mask = sets
            .iter()
            .enumerate()
            .filter(|(_, s)| s.label(key) != Some(*truth))
            .fold(0u32, |m, (i, _)| m | (1 << i));
        if mask != 0 {
            *cells.entry(mask).or_default() += 1;
        }
    }
    Ok(DisagreementPartition {
        methods: sets.iter().map(|s| s.method().to_string()).collect(),
        cells,
    })
}
