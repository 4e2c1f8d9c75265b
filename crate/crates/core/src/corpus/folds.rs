use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use thiserror::Error;

use super::Corpus;
use crate::hash::seeded_u64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FoldError {
    #[error("k must be at least 2, got {0}")]
    TooFewFolds(usize),
    #[error("k = {k} exceeds the number of records ({records})")]
    TooManyFolds { k: usize, records: usize },
    #[error("fold file line {line}: {message}")]
    Malformed { line: usize, message: String },
}

/// Record-level assignment of a corpus to `k` cross-validation folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    pub k: usize,
    pub seed: u64,
    pub folds: BTreeMap<String, usize>,
}

impl FoldAssignment {
    pub fn fold_of(&self, record_id: &str) -> Option<usize> {
        self.folds.get(record_id).copied()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in self.folds.values() {
            sizes[f] += 1;
        }
        sizes
    }

    /// Record ids held out in `fold`, sorted.
    pub fn test_records(&self, fold: usize) -> BTreeSet<&str> {
        self.folds
            .iter()
            .filter(|(_, &f)| f == fold)
            .map(|(id, _)| id.as_str())
            .collect()
    }

    /// `#k:` and `#seed:` header lines, then `record_id<TAB>fold` in id order.
    pub fn to_tsv(&self) -> String {
        let mut out = format!("#k:{}\n#seed:{}\n", self.k, self.seed);
        for (id, fold) in &self.folds {
            let _ = writeln!(out, "{id}\t{fold}");
        }
        out
    }

    pub fn parse(source: &str) -> Result<Self, FoldError> {
        let mut k = None;
        let mut seed = None;
        let mut folds = BTreeMap::new();
        for (i, line) in source.lines().enumerate() {
            let line_no = i + 1;
            let bad = |message: String| FoldError::Malformed { line: line_no, message };
            if let Some(v) = line.strip_prefix("#k:") {
                k = Some(v.trim().parse::<usize>().map_err(|e| bad(e.to_string()))?);
            } else if let Some(v) = line.strip_prefix("#seed:") {
                seed = Some(v.trim().parse::<u64>().map_err(|e| bad(e.to_string()))?);
            } else if line.starts_with('#') || line.trim().is_empty() {
                continue;
            } else {
                let (id, fold) = line
                    .split_once('\t')
                    .ok_or_else(|| bad("expected record_id<TAB>fold".into()))?;
                let fold: usize = fold.trim().parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?;
                let k = k.ok_or_else(|| bad("fold line before #k header".into()))?;
                if fold >= k {
                    return Err(bad(format!("fold {fold} out of range for k = {k}")));
                }
                if folds.insert(id.to_string(), fold).is_some() {
                    return Err(bad(format!("record {id} assigned twice")));
                }
            }
        }
        let missing = |what: &str| FoldError::Malformed {
            line: 0,
            message: format!("missing #{what} header"),
        };
        Ok(Self {
            k: k.ok_or_else(|| missing("k"))?,
            seed: seed.ok_or_else(|| missing("seed"))?,
            folds,
        })
    }
}

/// Assign records to `k` folds by a seeded hash of the record id, then move
/// records (greatest id first) from the largest fold to the smallest until
/// sizes differ by at most one. Depends only on the set of ids, never on
/// their order in the corpus.
pub fn split_folds(corpus: &Corpus, k: usize, seed: u64) -> Result<FoldAssignment, FoldError> {
    if k < 2 {
        return Err(FoldError::TooFewFolds(k));
    }
    if k > corpus.len() {
        return Err(FoldError::TooManyFolds {
            k,
            records: corpus.len(),
        });
    }
    let mut buckets: Vec<BTreeSet<&str>> = vec![BTreeSet::new(); k];
    for record in &corpus.records {
        let fold = (seeded_u64(seed, &record.id) % k as u64) as usize;
        buckets[fold].insert(&record.id);
    }
    loop {
        // min_by_key/max_by_key tie-breaks differ; pin lowest index for both.
        let largest = (0..k).rev().max_by_key(|&f| buckets[f].len()).unwrap();
        let smallest = (0..k).min_by_key(|&f| buckets[f].len()).unwrap();
        if buckets[largest].len() - buckets[smallest].len() <= 1 {
            break;
        }
        let moved = buckets[largest].pop_last().unwrap();
        buckets[smallest].insert(moved);
    }
    let folds = buckets
        .iter()
        .enumerate()
        .flat_map(|(f, ids)| ids.iter().map(move |id| (id.to_string(), f)))
        .collect();
    Ok(FoldAssignment { k, seed, folds })
}
