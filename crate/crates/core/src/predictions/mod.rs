//! Prediction interchange format.
//!
//! ```text
//! #method:rule_based
//! #threshold:0.5
//! #manifest:<sha256 of sorted record_id<TAB>entity_id lines>
//! r001<TAB>e1<TAB>negated
//! r001<TAB>e2<TAB>not_negated<TAB>0.12
//! ```
//!
//! Lines are ordered by `(record_id, entity_id)`. Any method, including
//! externally trained models, can take part in evaluation and ensembling by
//! writing this format.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::hash::manifest_hash;
use crate::label::{EntityKey, Label};

mod ensemble;

pub use ensemble::{disagreement_partition, majority_vote, majority_vote_all, DisagreementPartition, EnsembleConfig, ENSEMBLE_METHOD};

#[derive(Debug, Error)]
pub enum PredictionError {
    #[error("reading predictions {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("missing #{0} header")]
    MissingHeader(&'static str),
    #[error("duplicate prediction for {0}")]
    DuplicateKey(EntityKey),
    #[error("{key}: score {score} outside [0, 1]")]
    ScoreOutOfRange { key: EntityKey, score: f64 },
    #[error("{key}: label {label} contradicts score {score} at threshold {threshold}")]
    ThresholdMismatch {
        key: EntityKey,
        label: Label,
        score: f64,
        threshold: f64,
    },
    #[error("threshold {0} outside [0, 1]")]
    BadThreshold(f64),
    #[error("manifest mismatch: header says {declared}, entries hash to {computed}")]
    ManifestMismatch { declared: String, computed: String },
    #[error("coverage mismatch: {missing} missing, {extra} unexpected (e.g. {example})")]
    Coverage {
        missing: usize,
        extra: usize,
        example: String,
    },
    #[error("ensemble needs an odd number of at least 3 members, got {0}")]
    MemberCount(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub record_id: String,
    pub entity_id: String,
    pub label: Label,
    pub score: Option<f64>,
    pub method: String,
}

impl Prediction {
    pub fn key(&self) -> EntityKey {
        EntityKey::new(self.record_id.clone(), self.entity_id.clone())
    }
}

/// One method's labels over a set of entities, unique per entity and kept in
/// key order.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    method: String,
    threshold: f64,
    members: Vec<String>,
    predictions: BTreeMap<EntityKey, Prediction>,
}

impl PredictionSet {
    /// Validate and index predictions. Each prediction's `method` is set to
    /// the set's method.
    pub fn new(method: impl Into<String>, threshold: f64, predictions: Vec<Prediction>) -> Result<Self, PredictionError> {
        let method = method.into();
        if !(0.0..=1.0).contains(&threshold) {
            return Err(PredictionError::BadThreshold(threshold));
        }
        let mut map = BTreeMap::new();
        for mut p in predictions {
            let key = p.key();
            if let Some(score) = p.score {
                if !(0.0..=1.0).contains(&score) {
                    return Err(PredictionError::ScoreOutOfRange { key, score });
                }
                if (score >= threshold) != p.label.is_negated() {
                    return Err(PredictionError::ThresholdMismatch {
                        key,
                        label: p.label,
                        score,
                        threshold,
                    });
                }
            }
            p.method.clone_from(&method);
            if map.insert(key.clone(), p).is_some() {
                return Err(PredictionError::DuplicateKey(key));
            }
        }
        Ok(Self {
            method,
            threshold,
            members: Vec::new(),
            predictions: map,
        })
    }

    /// Build from bare labels, without scores.
    pub fn from_labels(method: impl Into<String>, labels: impl IntoIterator<Item = (EntityKey, Label)>) -> Result<Self, PredictionError> {
        let method = method.into();
        let preds = labels
            .into_iter()
            .map(|(k, label)| Prediction {
                record_id: k.record_id,
                entity_id: k.entity_id,
                label,
                score: None,
                method: method.clone(),
            })
            .collect();
        Self::new(method, crate::DEFAULT_THRESHOLD, preds)
    }

    pub fn with_members(mut self, members: Vec<String>) -> Self {
        self.members = members;
        self
    }

    pub fn method(&self) -> &str {
        &self.method
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Names of the member methods when this set is an ensemble output.
    pub fn members(&self) -> &[String] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.predictions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictions.is_empty()
    }

    pub fn get(&self, key: &EntityKey) -> Option<&Prediction> {
        self.predictions.get(key)
    }

    pub fn label(&self, key: &EntityKey) -> Option<Label> {
        self.predictions.get(key).map(|p| p.label)
    }

    pub fn keys(&self) -> impl Iterator<Item = &EntityKey> {
        self.predictions.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Prediction> {
        self.predictions.values()
    }

    pub fn manifest(&self) -> String {
        manifest_hash(self.predictions.keys())
    }

    /// Predictions restricted to keys accepted by `keep`.
    pub fn filtered(&self, mut keep: impl FnMut(&EntityKey) -> bool) -> PredictionSet {
        PredictionSet {
            method: self.method.clone(),
            threshold: self.threshold,
            members: self.members.clone(),
            predictions: self
                .predictions
                .iter()
                .filter(|(k, _)| keep(k))
                .map(|(k, p)| (k.clone(), p.clone()))
                .collect(),
        }
    }

    /// Relabel scored predictions at a new threshold. Unscored predictions
    /// keep their label.
    pub fn rethreshold(&self, threshold: f64) -> Result<PredictionSet, PredictionError> {
        let preds = self
            .predictions
            .values()
            .map(|p| {
                let mut p = p.clone();
                if let Some(s) = p.score {
                    p.label = if s >= threshold { Label::Negated } else { Label::NotNegated };
                }
                p
            })
            .collect();
        Ok(Self::new(self.method.clone(), threshold, preds)?.with_members(self.members.clone()))
    }

    /// Check that this set covers exactly `keys`.
    pub fn check_coverage<'a>(&self, keys: impl IntoIterator<Item = &'a EntityKey>) -> Result<(), PredictionError> {
        let expected: std::collections::BTreeSet<&EntityKey> = keys.into_iter().collect();
        let missing: Vec<&&EntityKey> = expected.iter().filter(|k| !self.predictions.contains_key(**k)).collect();
        let extra: Vec<&EntityKey> = self.predictions.keys().filter(|k| !expected.contains(k)).collect();
        if missing.is_empty() && extra.is_empty() {
            return Ok(());
        }
        let example = missing
            .first()
            .map(|k| format!("missing {k}"))
            .or_else(|| extra.first().map(|k| format!("unexpected {k}")))
            .unwrap_or_default();
        Err(PredictionError::Coverage {
            missing: missing.len(),
            extra: extra.len(),
            example,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "#method:{}", self.method);
        let _ = writeln!(out, "#threshold:{}", self.threshold);
        let _ = writeln!(out, "#manifest:{}", self.manifest());
        if !self.members.is_empty() {
            let _ = writeln!(out, "#members:{}", self.members.join(","));
        }
        for p in self.predictions.values() {
            let _ = write!(out, "{}\t{}\t{}", p.record_id, p.entity_id, p.label);
            if let Some(s) = p.score {
                let _ = write!(out, "\t{s}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, PredictionError> {
        let mut method = None;
        let mut threshold = None;
        let mut manifest = None;
        let mut members = Vec::new();
        let mut preds = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let bad = |message: String| PredictionError::Malformed { line: line_no, message };
            if let Some(v) = line.strip_prefix("#method:") {
                method = Some(v.to_string());
            } else if let Some(v) = line.strip_prefix("#threshold:") {
                threshold = Some(v.parse::<f64>().map_err(|e| bad(format!("threshold: {e}")))?);
            } else if let Some(v) = line.strip_prefix("#manifest:") {
                manifest = Some(v.to_string());
            } else if let Some(v) = line.strip_prefix("#members:") {
                members = v.split(',').filter(|s| !s.is_empty()).map(String::from).collect();
            } else if line.starts_with('#') || line.is_empty() {
                continue;
            } else {
                let fields: Vec<&str> = line.split('\t').collect();
                if !(3..=4).contains(&fields.len()) {
                    return Err(bad(format!("expected 3 or 4 tab-separated fields, got {}", fields.len())));
                }
                let label: Label = fields[2].parse().map_err(bad)?;
                let score = match fields.get(3) {
                    Some(s) => Some(s.parse::<f64>().map_err(|e| bad(format!("score: {e}")))?),
                    None => None,
                };
                preds.push(Prediction {
                    record_id: fields[0].to_string(),
                    entity_id: fields[1].to_string(),
                    label,
                    score,
                    method: String::new(),
                });
            }
        }
        let method = method.ok_or(PredictionError::MissingHeader("method"))?;
        let threshold = threshold.ok_or(PredictionError::MissingHeader("threshold"))?;
        let declared = manifest.ok_or(PredictionError::MissingHeader("manifest"))?;
        let set = Self::new(method, threshold, preds)?.with_members(members);
        let computed = set.manifest();
        if computed != declared {
            return Err(PredictionError::ManifestMismatch { declared, computed });
        }
        Ok(set)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, PredictionError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| PredictionError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), PredictionError> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|source| PredictionError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pred(r: &str, e: &str, label: Label, score: Option<f64>) -> Prediction {
        Prediction {
            record_id: r.into(),
            entity_id: e.into(),
            label,
            score,
            method: String::new(),
        }
    }

    fn sample() -> PredictionSet {
        PredictionSet::new(
            "bilstm",
            0.5,
            vec![
                pred("r2", "e1", Label::Negated, Some(0.91)),
                pred("r1", "e2", Label::NotNegated, Some(0.1)),
                pred("r1", "e1", Label::Negated, Some(0.5)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn round_trip_three() {
        let set = sample();
        let text = set.to_text();
        let back = PredictionSet::parse(&text).unwrap();
        assert_eq!(back, set);
        assert_eq!(back.to_text(), text);
        let rows: Vec<&str> = text.lines().skip(3).collect();
        assert_eq!(rows, ["r1\te1\tnegated\t0.5", "r1\te2\tnot_negated\t0.1", "r2\te1\tnegated\t0.91"]);
    }

    #[test]
    fn rethreshold_relabels_scored_rows() {
        let set = sample().rethreshold(0.95).unwrap();
        assert_eq!(set.threshold(), 0.95);
        assert!(set.iter().all(|p| p.label == Label::NotNegated));
        let low = sample().rethreshold(0.05).unwrap();
        assert!(low.iter().all(|p| p.label == Label::Negated));
    }

    #[test]
    fn duplicate_key_on_read() {
        let text = sample().to_text() + "r1\te1\tnegated\t0.7\n";
        assert!(matches!(PredictionSet::parse(&text), Err(PredictionError::DuplicateKey(_))));
    }

    #[test]
    fn score_label_contradiction() {
        let err = PredictionSet::new("m", 0.5, vec![pred("r", "e", Label::NotNegated, Some(0.7))]).unwrap_err();
        assert!(matches!(err, PredictionError::ThresholdMismatch { .. }));
    }

    #[test]
    fn manifest_checked_on_read() {
        let text = sample().to_text().replace("r2\te1", "r3\te1");
        assert!(matches!(PredictionSet::parse(&text), Err(PredictionError::ManifestMismatch { .. })));
    }

    #[test]
    fn missing_headers_and_bad_rows() {
        assert!(matches!(PredictionSet::parse("r\te\tnegated\n"), Err(PredictionError::MissingHeader("method"))));
        let text = "#method:m\n#threshold:0.5\n#manifest:x\nr\te\tmaybe\n";
        assert!(matches!(PredictionSet::parse(text), Err(PredictionError::Malformed { line: 4, .. })));
        let text = "#method:m\n#threshold:0.5\n#manifest:x\nr\te\n";
        assert!(matches!(PredictionSet::parse(text), Err(PredictionError::Malformed { line: 4, .. })));
        let err = PredictionSet::new("m", 0.5, vec![pred("r", "e", Label::Negated, Some(1.5))]).unwrap_err();
        assert!(matches!(err, PredictionError::ScoreOutOfRange { .. }));
    }

    #[test]
    fn coverage_reports_missing_and_extra() {
        let set = sample();
        let keys = [EntityKey::new("r1", "e1"), EntityKey::new("r1", "e2"), EntityKey::new("r9", "e1")];
        match set.check_coverage(&keys) {
            Err(PredictionError::Coverage { missing, extra, .. }) => assert_eq!((missing, extra), (1, 1)),
            other => panic!("{other:?}"),
        }
        let keys: Vec<EntityKey> = set.keys().cloned().collect();
        assert!(set.check_coverage(&keys).is_ok());
    }

    #[test]
    fn members_header_round_trips() {
        let set = sample().with_members(vec!["a".into(), "b".into(), "c".into()]);
        let back = PredictionSet::parse(&set.to_text()).unwrap();
        assert_eq!(back.members(), ["a", "b", "c"]);
    }

    proptest! {
        #[test]
        fn arbitrary_sets_round_trip(
            rows in proptest::collection::btree_map(("[a-z0-9_]{1,6}", "[a-z0-9_]{1,4}"), proptest::option::of(0.0f64..=1.0), 0..30),
            threshold in 0.0f64..=1.0,
        ) {
            let preds: Vec<Prediction> = rows
                .iter()
                .map(|((r, e), score)| {
                    let label = match score {
                        Some(s) if *s >= threshold => Label::Negated,
                        Some(_) => Label::NotNegated,
                        None => if r.len() % 2 == 0 { Label::Negated } else { Label::NotNegated },
                    };
                    pred(r, e, label, *score)
                })
                .collect();
            let set = PredictionSet::new("m", threshold, preds).unwrap();
            prop_assert_eq!(PredictionSet::parse(&set.to_text()).unwrap(), set);
        }
    }
}
