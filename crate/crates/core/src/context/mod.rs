//! Trigger-based negation detection.
//!
//! A record is tokenized and split into sentences; inside each sentence the
//! lexicon's triggers are matched, negation triggers get a directed scope
//! bounded by the sentence and by termination triggers, and an entity is
//! negated when any of its tokens falls inside any scope.

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::{Corpus, Record};
use crate::label::Label;
use crate::predictions::{Prediction, PredictionError, PredictionSet};
use crate::textseg::{Segmented, Segmenter, TextsegError};

mod lexicon;
mod matcher;
mod scope;

pub use lexicon::{load_lexicon, Lexicon, LexiconError, PatternElement, Trigger, TriggerKind};
pub use matcher::{match_triggers, TriggerMatch};
pub use scope::{classify_entity, resolve_scopes, Direction, NegationLabel, Scope};

/// Method name written into prediction files produced by the detector.
pub const RULE_BASED_METHOD: &str = "rule_based";

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("record {record_id}: {source}")]
    Alignment {
        record_id: String,
        #[source]
        source: TextsegError,
    },
    #[error(transparent)]
    Predictions(#[from] PredictionError),
}

/// Outcome for one entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityDecision {
    pub entity_id: String,
    pub tokens: std::ops::Range<usize>,
    pub sentence: usize,
    pub label: NegationLabel,
}

/// Full intermediate state of detection on one record.
#[derive(Debug, Clone)]
pub struct RecordAnalysis {
    pub segmented: Segmented,
    pub matches: Vec<TriggerMatch>,
    /// Scopes of all sentences; `Scope::id` indexes this list.
    pub scopes: Vec<Scope>,
    /// Sorted by entity id.
    pub decisions: Vec<EntityDecision>,
}

#[derive(Debug, Clone)]
pub struct Detector {
    lexicon: Lexicon,
    segmenter: Segmenter,
}

impl Detector {
    pub fn new(lexicon: Lexicon, segmenter: Segmenter) -> Self {
        Self { lexicon, segmenter }
    }

    /// Bundled lexicon and abbreviation list.
    pub fn bundled() -> Self {
        Self::new(Lexicon::bundled(), Segmenter::bundled())
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn segmenter(&self) -> &Segmenter {
        &self.segmenter
    }

    pub fn analyze(&self, record: &Record) -> Result<RecordAnalysis, DetectError> {
        let segmented = self.segmenter.segment(&record.text);
        let mut matches = Vec::new();
        let mut scopes: Vec<Scope> = Vec::new();
        for sentence in &segmented.sentences {
            let found = match_triggers(&segmented.tokens[sentence.tokens.clone()], &self.lexicon);
            for mut scope in resolve_scopes(&found, sentence.tokens.clone()) {
                scope.id = scopes.len();
                scopes.push(scope);
            }
            matches.extend(found);
        }

        let mut decisions = Vec::with_capacity(record.entities.len());
        for entity in &record.entities {
            let tokens = segmented
                .token_range(entity.start, entity.end)
                .ok_or_else(|| DetectError::Alignment {
                    record_id: record.id.clone(),
                    source: TextsegError::EntityNotAligned {
                        entity_id: entity.entity_id.clone(),
                        start: entity.start,
                        end: entity.end,
                    },
                })?;
            // an entity straddling a boundary belongs to its first sentence
            let sentence = segmented.sentence_of(tokens.start).expect("token lies in a sentence");
            let bounds = &segmented.sentences[sentence].tokens;
            let clipped = tokens.start..tokens.end.min(bounds.end);
            decisions.push(EntityDecision {
                entity_id: entity.entity_id.clone(),
                tokens: tokens.clone(),
                sentence,
                label: classify_entity(clipped, &scopes),
            });
        }
        decisions.sort_by(|a, b| a.entity_id.cmp(&b.entity_id));
        Ok(RecordAnalysis {
            segmented,
            matches,
            scopes,
            decisions,
        })
    }

    fn predictions(&self, record: &Record) -> Result<Vec<Prediction>, DetectError> {
        Ok(self
            .analyze(record)?
            .decisions
            .into_iter()
            .map(|d| Prediction {
                record_id: record.id.clone(),
                entity_id: d.entity_id,
                label: d.label.label,
                score: None,
                method: RULE_BASED_METHOD.to_string(),
            })
            .collect())
    }

    /// Classify every entity of one record.
    pub fn detect(&self, record: &Record) -> Result<PredictionSet, DetectError> {
        Ok(PredictionSet::new(
            RULE_BASED_METHOD,
            crate::DEFAULT_THRESHOLD,
            self.predictions(record)?,
        )?)
    }

    /// Classify every entity of a corpus. `parallel` only changes how the
    /// work is scheduled; the result is identical either way.
    pub fn detect_corpus(&self, corpus: &Corpus, parallel: bool) -> Result<PredictionSet, DetectError> {
        let per_record: Vec<Vec<Prediction>> = if parallel {
            corpus
                .records
                .par_iter()
                .map(|r| self.predictions(r))
                .collect::<Result<_, _>>()?
        } else {
            corpus
                .records
                .iter()
                .map(|r| self.predictions(r))
                .collect::<Result<_, _>>()?
        };
        Ok(PredictionSet::new(
            RULE_BASED_METHOD,
            crate::DEFAULT_THRESHOLD,
            per_record.into_iter().flatten().collect(),
        )?)
    }
}

/// Convenience wrapper: detect with the given lexicon and the bundled
/// abbreviation list.
pub fn detect(record: &Record, lexicon: &Lexicon) -> Result<PredictionSet, DetectError> {
    Detector::new(lexicon.clone(), Segmenter::bundled()).detect(record)
}

/// Count of `Negated` predictions.
pub fn negated_count(set: &PredictionSet) -> usize {
    set.iter().filter(|p| p.label == Label::Negated).count()
}
