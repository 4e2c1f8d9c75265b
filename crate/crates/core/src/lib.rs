//! Rule-based negation detection for clinical text, together with the
//! evaluation machinery used to compare it against other classifiers.
//!
//! The crate is organised around five modules:
//!
//! - [`corpus`]: annotated records, the exclusion pipeline, fold assignment
//!   and descriptive statistics.
//! - [`textseg`]: tokenization, sentence splitting and entity-centred token
//!   windows.
//! - [`context`]: the trigger lexicon and the scope-based negation detector.
//! - [`predictions`]: the prediction interchange format and majority voting.
//! - [`evaluation`]: confusion counts, precision/recall/F1, cross-validated
//!   reports, Cohen's kappa and error analysis.

pub mod context;
pub mod corpus;
pub mod evaluation;
mod hash;
mod label;
pub mod predictions;
pub mod textseg;

pub use context::{Detector, Lexicon, Trigger, TriggerKind};
pub use corpus::{Category, Corpus, EntityAnnotation, FilterConfig, FoldAssignment, Record};
pub use evaluation::{ConfusionCounts, Metrics};
pub use label::{EntityKey, Label};
pub use predictions::{Prediction, PredictionSet};
pub use textseg::{Segmenter, Token};

/// Default decision threshold for scored predictions.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Bundled Dutch starter lexicon (`pattern<TAB>kind[<TAB>max_scope]`).
pub const BUNDLED_LEXICON: &str = include_str!("../assets/lexicon_nl.tsv");

/// Bundled abbreviation list used by the sentence splitter.
pub const BUNDLED_ABBREVIATIONS: &str = include_str!("../assets/abbreviations_nl.txt");

/// Bundled synthetic Dutch mini-corpus in the canonical line-delimited format.
pub const BUNDLED_CORPUS: &str = include_str!("../assets/synthetic_corpus.jsonl");
