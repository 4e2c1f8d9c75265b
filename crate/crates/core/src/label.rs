use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Binary negation label. `Negated` is the positive class everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Negated,
    NotNegated,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Negated => "negated",
            Label::NotNegated => "not_negated",
        }
    }

    pub fn is_negated(self) -> bool {
        self == Label::Negated
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Negated => Label::NotNegated,
            Label::NotNegated => Label::Negated,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "negated" => Ok(Label::Negated),
            "not_negated" => Ok(Label::NotNegated),
            other => Err(format!("unknown label `{other}`")),
        }
    }
}

/// Identifies one annotated entity across a corpus.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityKey {
    pub record_id: String,
    pub entity_id: String,
}

impl EntityKey {
    pub fn new(record_id: impl Into<String>, entity_id: impl Into<String>) -> Self {
        Self {
            record_id: record_id.into(),
            entity_id: entity_id.into(),
        }
    }
}

impl fmt::Display for EntityKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.record_id, self.entity_id)
    }
}
