use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::lexicon::TriggerKind;
use super::matcher::TriggerMatch;
use crate::label::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scope {
    /// Position of this scope in the list it was returned in.
    pub id: usize,
    pub trigger_id: String,
    pub direction: Direction,
    /// Record-level token indices; may be empty.
    pub tokens: Range<usize>,
}

/// Resolve the scope of every negation match in a sentence.
///
/// Forward scopes run from the end of the trigger to the sentence end or the
/// first termination match starting at or after the trigger end, whichever
/// comes first. Backward scopes mirror this to the left. A trigger's
/// `max_scope` further caps the width.
pub fn resolve_scopes(matches: &[TriggerMatch], sentence: Range<usize>) -> Vec<Scope> {
    let terminations: Vec<&Range<usize>> = matches
        .iter()
        .filter(|m| m.kind == TriggerKind::Termination)
        .map(|m| &m.tokens)
        .collect();
    let mut scopes = Vec::new();
    for m in matches {
        let (direction, tokens) = match m.kind {
            TriggerKind::NegForward => {
                let mut end = terminations
                    .iter()
                    .filter(|t| t.start >= m.tokens.end)
                    .map(|t| t.start)
                    .fold(sentence.end, usize::min);
                if let Some(max) = m.max_scope {
                    end = end.min(m.tokens.end + max);
                }
                (Direction::Forward, m.tokens.end..end.max(m.tokens.end))
            }
            TriggerKind::NegBackward => {
                let mut start = terminations
                    .iter()
                    .filter(|t| t.end <= m.tokens.start)
                    .map(|t| t.end)
                    .fold(sentence.start, usize::max);
                if let Some(max) = m.max_scope {
                    start = start.max(m.tokens.start.saturating_sub(max));
                }
                (Direction::Backward, start.min(m.tokens.start)..m.tokens.start)
            }
            TriggerKind::Pseudo | TriggerKind::Termination => continue,
        };
        scopes.push(Scope {
            id: scopes.len(),
            trigger_id: m.trigger_id.clone(),
            direction,
            tokens,
        });
    }
    scopes
}

/// Label plus the ids of every scope that governs the entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NegationLabel {
    pub label: Label,
    pub provenance: Vec<usize>,
}

/// `Negated` iff any entity token falls inside any scope.
pub fn classify_entity(entity: Range<usize>, scopes: &[Scope]) -> NegationLabel {
    let provenance: Vec<usize> = scopes
        .iter()
        .filter(|s| !s.tokens.is_empty() && s.tokens.start < entity.end && entity.start < s.tokens.end)
        .map(|s| s.id)
        .collect();
    NegationLabel {
        label: if provenance.is_empty() {
            Label::NotNegated
        } else {
            Label::Negated
        },
        provenance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::{match_triggers, Lexicon};
    use crate::textseg::tokenize;

    fn scopes_for(text: &str, lexicon: &str) -> Vec<Scope> {
        let tokens = tokenize(text);
        let lex = Lexicon::parse(lexicon, "t").unwrap();
        let ms = match_triggers(&tokens, &lex);
        resolve_scopes(&ms, 0..tokens.len())
    }

    #[test]
    fn termination_stops_forward_scope() {
        // Geen tekenen van infectie , maar pneumonie persisteert
        let s = scopes_for(
            "Geen tekenen van infectie, maar pneumonie persisteert",
            "geen\tneg_forward\nmaar\ttermination\n",
        );
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].direction, Direction::Forward);
        assert_eq!(s[0].tokens, 1..5);
        assert_eq!(classify_entity(3..4, &s).label, Label::Negated);
        assert_eq!(classify_entity(6..7, &s).label, Label::NotNegated);
    }

    #[test]
    fn trailing_forward_trigger_has_empty_scope() {
        let s = scopes_for("koorts geen", "geen\tneg_forward\n");
        assert_eq!(s[0].tokens, 2..2);
        assert_eq!(classify_entity(0..1, &s).label, Label::NotNegated);
    }

    #[test]
    fn empty_scope_governs_nothing() {
        let s = scopes_for("maar uitgesloten koorts", "uitgesloten\tneg_backward\nmaar\ttermination\n");
        assert_eq!(s[0].tokens, 1..1);
        assert_eq!(classify_entity(0..2, &s).label, Label::NotNegated);
    }

    #[test]
    fn backward_scope() {
        let s = scopes_for("klachten zijn uitgesloten", "uitgesloten\tneg_backward\n");
        assert_eq!(s[0].direction, Direction::Backward);
        assert_eq!(s[0].tokens, 0..2);
    }

    #[test]
    fn backward_stops_at_termination() {
        let s = scopes_for("hoest maar koorts uitgesloten", "uitgesloten\tneg_backward\nmaar\ttermination\n");
        assert_eq!(s[0].tokens, 2..3);
    }

    #[test]
    fn max_scope_caps_width() {
        let s = scopes_for("bleek misselijk -", "-\tneg_backward\t1\n");
        assert_eq!(s[0].tokens, 1..2);
        let s = scopes_for("geen a b c d", "geen\tneg_forward\t2\n");
        assert_eq!(s[0].tokens, 1..3);
    }

    #[test]
    fn scope_respects_sentence_range() {
        let tokens = tokenize("geen koorts");
        let lex = Lexicon::parse("geen\tneg_forward\n", "t").unwrap();
        let ms = match_triggers(&tokens, &lex);
        let s = resolve_scopes(&ms, 0..1);
        assert_eq!(s[0].tokens, 1..1);
    }

    #[test]
    fn partial_overlap_counts_and_provenance_lists_all() {
        let s = scopes_for("geen pijn uitgesloten", "geen\tneg_forward\nuitgesloten\tneg_backward\n");
        assert_eq!(s.len(), 2);
        let l = classify_entity(1..2, &s);
        assert_eq!(l.label, Label::Negated);
        assert_eq!(l.provenance, vec![0, 1]);
        // entity straddling the trigger edge: one token in scope is enough
        let s = scopes_for("a geen b c", "geen\tneg_forward\n");
        assert_eq!(classify_entity(0..3, &s).label, Label::Negated);
    }

    #[test]
    fn no_scopes_not_negated() {
        let l = classify_entity(0..2, &[]);
        assert_eq!(l.label, Label::NotNegated);
        assert!(l.provenance.is_empty());
    }
}
