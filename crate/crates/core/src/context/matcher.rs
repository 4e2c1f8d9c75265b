use std::ops::Range;

use super::lexicon::{Lexicon, TriggerKind};
use crate::textseg::Token;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriggerMatch {
    pub trigger_id: String,
    pub kind: TriggerKind,
    /// Record-level token indices.
    pub tokens: Range<usize>,
    pub max_scope: Option<usize>,
}

/// Find trigger occurrences in one sentence.
///
/// Negation triggers are matched leftmost-longest per kind, so matches of one
/// negation kind never overlap; equal-length candidates resolve to the earlier
/// lexicon entry. Pseudo and termination triggers report every occurrence.
/// A negation match lying wholly inside a pseudo match is dropped. Output is
/// ordered by start, then end, then kind.
pub fn match_triggers(sentence: &[Token], lexicon: &Lexicon) -> Vec<TriggerMatch> {
    let Some(first) = sentence.first() else {
        return Vec::new();
    };
    let base = first.index;
    let words: Vec<String> = sentence.iter().map(|t| t.text.to_lowercase()).collect();
    let mut found = Vec::new();

    for kind in [TriggerKind::NegForward, TriggerKind::NegBackward] {
        let mut pos = 0;
        while pos < words.len() {
            let best = lexicon
                .of_kind(kind)
                .filter(|t| t.matches_at(&words, pos))
                .fold(None, |best: Option<&super::Trigger>, t| match best {
                    Some(b) if b.len() >= t.len() => Some(b),
                    _ => Some(t),
                });
            match best {
                Some(t) => {
                    found.push(TriggerMatch {
                        trigger_id: t.id.clone(),
                        kind,
                        tokens: base + pos..base + pos + t.len(),
                        max_scope: t.max_scope,
                    });
                    pos += t.len();
                }
                None => pos += 1,
            }
        }
    }

    for kind in [TriggerKind::Pseudo, TriggerKind::Termination] {
        for t in lexicon.of_kind(kind) {
            for pos in 0..words.len() {
                if t.matches_at(&words, pos) {
                    found.push(TriggerMatch {
                        trigger_id: t.id.clone(),
                        kind,
                        tokens: base + pos..base + pos + t.len(),
                        max_scope: t.max_scope,
                    });
                }
            }
        }
    }

    let pseudo: Vec<Range<usize>> = found
        .iter()
        .filter(|m| m.kind == TriggerKind::Pseudo)
        .map(|m| m.tokens.clone())
        .collect();
    found.retain(|m| {
        !m.kind.is_negation()
            || !pseudo
                .iter()
                .any(|p| p.start <= m.tokens.start && m.tokens.end <= p.end)
    });
    found.sort_by(|a, b| {
        (a.tokens.start, a.tokens.end, a.kind, &a.trigger_id).cmp(&(b.tokens.start, b.tokens.end, b.kind, &b.trigger_id))
    });
    found
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textseg::tokenize;

    fn lex(src: &str) -> Lexicon {
        Lexicon::parse(src, "test").unwrap()
    }

    fn summary(ms: &[TriggerMatch]) -> Vec<(TriggerKind, Range<usize>)> {
        ms.iter().map(|m| (m.kind, m.tokens.clone())).collect()
    }

    #[test]
    fn pseudo_suppresses_contained_negation() {
        let l = lex("niet\tneg_forward\nniet alleen\tpseudo\n");
        let ms = match_triggers(&tokenize("niet alleen koorts"), &l);
        assert_eq!(summary(&ms), vec![(TriggerKind::Pseudo, 0..2)]);
    }

    #[test]
    fn no_triggers() {
        let l = lex("geen\tneg_forward\n");
        assert!(match_triggers(&tokenize("wel koorts en hoest"), &l).is_empty());
        assert!(match_triggers(&[], &l).is_empty());
    }

    #[test]
    fn repeated_forward_trigger() {
        let l = lex("geen\tneg_forward\n");
        let ms = match_triggers(&tokenize("geen pijn geen koorts"), &l);
        assert_eq!(
            summary(&ms),
            vec![(TriggerKind::NegForward, 0..1), (TriggerKind::NegForward, 2..3)]
        );
    }

    #[test]
    fn longest_wins_at_same_start() {
        let l = lex("geen\tneg_forward\ngeen tekenen van\tneg_forward\n");
        let ms = match_triggers(&tokenize("geen tekenen van koorts"), &l);
        assert_eq!(summary(&ms), vec![(TriggerKind::NegForward, 0..3)]);
        assert_eq!(ms[0].trigger_id, "neg_forward:geen tekenen van");
    }

    #[test]
    fn leftmost_match_blocks_overlapping_later_one() {
        // "a b" at 0 consumes b, so "b c" at 1 cannot match.
        let l = lex("a b\tneg_forward\nb c\tneg_forward\n");
        let ms = match_triggers(&tokenize("a b c"), &l);
        assert_eq!(summary(&ms), vec![(TriggerKind::NegForward, 0..2)]);
    }

    #[test]
    fn whole_token_matching_only() {
        let l = lex("geen\tneg_forward\n");
        assert!(match_triggers(&tokenize("geenszins koorts"), &l).is_empty());
        assert_eq!(match_triggers(&tokenize("GEEN koorts"), &l).len(), 1);
    }

    #[test]
    fn termination_is_not_suppressed_by_pseudo() {
        let l = lex("maar\ttermination\nniet maar\tpseudo\nniet\tneg_forward\n");
        let ms = match_triggers(&tokenize("niet maar koorts"), &l);
        assert_eq!(
            summary(&ms),
            vec![(TriggerKind::Pseudo, 0..2), (TriggerKind::Termination, 1..2)]
        );
    }

    #[test]
    fn offsets_follow_token_index() {
        let l = lex("geen\tneg_forward\n");
        let tokens = tokenize("Wel hoest. Geen koorts");
        let ms = match_triggers(&tokens[3..], &l);
        assert_eq!(summary(&ms), vec![(TriggerKind::NegForward, 3..4)]);
    }
}
