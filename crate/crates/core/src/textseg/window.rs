use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{token_range, tokenize, Token, TextsegError};
use crate::corpus::{EntityAnnotation, Record};

/// A contiguous slice of record tokens selected around one entity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenWindow {
    pub center_entity_id: String,
    pub tokens: Range<usize>,
    /// Token range of the centre entity.
    pub entity_tokens: Range<usize>,
    /// Every entity of the record lying wholly inside the window. Only the
    /// centre entity may be scored by consumers.
    pub members: Vec<WindowMember>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowMember {
    pub entity_id: String,
    pub is_center: bool,
}

impl TokenWindow {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn slice<'a>(&self, tokens: &'a [Token]) -> &'a [Token] {
        &tokens[self.tokens.clone()]
    }
}

fn locate(record: &Record, entity: &EntityAnnotation, tokens: &[Token]) -> Result<Range<usize>, TextsegError> {
    if !record.entities.iter().any(|e| e.entity_id == entity.entity_id) {
        return Err(TextsegError::ForeignEntity(
            entity.entity_id.clone(),
            record.id.clone(),
        ));
    }
    token_range(tokens, entity.start, entity.end).ok_or_else(|| TextsegError::EntityNotAligned {
        entity_id: entity.entity_id.clone(),
        start: entity.start,
        end: entity.end,
    })
}

fn build(record: &Record, entity: &EntityAnnotation, tokens: &[Token], span: Range<usize>, entity_tokens: Range<usize>) -> TokenWindow {
    let members = record
        .entities
        .iter()
        .filter_map(|e| {
            let is_center = e.entity_id == entity.entity_id;
            let inside = token_range(tokens, e.start, e.end)
                .is_some_and(|r| r.start >= span.start && r.end <= span.end);
            (is_center || inside).then(|| WindowMember {
                entity_id: e.entity_id.clone(),
                is_center,
            })
        })
        .collect();
    TokenWindow {
        center_entity_id: entity.entity_id.clone(),
        tokens: span,
        entity_tokens,
        members,
    }
}

/// Fixed-size window centred on the entity's tokens.
///
/// Free slots are split evenly with the left side taking the odd one; a side
/// cut short by the record edge donates its deficit to the other side. An
/// entity longer than `window_size` yields a window of exactly its own tokens.
pub fn extract_window(record: &Record, entity: &EntityAnnotation, window_size: usize) -> Result<TokenWindow, TextsegError> {
    if window_size == 0 {
        return Err(TextsegError::InvalidWindowSize);
    }
    let tokens = tokenize(&record.text);
    let entity_tokens = locate(record, entity, &tokens)?;
    let span = centered_span(entity_tokens.clone(), window_size, tokens.len());
    Ok(build(record, entity, &tokens, span, entity_tokens))
}

pub(crate) fn centered_span(entity: Range<usize>, window_size: usize, token_count: usize) -> Range<usize> {
    let free = window_size.saturating_sub(entity.len());
    let mut left = free.div_ceil(2);
    let mut right = free / 2;
    let room_left = entity.start;
    let room_right = token_count - entity.end;
    if left > room_left {
        right += left - room_left;
        left = room_left;
    }
    if right > room_right {
        left = (left + right - room_right).min(room_left);
        right = room_right;
    }
    entity.start - left..entity.end + right
}

/// Up to `left` tokens before and `right` tokens after the entity, clamped at
/// the record edges.
pub fn asymmetric_context(record: &Record, entity: &EntityAnnotation, left: usize, right: usize) -> Result<TokenWindow, TextsegError> {
    let tokens = tokenize(&record.text);
    let entity_tokens = locate(record, entity, &tokens)?;
    let span = entity_tokens.start.saturating_sub(left)..(entity_tokens.end + right).min(tokens.len());
    Ok(build(record, entity, &tokens, span, entity_tokens))
}

#[cfg(test)]
#[allow(clippy::single_range_in_vec_init)]
mod tests {
    use super::*;
    use crate::corpus::Category;
    use crate::label::Label;

    /// Record of `n` single-letter-ish tokens `w0 w1 ...` with one entity per
    /// requested token range.
    fn synthetic(n: usize, entities: &[Range<usize>]) -> Record {
        let words: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
        let text = words.join(" ");
        let offset = |tok: usize| words[..tok].iter().map(|w| w.chars().count() + 1).sum::<usize>();
        let entities = entities
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let start = offset(r.start);
                let end = offset(r.end - 1) + words[r.end - 1].len();
                EntityAnnotation {
                    entity_id: format!("e{i}"),
                    start,
                    end,
                    surface: text[start..end].to_string(),
                    gold_label: Label::NotNegated,
                }
            })
            .collect();
        Record {
            id: "r".into(),
            category: Category::RadiologyReport,
            text,
            entities,
        }
    }

    #[test]
    fn interior_entity_is_centered() {
        let rec = synthetic(100, &[50..51]);
        let w = extract_window(&rec, &rec.entities[0], 32).unwrap();
        assert_eq!(w.tokens, 34..66);
        assert_eq!(w.len(), 32);
    }

    #[test]
    fn left_clamp_extends_right() {
        let rec = synthetic(100, &[1..2]);
        let w = extract_window(&rec, &rec.entities[0], 32).unwrap();
        assert_eq!(w.tokens, 0..32);
    }

    #[test]
    fn right_clamp_extends_left() {
        let rec = synthetic(100, &[98..99]);
        let w = extract_window(&rec, &rec.entities[0], 32).unwrap();
        assert_eq!(w.tokens, 68..100);
    }

    #[test]
    fn oversize_window_is_whole_record() {
        let rec = synthetic(10, &[4..5]);
        let w = extract_window(&rec, &rec.entities[0], 64).unwrap();
        assert_eq!(w.tokens, 0..10);
    }

    #[test]
    fn zero_window_rejected() {
        let rec = synthetic(10, &[4..5]);
        assert!(matches!(
            extract_window(&rec, &rec.entities[0], 0),
            Err(TextsegError::InvalidWindowSize)
        ));
    }

    #[test]
    fn entity_longer_than_window() {
        let rec = synthetic(20, &[5..12]);
        let w = extract_window(&rec, &rec.entities[0], 4).unwrap();
        assert_eq!(w.tokens, 5..12);
    }

    #[test]
    fn members_flag_center_only() {
        let rec = synthetic(40, &[20..21, 22..24, 0..1]);
        let w = extract_window(&rec, &rec.entities[0], 8).unwrap();
        assert_eq!(w.tokens, 16..24);
        assert_eq!(
            w.members,
            vec![
                WindowMember { entity_id: "e0".into(), is_center: true },
                WindowMember { entity_id: "e1".into(), is_center: false },
            ]
        );
    }

    #[test]
    fn asymmetric_defaults() {
        let rec = synthetic(60, &[20..22]);
        let w = asymmetric_context(&rec, &rec.entities[0], 15, 10).unwrap();
        assert_eq!(w.tokens, 5..32);
    }

    #[test]
    fn asymmetric_degenerate_and_clamped() {
        let rec = synthetic(60, &[20..22, 3..4]);
        let w = asymmetric_context(&rec, &rec.entities[0], 0, 0).unwrap();
        assert_eq!(w.tokens, 20..22);
        let w = asymmetric_context(&rec, &rec.entities[1], 15, 10).unwrap();
        assert_eq!(w.tokens, 0..14);
    }

    #[test]
    fn misaligned_entity_errors() {
        let mut rec = synthetic(5, &[1..2]);
        rec.text.push_str("     ");
        let mut e = rec.entities[0].clone();
        e.start = 15;
        e.end = 17;
        rec.entities[0] = e.clone();
        assert!(matches!(
            extract_window(&rec, &e, 4),
            Err(TextsegError::EntityNotAligned { .. })
        ));
    }

    #[test]
    fn centered_span_matches_brute_force() {
        // Brute force: among all windows of the clamped length containing the
        // entity, pick the one whose left margin is closest to ceil(free/2).
        for n in 1..30 {
            for s in 0..n {
                for e in s + 1..=n.min(s + 4) {
                    for size in 1..35 {
                        let got = centered_span(s..e, size, n);
                        let len = size.max(e - s).min(n);
                        let len = if size < e - s { e - s } else { len };
                        let want_left = (size.saturating_sub(e - s)).div_ceil(2);
                        let best = (0..=n - len)
                            .filter(|&a| a <= s && a + len >= e)
                            .min_by_key(|&a| ((s - a) as i64 - want_left as i64).abs())
                            .unwrap();
                        assert_eq!(got, best..best + len, "n={n} s={s} e={e} size={size}");
                    }
                }
            }
        }
    }
}
