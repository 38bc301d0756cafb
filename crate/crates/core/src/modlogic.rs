//! Modification logic: turn per-token labels into a masked sequence.
//!
//! For each source token, `insert_before` masks come first, then the token is
//! kept, masked or dropped according to its action. The end slot contributes
//! trailing masks only.

use crate::align::{align, AlignOp};
use crate::error::{Error, Result};
use crate::types::{
    Action, Labels, Mask, MaskKind, MaskOrigin, MaskedSequence, Sentence, SentencePair, Slot,
};

pub fn rewrite(source: &Sentence, labels: &Labels) -> Result<MaskedSequence> {
    if labels.tokens.len() != source.len() {
        return Err(Error::Contract(format!(
            "{} labels for {} source tokens (plus end slot)",
            labels.tokens.len(),
            source.len()
        )));
    }
    let missing = |origin| {
        Slot::Mask(Mask {
            origin,
            kind: MaskKind::Missing,
            original: None,
        })
    };
    let mut slots = Vec::with_capacity(source.len() + labels.end_insert);
    for (i, (&c, label)) in source.chars().iter().zip(&labels.tokens).enumerate() {
        let origin = MaskOrigin::Token(i);
        slots.extend(std::iter::repeat_n(missing(origin), label.insert_before));
        match label.action {
            Action::Keep => slots.push(Slot::Char(c)),
            Action::Mistaken => slots.push(Slot::Mask(Mask {
                origin,
                kind: MaskKind::Mistaken,
                original: Some(c),
            })),
            Action::Redundant => {}
        }
    }
    slots.extend(std::iter::repeat_n(missing(MaskOrigin::End), labels.end_insert));
    Ok(MaskedSequence { slots })
}

/// Fill masks with the characters the gold alignment of `pair` puts there.
///
/// Test oracle: isolates the rewrite step from any model.
pub fn oracle_fill(masked: &MaskedSequence, pair: &SentencePair) -> Result<Sentence> {
    let n = pair.source.len();
    let tgt = pair.target.chars();
    // Per label position: characters inserted before it, and the substitute.
    let mut inserted: Vec<Vec<char>> = vec![Vec::new(); n + 1];
    let mut substitute: Vec<Option<char>> = vec![None; n];
    for op in align(&pair.source, &pair.target) {
        match op {
            AlignOp::Insert { before, tgt: t } => inserted[before].push(tgt[t]),
            AlignOp::Substitute { src, tgt: t } => substitute[src] = Some(tgt[t]),
            AlignOp::Match { .. } | AlignOp::Delete { .. } => {}
        }
    }
    let mut used = vec![0usize; n + 1];
    let mut fills = Vec::with_capacity(masked.mask_count());
    for (slot, mask) in masked.masks() {
        let pos = match mask.origin {
            MaskOrigin::Token(i) if i < n => i,
            MaskOrigin::Token(i) => {
                return Err(Error::Oracle(format!(
                    "mask at slot {slot} points at token {i} beyond source length {n}"
                )))
            }
            MaskOrigin::End => n,
        };
        let c = match mask.kind {
            MaskKind::Mistaken => substitute.get(pos).copied().flatten(),
            MaskKind::Missing => {
                let c = inserted[pos].get(used[pos]).copied();
                used[pos] += 1;
                c
            }
        };
        let c = c.ok_or_else(|| {
            Error::Oracle(format!(
                "{:?} mask at slot {slot} has no counterpart in the gold alignment",
                mask.kind
            ))
        })?;
        fills.push(c);
    }
    masked.fill_with(&fills)
}
