//! Mask filling.
//!
//! [`Corrector`] is the interface the pipeline fills masks through;
//! [`NgramCorrector`] backs it with a [`CharLM`] and fills masks left to
//! right with a beam.

mod confusion;
mod lm;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use confusion::ConfusionSet;
pub use lm::{CharLM, DEFAULT_K, DEFAULT_TOP_K, LM_KIND};

use crate::detector::EOS;
use crate::types::{Mask, MaskKind, MaskedSequence, Sentence, Slot};

pub trait Corrector {
    /// Replace every mask with one character. Never changes the slot count.
    fn fill(&self, masked: &MaskedSequence) -> Sentence;
}

/// Candidate characters for one mask.
///
/// Mistaken masks draw from the confusion set of the replaced character when
/// one is given; everything else draws from the LM's top-K list. The replaced
/// character itself is never proposed for a mistaken mask unless it is the
/// only candidate.
pub fn candidates_for(lm: &CharLM, mask: &Mask, confusion: Option<&ConfusionSet>) -> Vec<char> {
    let mut cands: Vec<char> = match (mask.kind, mask.original, confusion) {
        (MaskKind::Mistaken, Some(orig), Some(conf)) => conf
            .get(orig)
            .map(|set| set.iter().copied().collect())
            .unwrap_or_default(),
        _ => Vec::new(),
    };
    if cands.is_empty() {
        cands = lm.candidates().to_vec();
        if let (MaskKind::Mistaken, Some(orig)) = (mask.kind, mask.original) {
            if cands.len() > 1 {
                cands.retain(|&c| c != orig);
            }
        }
    }
    cands
}

#[derive(Debug, Clone)]
struct Hypothesis {
    chars: Vec<char>,
    score: f64,
}

/// Fill masks left to right keeping the `beam` best partial fills. Filled
/// masks become left context for later ones; a mask followed by another
/// mask is scored without right context.
pub fn fill(
    lm: &CharLM,
    masked: &MaskedSequence,
    confusion: Option<&ConfusionSet>,
    beam: usize,
) -> Sentence {
    let beam = beam.max(1);
    let slots = &masked.slots;
    let mut beams = vec![Hypothesis {
        chars: Vec::with_capacity(slots.len()),
        score: 0.0,
    }];
    for (i, slot) in slots.iter().enumerate() {
        match slot {
            Slot::Char(c) => {
                for h in &mut beams {
                    h.chars.push(*c);
                }
            }
            Slot::Mask(mask) => {
                let right: Vec<char> = match slots.get(i + 1) {
                    Some(Slot::Char(c)) => vec![*c],
                    Some(Slot::Mask(_)) => Vec::new(),
                    None => vec![EOS],
                };
                let cands = candidates_for(lm, mask, confusion);
                let mut next = Vec::with_capacity(beams.len() * cands.len());
                for h in &beams {
                    for &c in &cands {
                        next.push((h, c, h.score + lm.score_candidate(&h.chars, c, &right)));
                    }
                }
                // stable: ties keep beam order, then candidate order
                next.sort_by(|a, b| b.2.total_cmp(&a.2));
                next.truncate(beam);
                beams = next
                    .into_iter()
                    .map(|(h, c, score)| {
                        let mut chars = h.chars.clone();
                        chars.push(c);
                        Hypothesis { chars, score }
                    })
                    .collect();
            }
        }
    }
    let best = beams.into_iter().next().expect("beam is never empty");
    Sentence::from_chars(best.chars).expect("LM and confusion characters are valid tokens")
}

/// The n-gram LM behind the [`Corrector`] interface.
#[derive(Debug, Clone)]
pub struct NgramCorrector<'a> {
    pub lm: &'a CharLM,
    pub confusion: Option<&'a ConfusionSet>,
    pub beam: usize,
}

impl Corrector for NgramCorrector<'_> {
    fn fill(&self, masked: &MaskedSequence) -> Sentence {
        fill(self.lm, masked, self.confusion, self.beam)
    }
}

/// Fills each mask with a uniformly random candidate. Seeded per sentence
/// content, so output does not depend on processing order.
#[derive(Debug, Clone)]
pub struct RandomCorrector {
    pub alphabet: Vec<char>,
    pub seed: u64,
}

impl Corrector for RandomCorrector {
    fn fill(&self, masked: &MaskedSequence) -> Sentence {
        use std::hash::{Hash, Hasher};
        let mut h = fnv::FnvHasher::default();
        masked.hash(&mut h);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ h.finish());
        let chars = masked
            .slots
            .iter()
            .map(|s| match s {
                Slot::Char(c) => *c,
                Slot::Mask(_) => *self.alphabet.choose(&mut rng).expect("non-empty alphabet"),
            })
            .collect();
        Sentence::from_chars(chars).expect("alphabet characters are valid tokens")
    }
}
