//! Character-level text error correction with a detect-then-correct
//! pipeline.
//!
//! A [detector](detector) tags every character (and the end of the
//! sentence) as keep, mistaken, missing or redundant. The tags drive a
//! deterministic [rewrite](modlogic::rewrite) that deletes redundant
//! characters and replaces mistaken or missing positions with masks, and a
//! [corrector](corrector) fills the masks. Training data comes from
//! [synthetic corruption](synth) of clean text, with gold tags derived by
//! [alignment](align). The [eval] module scores output with sentence-level
//! P/R/F, MaxMatch and span matching.

pub mod align;
pub mod corpus;
pub mod corrector;
pub mod detector;
pub mod error;
pub mod eval;
pub mod modlogic;
pub mod pipeline;
pub mod synth;
pub mod types;

pub use align::{align, derive_labels, edit_distance, extract_edits, AlignOp, DerivedLabels};
pub use error::{Error, Result};
pub use modlogic::{oracle_fill, rewrite};
pub use types::{
    apply_edits, Action, Edit, EditType, ErrorClass, Labels, Mask, MaskKind, MaskOrigin,
    MaskedSequence, Sentence, SentencePair, Slot, TokenLabel,
};
