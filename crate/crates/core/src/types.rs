//! Domain types shared across the toolkit.
//!
//! A [`Sentence`] is a sequence of Unicode scalar values; every other type is
//! indexed by character offsets into one.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A sequence of characters, one token per Unicode scalar value.
///
/// Control characters are rejected: tab and newline delimit corpus fields
/// and can never appear as tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Sentence(Vec<char>);

impl Sentence {
    pub fn new(text: &str) -> Result<Self> {
        Self::from_chars(text.chars().collect())
    }

    pub fn from_chars(chars: Vec<char>) -> Result<Self> {
        if let Some(c) = chars.iter().find(|c| c.is_control()) {
            return Err(Error::Validation(format!(
                "control character U+{:04X} in sentence",
                *c as u32
            )));
        }
        Ok(Sentence(chars))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn chars(&self) -> &[char] {
        &self.0
    }

    pub fn into_chars(self) -> Vec<char> {
        self.0
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.0 {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for Sentence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Sentence::new(s)
    }
}

impl Serialize for Sentence {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Sentence {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Sentence::new(&s).map_err(serde::de::Error::custom)
    }
}

/// What happens to a source token itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Keep,
    Mistaken,
    Redundant,
}

/// Edit instruction attached to one source token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TokenLabel {
    /// Number of characters missing immediately before this token.
    pub insert_before: usize,
    pub action: Action,
}

impl TokenLabel {
    pub const KEEP: TokenLabel = TokenLabel {
        insert_before: 0,
        action: Action::Keep,
    };

    pub fn new(insert_before: usize, action: Action) -> Self {
        TokenLabel {
            insert_before,
            action,
        }
    }

    /// Collapse to the four-class tag set.
    pub fn class(&self) -> ErrorClass {
        match (self.insert_before, self.action) {
            (k, Action::Keep) if k > 0 => ErrorClass::Missing,
            (_, Action::Keep) => ErrorClass::Keep,
            (_, Action::Mistaken) => ErrorClass::Mistaken,
            (_, Action::Redundant) => ErrorClass::Redundant,
        }
    }
}

impl From<ErrorClass> for TokenLabel {
    fn from(class: ErrorClass) -> Self {
        match class {
            ErrorClass::Keep => TokenLabel::new(0, Action::Keep),
            ErrorClass::Mistaken => TokenLabel::new(0, Action::Mistaken),
            ErrorClass::Missing => TokenLabel::new(1, Action::Keep),
            ErrorClass::Redundant => TokenLabel::new(0, Action::Redundant),
        }
    }
}

/// The four tag classes predicted by the detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorClass {
    Keep = 0,
    Mistaken = 1,
    Missing = 2,
    Redundant = 3,
}

impl ErrorClass {
    pub const ALL: [ErrorClass; 4] = [
        ErrorClass::Keep,
        ErrorClass::Mistaken,
        ErrorClass::Missing,
        ErrorClass::Redundant,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorClass::Keep => "keep",
            ErrorClass::Mistaken => "mistaken",
            ErrorClass::Missing => "missing",
            ErrorClass::Redundant => "redundant",
        }
    }
}

/// Labels for a sentence of length n: one entry per token plus the end slot,
/// which only carries an insertion count.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Labels {
    pub tokens: Vec<TokenLabel>,
    pub end_insert: usize,
}

impl Labels {
    pub fn keep_all(n: usize) -> Self {
        Labels {
            tokens: vec![TokenLabel::KEEP; n],
            end_insert: 0,
        }
    }

    /// Number of positions including the end slot.
    pub fn slots(&self) -> usize {
        self.tokens.len() + 1
    }

    pub fn check_len(&self, n: usize) -> Result<()> {
        if self.tokens.len() != n {
            return Err(Error::Validation(format!(
                "label sequence has {} token entries for a sentence of length {n}",
                self.tokens.len()
            )));
        }
        Ok(())
    }

    /// Four-class projection, n+1 entries. The end slot is Missing iff it
    /// carries an insertion.
    pub fn classes(&self) -> Vec<ErrorClass> {
        let mut out: Vec<ErrorClass> = self.tokens.iter().map(TokenLabel::class).collect();
        out.push(if self.end_insert > 0 {
            ErrorClass::Missing
        } else {
            ErrorClass::Keep
        });
        out
    }

    /// Inverse of [`Labels::classes`] on the four-class view. Mistaken and
    /// Redundant at the end slot have no meaning there and are dropped.
    pub fn from_classes(classes: &[ErrorClass]) -> Result<Self> {
        let (end, tokens) = classes
            .split_last()
            .ok_or_else(|| Error::Contract("class sequence lacks the end slot".into()))?;
        Ok(Labels {
            tokens: tokens.iter().map(|&c| TokenLabel::from(c)).collect(),
            end_insert: usize::from(*end == ErrorClass::Missing),
        })
    }

    pub fn is_all_keep(&self) -> bool {
        self.end_insert == 0 && self.tokens.iter().all(|t| *t == TokenLabel::KEEP)
    }
}

/// A source sentence with its correction and optional gold labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentencePair {
    pub source: Sentence,
    pub target: Sentence,
    pub gold_labels: Option<Labels>,
}

impl SentencePair {
    pub fn new(source: Sentence, target: Sentence) -> Self {
        SentencePair {
            source,
            target,
            gold_labels: None,
        }
    }

    pub fn with_labels(mut self, labels: Labels) -> Result<Self> {
        labels.check_len(self.source.len())?;
        self.gold_labels = Some(labels);
        Ok(self)
    }

    pub fn is_errorful(&self) -> bool {
        self.source != self.target
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskKind {
    Mistaken,
    Missing,
}

/// Which label position produced a mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskOrigin {
    Token(usize),
    End,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Mask {
    pub origin: MaskOrigin,
    pub kind: MaskKind,
    /// The replaced source character, for mistaken masks.
    pub original: Option<char>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slot {
    Char(char),
    Mask(Mask),
}

/// Rewritten sequence with mask slots awaiting the corrector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct MaskedSequence {
    pub slots: Vec<Slot>,
}

impl MaskedSequence {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn mask_count(&self) -> usize {
        self.masks().count()
    }

    pub fn masks(&self) -> impl Iterator<Item = (usize, &Mask)> {
        self.slots.iter().enumerate().filter_map(|(i, s)| match s {
            Slot::Mask(m) => Some((i, m)),
            Slot::Char(_) => None,
        })
    }

    /// The fixed characters in order, masks skipped.
    pub fn fixed_chars(&self) -> Vec<char> {
        self.slots
            .iter()
            .filter_map(|s| match s {
                Slot::Char(c) => Some(*c),
                Slot::Mask(_) => None,
            })
            .collect()
    }

    /// Fill masks in slot order from `fills`.
    pub fn fill_with(&self, fills: &[char]) -> Result<Sentence> {
        if fills.len() != self.mask_count() {
            return Err(Error::Contract(format!(
                "{} fills supplied for {} masks",
                fills.len(),
                self.mask_count()
            )));
        }
        let mut it = fills.iter();
        let chars = self
            .slots
            .iter()
            .map(|s| match s {
                Slot::Char(c) => *c,
                Slot::Mask(_) => *it.next().expect("counted above"),
            })
            .collect();
        Sentence::from_chars(chars)
    }
}

impl fmt::Display for MaskedSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.slots {
            match s {
                Slot::Char(c) => write!(f, "{c}")?,
                Slot::Mask(_) => f.write_str("[MASK]")?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EditType {
    Missing,
    Replacement,
    Unnecessary,
    Noop,
}

impl EditType {
    /// Type implied by the shape of a span edit.
    pub fn classify(start: usize, end: usize, replacement: &str) -> Self {
        if start == end {
            EditType::Missing
        } else if replacement.is_empty() {
            EditType::Unnecessary
        } else {
            EditType::Replacement
        }
    }

    /// Short code used in M2 files.
    pub fn code(self) -> &'static str {
        match self {
            EditType::Missing => "M",
            EditType::Replacement => "R",
            EditType::Unnecessary => "U",
            EditType::Noop => "noop",
        }
    }
}

/// A span edit over source character offsets `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edit {
    pub start: usize,
    pub end: usize,
    pub replacement: String,
    pub etype: EditType,
}

impl Edit {
    /// Build an edit whose type follows from its shape.
    pub fn new(start: usize, end: usize, replacement: impl Into<String>) -> Self {
        let replacement = replacement.into();
        let etype = EditType::classify(start, end, &replacement);
        Edit {
            start,
            end,
            replacement,
            etype,
        }
    }

    pub fn noop() -> Self {
        Edit {
            start: 0,
            end: 0,
            replacement: String::new(),
            etype: EditType::Noop,
        }
    }

    pub fn is_noop(&self) -> bool {
        self.etype == EditType::Noop
    }

    /// Same span and replacement, ignoring type.
    pub fn same_span(&self, other: &Edit) -> bool {
        self.start == other.start && self.end == other.end && self.replacement == other.replacement
    }

    pub fn validate(&self, source_len: usize) -> Result<()> {
        if self.is_noop() {
            return Ok(());
        }
        if self.start > self.end || self.end > source_len {
            return Err(Error::Validation(format!(
                "edit span [{}, {}) out of range for source of length {source_len}",
                self.start, self.end
            )));
        }
        if self.start == self.end && self.replacement.is_empty() {
            return Err(Error::Validation(format!(
                "empty insertion at offset {}",
                self.start
            )));
        }
        if self.etype != EditType::classify(self.start, self.end, &self.replacement) {
            return Err(Error::Validation(format!(
                "edit type {:?} inconsistent with span [{}, {}) -> {:?}",
                self.etype, self.start, self.end, self.replacement
            )));
        }
        Ok(())
    }
}

/// Apply non-overlapping edits to `source`. Edits are applied in order of
/// start offset; zero-width edits at the same offset keep their given order.
pub fn apply_edits(source: &Sentence, edits: &[Edit]) -> Result<Sentence> {
    let chars = source.chars();
    let mut sorted: Vec<&Edit> = edits.iter().filter(|e| !e.is_noop()).collect();
    sorted.sort_by_key(|e| (e.start, e.end));
    let mut out = Vec::with_capacity(chars.len());
    let mut cursor = 0;
    for e in sorted {
        e.validate(chars.len())?;
        if e.start < cursor {
            return Err(Error::Validation(format!(
                "overlapping edits at offset {}",
                e.start
            )));
        }
        out.extend_from_slice(&chars[cursor..e.start]);
        out.extend(e.replacement.chars());
        cursor = e.end;
    }
    out.extend_from_slice(&chars[cursor..]);
    Sentence::from_chars(out)
}
