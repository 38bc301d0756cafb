//! Seeded synthetic corruption of clean sentences.
//!
//! Each sample independently loses one character with probability
//! `p_delete` and gains one with probability `p_insert`. The inserted
//! character comes from one of four modes: an adjacent repeat, a confusable
//! of a neighbour, a character of a high-frequency lexicon word, or a
//! uniformly random vocabulary character. Gold labels are derived by
//! aligning the corrupted sentence back to the clean one.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::align::derive_labels;
use crate::corpus::Lines;
use crate::corrector::ConfusionSet;
use crate::error::{Error, Result};
use crate::types::{Sentence, SentencePair};

const ANCHOR_RETRIES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InsertMode {
    Repeat,
    Confusion,
    HighFreq,
    Random,
}

impl InsertMode {
    pub const ALL: [InsertMode; 4] = [
        InsertMode::Repeat,
        InsertMode::Confusion,
        InsertMode::HighFreq,
        InsertMode::Random,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeWeights {
    pub repeat: f64,
    pub confusion: f64,
    pub high_freq: f64,
    pub random: f64,
}

impl Default for ModeWeights {
    fn default() -> Self {
        ModeWeights {
            repeat: 0.35,
            confusion: 0.30,
            high_freq: 0.30,
            random: 0.05,
        }
    }
}

impl ModeWeights {
    pub fn as_array(&self) -> [f64; 4] {
        [self.repeat, self.confusion, self.high_freq, self.random]
    }

    pub fn from_array(w: [f64; 4]) -> Self {
        ModeWeights {
            repeat: w[0],
            confusion: w[1],
            high_freq: w[2],
            random: w[3],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub p_delete: f64,
    pub p_insert: f64,
    pub p_substitute: f64,
    pub mode_weights: ModeWeights,
    /// Lexicon entries eligible for high-frequency insertion.
    pub top_n: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            p_delete: 0.5,
            p_insert: 0.5,
            p_substitute: 0.0,
            mode_weights: ModeWeights::default(),
            top_n: 1000,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p_delete", self.p_delete),
            ("p_insert", self.p_insert),
            ("p_substitute", self.p_substitute),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Validation(format!("{name} = {p} is not a probability")));
            }
        }
        let w = self.mode_weights.as_array();
        if w.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::Validation(format!("mode weights {w:?} must lie in [0, 1]")));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!("mode weights sum to {sum}, not 1")));
        }
        if self.top_n == 0 {
            return Err(Error::Validation("top_n must be positive".into()));
        }
        Ok(())
    }
}

/// Frequency-ranked word list, `word<TAB>frequency` per line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lexicon {
    /// Descending frequency, ties by word.
    entries: Vec<(String, u64)>,
}

impl Lexicon {
    pub fn from_entries(mut entries: Vec<(String, u64)>) -> Self {
        entries.retain(|(w, _)| !w.is_empty());
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Lexicon { entries }
    }

    /// Single-character entries counted over a corpus.
    pub fn from_corpus<'a>(corpus: impl IntoIterator<Item = &'a Sentence>) -> Self {
        let mut counts: BTreeMap<char, u64> = BTreeMap::new();
        for s in corpus {
            for &c in s.chars() {
                *counts.entry(c).or_default() += 1;
            }
        }
        Self::from_entries(counts.into_iter().map(|(c, n)| (c.to_string(), n)).collect())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut entries = Vec::new();
        for item in Lines::new(BufReader::new(File::open(path)?)) {
            let (line, text) = item?;
            if text.trim().is_empty() {
                continue;
            }
            let (word, freq) = text
                .split_once('\t')
                .ok_or_else(|| Error::parse(line, "expected word<TAB>frequency"))?;
            let freq: u64 = freq
                .trim()
                .parse()
                .map_err(|_| Error::parse(line, format!("bad frequency {freq:?}")))?;
            if word.chars().any(char::is_control) {
                return Err(Error::parse(line, "control character in lexicon word"));
            }
            entries.push((word.to_string(), freq));
        }
        Ok(Self::from_entries(entries))
    }

    pub fn top(&self, n: usize) -> impl Iterator<Item = &str> {
        self.entries.iter().take(n).map(|(w, _)| w.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Character sources used by the insertion and substitution modes.
#[derive(Debug, Clone)]
pub struct SynthResources {
    pub confusion: ConfusionSet,
    high_freq_words: Vec<Vec<char>>,
    vocab: Vec<char>,
}

impl SynthResources {
    /// `vocab` is taken from the corpus; the lexicon defaults to the
    /// corpus' own character frequencies.
    pub fn new(
        corpus: &[Sentence],
        confusion: ConfusionSet,
        lexicon: Option<&Lexicon>,
        top_n: usize,
    ) -> Self {
        let vocab: BTreeSet<char> = corpus.iter().flat_map(|s| s.chars().iter().copied()).collect();
        let fallback;
        let lexicon = match lexicon {
            Some(l) if !l.is_empty() => l,
            _ => {
                fallback = Lexicon::from_corpus(corpus);
                &fallback
            }
        };
        SynthResources {
            confusion,
            high_freq_words: lexicon.top(top_n).map(|w| w.chars().collect()).collect(),
            vocab: vocab.into_iter().collect(),
        }
    }

    pub fn vocab(&self) -> &[char] {
        &self.vocab
    }

    fn random_char<R: Rng>(&self, rng: &mut R) -> char {
        *self.vocab.choose(rng).expect("corpus vocabulary is non-empty")
    }

    fn high_freq_char<R: Rng>(&self, rng: &mut R) -> char {
        match self.high_freq_words.choose(rng) {
            Some(word) => *word.choose(rng).expect("lexicon words are non-empty"),
            None => self.random_char(rng),
        }
    }

    /// A position whose character has confusables, with one of them.
    fn confusable_at<R: Rng>(&self, chars: &[char], rng: &mut R) -> Option<(usize, char)> {
        for _ in 0..ANCHOR_RETRIES {
            let p = rng.gen_range(0..chars.len());
            if let Some(set) = self.confusion.get(chars[p]) {
                let options: Vec<char> = set.iter().copied().collect();
                return Some((p, *options.choose(rng).expect("non-empty confusion entry")));
            }
        }
        None
    }
}

/// What was done to one sentence.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorruptionRecord {
    pub substituted: bool,
    pub deleted: bool,
    /// Realized insertion mode.
    pub inserted: Option<InsertMode>,
    /// Confusion insertion fell back to random for lack of confusables.
    pub fallback: bool,
    pub conflicts: usize,
}

pub fn corrupt<R: Rng>(
    clean: &Sentence,
    cfg: &SynthConfig,
    res: &SynthResources,
    rng: &mut R,
) -> Result<(SentencePair, CorruptionRecord)> {
    if clean.len() < 2 {
        return Err(Error::Validation(format!(
            "sentence of length {} is too short to corrupt",
            clean.len()
        )));
    }
    let mut chars = clean.chars().to_vec();
    let mut record = CorruptionRecord::default();

    if rng.gen_bool(cfg.p_substitute) {
        let (p, c) = match res.confusable_at(&chars, rng) {
            Some(hit) => hit,
            None => {
                let p = rng.gen_range(0..chars.len());
                let alternatives: Vec<char> =
                    res.vocab.iter().copied().filter(|&c| c != chars[p]).collect();
                match alternatives.choose(rng) {
                    Some(&c) => (p, c),
                    None => (p, chars[p]),
                }
            }
        };
        record.substituted = chars[p] != c;
        chars[p] = c;
    }

    if rng.gen_bool(cfg.p_delete) {
        let p = rng.gen_range(0..chars.len());
        chars.remove(p);
        record.deleted = true;
    }

    if rng.gen_bool(cfg.p_insert) {
        let weights = WeightedIndex::new(cfg.mode_weights.as_array())
            .map_err(|e| Error::Validation(format!("mode weights: {e}")))?;
        let mut mode = InsertMode::ALL[weights.sample(rng)];
        if mode == InsertMode::Confusion {
            match res.confusable_at(&chars, rng) {
                Some((p, c)) => chars.insert(p + 1, c),
                None => {
                    record.fallback = true;
                    mode = InsertMode::Random;
                }
            }
        }
        match mode {
            InsertMode::Repeat => {
                let p = rng.gen_range(0..chars.len());
                chars.insert(p + 1, chars[p]);
            }
            InsertMode::HighFreq => {
                let c = res.high_freq_char(rng);
                let p = rng.gen_range(0..=chars.len());
                chars.insert(p, c);
            }
            InsertMode::Random => {
                let c = res.random_char(rng);
                let p = rng.gen_range(0..=chars.len());
                chars.insert(p, c);
            }
            InsertMode::Confusion => {}
        }
        record.inserted = Some(mode);
    }

    let pair = SentencePair::new(Sentence::from_chars(chars)?, clean.clone());
    let derived = derive_labels(&pair);
    record.conflicts = derived.conflicts;
    Ok((pair.with_labels(derived.labels)?, record))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeCounts {
    pub repeat: usize,
    pub confusion: usize,
    pub high_freq: usize,
    pub random: usize,
}

impl ModeCounts {
    fn add(&mut self, mode: InsertMode) {
        match mode {
            InsertMode::Repeat => self.repeat += 1,
            InsertMode::Confusion => self.confusion += 1,
            InsertMode::HighFreq => self.high_freq += 1,
            InsertMode::Random => self.random += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.repeat + self.confusion + self.high_freq + self.random
    }

    pub fn fractions(&self) -> ModeWeights {
        let t = self.total().max(1) as f64;
        ModeWeights {
            repeat: self.repeat as f64 / t,
            confusion: self.confusion as f64 / t,
            high_freq: self.high_freq as f64 / t,
            random: self.random as f64 / t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: SynthConfig,
    pub sentences: usize,
    /// Sentences shorter than two characters, passed through unchanged.
    pub skipped: usize,
    pub deleted: usize,
    pub inserted: usize,
    pub substituted: usize,
    pub modes: ModeCounts,
    pub confusion_fallbacks: usize,
    pub conflicts: usize,
    pub delete_fraction: f64,
    pub insert_fraction: f64,
    pub substitute_fraction: f64,
    pub mode_fractions: ModeWeights,
}

/// Per-sentence generator: stream `index` of the seeded ChaCha8 family.
pub fn sentence_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

pub fn corrupt_corpus(
    clean: &[Sentence],
    cfg: &SynthConfig,
    res: &SynthResources,
) -> Result<(Vec<SentencePair>, Manifest)> {
    cfg.validate()?;
    let results: Vec<Result<(SentencePair, Option<CorruptionRecord>)>> = clean
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            if s.len() < 2 {
                let pair = SentencePair::new(s.clone(), s.clone())
                    .with_labels(crate::types::Labels::keep_all(s.len()))?;
                return Ok((pair, None));
            }
            let (pair, rec) = corrupt(s, cfg, res, &mut sentence_rng(cfg.seed, i))?;
            Ok((pair, Some(rec)))
        })
        .collect();

    let mut pairs = Vec::with_capacity(clean.len());
    let mut m = Manifest {
        config: *cfg,
        sentences: clean.len(),
        skipped: 0,
        deleted: 0,
        inserted: 0,
        substituted: 0,
        modes: ModeCounts::default(),
        confusion_fallbacks: 0,
        conflicts: 0,
        delete_fraction: 0.0,
        insert_fraction: 0.0,
        substitute_fraction: 0.0,
        mode_fractions: ModeWeights::from_array([0.0; 4]),
    };
    for r in results {
        let (pair, rec) = r?;
        match rec {
            None => m.skipped += 1,
            Some(rec) => {
                m.deleted += usize::from(rec.deleted);
                m.substituted += usize::from(rec.substituted);
                if let Some(mode) = rec.inserted {
                    m.inserted += 1;
                    m.modes.add(mode);
                }
                m.confusion_fallbacks += usize::from(rec.fallback);
                m.conflicts += rec.conflicts;
            }
        }
        pairs.push(pair);
    }
    let eligible = (m.sentences - m.skipped).max(1) as f64;
    m.delete_fraction = m.deleted as f64 / eligible;
    m.insert_fraction = m.inserted as f64 / eligible;
    m.substitute_fraction = m.substituted as f64 / eligible;
    m.mode_fractions = m.modes.fractions();
    Ok((pairs, m))
}
