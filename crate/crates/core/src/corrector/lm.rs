//! Character trigram language model with add-k smoothing.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detector::{check_kind, BOS, EOS};
use crate::error::{Error, Result};
use crate::types::Sentence;

pub const LM_KIND: &str = "charlm.v1";
pub const DEFAULT_K: f64 = 0.01;
pub const DEFAULT_TOP_K: usize = 2000;

/// Trigram counts over sentences padded as `BOS BOS x1 .. xn EOS`.
///
/// `P(c | a, b)` is add-k smoothed over the vocabulary. A context never seen
/// as a trigram prefix backs off to the add-k bigram `P(c | b)`, and an
/// unseen `b` to the add-k unigram.
#[derive(Debug, Clone, PartialEq)]
pub struct CharLM {
    k: f64,
    top_k: usize,
    vocab: BTreeSet<char>,
    unigrams: HashMap<char, u64>,
    bigrams: HashMap<(char, char), u64>,
    trigrams: HashMap<(char, char, char), u64>,
    total: u64,
    bigram_ctx: HashMap<char, u64>,
    trigram_ctx: HashMap<(char, char), u64>,
    candidates: Vec<char>,
}

#[derive(Serialize, Deserialize)]
struct Counts {
    #[serde(rename = "1")]
    uni: BTreeMap<String, u64>,
    #[serde(rename = "2")]
    bi: BTreeMap<String, u64>,
    #[serde(rename = "3")]
    tri: BTreeMap<String, u64>,
}

#[derive(Serialize, Deserialize)]
struct LmFile {
    kind: String,
    k: f64,
    top_k: usize,
    counts: Counts,
}

impl CharLM {
    pub fn train<'a>(
        corpus: impl IntoIterator<Item = &'a Sentence>,
        k: f64,
        top_k: usize,
    ) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::Usage(format!("smoothing constant must be positive, got {k}")));
        }
        let mut unigrams = HashMap::new();
        let mut bigrams = HashMap::new();
        let mut trigrams = HashMap::new();
        let mut any = false;
        for s in corpus {
            any = true;
            let padded: Vec<char> = [BOS, BOS]
                .into_iter()
                .chain(s.chars().iter().copied())
                .chain(std::iter::once(EOS))
                .collect();
            for &c in &padded[2..] {
                *unigrams.entry(c).or_insert(0) += 1;
            }
            for w in padded[1..].windows(2) {
                *bigrams.entry((w[0], w[1])).or_insert(0) += 1;
            }
            for w in padded.windows(3) {
                *trigrams.entry((w[0], w[1], w[2])).or_insert(0) += 1;
            }
        }
        if !any {
            return Err(Error::Usage("cannot train a language model on an empty corpus".into()));
        }
        Ok(Self::from_counts(k, top_k, unigrams, bigrams, trigrams))
    }

    fn from_counts(
        k: f64,
        top_k: usize,
        unigrams: HashMap<char, u64>,
        bigrams: HashMap<(char, char), u64>,
        trigrams: HashMap<(char, char, char), u64>,
    ) -> Self {
        let mut bigram_ctx = HashMap::new();
        for (&(a, _), &n) in &bigrams {
            *bigram_ctx.entry(a).or_insert(0) += n;
        }
        let mut trigram_ctx = HashMap::new();
        for (&(a, b, _), &n) in &trigrams {
            *trigram_ctx.entry((a, b)).or_insert(0) += n;
        }
        let mut vocab: BTreeSet<char> = unigrams.keys().copied().collect();
        vocab.insert(BOS);
        vocab.insert(EOS);
        let mut ranked: Vec<(char, u64)> = unigrams
            .iter()
            .filter(|(c, _)| **c != BOS && **c != EOS)
            .map(|(&c, &n)| (c, n))
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let candidates = ranked.into_iter().take(top_k).map(|(c, _)| c).collect();
        let total = unigrams.values().sum();
        CharLM {
            k,
            top_k,
            vocab,
            unigrams,
            bigrams,
            trigrams,
            total,
            bigram_ctx,
            trigram_ctx,
            candidates,
        }
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Observed characters plus the two padding symbols.
    pub fn vocab(&self) -> &BTreeSet<char> {
        &self.vocab
    }

    pub fn contains(&self, c: char) -> bool {
        self.vocab.contains(&c)
    }

    /// The most frequent characters, at most `top_k`, by descending count.
    pub fn candidates(&self) -> &[char] {
        &self.candidates
    }

    pub fn unigram_count(&self, c: char) -> u64 {
        self.unigrams.get(&c).copied().unwrap_or(0)
    }

    pub fn bigram_count(&self, a: char, b: char) -> u64 {
        self.bigrams.get(&(a, b)).copied().unwrap_or(0)
    }

    pub fn trigram_count(&self, a: char, b: char, c: char) -> u64 {
        self.trigrams.get(&(a, b, c)).copied().unwrap_or(0)
    }

    fn smoothed(&self, count: u64, ctx: u64) -> f64 {
        (count as f64 + self.k) / (ctx as f64 + self.k * self.vocab.len() as f64)
    }

    /// `P(c | a, b)` with add-k smoothing and backoff on unseen contexts.
    pub fn prob(&self, a: char, b: char, c: char) -> f64 {
        if let Some(&ctx) = self.trigram_ctx.get(&(a, b)) {
            return self.smoothed(self.trigram_count(a, b, c), ctx);
        }
        if let Some(&ctx) = self.bigram_ctx.get(&b) {
            return self.smoothed(self.bigram_count(b, c), ctx);
        }
        self.smoothed(self.unigram_count(c), self.total)
    }

    /// `ln P(c | left) + ln P(right[0] | left[-1], c)`; the right term is
    /// dropped when `right` is empty. Missing left context is padded.
    pub fn score_candidate(&self, left: &[char], c: char, right: &[char]) -> f64 {
        let l1 = left.last().copied().unwrap_or(BOS);
        let l2 = if left.len() >= 2 { left[left.len() - 2] } else { BOS };
        let mut score = self.prob(l2, l1, c).ln();
        if let Some(&r) = right.first() {
            score += self.prob(l1, c, r).ln();
        }
        score
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let key = |cs: &[char]| cs.iter().collect::<String>();
        let file = LmFile {
            kind: LM_KIND.to_string(),
            k: self.k,
            top_k: self.top_k,
            counts: Counts {
                uni: self.unigrams.iter().map(|(&c, &n)| (key(&[c]), n)).collect(),
                bi: self.bigrams.iter().map(|(&(a, b), &n)| (key(&[a, b]), n)).collect(),
                tri: self
                    .trigrams
                    .iter()
                    .map(|(&(a, b, c), &n)| (key(&[a, b, c]), n))
                    .collect(),
            },
        };
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut w, &file)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_reader(BufReader::new(File::open(path)?))?;
        check_kind(&value, LM_KIND)?;
        let file: LmFile = serde_json::from_value(value)?;
        fn split<const N: usize>(key: &str) -> Result<[char; N]> {
            let chars: Vec<char> = key.chars().collect();
            chars
                .try_into()
                .map_err(|_| Error::Validation(format!("bad {N}-gram key {key:?}")))
        }
        let mut uni = HashMap::new();
        for (key, n) in file.counts.uni {
            let [c] = split::<1>(&key)?;
            uni.insert(c, n);
        }
        let mut bi = HashMap::new();
        for (key, n) in file.counts.bi {
            let [a, b] = split::<2>(&key)?;
            bi.insert((a, b), n);
        }
        let mut tri = HashMap::new();
        for (key, n) in file.counts.tri {
            let [a, b, c] = split::<3>(&key)?;
            tri.insert((a, b, c), n);
        }
        if !(file.k > 0.0 && file.k.is_finite()) {
            return Err(Error::Validation(format!("bad smoothing constant {}", file.k)));
        }
        Ok(Self::from_counts(file.k, file.top_k, uni, bi, tri))
    }
}
