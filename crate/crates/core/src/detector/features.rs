//! Hashed sparse token features.

use std::collections::{BTreeMap, BTreeSet};
use std::hash::Hasher;

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};

use crate::types::Sentence;

/// Left padding symbol. Control characters never occur in a [`Sentence`].
pub const BOS: char = '\u{2}';
/// Right padding symbol.
pub const EOS: char = '\u{3}';

pub const DEFAULT_DIM: usize = 1 << 18;

/// Sparse feature vector: sorted, deduplicated indices with summed weights.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureVector {
    entries: Vec<(u32, f64)>,
}

impl FeatureVector {
    pub fn from_indices(mut indices: Vec<u32>) -> Self {
        indices.sort_unstable();
        let mut entries: Vec<(u32, f64)> = Vec::with_capacity(indices.len());
        for i in indices {
            match entries.last_mut() {
                Some((last, w)) if *last == i => *w += 1.0,
                _ => entries.push((i, 1.0)),
            }
        }
        FeatureVector { entries }
    }

    pub fn from_entries(mut entries: Vec<(u32, f64)>) -> Self {
        entries.sort_by_key(|e| e.0);
        let mut out: Vec<(u32, f64)> = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            match out.last_mut() {
                Some((last, w)) if *last == i => *w += v,
                _ => out.push((i, v)),
            }
        }
        FeatureVector { entries: out }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn indices(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    pub fn max_index(&self) -> Option<u32> {
        self.entries.last().map(|e| e.0)
    }
}

/// Token representation for the detector. `pos` ranges over `0..=n`, where
/// `n` is the end slot.
pub trait Encoder {
    fn dim(&self) -> usize;
    fn encode(&self, sentence: &Sentence, pos: usize) -> FeatureVector;
}

/// Unigram, bigram and skip-bigram counts from clean text, padded with
/// [`BOS`] and [`EOS`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CharStats {
    pub unigrams: BTreeMap<char, u64>,
    pub bigrams: BTreeMap<String, u64>,
    pub skip_bigrams: BTreeMap<String, u64>,
}

impl CharStats {
    pub fn from_sentences<'a>(sentences: impl IntoIterator<Item = &'a Sentence>) -> Self {
        let mut stats = CharStats::default();
        for s in sentences {
            let padded: Vec<char> = std::iter::once(BOS)
                .chain(s.chars().iter().copied())
                .chain(std::iter::once(EOS))
                .collect();
            for &c in s.chars() {
                *stats.unigrams.entry(c).or_default() += 1;
            }
            for w in padded.windows(2) {
                *stats.bigrams.entry(pair_key(w[0], w[1])).or_default() += 1;
            }
            for w in padded.windows(3) {
                *stats.skip_bigrams.entry(pair_key(w[0], w[2])).or_default() += 1;
            }
        }
        stats
    }

    pub fn unigram(&self, c: char) -> u64 {
        self.unigrams.get(&c).copied().unwrap_or(0)
    }

    pub fn bigram(&self, a: char, b: char) -> u64 {
        self.bigrams.get(&pair_key(a, b)).copied().unwrap_or(0)
    }

    pub fn skip_bigram(&self, a: char, b: char) -> u64 {
        self.skip_bigrams.get(&pair_key(a, b)).copied().unwrap_or(0)
    }
}

fn pair_key(a: char, b: char) -> String {
    let mut s = String::with_capacity(8);
    s.push(a);
    s.push(b);
    s
}

/// Log2 frequency bucket, capped at 15.
fn bucket(count: u64) -> u32 {
    (64 - (count + 1).leading_zeros() - 1).min(15)
}

/// The default encoder: feature hashing over local character context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HashedFeaturizer {
    dim: usize,
    background: CharStats,
    confusable: BTreeSet<char>,
}

impl HashedFeaturizer {
    pub fn new(dim: usize, background: CharStats, confusable: BTreeSet<char>) -> Self {
        assert!(dim > 0, "feature dimension must be positive");
        HashedFeaturizer {
            dim,
            background,
            confusable,
        }
    }

    /// A featurizer with no background statistics or confusion set.
    pub fn plain(dim: usize) -> Self {
        Self::new(dim, CharStats::default(), BTreeSet::new())
    }

    pub fn background(&self) -> &CharStats {
        &self.background
    }

    fn index(&self, template: &str, chars: &[char]) -> u32 {
        let mut h = FnvHasher::default();
        h.write(template.as_bytes());
        h.write_u8(0xff);
        let mut buf = [0u8; 4];
        for c in chars {
            h.write(c.encode_utf8(&mut buf).as_bytes());
        }
        (mix(h.finish()) % self.dim as u64) as u32
    }
}

// splitmix64 finalizer; FNV's low bits alone are poorly distributed
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

impl Encoder for HashedFeaturizer {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, sentence: &Sentence, pos: usize) -> FeatureVector {
        let chars = sentence.chars();
        let n = chars.len();
        assert!(pos <= n, "position {pos} beyond end slot {n}");
        let at = |i: isize| -> char {
            if i < 0 {
                BOS
            } else {
                chars.get(i as usize).copied().unwrap_or(EOS)
            }
        };
        let p = pos as isize;
        let (prev, cur, next) = (at(p - 1), at(p), at(p + 1));
        let bg = &self.background;
        let (f_c, f_pc, f_cn, f_pn) = (
            bucket(bg.unigram(cur)),
            bucket(bg.bigram(prev, cur)),
            bucket(bg.bigram(cur, next)),
            bucket(bg.skip_bigram(prev, next)),
        );

        let mut idx = vec![
            self.index("c", &[cur]),
            self.index("p", &[prev]),
            self.index("n", &[next]),
            self.index("pc", &[prev, cur]),
            self.index("cn", &[cur, next]),
            self.index("pcn", &[prev, cur, next]),
            self.index("pn", &[prev, next]),
            self.index(&format!("fc{f_c}"), &[]),
            self.index(&format!("fpc{f_pc}"), &[]),
            self.index(&format!("fcn{f_cn}"), &[]),
            self.index(&format!("fpn{f_pn}"), &[]),
            self.index(&format!("fpc{f_pc}|fcn{f_cn}"), &[]),
            self.index(&format!("fpn{f_pn}|fpc{f_pc}|fcn{f_cn}"), &[]),
        ];
        if pos == 0 {
            idx.push(self.index("bos", &[]));
        }
        if pos == n {
            idx.push(self.index("eos", &[]));
        } else if pos + 1 == n {
            idx.push(self.index("last", &[]));
        }
        if pos < n && prev == cur {
            idx.push(self.index("rep", &[]));
        }
        if self.confusable.contains(&cur) {
            idx.push(self.index("conf", &[]));
        }
        FeatureVector::from_indices(idx)
    }
}
