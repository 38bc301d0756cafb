use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::corpus::Lines;
use crate::error::{Error, Result};

/// Characters that are easily confused with one another.
///
/// Self-mappings are dropped on insertion.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfusionSet {
    map: BTreeMap<char, BTreeSet<char>>,
}

impl ConfusionSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, c: char, confusables: impl IntoIterator<Item = char>) {
        let entry = self.map.entry(c).or_default();
        entry.extend(confusables.into_iter().filter(|&x| x != c));
        if entry.is_empty() {
            self.map.remove(&c);
        }
    }

    pub fn get(&self, c: char) -> Option<&BTreeSet<char>> {
        self.map.get(&c).filter(|s| !s.is_empty())
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Characters with at least one confusable.
    pub fn keys(&self) -> BTreeSet<char> {
        self.map.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (char, &BTreeSet<char>)> {
        self.map.iter().map(|(c, s)| (*c, s))
    }

    pub fn parse<R: BufRead>(reader: R) -> Result<Self> {
        let mut set = ConfusionSet::new();
        for item in Lines::new(reader) {
            let (line, text) = item?;
            if text.trim().is_empty() {
                continue;
            }
            let (key, rest) = text
                .split_once('\t')
                .ok_or_else(|| Error::parse(line, "expected char<TAB>confusables"))?;
            let mut kc = key.chars();
            let c = match (kc.next(), kc.next()) {
                (Some(c), None) => c,
                _ => return Err(Error::parse(line, "key must be exactly one character")),
            };
            if c.is_control() || rest.chars().any(char::is_control) {
                return Err(Error::parse(line, "control character in confusion entry"));
            }
            set.insert(c, rest.chars());
        }
        Ok(set)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(BufReader::new(File::open(path)?))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        for (c, set) in &self.map {
            let rest: String = set.iter().collect();
            writeln!(w, "{c}\t{rest}")?;
        }
        w.flush()?;
        Ok(())
    }
}
