//! Corpus file formats: parallel TSV, JSONL labels and plain sentence lists.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Action, Labels, Sentence, SentencePair, TokenLabel};

/// Iterates `(line_number, text)` over LF-separated UTF-8 lines.
pub struct Lines<R> {
    reader: R,
    line: usize,
    buf: Vec<u8>,
}

impl<R: BufRead> Lines<R> {
    pub fn new(reader: R) -> Self {
        Lines {
            reader,
            line: 0,
            buf: Vec::new(),
        }
    }
}

impl<R: BufRead> Iterator for Lines<R> {
    type Item = Result<(usize, String)>;

    fn next(&mut self) -> Option<Self::Item> {
        self.buf.clear();
        match self.reader.read_until(b'\n', &mut self.buf) {
            Ok(0) => None,
            Ok(_) => {
                self.line += 1;
                if self.buf.last() == Some(&b'\n') {
                    self.buf.pop();
                }
                let line = self.line;
                Some(
                    String::from_utf8(std::mem::take(&mut self.buf))
                        .map(|s| (line, s))
                        .map_err(|_| Error::Decode { line }),
                )
            }
            Err(e) => Some(Err(e.into())),
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

fn sentence_at(line: usize, text: &str) -> Result<Sentence> {
    Sentence::new(text).map_err(|e| Error::parse(line, e.to_string()))
}

/// Streaming reader for `source<TAB>target` lines. Empty lines are skipped.
pub struct ParallelTsvReader<R> {
    lines: Lines<R>,
}

impl<R: BufRead> ParallelTsvReader<R> {
    pub fn new(reader: R) -> Self {
        ParallelTsvReader {
            lines: Lines::new(reader),
        }
    }
}

impl<R: BufRead> Iterator for ParallelTsvReader<R> {
    type Item = Result<SentencePair>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let (line, text) = match self.lines.next()? {
                Ok(v) => v,
                Err(e) => return Some(Err(e)),
            };
            if text.is_empty() {
                continue;
            }
            let fields: Vec<&str> = text.split('\t').collect();
            if fields.len() != 2 {
                return Some(Err(Error::parse(
                    line,
                    format!("expected 2 tab-separated fields, found {}", fields.len()),
                )));
            }
            return Some(
                sentence_at(line, fields[0])
                    .and_then(|src| Ok(SentencePair::new(src, sentence_at(line, fields[1])?))),
            );
        }
    }
}

pub fn read_parallel_tsv(path: impl AsRef<Path>) -> Result<Vec<SentencePair>> {
    ParallelTsvReader::new(open(path.as_ref())?).collect()
}

pub fn write_parallel_tsv<'a>(
    pairs: impl IntoIterator<Item = &'a SentencePair>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for p in pairs {
        writeln!(w, "{}\t{}", p.source, p.target)?;
    }
    w.flush()?;
    Ok(())
}

/// One sentence per line; every line (including blank ones) is a sentence.
pub fn read_sentences(path: impl AsRef<Path>) -> Result<Vec<Sentence>> {
    Lines::new(open(path.as_ref())?)
        .map(|r| r.and_then(|(line, text)| sentence_at(line, &text)))
        .collect()
}

pub fn write_sentences<'a>(
    sentences: impl IntoIterator<Item = &'a Sentence>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for s in sentences {
        writeln!(w, "{s}")?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct LabelEntry {
    ins: usize,
    act: Action,
}

#[derive(Debug, Serialize, Deserialize)]
struct LabelRecord {
    source: Sentence,
    target: Sentence,
    labels: Vec<LabelEntry>,
    end_ins: usize,
}

impl LabelRecord {
    fn from_pair(pair: &SentencePair) -> Result<Self> {
        let labels = pair.gold_labels.as_ref().ok_or_else(|| {
            Error::Validation(format!("pair {:?} has no gold labels", pair.source.to_string()))
        })?;
        labels.check_len(pair.source.len())?;
        Ok(LabelRecord {
            source: pair.source.clone(),
            target: pair.target.clone(),
            labels: labels
                .tokens
                .iter()
                .map(|t| LabelEntry {
                    ins: t.insert_before,
                    act: t.action,
                })
                .collect(),
            end_ins: labels.end_insert,
        })
    }

    fn into_pair(self) -> Result<SentencePair> {
        let labels = Labels {
            tokens: self
                .labels
                .into_iter()
                .map(|e| TokenLabel::new(e.ins, e.act))
                .collect(),
            end_insert: self.end_ins,
        };
        SentencePair::new(self.source, self.target).with_labels(labels)
    }
}

/// Encode one labeled pair as a JSON line (without the trailing newline).
pub fn label_line(pair: &SentencePair) -> Result<String> {
    Ok(serde_json::to_string(&LabelRecord::from_pair(pair)?)?)
}

pub fn write_labels_jsonl<'a>(
    pairs: impl IntoIterator<Item = &'a SentencePair>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for p in pairs {
        writeln!(w, "{}", label_line(p)?)?;
    }
    w.flush()?;
    Ok(())
}

/// Streaming reader for the JSONL label format.
pub struct LabelsJsonlReader<R> {
    lines: Lines<R>,
}

impl<R: BufRead> LabelsJsonlReader<R> {
    pub fn new(reader: R) -> Self {
        LabelsJsonlReader {
            lines: Lines::new(reader),
        }
    }
}

impl<R: BufRead> Iterator for LabelsJsonlReader<R> {
    type Item = Result<SentencePair>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let (line, text) = match self.lines.next()? {
                Ok(v) => v,
                Err(e) => return Some(Err(e)),
            };
            if text.trim().is_empty() {
                continue;
            }
            return Some(
                serde_json::from_str::<LabelRecord>(&text)
                    .map_err(|e| Error::parse(line, e.to_string()))
                    .and_then(|r| {
                        r.into_pair()
                            .map_err(|e| Error::parse(line, e.to_string()))
                    }),
            );
        }
    }
}

pub fn read_labels_jsonl(path: impl AsRef<Path>) -> Result<Vec<SentencePair>> {
    LabelsJsonlReader::new(open(path.as_ref())?).collect()
}
