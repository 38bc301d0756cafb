//! Detect, rewrite, correct.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Lines;
use crate::corrector::Corrector;
use crate::detector::{DetectorModel, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::modlogic::rewrite;
use crate::types::{ErrorClass, Labels, Sentence};

/// Intermediate results for one sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub source: Sentence,
    pub classes: Vec<ErrorClass>,
    /// Rewritten sequence with masks rendered as `[MASK]`.
    pub masked: String,
    pub masks: usize,
    pub output: Sentence,
}

pub struct Pipeline<'a, C> {
    pub detector: &'a DetectorModel,
    pub corrector: C,
    /// Added to the detector logits before the argmax.
    pub class_bias: [f64; NUM_CLASSES],
}

impl<'a, C: Corrector> Pipeline<'a, C> {
    pub fn new(detector: &'a DetectorModel, corrector: C) -> Self {
        Pipeline {
            detector,
            corrector,
            class_bias: [0.0; NUM_CLASSES],
        }
    }

    pub fn with_class_bias(mut self, bias: [f64; NUM_CLASSES]) -> Self {
        self.class_bias = bias;
        self
    }

    pub fn correct_sentence(&self, x: &Sentence) -> Result<(Sentence, Trace)> {
        let classes = self.detector.tag(x, &self.class_bias)?;
        let labels = Labels::from_classes(&classes)?;
        Ok(self.correct_with_labels(x, classes, &labels))
    }

    /// Run the rewrite and fill steps on externally supplied labels.
    pub fn correct_with_labels(
        &self,
        x: &Sentence,
        classes: Vec<ErrorClass>,
        labels: &Labels,
    ) -> (Sentence, Trace) {
        let masked = rewrite(x, labels).expect("detector emits n+1 labels");
        let y = self.corrector.fill(&masked);
        let trace = Trace {
            source: x.clone(),
            classes,
            masked: masked.to_string(),
            masks: masked.mask_count(),
            output: y.clone(),
        };
        (y, trace)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagCounts {
    pub keep: usize,
    pub mistaken: usize,
    pub missing: usize,
    pub redundant: usize,
}

impl TagCounts {
    fn add(&mut self, class: ErrorClass) {
        match class {
            ErrorClass::Keep => self.keep += 1,
            ErrorClass::Mistaken => self.mistaken += 1,
            ErrorClass::Missing => self.missing += 1,
            ErrorClass::Redundant => self.redundant += 1,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub sentences: usize,
    pub changed: usize,
    pub masks_filled: usize,
    pub tags: TagCounts,
}

const CHUNK: usize = 2048;

/// Correct every line of `input`, writing `source<TAB>corrected` lines to
/// `output` in input order, and optionally one JSON trace per line.
pub fn correct_corpus<C: Corrector + Sync>(
    pipeline: &Pipeline<'_, C>,
    input: &Path,
    output: &Path,
    jobs: usize,
    trace: Option<&Path>,
) -> Result<CorpusSummary> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Usage(format!("cannot start worker pool: {e}")))?;
    let mut lines = Lines::new(BufReader::new(File::open(input)?));
    let mut out = BufWriter::new(File::create(output)?);
    let mut trace_out = trace
        .map(|p| File::create(p).map(BufWriter::new))
        .transpose()?;
    let mut summary = CorpusSummary::default();
    loop {
        let chunk: Vec<(usize, String)> = lines
            .by_ref()
            .take(CHUNK)
            .collect::<Result<_>>()?;
        if chunk.is_empty() {
            break;
        }
        let results: Vec<Result<(Sentence, Trace)>> = pool.install(|| {
            chunk
                .par_iter()
                .map(|(line, text)| {
                    let x = Sentence::new(text).map_err(|e| Error::parse(*line, e.to_string()))?;
                    pipeline.correct_sentence(&x)
                })
                .collect()
        });
        for r in results {
            let (y, t) = r?;
            summary.sentences += 1;
            summary.changed += usize::from(y != t.source);
            summary.masks_filled += t.masks;
            for &c in &t.classes {
                summary.tags.add(c);
            }
            writeln!(out, "{}\t{}", t.source, y)?;
            if let Some(w) = trace_out.as_mut() {
                serde_json::to_writer(&mut *w, &t)?;
                w.write_all(b"\n")?;
            }
        }
    }
    out.flush()?;
    if let Some(mut w) = trace_out {
        w.flush()?;
    }
    Ok(summary)
}
