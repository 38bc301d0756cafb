//! Scoring: sentence-level detection/correction, MaxMatch (M2) and an
//! ERRANT-style span scorer.
//!
//! All protocols micro-average: corpus counts are sums of per-sentence
//! counts. With no proposed edits precision is 1, with no gold edits recall
//! is 1, and `F` is 0 whenever both precision and recall are 0.

mod errant;
mod m2;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use errant::{errant_score, errant_score_corpus};
pub use m2::{
    m2_best_edits, m2_score, m2_score_corpus, parse_m2, read_m2, save_m2, write_m2, M2Alignment,
    M2Sentence,
    M2_MAX_SPAN,
};

use crate::align::derive_labels;
use crate::error::{Error, Result};
use crate::types::{Sentence, SentencePair};

pub fn f_beta(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let denom = b2 * precision + recall;
    if denom > 0.0 {
        (1.0 + b2) * precision * recall / denom
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub proposed: usize,
    pub gold: usize,
}

impl Counts {
    pub fn precision(&self) -> f64 {
        if self.proposed == 0 {
            1.0
        } else {
            self.tp as f64 / self.proposed as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.gold == 0 {
            1.0
        } else {
            self.tp as f64 / self.gold as f64
        }
    }

    pub fn f(&self, beta: f64) -> f64 {
        f_beta(self.precision(), self.recall(), beta)
    }
}

impl std::ops::Add for Counts {
    type Output = Counts;

    fn add(self, o: Counts) -> Counts {
        Counts {
            tp: self.tp + o.tp,
            proposed: self.proposed + o.proposed,
            gold: self.gold + o.gold,
        }
    }
}

impl std::ops::AddAssign for Counts {
    fn add_assign(&mut self, o: Counts) {
        *self = *self + o;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceDiag {
    pub index: usize,
    pub tp: usize,
    pub proposed: usize,
    pub gold: usize,
    /// Annotator whose edits were scored, where several exist.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub annotator: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    pub beta: f64,
    pub tp: usize,
    pub proposed: usize,
    pub gold: usize,
    pub sentences: Vec<SentenceDiag>,
}

impl EvalReport {
    pub fn from_counts(c: Counts, beta: f64, sentences: Vec<SentenceDiag>) -> Self {
        EvalReport {
            precision: c.precision(),
            recall: c.recall(),
            f_score: c.f(beta),
            beta,
            tp: c.tp,
            proposed: c.proposed,
            gold: c.gold,
            sentences,
        }
    }

    pub fn counts(&self) -> Counts {
        Counts {
            tp: self.tp,
            proposed: self.proposed,
            gold: self.gold,
        }
    }
}

/// Plain-text table of named reports.
pub fn render_table(rows: &[(&str, &EvalReport)]) -> String {
    let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max(5);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>8}  {:>8}  {:>8}  {:>6}  {:>8}  {:>6}",
        "scope", "prec", "rec", "f", "tp", "proposed", "gold"
    );
    for (name, r) in rows {
        let _ = writeln!(
            out,
            "{:<width$}  {:>8.4}  {:>8.4}  {:>8.4}  {:>6}  {:>8}  {:>6}",
            name, r.precision, r.recall, r.f_score, r.tp, r.proposed, r.gold
        );
    }
    out
}

/// Sentence-level detection and correction reports (F1).
///
/// Detection: a sentence counts as proposed when the hypothesis changes it,
/// and as correct when it is errorful and the error positions and classes
/// implied by the hypothesis equal those implied by the target.
/// Correction: correct when errorful and the hypothesis equals the target.
pub fn eval_sentence_level(
    gold: &[SentencePair],
    hypotheses: &[Sentence],
) -> Result<(EvalReport, EvalReport)> {
    if gold.len() != hypotheses.len() {
        return Err(Error::Usage(format!(
            "{} gold pairs but {} hypotheses",
            gold.len(),
            hypotheses.len()
        )));
    }
    let mut det = Counts::default();
    let mut cor = Counts::default();
    let mut det_diag = Vec::with_capacity(gold.len());
    let mut cor_diag = Vec::with_capacity(gold.len());
    for (index, (pair, hyp)) in gold.iter().zip(hypotheses).enumerate() {
        let errorful = pair.is_errorful();
        let proposed = *hyp != pair.source;
        let detected = errorful
            && proposed
            && derive_labels(&SentencePair::new(pair.source.clone(), hyp.clone()))
                .labels
                .classes()
                == derive_labels(pair).labels.classes();
        let corrected = errorful && *hyp == pair.target;
        let d = Counts {
            tp: usize::from(detected),
            proposed: usize::from(proposed),
            gold: usize::from(errorful),
        };
        let c = Counts {
            tp: usize::from(corrected),
            ..d
        };
        det += d;
        cor += c;
        det_diag.push(SentenceDiag {
            index,
            tp: d.tp,
            proposed: d.proposed,
            gold: d.gold,
            annotator: None,
        });
        cor_diag.push(SentenceDiag {
            index,
            tp: c.tp,
            proposed: c.proposed,
            gold: c.gold,
            annotator: None,
        });
    }
    Ok((
        EvalReport::from_counts(det, 1.0, det_diag),
        EvalReport::from_counts(cor, 1.0, cor_diag),
    ))
}

/// Pick, per sentence, the annotator whose counts maximize the running
/// corpus F; ties go to more true positives, then fewer gold edits, then
/// the lower annotator index.
pub(crate) fn choose_annotator(running: Counts, options: &[Counts], beta: f64) -> usize {
    let mut best = 0;
    let mut best_key = None;
    for (i, c) in options.iter().enumerate() {
        let total = running + *c;
        let key = (total.f(beta), c.tp as i64, -(c.gold as i64));
        let better = match best_key {
            None => true,
            Some((f, tp, g)) => {
                key.0 > f || (key.0 == f && (key.1 > tp || (key.1 == tp && key.2 > g)))
            }
        };
        if better {
            best = i;
            best_key = Some(key);
        }
    }
    best
}
