//! Span-matching scorer over merged character edits.

use rayon::prelude::*;

use crate::align::extract_edits;
use crate::error::{Error, Result};
use crate::eval::m2::{aggregate, M2Sentence};
use crate::eval::{Counts, EvalReport};
use crate::types::{Edit, Sentence};

fn counts(source: &Sentence, hyp: &Sentence, gold: &[Edit], type_sensitive: bool) -> Result<Counts> {
    let gold: Vec<&Edit> = gold.iter().filter(|e| !e.is_noop()).collect();
    for e in &gold {
        if e.start > e.end || e.end > source.len() {
            return Err(Error::Validation(format!(
                "gold edit [{}, {}) out of range for source of length {}",
                e.start,
                e.end,
                source.len()
            )));
        }
    }
    let system = extract_edits(source, hyp, true);
    let mut used = vec![false; gold.len()];
    let mut tp = 0;
    for s in &system {
        let hit = gold.iter().enumerate().position(|(k, g)| {
            !used[k] && g.same_span(s) && (!type_sensitive || g.etype == s.etype)
        });
        if let Some(k) = hit {
            used[k] = true;
            tp += 1;
        }
    }
    Ok(Counts {
        tp,
        proposed: system.len(),
        gold: gold.len(),
    })
}

pub fn errant_score(
    source: &Sentence,
    hyp: &Sentence,
    gold_sets: &[Vec<Edit>],
    beta: f64,
    type_sensitive: bool,
) -> Result<EvalReport> {
    let sentence = M2Sentence {
        source: source.clone(),
        annotators: gold_sets.to_vec(),
    };
    errant_score_corpus(
        std::slice::from_ref(&sentence),
        std::slice::from_ref(hyp),
        beta,
        type_sensitive,
    )
}

pub fn errant_score_corpus(
    gold: &[M2Sentence],
    hyps: &[Sentence],
    beta: f64,
    type_sensitive: bool,
) -> Result<EvalReport> {
    if gold.len() != hyps.len() {
        return Err(Error::Usage(format!(
            "{} gold sentences but {} hypotheses",
            gold.len(),
            hyps.len()
        )));
    }
    let options: Vec<Vec<Counts>> = gold
        .par_iter()
        .zip(hyps)
        .map(|(g, h)| {
            if g.annotators.is_empty() {
                return counts(&g.source, h, &[], type_sensitive).map(|c| vec![c]);
            }
            g.annotators
                .iter()
                .map(|edits| counts(&g.source, h, edits, type_sensitive))
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(aggregate(&options, beta))
}
