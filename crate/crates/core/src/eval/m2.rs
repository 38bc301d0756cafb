//! MaxMatch (M2) scoring over character edit lattices, plus the M2 file
//! format.
//!
//! The lattice holds every minimal-cost alignment between a source and a
//! hypothesis. Besides single-operation edges it carries merged edges: any
//! lattice path spanning at most [`M2_MAX_SPAN`] characters on both sides
//! can be read as one edit. The system edit set is the path through this
//! graph that matches the most gold edits, and among those proposes the
//! fewest edits.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::align::{prefix_costs, suffix_costs, CostTable};
use crate::corpus::Lines;
use crate::error::{Error, Result};
use crate::eval::{choose_annotator, Counts, EvalReport, SentenceDiag};
use crate::types::{Edit, EditType, Sentence};

/// Longest merged edit, in characters, on either side.
pub const M2_MAX_SPAN: usize = 4;

/// A gold sentence: the source and one edit set per annotator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct M2Sentence {
    pub source: Sentence,
    pub annotators: Vec<Vec<Edit>>,
}

impl M2Sentence {
    pub fn single(source: Sentence, edits: Vec<Edit>) -> Self {
        M2Sentence {
            source,
            annotators: vec![edits],
        }
    }
}

/// The edit set chosen for one hypothesis against one annotator.
#[derive(Debug, Clone, PartialEq)]
pub struct M2Alignment {
    pub counts: Counts,
    pub edits: Vec<Edit>,
}

struct Lattice<'a> {
    hyp: &'a [char],
    src: &'a [char],
    pre: CostTable,
    suf: CostTable,
    total: u32,
}

impl<'a> Lattice<'a> {
    fn new(src: &'a [char], hyp: &'a [char]) -> Self {
        let pre = prefix_costs(src, hyp);
        let suf = suffix_costs(src, hyp);
        let total = suf.get(0, 0);
        Lattice {
            hyp,
            src,
            pre,
            suf,
            total,
        }
    }

    fn on_path(&self, u: (usize, usize), cost: u32, v: (usize, usize)) -> bool {
        self.pre.get(u.0, u.1) + cost + self.suf.get(v.0, v.1) == self.total
    }

    /// Single-operation successors of a lattice node.
    fn steps(&self, (i, j): (usize, usize)) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (n, m) = (self.src.len(), self.hyp.len());
        let diag = (i < n && j < m).then(|| {
            let cost = u32::from(self.src[i] != self.hyp[j]);
            ((i + 1, j + 1), cost)
        });
        let del = (i < n).then_some(((i + 1, j), 1));
        let ins = (j < m).then_some(((i, j + 1), 1));
        [diag, del, ins]
            .into_iter()
            .flatten()
            .filter(move |&(v, c)| self.on_path((i, j), c, v))
            .map(|(v, _)| v)
    }

    /// Nodes reachable from `u` within the span cap, in discovery order.
    fn reach(&self, u: (usize, usize)) -> Vec<(usize, usize)> {
        let mut seen = [false; (M2_MAX_SPAN + 1) * (M2_MAX_SPAN + 1)];
        let mut out = Vec::new();
        let mut stack = vec![u];
        while let Some(x) = stack.pop() {
            for v in self.steps(x) {
                let (di, dj) = (v.0 - u.0, v.1 - u.1);
                if di > M2_MAX_SPAN || dj > M2_MAX_SPAN {
                    continue;
                }
                let k = di * (M2_MAX_SPAN + 1) + dj;
                if !seen[k] {
                    seen[k] = true;
                    out.push(v);
                    stack.push(v);
                }
            }
        }
        out.sort_unstable();
        out
    }
}

#[derive(Debug, Clone, Copy)]
struct State {
    tp: usize,
    proposed: usize,
    /// Predecessor state key and whether the step was an edit.
    back: Option<((usize, usize, u64), bool)>,
}

impl State {
    fn better_than(&self, other: &State) -> bool {
        self.tp > other.tp || (self.tp == other.tp && self.proposed < other.proposed)
    }
}

fn validate_gold(gold: &[Edit], n: usize) -> Result<()> {
    for e in gold.iter().filter(|e| !e.is_noop()) {
        if e.start > e.end || e.end > n {
            return Err(Error::Validation(format!(
                "gold edit [{}, {}) out of range for source of length {n}",
                e.start, e.end
            )));
        }
    }
    Ok(())
}

/// The system edit set maximizing matches against `gold`.
pub fn m2_best_edits(source: &Sentence, hyp: &Sentence, gold: &[Edit]) -> Result<M2Alignment> {
    let (src, h) = (source.chars(), hyp.chars());
    let (n, m) = (src.len(), h.len());
    validate_gold(gold, n)?;
    let gold: Vec<&Edit> = gold.iter().filter(|e| !e.is_noop()).collect();
    let lattice = Lattice::new(src, h);

    // Zero-width gold edits per source column; a bit mask over this list
    // records which ones the current path has already matched.
    let mut inserts_at: HashMap<usize, Vec<&Edit>> = HashMap::new();
    for e in gold.iter().filter(|e| e.start == e.end) {
        inserts_at.entry(e.start).or_default().push(e);
    }

    let mut states: BTreeMap<(usize, usize, u64), State> = BTreeMap::new();
    states.insert(
        (0, 0, 0),
        State {
            tp: 0,
            proposed: 0,
            back: None,
        },
    );
    // BTreeMap order is (i, j, mask): every transition moves to a larger key.
    let mut cursor = (0, 0, 0);
    while let Some((&key, &state)) = states.range(cursor..).next() {
        cursor = (key.0, key.1, key.2 + 1);
        let (i, j, mask) = key;
        let u = (i, j);
        let u_cost = lattice.pre.get(i, j);
        for v in lattice.reach(u) {
            let is_edit = lattice.pre.get(v.0, v.1) > u_cost;
            let (gain, next_mask) = if !is_edit {
                (0, 0)
            } else if v.0 == i {
                let rep: String = h[j..v.1].iter().collect();
                let slot = inserts_at.get(&i).and_then(|list| {
                    list.iter()
                        .enumerate()
                        .find(|(b, e)| mask & (1 << b) == 0 && e.replacement == rep)
                        .map(|(b, _)| b)
                });
                match slot {
                    Some(b) => (1, mask | (1 << b)),
                    None => (0, mask),
                }
            } else {
                let rep: String = h[j..v.1].iter().collect();
                let hit = gold
                    .iter()
                    .any(|e| e.start == i && e.end == v.0 && e.replacement == rep);
                (usize::from(hit), 0)
            };
            let cand = State {
                tp: state.tp + gain,
                proposed: state.proposed + usize::from(is_edit),
                back: Some((key, is_edit)),
            };
            let vkey = (v.0, v.1, next_mask);
            match states.get(&vkey) {
                Some(existing) if !cand.better_than(existing) => {}
                _ => {
                    states.insert(vkey, cand);
                }
            }
        }
    }

    let (mut key, best) = states
        .range((n, m, 0)..=(n, m, u64::MAX))
        .fold(None::<((usize, usize, u64), State)>, |acc, (&k, &s)| match acc {
            Some((_, b)) if !s.better_than(&b) => acc,
            _ => Some((k, s)),
        })
        .expect("the lattice always reaches its end node");

    let mut edits = Vec::with_capacity(best.proposed);
    let mut state = best;
    while let Some((prev, is_edit)) = state.back {
        if is_edit {
            let rep: String = h[prev.1..key.1].iter().collect();
            edits.push(Edit::new(prev.0, key.0, rep));
        }
        key = prev;
        state = states[&prev];
    }
    edits.reverse();
    Ok(M2Alignment {
        counts: Counts {
            tp: best.tp,
            proposed: best.proposed,
            gold: gold.len(),
        },
        edits,
    })
}

/// Score one hypothesis against one or more annotators.
pub fn m2_score(
    source: &Sentence,
    hyp: &Sentence,
    gold_sets: &[Vec<Edit>],
    beta: f64,
) -> Result<EvalReport> {
    let sentence = M2Sentence {
        source: source.clone(),
        annotators: gold_sets.to_vec(),
    };
    m2_score_corpus(std::slice::from_ref(&sentence), std::slice::from_ref(hyp), beta)
}

pub fn m2_score_corpus(gold: &[M2Sentence], hyps: &[Sentence], beta: f64) -> Result<EvalReport> {
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
                return m2_best_edits(&g.source, h, &[]).map(|a| vec![a.counts]);
            }
            g.annotators
                .iter()
                .map(|edits| m2_best_edits(&g.source, h, edits).map(|a| a.counts))
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(aggregate(&options, beta))
}

/// Sum per-sentence counts in order, picking one annotator per sentence.
pub(crate) fn aggregate(options: &[Vec<Counts>], beta: f64) -> EvalReport {
    let mut total = Counts::default();
    let mut diags = Vec::with_capacity(options.len());
    for (index, opts) in options.iter().enumerate() {
        let pick = choose_annotator(total, opts, beta);
        let c = opts[pick];
        total += c;
        diags.push(SentenceDiag {
            index,
            tp: c.tp,
            proposed: c.proposed,
            gold: c.gold,
            annotator: (opts.len() > 1).then_some(pick),
        });
    }
    EvalReport::from_counts(total, beta, diags)
}

fn parse_type(code: &str, start: usize, end: usize, rep: &str) -> EditType {
    match code.chars().next() {
        _ if code.eq_ignore_ascii_case("noop") => EditType::Noop,
        Some('M') => EditType::Missing,
        Some('R') => EditType::Replacement,
        Some('U') => EditType::Unnecessary,
        _ => EditType::classify(start, end, rep),
    }
}

/// Parse M2 blocks: an `S` line of space-separated characters followed by
/// `A start end|||type|||correction|||REQUIRED|||-NONE-|||annotator` lines.
pub fn parse_m2<R: BufRead>(reader: R) -> Result<Vec<M2Sentence>> {
    let mut out = Vec::new();
    let mut current: Option<(Sentence, BTreeMap<usize, Vec<Edit>>)> = None;
    let finish = |cur: Option<(Sentence, BTreeMap<usize, Vec<Edit>>)>, out: &mut Vec<M2Sentence>| {
        if let Some((source, by_id)) = cur {
            let annotators = if by_id.is_empty() {
                vec![Vec::new()]
            } else {
                by_id.into_values().collect()
            };
            out.push(M2Sentence { source, annotators });
        }
    };
    for item in Lines::new(reader) {
        let (line, text) = item?;
        if text.trim().is_empty() {
            finish(current.take(), &mut out);
            continue;
        }
        if text == "S" || text.starts_with("S ") {
            finish(current.take(), &mut out);
            let mut chars = Vec::new();
            for tok in text[1..].split(' ').filter(|t| !t.is_empty()) {
                let mut it = tok.chars();
                match (it.next(), it.next()) {
                    (Some(c), None) => chars.push(c),
                    _ => {
                        return Err(Error::parse(
                            line,
                            format!("source token {tok:?} is not a single character"),
                        ))
                    }
                }
            }
            let source = Sentence::from_chars(chars).map_err(|e| Error::parse(line, e.to_string()))?;
            current = Some((source, BTreeMap::new()));
        } else if let Some(rest) = text.strip_prefix("A ") {
            let (source, by_id) = current
                .as_mut()
                .ok_or_else(|| Error::parse(line, "annotation before any S line"))?;
            let fields: Vec<&str> = rest.split("|||").collect();
            if fields.len() < 3 {
                return Err(Error::parse(line, "annotation needs at least 3 fields"));
            }
            let mut span = fields[0].split_whitespace().map(str::parse::<i64>);
            let (start, end) = match (span.next(), span.next(), span.next()) {
                (Some(Ok(s)), Some(Ok(e)), None) => (s, e),
                _ => return Err(Error::parse(line, format!("bad span {:?}", fields[0]))),
            };
            let annotator = match fields.get(5) {
                Some(f) => f
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| Error::parse(line, format!("bad annotator id {f:?}")))?,
                None => 0,
            };
            let entry = by_id.entry(annotator).or_default();
            if fields[1].eq_ignore_ascii_case("noop") || (start == -1 && end == -1) {
                continue;
            }
            if start < 0 || end < start || end as usize > source.len() {
                return Err(Error::parse(
                    line,
                    format!("span [{start}, {end}) out of range for source of length {}", source.len()),
                ));
            }
            let (start, end) = (start as usize, end as usize);
            let correction = fields[2].trim();
            let rep: String = if correction == "-NONE-" {
                String::new()
            } else {
                correction.split(' ').collect()
            };
            let etype = parse_type(fields[1], start, end, &rep);
            entry.push(Edit {
                start,
                end,
                replacement: rep,
                etype,
            });
        } else {
            return Err(Error::parse(line, "expected an S or A line"));
        }
    }
    finish(current.take(), &mut out);
    Ok(out)
}

pub fn read_m2(path: impl AsRef<Path>) -> Result<Vec<M2Sentence>> {
    parse_m2(BufReader::new(File::open(path)?))
}

fn spaced(chars: impl Iterator<Item = char>) -> String {
    let mut s = String::new();
    for (i, c) in chars.enumerate() {
        if i > 0 {
            s.push(' ');
        }
        s.push(c);
    }
    s
}

pub fn write_m2<W: Write>(mut w: W, sentences: &[M2Sentence]) -> Result<()> {
    for sent in sentences {
        if let Some(c) = sent.source.chars().iter().find(|c| c.is_whitespace()) {
            return Err(Error::Validation(format!(
                "whitespace character U+{:04X} cannot appear in an M2 source line",
                *c as u32
            )));
        }
        writeln!(w, "S {}", spaced(sent.source.chars().iter().copied()))?;
        for (id, edits) in sent.annotators.iter().enumerate() {
            let real: Vec<&Edit> = edits.iter().filter(|e| !e.is_noop()).collect();
            if real.is_empty() {
                writeln!(w, "A -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||{id}")?;
            }
            for e in real {
                writeln!(
                    w,
                    "A {} {}|||{}|||{}|||REQUIRED|||-NONE-|||{id}",
                    e.start,
                    e.end,
                    e.etype.code(),
                    spaced(e.replacement.chars())
                )?;
            }
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn save_m2(path: impl AsRef<Path>, sentences: &[M2Sentence]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_m2(&mut w, sentences)?;
    w.flush()?;
    Ok(())
}
