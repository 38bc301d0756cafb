//! Minimal-edit character alignment.
//!
//! Unit-cost Levenshtein alignment with a deterministic traceback. The
//! traceback walks forward from the start of both sequences over a table of
//! suffix distances and, among the moves that stay on a minimal path, takes
//! the first of Match, Substitute, Delete, Insert.

use crate::types::{Action, Edit, Labels, Sentence, SentencePair, TokenLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlignOp {
    Match { src: usize, tgt: usize },
    Substitute { src: usize, tgt: usize },
    Delete { src: usize },
    /// Target character `tgt` inserted before source position `before`
    /// (`before == n` means after the last source character).
    Insert { before: usize, tgt: usize },
}

impl AlignOp {
    pub fn is_match(&self) -> bool {
        matches!(self, AlignOp::Match { .. })
    }

    pub fn cost(&self) -> usize {
        usize::from(!self.is_match())
    }
}

/// Row-major `(n+1) x (m+1)` table of distances.
#[derive(Debug, Clone)]
pub(crate) struct CostTable {
    cols: usize,
    cells: Vec<u32>,
}

impl CostTable {
    pub(crate) fn get(&self, i: usize, j: usize) -> u32 {
        self.cells[i * self.cols + j]
    }

    fn set(&mut self, i: usize, j: usize, v: u32) {
        self.cells[i * self.cols + j] = v;
    }
}

/// `D[i][j]` = distance between `a[i..]` and `b[j..]`.
pub(crate) fn suffix_costs<T: Eq>(a: &[T], b: &[T]) -> CostTable {
    let (n, m) = (a.len(), b.len());
    let mut t = CostTable {
        cols: m + 1,
        cells: vec![0; (n + 1) * (m + 1)],
    };
    for i in (0..=n).rev() {
        for j in (0..=m).rev() {
            let v = if i == n {
                (m - j) as u32
            } else if j == m {
                (n - i) as u32
            } else {
                let diag = t.get(i + 1, j + 1) + u32::from(a[i] != b[j]);
                let del = t.get(i + 1, j) + 1;
                let ins = t.get(i, j + 1) + 1;
                diag.min(del).min(ins)
            };
            t.set(i, j, v);
        }
    }
    t
}

/// `D[i][j]` = distance between `a[..i]` and `b[..j]`.
pub(crate) fn prefix_costs<T: Eq>(a: &[T], b: &[T]) -> CostTable {
    let (n, m) = (a.len(), b.len());
    let mut t = CostTable {
        cols: m + 1,
        cells: vec![0; (n + 1) * (m + 1)],
    };
    for i in 0..=n {
        for j in 0..=m {
            let v = if i == 0 {
                j as u32
            } else if j == 0 {
                i as u32
            } else {
                let diag = t.get(i - 1, j - 1) + u32::from(a[i - 1] != b[j - 1]);
                let del = t.get(i - 1, j) + 1;
                let ins = t.get(i, j - 1) + 1;
                diag.min(del).min(ins)
            };
            t.set(i, j, v);
        }
    }
    t
}

pub fn edit_distance<T: Eq>(a: &[T], b: &[T]) -> usize {
    suffix_costs(a, b).get(0, 0) as usize
}

/// Minimal alignment of `a` onto `b` under the fixed tie-break.
pub fn align_seq<T: Eq>(a: &[T], b: &[T]) -> Vec<AlignOp> {
    let (n, m) = (a.len(), b.len());
    let d = suffix_costs(a, b);
    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (0, 0);
    while i < n || j < m {
        let here = d.get(i, j);
        if i < n && j < m && a[i] == b[j] && d.get(i + 1, j + 1) == here {
            ops.push(AlignOp::Match { src: i, tgt: j });
            i += 1;
            j += 1;
        } else if i < n && j < m && a[i] != b[j] && d.get(i + 1, j + 1) + 1 == here {
            ops.push(AlignOp::Substitute { src: i, tgt: j });
            i += 1;
            j += 1;
        } else if i < n && d.get(i + 1, j) + 1 == here {
            ops.push(AlignOp::Delete { src: i });
            i += 1;
        } else {
            debug_assert!(j < m && d.get(i, j + 1) + 1 == here);
            ops.push(AlignOp::Insert { before: i, tgt: j });
            j += 1;
        }
    }
    ops
}

pub fn align(source: &Sentence, target: &Sentence) -> Vec<AlignOp> {
    align_seq(source.chars(), target.chars())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivedLabels {
    pub labels: Labels,
    /// Tokens that needed both an insertion before them and a non-keep
    /// action. The action was kept and the insertion dropped.
    pub conflicts: usize,
}

/// Gold labels for a pair from its minimal alignment.
pub fn derive_labels(pair: &SentencePair) -> DerivedLabels {
    labels_from_ops(pair.source.len(), &align(&pair.source, &pair.target))
}

pub(crate) fn labels_from_ops(n: usize, ops: &[AlignOp]) -> DerivedLabels {
    let mut tokens = Vec::with_capacity(n);
    let mut pending = 0;
    let mut conflicts = 0;
    for op in ops {
        let action = match op {
            AlignOp::Insert { .. } => {
                pending += 1;
                continue;
            }
            AlignOp::Match { .. } => Action::Keep,
            AlignOp::Substitute { .. } => Action::Mistaken,
            AlignOp::Delete { .. } => Action::Redundant,
        };
        let insert_before = if pending > 0 && action != Action::Keep {
            conflicts += 1;
            0
        } else {
            pending
        };
        tokens.push(TokenLabel::new(insert_before, action));
        pending = 0;
    }
    debug_assert_eq!(tokens.len(), n);
    DerivedLabels {
        labels: Labels {
            tokens,
            end_insert: pending,
        },
        conflicts,
    }
}

/// Span edits turning `source` into `target`.
///
/// With `merge` off every non-match op is its own edit; with it on, runs of
/// adjacent non-match ops coalesce into one edit.
pub fn extract_edits(source: &Sentence, target: &Sentence, merge: bool) -> Vec<Edit> {
    let ops = align(source, target);
    let tgt = target.chars();
    if !merge {
        return ops
            .iter()
            .filter_map(|op| match *op {
                AlignOp::Match { .. } => None,
                AlignOp::Substitute { src, tgt: t } => {
                    Some(Edit::new(src, src + 1, tgt[t].to_string()))
                }
                AlignOp::Delete { src } => Some(Edit::new(src, src + 1, "")),
                AlignOp::Insert { before, tgt: t } => {
                    Some(Edit::new(before, before, tgt[t].to_string()))
                }
            })
            .collect();
    }

    let mut edits = Vec::new();
    // (src_start, src_end, replacement) of the open run
    let mut run: Option<(usize, usize, String)> = None;
    for op in &ops {
        let (start, end, ch) = match *op {
            AlignOp::Match { .. } => {
                if let Some((s, e, r)) = run.take() {
                    edits.push(Edit::new(s, e, r));
                }
                continue;
            }
            AlignOp::Substitute { src, tgt: t } => (src, src + 1, Some(tgt[t])),
            AlignOp::Delete { src } => (src, src + 1, None),
            AlignOp::Insert { before, tgt: t } => (before, before, Some(tgt[t])),
        };
        let entry = run.get_or_insert_with(|| (start, start, String::new()));
        entry.1 = end;
        if let Some(c) = ch {
            entry.2.push(c);
        }
    }
    if let Some((s, e, r)) = run {
        edits.push(Edit::new(s, e, r));
    }
    edits
}
