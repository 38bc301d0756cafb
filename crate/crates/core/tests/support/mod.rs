//! Independent reference implementations used by the property tests.
#![allow(dead_code)]

use std::collections::HashMap;

use detcor::{Edit, Sentence};

/// Levenshtein distance by memoized recursion over (i, j) suffixes.
pub fn distance(a: &[char], b: &[char]) -> usize {
    fn go(a: &[char], b: &[char], i: usize, j: usize, memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(&d) = memo.get(&(i, j)) {
            return d;
        }
        let sub = go(a, b, i + 1, j + 1, memo) + usize::from(a[i] != b[j]);
        let del = go(a, b, i + 1, j, memo) + 1;
        let ins = go(a, b, i, j + 1, memo) + 1;
        let d = sub.min(del).min(ins);
        memo.insert((i, j), d);
        d
    }
    go(a, b, 0, 0, &mut HashMap::new())
}

/// Every minimal-cost alignment path as a list of (i, j) nodes.
pub fn min_paths(a: &[char], b: &[char]) -> Vec<Vec<(usize, usize)>> {
    let total = distance(a, b);
    let mut out = Vec::new();
    let mut path = vec![(0, 0)];
    fn walk(
        a: &[char],
        b: &[char],
        cost: usize,
        total: usize,
        path: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        let (i, j) = *path.last().unwrap();
        if i == a.len() && j == b.len() {
            out.push(path.clone());
            return;
        }
        let mut moves = Vec::new();
        if i < a.len() && j < b.len() {
            moves.push(((i + 1, j + 1), usize::from(a[i] != b[j])));
        }
        if i < a.len() {
            moves.push(((i + 1, j), 1));
        }
        if j < b.len() {
            moves.push(((i, j + 1), 1));
        }
        for (v, c) in moves {
            if cost + c + distance(&a[v.0..], &b[v.1..]) == total {
                path.push(v);
                walk(a, b, cost + c, total, path, out);
                path.pop();
            }
        }
    }
    walk(a, b, 0, total, &mut path, &mut out);
    out
}

fn path_cost(a: &[char], b: &[char], path: &[(usize, usize)], from: usize, to: usize) -> usize {
    path[from..=to]
        .windows(2)
        .map(|w| {
            let ((i, j), (i2, j2)) = (w[0], w[1]);
            if i2 > i && j2 > j {
                usize::from(a[i] != b[j])
            } else {
                1
            }
        })
        .sum()
}

/// Maximum number of gold edits realizable as disjoint merged edits on one
/// minimal path, found by exhaustive search.
pub fn brute_force_tp(source: &Sentence, hyp: &Sentence, gold: &[Edit], cap: usize) -> usize {
    let (a, b) = (source.chars(), hyp.chars());
    let hyp_str: Vec<char> = b.to_vec();
    let mut best = 0;
    for path in min_paths(a, b) {
        // candidate segments per gold edit: (from, to) indices into the path
        let segs: Vec<Vec<(usize, usize)>> = gold
            .iter()
            .map(|g| {
                let mut v = Vec::new();
                for x in 0..path.len() {
                    for y in x + 1..path.len() {
                        let (u, w) = (path[x], path[y]);
                        if u.0 == g.start
                            && w.0 == g.end
                            && w.0 - u.0 <= cap
                            && w.1 - u.1 <= cap
                            && hyp_str[u.1..w.1].iter().collect::<String>() == g.replacement
                            && path_cost(a, b, &path, x, y) > 0
                        {
                            v.push((x, y));
                        }
                    }
                }
                v
            })
            .collect();
        fn search(segs: &[Vec<(usize, usize)>], k: usize, used: &mut Vec<(usize, usize)>) -> usize {
            if k == segs.len() {
                return used.len();
            }
            let mut best = search(segs, k + 1, used);
            for &(x, y) in &segs[k] {
                if used.iter().all(|&(p, q)| y <= p || q <= x) {
                    used.push((x, y));
                    best = best.max(search(segs, k + 1, used));
                    used.pop();
                }
            }
            best
        }
        best = best.max(search(&segs, 0, &mut Vec::new()));
    }
    best
}
