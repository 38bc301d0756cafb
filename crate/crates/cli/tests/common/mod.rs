#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ALPHABET: u32 = 50;

fn ch(k: u32) -> char {
    char::from_u32(0x4e00 + k).unwrap()
}

/// Sentences from an order-2 Markov source over a 50-character CJK
/// alphabet. Every character has six possible successors and every
/// two-character context allows three of them with skewed weights, so the
/// text is predictable enough for a trigram model to learn.
pub struct MarkovSource {
    successors: Vec<Vec<u32>>,
    /// per (a, b): three successors with weights
    contexts: Vec<Vec<(u32, u32)>>,
}

impl MarkovSource {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let all: Vec<u32> = (0..ALPHABET).collect();
        let successors: Vec<Vec<u32>> = (0..ALPHABET)
            .map(|_| all.choose_multiple(&mut rng, 6).copied().collect())
            .collect();
        let mut contexts = Vec::with_capacity((ALPHABET * ALPHABET) as usize);
        for _a in 0..ALPHABET {
            for b in 0..ALPHABET {
                let pick: Vec<u32> = successors[b as usize].choose_multiple(&mut rng, 3).copied().collect();
                contexts.push(pick.into_iter().zip([6, 3, 1]).collect());
            }
        }
        MarkovSource { successors, contexts }
    }

    pub fn sentence(&self, rng: &mut ChaCha8Rng) -> String {
        let len = rng.gen_range(8..=20);
        let mut out = vec![rng.gen_range(0..ALPHABET)];
        out.push(*self.successors[out[0] as usize].choose(rng).unwrap());
        while out.len() < len {
            let (a, b) = (out[out.len() - 2], out[out.len() - 1]);
            let options = &self.contexts[(a * ALPHABET + b) as usize];
            let next = options.choose_weighted(rng, |o| o.1).unwrap().0;
            out.push(next);
        }
        out.into_iter().map(ch).collect()
    }

    pub fn corpus(&self, n: usize, seed: u64) -> Vec<String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.sentence(&mut rng)).collect()
    }
}

/// Each alphabet character confused with its two neighbours.
pub fn confusion_text() -> String {
    (0..ALPHABET)
        .map(|k| {
            format!(
                "{}\t{}{}\n",
                ch(k),
                ch((k + 1) % ALPHABET),
                ch((k + ALPHABET - 1) % ALPHABET)
            )
        })
        .collect()
}

pub fn write_lines(path: &Path, lines: &[String]) {
    let mut text = lines.join("\n");
    text.push('\n');
    std::fs::write(path, text).unwrap();
}

pub fn detcor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_detcor"))
        .args(args)
        .env_clear()
        .output()
        .expect("binary runs")
}

pub fn ok(args: &[&str]) -> String {
    let out = detcor(args);
    assert!(
        out.status.success(),
        "detcor {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

pub fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

/// synthesize, derive-tags, train-detector, train-lm, correct, evaluate.
/// Returns the artifact paths in production order.
pub fn full_chain(dir: &Path, clean: &str, detector_flags: &[&str]) -> Vec<PathBuf> {
    let synth = p(dir, "synth");
    ok(&["synthesize", "--in", clean, "--out-dir", &synth, "--seed", "7", "--confusion", &p(dir, "conf.txt")]);
    let synth = Path::new(&synth);
    ok(&["derive-tags", "--pairs", &p(synth, "pairs.tsv"), "--out", &p(dir, "labels.jsonl")]);
    let mut args = vec!["train-detector", "--labels", &p(dir, "labels.jsonl"), "--out", &p(dir, "det.json")]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
    args.extend(detector_flags.iter().map(|s| s.to_string()));
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    ok(&args);
    ok(&["train-lm", "--in", clean, "--out", &p(dir, "lm.json")]);
    ok(&[
        "correct",
        "--det",
        &p(dir, "det.json"),
        "--lm",
        &p(dir, "lm.json"),
        "--in",
        &p(synth, "source.txt"),
        "--out",
        &p(dir, "hyp.tsv"),
        "--trace",
        &p(dir, "trace.jsonl"),
        "--jobs",
        "4",
    ]);
    ok(&[
        "evaluate",
        "--mode",
        "m2",
        "--hyp",
        &p(dir, "hyp.tsv"),
        "--gold",
        &p(synth, "gold.m2"),
        "--out",
        &p(dir, "m2.json"),
    ]);
    ok(&[
        "evaluate",
        "--mode",
        "sighan",
        "--hyp",
        &p(dir, "hyp.tsv"),
        "--gold",
        &p(synth, "pairs.tsv"),
        "--out",
        &p(dir, "sighan.json"),
    ]);
    [
        "synth/pairs.tsv",
        "synth/source.txt",
        "synth/labels.jsonl",
        "synth/gold.m2",
        "synth/manifest.json",
        "labels.jsonl",
        "det.json",
        "lm.json",
        "hyp.tsv",
        "trace.jsonl",
        "m2.json",
        "sighan.json",
    ]
    .iter()
    .map(|n| dir.join(n))
    .collect()
}
