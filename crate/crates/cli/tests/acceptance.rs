//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion not listed in `KNOWN_FAILURES` fails.

mod common;
#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use detcor::corrector::{CharLM, ConfusionSet, NgramCorrector, RandomCorrector, DEFAULT_K, DEFAULT_TOP_K};
use detcor::detector::{train, CharStats, DetectorModel, HashedFeaturizer, TrainConfig};
use detcor::eval::{f_beta, m2_best_edits, m2_score_corpus, M2Sentence, M2_MAX_SPAN};
use detcor::pipeline::Pipeline;
use detcor::synth::{corrupt_corpus, SynthConfig, SynthResources};
use detcor::{apply_edits, derive_labels, extract_edits, oracle_fill, rewrite, Edit, Sentence, SentencePair};

use common::{confusion_text, MarkovSource};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn sentences(lines: &[String]) -> Vec<Sentence> {
    lines.iter().map(|l| Sentence::new(l).unwrap()).collect()
}

fn confusion() -> ConfusionSet {
    ConfusionSet::parse(confusion_text().as_bytes()).unwrap()
}

/// Published rows in percent: P, R, F, beta, and the rounding half-width
/// implied by how P and R are printed.
const ROWS: &[(&str, f64, f64, f64, f64, f64, f64)] = &[
    ("Hybrid detection", 56.6, 69.4, 62.3, 1.0, 0.05, 0.05),
    ("FASpell detection", 67.6, 60.0, 63.5, 1.0, 0.05, 0.5),
    ("FASpell correction", 66.6, 59.1, 62.6, 1.0, 0.05, 0.05),
    ("Confusionset detection", 66.8, 73.1, 69.8, 1.0, 0.05, 0.05),
    ("Confusionset correction", 71.5, 59.5, 64.9, 1.0, 0.05, 0.05),
    ("Soft-Masked BERT detection", 73.7, 73.2, 73.5, 1.0, 0.05, 0.05),
    ("Soft-Masked BERT correction", 66.7, 66.2, 66.4, 1.0, 0.05, 0.05),
    ("PIE CGED M2", 22.3, 10.0, 17.9, 0.5, 0.05, 0.5),
    ("detect-correct CGED M2", 29.71, 22.03, 27.77, 0.5, 0.005, 0.005),
];

fn pct_f(p: f64, r: f64, beta: f64) -> f64 {
    100.0 * f_beta(p / 100.0, r / 100.0, beta)
}

fn published_rows() -> Outcome {
    let mut off = Vec::new();
    let mut worst: f64 = 0.0;
    for &(name, p, r, f, beta, hp, hr) in ROWS {
        let got = pct_f(p, r, beta);
        let err = (got - f).abs();
        worst = worst.max(err);
        if err > 0.05 {
            // F is monotone in P and R, so the corners bound it
            let lo = pct_f(p - hp, r - hr, beta);
            let hi = pct_f(p + hp, r + hr, beta);
            off.push(format!("{name}: {got:.4} vs {f}, unrounded P/R allow {lo:.2}..{hi:.2}"));
        }
    }
    outcome(
        off.is_empty(),
        format!(
            "{} rows, max |F - published| = {worst:.4}, tolerance 0.05; outside: {off:?}",
            ROWS.len()
        ),
    )
}

fn round_trip() -> Outcome {
    let src = MarkovSource::new(21);
    let clean = sentences(&src.corpus(10_000, 22));
    let res = SynthResources::new(&clean, confusion(), None, 1000);
    let mut failures = 0;
    let mut conflicts = 0;
    let mut single_conflicts = 0;
    let mut total = 0;
    let configs = [
        SynthConfig { seed: 23, ..SynthConfig::default() },
        SynthConfig { seed: 24, p_delete: 1.0, p_insert: 0.0, ..SynthConfig::default() },
        SynthConfig { seed: 25, p_delete: 0.0, p_insert: 1.0, ..SynthConfig::default() },
        SynthConfig { seed: 26, p_delete: 0.0, p_insert: 0.0, p_substitute: 1.0, ..SynthConfig::default() },
    ];
    for (k, cfg) in configs.iter().enumerate() {
        let (pairs, manifest) = corrupt_corpus(&clean, cfg, &res).unwrap();
        for pair in &pairs {
            let derived = derive_labels(&SentencePair::new(pair.source.clone(), pair.target.clone()));
            if k == 0 {
                conflicts += derived.conflicts;
            } else {
                single_conflicts += derived.conflicts;
            }
            let masked = rewrite(&pair.source, &derived.labels).unwrap();
            if oracle_fill(&masked, pair).unwrap() != pair.target {
                failures += 1;
            }
            total += 1;
        }
        if k == 0 {
            conflicts += manifest.conflicts;
        }
    }
    outcome(
        failures == 0 && conflicts == 0 && single_conflicts == 0,
        format!(
            "{total} pairs ({} default + 3x{} single-error), {failures} round-trip failures, conflicts {conflicts} / single-error {single_conflicts}",
            clean.len(),
            clean.len()
        ),
    )
}

fn random_model(rng: &mut ChaCha8Rng, d: usize, l2: f64) -> DetectorModel {
    let corpus: Vec<Sentence> = (0..30).map(|_| random_text(rng, 1, 12)).collect();
    let feat = HashedFeaturizer::new(d, CharStats::from_sentences(&corpus), ['a', 'c'].into());
    let mut m = DetectorModel::zeros(feat, TrainConfig { dim: d, l2, ..TrainConfig::default() });
    for w in m.weights_mut() {
        *w = rng.gen_range(-1.0..1.0);
    }
    m.set_bias([rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 0.0]);
    m
}

fn random_text(rng: &mut ChaCha8Rng, min: usize, max: usize) -> Sentence {
    let n = rng.gen_range(min..=max);
    Sentence::from_chars((0..n).map(|_| char::from(b'a' + rng.gen_range(0..5))).collect()).unwrap()
}

fn random_labeled(rng: &mut ChaCha8Rng) -> SentencePair {
    let a = random_text(rng, 1, 12);
    let b = random_text(rng, 0, 12);
    let p = SentencePair::new(a, b);
    let l = derive_labels(&p).labels;
    p.with_labels(l).unwrap()
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let mut m = random_model(&mut rng, 64, 0.01);
        let batch: Vec<SentencePair> = (0..rng.gen_range(1..=4)).map(|_| random_labeled(&mut rng)).collect();
        let examples: Vec<_> = batch.iter().flat_map(|p| m.examples(p).unwrap()).collect();
        let (_, grad) = m.loss_and_gradient(&examples);
        let mut num = Vec::with_capacity(grad.weights.len() + 4);
        let mut ana = Vec::with_capacity(grad.weights.len() + 4);
        for j in 0..m.weights().len() {
            let w0 = m.weights()[j];
            m.weights_mut()[j] = w0 + h;
            let up = m.loss(&examples);
            m.weights_mut()[j] = w0 - h;
            let down = m.loss(&examples);
            m.weights_mut()[j] = w0;
            num.push((up - down) / (2.0 * h));
            ana.push(grad.weights[j]);
        }
        for k in 0..4 {
            let b0 = m.bias();
            let mut b = b0;
            b[k] = b0[k] + h;
            m.set_bias(b);
            let up = m.loss(&examples);
            b[k] = b0[k] - h;
            m.set_bias(b);
            let down = m.loss(&examples);
            m.set_bias(b0);
            num.push((up - down) / (2.0 * h));
            ana.push(grad.bias[k]);
        }
        let diff: f64 = num.iter().zip(&ana).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = num.iter().map(|a| a * a).sum::<f64>().sqrt().max(ana.iter().map(|a| a * a).sum::<f64>().sqrt());
        worst = worst.max(diff / scale.max(1e-12));
    }
    outcome(
        worst <= 1e-4,
        format!("100 instances (d=64, batch<=4, l2=0.01), max relative error {worst:.2e}, tolerance 1e-4"),
    )
}

fn softmax_normalization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let m = random_model(&mut rng, 256, 0.0);
    let mut worst: f64 = 0.0;
    let mut positions = 0;
    for _ in 0..1000 {
        let s = random_text(&mut rng, 0, 30);
        for d in m.predict(&s).unwrap() {
            worst = worst.max((d.0.iter().sum::<f64>() - 1.0).abs());
            positions += 1;
        }
    }
    outcome(
        worst <= 1e-9,
        format!("1000 sentences, {positions} positions, max |sum - 1| = {worst:.1e}, tolerance 1e-9"),
    )
}

fn synth_distribution() -> Outcome {
    let src = MarkovSource::new(51);
    let clean = sentences(&src.corpus(20_000, 52));
    let res = SynthResources::new(&clean, confusion(), None, 1000);
    let (_, m) = corrupt_corpus(&clean, &SynthConfig { seed: 53, ..SynthConfig::default() }, &res).unwrap();
    let f = m.mode_fractions;
    let checks = [
        (m.delete_fraction, 0.5),
        (m.insert_fraction, 0.5),
        (f.repeat, 0.35),
        (f.confusion, 0.30),
        (f.high_freq, 0.30),
        (f.random, 0.05),
    ];
    let worst = checks.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    outcome(
        worst <= 0.015 && m.skipped == 0,
        format!(
            "n={}, delete {:.4}, insert {:.4}, modes ({:.4}, {:.4}, {:.4}, {:.4}), max deviation {worst:.4}, tolerance 0.015",
            m.sentences, m.delete_fraction, m.insert_fraction, f.repeat, f.confusion, f.high_freq, f.random
        ),
    )
}

fn m2_case(rng: &mut ChaCha8Rng) -> (Sentence, Vec<Edit>, Sentence) {
    let alpha = |rng: &mut ChaCha8Rng, lo: usize, hi: usize| -> String {
        let n = rng.gen_range(lo..=hi);
        (0..n).map(|_| char::from(b'a' + rng.gen_range(0..4))).collect()
    };
    let src = Sentence::new(&alpha(rng, 0, 8)).unwrap();
    let n = src.len();
    let mut gold: Vec<Edit> = Vec::new();
    for _ in 0..rng.gen_range(0..=3) {
        let start = rng.gen_range(0..=n);
        let end = (start + rng.gen_range(0..=2)).min(n);
        let mut rep = alpha(rng, 0, 2);
        if start == end && rep.is_empty() {
            rep.push('b');
        }
        let mut trial = gold.clone();
        trial.push(Edit::new(start, end, rep));
        if let Ok(h) = apply_edits(&src, &trial) {
            if h.len() <= 8 {
                gold = trial;
            }
        }
    }
    let hyp = if rng.gen_bool(0.3) {
        Sentence::new(&alpha(rng, 0, 8)).unwrap()
    } else {
        let subset: Vec<Edit> = gold.iter().filter(|_| rng.gen_bool(0.6)).cloned().collect();
        let mut h = apply_edits(&src, &subset).unwrap().into_chars();
        if rng.gen_bool(0.3) && h.len() < 8 {
            let p = rng.gen_range(0..=h.len());
            h.insert(p, 'c');
        }
        Sentence::from_chars(h).unwrap()
    };
    (src, gold, hyp)
}

fn m2_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let mut mismatches = 0;
    let mut matched_edits = 0;
    for _ in 0..500 {
        let (src, gold, hyp) = m2_case(&mut rng);
        let lattice = m2_best_edits(&src, &hyp, &gold).unwrap().counts.tp;
        let brute = support::brute_force_tp(&src, &hyp, &gold, M2_MAX_SPAN);
        matched_edits += brute;
        if lattice != brute {
            mismatches += 1;
        }
    }
    outcome(
        mismatches == 0,
        format!("500 cases, {matched_edits} gold edits matched by brute force, {mismatches} TP mismatches"),
    )
}

struct DeskResult {
    pipeline: f64,
    random: f64,
    copy: f64,
    seconds: f64,
}

fn desk_experiment() -> DeskResult {
    let started = Instant::now();
    let src = MarkovSource::new(71);
    let train_clean = sentences(&src.corpus(5000, 72));
    let test_clean = sentences(&src.corpus(1000, 73));
    let conf = confusion();

    let res = SynthResources::new(&train_clean, conf.clone(), None, 1000);
    let (train_pairs, _) = corrupt_corpus(&train_clean, &SynthConfig { seed: 74, ..SynthConfig::default() }, &res).unwrap();
    let (test_pairs, _) = corrupt_corpus(&test_clean, &SynthConfig { seed: 75, ..SynthConfig::default() }, &res).unwrap();

    let featurizer = HashedFeaturizer::new(1 << 18, CharStats::from_sentences(&train_clean), conf.keys());
    let cfg = TrainConfig {
        dim: 1 << 18,
        lr: 0.01,
        epochs: 5,
        seed: 76,
        ..TrainConfig::default()
    };
    let (detector, _) = train(&train_pairs, featurizer, cfg).unwrap();
    let lm = CharLM::train(&train_clean, DEFAULT_K, DEFAULT_TOP_K).unwrap();

    let gold: Vec<M2Sentence> = test_pairs
        .iter()
        .map(|p| M2Sentence::single(p.source.clone(), extract_edits(&p.source, &p.target, false)))
        .collect();
    let sources: Vec<Sentence> = test_pairs.iter().map(|p| p.source.clone()).collect();

    let ngram = Pipeline::new(&detector, NgramCorrector { lm: &lm, confusion: Some(&conf), beam: 4 });
    let random = Pipeline::new(&detector, RandomCorrector { alphabet: lm.candidates().to_vec(), seed: 77 });
    let hyps: Vec<Sentence> = sources.iter().map(|s| ngram.correct_sentence(s).unwrap().0).collect();
    let rand_hyps: Vec<Sentence> = sources.iter().map(|s| random.correct_sentence(s).unwrap().0).collect();

    let score = |h: &[Sentence]| m2_score_corpus(&gold, h, 0.5).unwrap().f_score;
    DeskResult {
        pipeline: score(&hyps),
        random: score(&rand_hyps),
        copy: score(&sources),
        seconds: started.elapsed().as_secs_f64(),
    }
}

/// Pipeline F0.5 of the first recorded run, kept for comparison.
const DESK_ANCHOR: f64 = 0.7235;

fn end_to_end() -> Outcome {
    let one_core = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let r = one_core.install(desk_experiment);
    outcome(
        r.pipeline > r.copy && r.pipeline > r.random && r.seconds < 300.0,
        format!(
            "M2 F0.5: pipeline {:.4} (recorded anchor {DESK_ANCHOR}), random fill {:.4}, copy {:.4}; {:.1}s on one thread (limit 300s)",
            r.pipeline, r.random, r.copy, r.seconds
        ),
    )
}

fn snapshot(files: &[std::path::PathBuf]) -> Vec<Vec<u8>> {
    files.iter().map(|f| std::fs::read(f).unwrap()).collect()
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let src = MarkovSource::new(81);
    common::write_lines(&d.join("clean.txt"), &src.corpus(600, 82));
    std::fs::write(d.join("conf.txt"), confusion_text()).unwrap();
    let clean = common::p(d, "clean.txt");
    let flags = ["--dim", "65536", "--epochs", "2", "--lr", "0.01", "--seed", "5"];
    let files = common::full_chain(d, &clean, &flags);
    let first = snapshot(&files);
    common::full_chain(d, &clean, &flags);
    let second = snapshot(&files);
    let differing: Vec<String> = files
        .iter()
        .zip(first.iter().zip(&second))
        .filter(|(_, (a, b))| a != b)
        .map(|(f, _)| f.strip_prefix(d).unwrap_or(Path::new("?")).display().to_string())
        .collect();
    outcome(
        differing.is_empty(),
        format!("{} artifacts from 7 invocations compared, differing: {differing:?}", files.len()),
    )
}

/// Criteria that cannot pass as stated, with the reason. They still print
/// FAIL but do not fail the run.
const KNOWN_FAILURES: &[(usize, &str)] = &[(
    1,
    "three published rows (FASpell detection, Confusionset correction, Soft-Masked BERT detection) miss by 0.0504 to 0.0737 when F is recomputed from the printed P/R; each printed F lies inside the range allowed by P/R before rounding",
)];

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("published F rows", published_rows),
        ("label round trip", round_trip),
        ("gradient check", gradient_check),
        ("softmax normalization", softmax_normalization),
        ("synthesizer distribution", synth_distribution),
        ("M2 oracle equivalence", m2_oracle),
        ("end-to-end desk experiment", end_to_end),
        ("CLI determinism", determinism),
    ];
    let mut failed = 0;
    let mut unexpected = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let o = run();
        let known = KNOWN_FAILURES.iter().find(|(n, _)| *n == i + 1);
        let tag = match (o.pass, known) {
            (true, _) => "PASS",
            (false, Some(_)) => "FAIL (known)",
            (false, None) => "FAIL",
        };
        failed += usize::from(!o.pass);
        unexpected += usize::from(!o.pass && known.is_none());
        println!(
            "{tag} {}. {name}: {} [{:.2}s]",
            i + 1,
            o.detail,
            started.elapsed().as_secs_f64()
        );
        if let (false, Some((_, why))) = (o.pass, known) {
            println!("    known failure: {why}");
        }
    }
    println!(
        "{} of {} criteria passed, {} known failure(s), {unexpected} unexpected",
        criteria.len() - failed,
        criteria.len(),
        failed - unexpected
    );
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
