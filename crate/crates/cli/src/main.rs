use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use detcor::corpus::{
    read_labels_jsonl, read_parallel_tsv, read_sentences, write_labels_jsonl, write_parallel_tsv,
    write_sentences,
};
use detcor::corrector::{CharLM, ConfusionSet, NgramCorrector, RandomCorrector, DEFAULT_K, DEFAULT_TOP_K};
use detcor::detector::{train, CharStats, DetectorModel, HashedFeaturizer, TrainConfig, DEFAULT_DIM};
use detcor::eval::{
    errant_score_corpus, eval_sentence_level, m2_score_corpus, read_m2, render_table, save_m2,
    EvalReport, M2Sentence,
};
use detcor::pipeline::{correct_corpus, Pipeline};
use detcor::synth::{corrupt_corpus, Lexicon, ModeWeights, SynthConfig, SynthResources};
use detcor::{derive_labels, extract_edits, Sentence, SentencePair};

#[derive(Parser)]
#[command(name = "detcor", version, about = "Detect-then-correct character-level error correction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Corrupt clean sentences into a labeled parallel corpus.
    Synthesize(SynthesizeArgs),
    /// Derive per-character tags for a parallel TSV corpus.
    DeriveTags {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the tagging detector on labeled JSONL.
    TrainDetector(TrainDetectorArgs),
    /// Train the character trigram LM on clean text.
    TrainLm {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_K)]
        k: f64,
        /// Size of the candidate list used to fill masks.
        #[arg(long, default_value_t = DEFAULT_TOP_K)]
        top_k: usize,
    },
    /// Correct one sentence per line, writing `source<TAB>output` lines.
    Correct(CorrectArgs),
    /// Score hypotheses against gold.
    Evaluate(EvaluateArgs),
}

#[derive(clap::Args)]
struct SynthesizeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    p_delete: f64,
    #[arg(long, default_value_t = 0.5)]
    p_insert: f64,
    #[arg(long, default_value_t = 0.0)]
    p_substitute: f64,
    /// Repeat, confusion, high-frequency and random insertion weights.
    #[arg(long, default_value = "0.35,0.30,0.30,0.05")]
    mode_weights: String,
    #[arg(long)]
    confusion: Option<PathBuf>,
    /// `word<TAB>frequency` list; defaults to character counts of the input.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    top_n: usize,
}

#[derive(clap::Args)]
struct TrainDetectorArgs {
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_DIM)]
    dim: usize,
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 0.0)]
    l2: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 32)]
    batch: usize,
    /// Confusion set whose keys get a "confusable" feature.
    #[arg(long)]
    confusion: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Filler {
    Ngram,
    Random,
}

#[derive(clap::Args)]
struct CorrectArgs {
    #[arg(long)]
    det: PathBuf,
    #[arg(long)]
    lm: PathBuf,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    confusion: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    beam: usize,
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, value_enum, default_value_t = Filler::Ngram)]
    filler: Filler,
    /// Seed of the random filler.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep, mistaken, missing and redundant offsets added to detector logits.
    #[arg(long, default_value = "0,0,0,0")]
    class_bias: String,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Sighan,
    M2,
    Errant,
}

#[derive(clap::Args)]
struct EvaluateArgs {
    #[arg(long, value_enum)]
    mode: Mode,
    /// Source sentences; checked against the gold sources when given.
    #[arg(long)]
    src: Option<PathBuf>,
    /// Hypotheses, one per line; for TSV lines the second field is used.
    #[arg(long)]
    hyp: PathBuf,
    /// Parallel TSV for sighan, M2 otherwise.
    #[arg(long)]
    gold: PathBuf,
    /// Defaults to 1 for sighan and 0.5 otherwise.
    #[arg(long)]
    beta: Option<f64>,
    /// Require edit types to match (errant mode).
    #[arg(long)]
    type_sensitive: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_floats<const N: usize>(text: &str, what: &str) -> Result<[f64; N]> {
    let values: Vec<f64> = text
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("{what}: expected {N} comma-separated numbers, got {text:?}"))?;
    values
        .try_into()
        .map_err(|v: Vec<f64>| anyhow::anyhow!("{what}: expected {N} values, got {}", v.len()))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn load_confusion(path: Option<&Path>) -> Result<Option<ConfusionSet>> {
    path.map(|p| ConfusionSet::load(p).with_context(|| format!("reading {}", p.display())))
        .transpose()
}

fn synthesize(a: SynthesizeArgs) -> Result<()> {
    let clean = read_sentences(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    if clean.iter().all(|s| s.len() < 2) {
        bail!("{} has no sentence of two or more characters", a.input.display());
    }
    let cfg = SynthConfig {
        seed: a.seed,
        p_delete: a.p_delete,
        p_insert: a.p_insert,
        p_substitute: a.p_substitute,
        mode_weights: ModeWeights::from_array(parse_floats::<4>(&a.mode_weights, "--mode-weights")?),
        top_n: a.top_n,
    };
    let confusion = load_confusion(a.confusion.as_deref())?.unwrap_or_default();
    let lexicon = a
        .lexicon
        .as_ref()
        .map(|p| Lexicon::load(p).with_context(|| format!("reading {}", p.display())))
        .transpose()?;
    let res = SynthResources::new(&clean, confusion, lexicon.as_ref(), a.top_n);
    let (pairs, manifest) = corrupt_corpus(&clean, &cfg, &res)?;

    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let dir = &a.out_dir;
    write_parallel_tsv(&pairs, dir.join("pairs.tsv"))?;
    write_sentences(pairs.iter().map(|p| &p.source), dir.join("source.txt"))?;
    write_labels_jsonl(&pairs, dir.join("labels.jsonl"))?;
    let gold: Vec<M2Sentence> = pairs
        .iter()
        .map(|p| M2Sentence::single(p.source.clone(), extract_edits(&p.source, &p.target, false)))
        .collect();
    match save_m2(dir.join("gold.m2"), &gold) {
        Ok(()) => {}
        Err(detcor::Error::Validation(msg)) => {
            let _ = fs::remove_file(dir.join("gold.m2"));
            eprintln!("warning: gold.m2 not written: {msg}");
        }
        Err(e) => return Err(e.into()),
    }
    write_json(&dir.join("manifest.json"), &serde_json::to_value(&manifest)?)?;
    println!(
        "{} pairs, {} skipped, delete {:.4}, insert {:.4}",
        manifest.sentences, manifest.skipped, manifest.delete_fraction, manifest.insert_fraction
    );
    Ok(())
}

fn derive_tags(pairs: &Path, out: &Path) -> Result<()> {
    let pairs = read_parallel_tsv(pairs).with_context(|| format!("reading {}", pairs.display()))?;
    let labeled: Vec<SentencePair> = pairs
        .into_iter()
        .map(|p| {
            let labels = derive_labels(&p).labels;
            p.with_labels(labels)
        })
        .collect::<detcor::Result<_>>()?;
    write_labels_jsonl(&labeled, out)?;
    println!("{} labeled pairs", labeled.len());
    Ok(())
}

fn train_detector(a: TrainDetectorArgs) -> Result<()> {
    let pairs = read_labels_jsonl(&a.labels).with_context(|| format!("reading {}", a.labels.display()))?;
    if a.dim == 0 {
        bail!("--dim must be positive");
    }
    let confusable: BTreeSet<char> = load_confusion(a.confusion.as_deref())?
        .map(|c| c.keys())
        .unwrap_or_default();
    let stats = CharStats::from_sentences(pairs.iter().map(|p| &p.target));
    let featurizer = HashedFeaturizer::new(a.dim, stats, confusable);
    let cfg = TrainConfig {
        dim: a.dim,
        lr: a.lr,
        l2: a.l2,
        epochs: a.epochs,
        seed: a.seed,
        batch_size: a.batch,
    };
    let (model, report) = train(&pairs, featurizer, cfg)?;
    model.save(&a.out)?;
    for (i, l) in report.epoch_losses.iter().enumerate() {
        println!("epoch {:>3}  loss {l:.6}", i + 1);
    }
    println!(
        "initial loss {:.6}, kept epoch {} with loss {:.6}",
        report.initial_loss, report.best_epoch, report.final_loss
    );
    Ok(())
}

fn train_lm(input: &Path, out: &Path, k: f64, top_k: usize) -> Result<()> {
    let corpus = read_sentences(input).with_context(|| format!("reading {}", input.display()))?;
    let lm = CharLM::train(&corpus, k, top_k)?;
    lm.save(out)?;
    println!("{} sentences, vocabulary {}", corpus.len(), lm.vocab().len());
    Ok(())
}

fn correct(a: CorrectArgs) -> Result<()> {
    let det = DetectorModel::load(&a.det).with_context(|| format!("loading {}", a.det.display()))?;
    let lm = CharLM::load(&a.lm).with_context(|| format!("loading {}", a.lm.display()))?;
    let confusion = load_confusion(a.confusion.as_deref())?;
    let bias = parse_floats::<4>(&a.class_bias, "--class-bias")?;
    let summary = match a.filler {
        Filler::Ngram => {
            let corrector = NgramCorrector {
                lm: &lm,
                confusion: confusion.as_ref(),
                beam: a.beam,
            };
            let p = Pipeline::new(&det, corrector).with_class_bias(bias);
            correct_corpus(&p, &a.input, &a.out, a.jobs, a.trace.as_deref())?
        }
        Filler::Random => {
            let corrector = RandomCorrector {
                alphabet: lm.candidates().to_vec(),
                seed: a.seed,
            };
            if corrector.alphabet.is_empty() {
                bail!("the LM has no candidate characters");
            }
            let p = Pipeline::new(&det, corrector).with_class_bias(bias);
            correct_corpus(&p, &a.input, &a.out, a.jobs, a.trace.as_deref())?
        }
    };
    println!(
        "{} sentences, {} changed, {} masks filled",
        summary.sentences, summary.changed, summary.masks_filled
    );
    Ok(())
}

/// Hypothesis lines; a TSV line contributes its second field.
fn read_hypotheses(path: &Path) -> Result<Vec<Sentence>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            let field = match line.split_once('\t') {
                Some((_, hyp)) => hyp,
                None => line,
            };
            Sentence::new(field).with_context(|| format!("{}:{}", path.display(), i + 1))
        })
        .collect()
}

fn check_sources<'a>(src: Option<&Path>, gold: impl ExactSizeIterator<Item = &'a Sentence>) -> Result<()> {
    let Some(path) = src else {
        return Ok(());
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let lines: Vec<&str> = text.lines().collect();
    if lines.len() != gold.len() {
        bail!("{} has {} lines but gold has {} sentences", path.display(), lines.len(), gold.len());
    }
    for (i, (line, g)) in lines.iter().zip(gold).enumerate() {
        let first = line.split('\t').next().unwrap_or_default();
        if first != g.to_string() {
            bail!("{}:{}: source differs from gold", path.display(), i + 1);
        }
    }
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let hyps = read_hypotheses(&a.hyp)?;
    let (value, table) = match a.mode {
        Mode::Sighan => {
            if a.beta.is_some_and(|b| b != 1.0) {
                bail!("sentence-level scores are F1; --beta must be 1 in sighan mode");
            }
            let gold = read_parallel_tsv(&a.gold).with_context(|| format!("reading {}", a.gold.display()))?;
            check_sources(a.src.as_deref(), gold.iter().map(|p| &p.source))?;
            let (det, cor) = eval_sentence_level(&gold, &hyps)?;
            let table = render_table(&[("detection", &det), ("correction", &cor)]);
            (json!({"mode": "sighan", "detection": det, "correction": cor}), table)
        }
        Mode::M2 | Mode::Errant => {
            let beta = a.beta.unwrap_or(0.5);
            if !(beta > 0.0 && beta.is_finite()) {
                bail!("--beta must be positive");
            }
            let gold = read_m2(&a.gold).with_context(|| format!("reading {}", a.gold.display()))?;
            check_sources(a.src.as_deref(), gold.iter().map(|g| &g.source))?;
            let (name, report): (&str, EvalReport) = if a.mode == Mode::M2 {
                ("m2", m2_score_corpus(&gold, &hyps, beta)?)
            } else {
                ("errant", errant_score_corpus(&gold, &hyps, beta, a.type_sensitive)?)
            };
            let table = render_table(&[(name, &report)]);
            let mut value = serde_json::to_value(&report)?;
            value
                .as_object_mut()
                .expect("reports serialize to objects")
                .insert("mode".into(), json!(name));
            (value, table)
        }
    };
    print!("{table}");
    if let Some(out) = &a.out {
        write_json(out, &value)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synthesize(a) => synthesize(a),
        Command::DeriveTags { pairs, out } => derive_tags(&pairs, &out),
        Command::TrainDetector(a) => train_detector(a),
        Command::TrainLm { input, out, k, top_k } => train_lm(&input, &out, k, top_k),
        Command::Correct(a) => correct(a),
        Command::Evaluate(a) => evaluate(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            eprintln!("{}", rendered.lines().next().unwrap_or("invalid arguments"));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
