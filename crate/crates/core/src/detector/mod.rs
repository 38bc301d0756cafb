//! Token-level error detector.
//!
//! A linear four-class softmax over a token representation, trained with
//! mean cross-entropy and Adam. The representation comes from an
//! [`Encoder`]; the bundled one is [`HashedFeaturizer`].

mod adam;
mod features;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use adam::{Adam, AdamConfig};
pub use features::{CharStats, Encoder, FeatureVector, HashedFeaturizer, BOS, DEFAULT_DIM, EOS};

use crate::error::{Error, Result};
use crate::types::{ErrorClass, Sentence, SentencePair};

pub const NUM_CLASSES: usize = 4;
pub const MODEL_KIND: &str = "detector.v1";

/// Probabilities over keep / mistaken / missing / redundant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelDistribution(pub [f64; NUM_CLASSES]);

impl LabelDistribution {
    pub fn from_logits(logits: &[f64; NUM_CLASSES]) -> Self {
        let lse = log_sum_exp(logits);
        LabelDistribution(logits.map(|z| (z - lse).exp()))
    }

    pub fn prob(&self, class: ErrorClass) -> f64 {
        self.0[class.index()]
    }

    pub fn argmax(&self) -> ErrorClass {
        ErrorClass::from_index(argmax(&self.0)).expect("four classes")
    }
}

pub fn log_sum_exp(z: &[f64; NUM_CLASSES]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

// first maximum wins
fn argmax(v: &[f64; NUM_CLASSES]) -> usize {
    let mut best = 0;
    for k in 1..NUM_CLASSES {
        if v[k] > v[best] {
            best = k;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub dim: usize,
    pub lr: f64,
    pub l2: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Sentences per optimizer step.
    pub batch_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: DEFAULT_DIM,
            lr: 1e-3,
            l2: 0.0,
            epochs: 5,
            seed: 0,
            batch_size: 32,
        }
    }
}

/// One position with its gold class.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub features: FeatureVector,
    pub gold: ErrorClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<f64>,
    pub bias: [f64; NUM_CLASSES],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub initial_loss: f64,
    pub final_loss: f64,
    pub epoch_losses: Vec<f64>,
    /// Epoch whose weights were kept (0 = untrained).
    pub best_epoch: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorModel {
    featurizer: HashedFeaturizer,
    /// Class-major: `weights[k * d + j]`.
    weights: Vec<f64>,
    bias: [f64; NUM_CLASSES],
    hyper: TrainConfig,
}

#[derive(Serialize, Deserialize)]
struct DetectorFile {
    kind: String,
    d: usize,
    weights: Vec<f64>,
    bias: [f64; NUM_CLASSES],
    hyper: TrainConfig,
    featurizer: HashedFeaturizer,
}

impl DetectorModel {
    /// All-zero weights: every position predicts the uniform distribution.
    pub fn zeros(featurizer: HashedFeaturizer, hyper: TrainConfig) -> Self {
        let d = featurizer.dim();
        DetectorModel {
            featurizer,
            weights: vec![0.0; NUM_CLASSES * d],
            bias: [0.0; NUM_CLASSES],
            hyper: TrainConfig { dim: d, ..hyper },
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len() / NUM_CLASSES
    }

    pub fn featurizer(&self) -> &HashedFeaturizer {
        &self.featurizer
    }

    pub fn hyper(&self) -> &TrainConfig {
        &self.hyper
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn bias(&self) -> [f64; NUM_CLASSES] {
        self.bias
    }

    pub fn set_bias(&mut self, bias: [f64; NUM_CLASSES]) {
        self.bias = bias;
    }

    pub fn set_weight(&mut self, class: ErrorClass, feature: usize, value: f64) {
        let d = self.dim();
        self.weights[class.index() * d + feature] = value;
    }

    pub fn logits(&self, fv: &FeatureVector) -> [f64; NUM_CLASSES] {
        let d = self.dim();
        let mut z = self.bias;
        for &(j, v) in fv.entries() {
            for (k, zk) in z.iter_mut().enumerate() {
                *zk += self.weights[k * d + j as usize] * v;
            }
        }
        z
    }

    pub fn predict(&self, sentence: &Sentence) -> Result<Vec<LabelDistribution>> {
        self.predict_with(&self.featurizer, sentence)
    }

    /// Predict with an external encoder of the same dimension.
    pub fn predict_with<E: Encoder>(
        &self,
        encoder: &E,
        sentence: &Sentence,
    ) -> Result<Vec<LabelDistribution>> {
        Ok(self
            .position_logits(encoder, sentence)?
            .iter()
            .map(LabelDistribution::from_logits)
            .collect())
    }

    fn position_logits<E: Encoder>(
        &self,
        encoder: &E,
        sentence: &Sentence,
    ) -> Result<Vec<[f64; NUM_CLASSES]>> {
        if encoder.dim() != self.dim() {
            return Err(Error::Contract(format!(
                "encoder dimension {} does not match model dimension {}",
                encoder.dim(),
                self.dim()
            )));
        }
        Ok((0..=sentence.len())
            .map(|i| self.logits(&encoder.encode(sentence, i)))
            .collect())
    }

    /// Argmax class per position (n+1 entries) after adding `class_bias` to
    /// the logits.
    pub fn tag(&self, sentence: &Sentence, class_bias: &[f64; NUM_CLASSES]) -> Result<Vec<ErrorClass>> {
        Ok(self
            .position_logits(&self.featurizer, sentence)?
            .into_iter()
            .map(|mut z| {
                for (zk, b) in z.iter_mut().zip(class_bias) {
                    *zk += b;
                }
                ErrorClass::from_index(argmax(&z)).expect("four classes")
            })
            .collect())
    }

    /// Encode a labeled pair's source into training positions.
    pub fn examples(&self, pair: &SentencePair) -> Result<Vec<Example>> {
        examples_with(&self.featurizer, pair)
    }

    /// Mean negative log-likelihood over `examples` plus `l2/2 * |w|^2`.
    pub fn loss(&self, examples: &[Example]) -> f64 {
        let mut total = 0.0;
        for ex in examples {
            let z = self.logits(&ex.features);
            total += log_sum_exp(&z) - z[ex.gold.index()];
        }
        let n = examples.len().max(1) as f64;
        total / n + self.l2_penalty()
    }

    fn l2_penalty(&self) -> f64 {
        if self.hyper.l2 == 0.0 {
            return 0.0;
        }
        0.5 * self.hyper.l2 * self.weights.iter().map(|w| w * w).sum::<f64>()
    }

    pub fn loss_and_gradient(&self, examples: &[Example]) -> (f64, Gradient) {
        let d = self.dim();
        let mut grad = Gradient {
            weights: vec![0.0; self.weights.len()],
            bias: [0.0; NUM_CLASSES],
        };
        let n = examples.len().max(1) as f64;
        let mut total = 0.0;
        for ex in examples {
            let z = self.logits(&ex.features);
            let lse = log_sum_exp(&z);
            let gold = ex.gold.index();
            total += lse - z[gold];
            for (k, zk) in z.iter().enumerate() {
                let dz = ((zk - lse).exp() - f64::from(u8::from(k == gold))) / n;
                grad.bias[k] += dz;
                for &(j, v) in ex.features.entries() {
                    grad.weights[k * d + j as usize] += dz * v;
                }
            }
        }
        let l2 = self.hyper.l2;
        if l2 != 0.0 {
            for (g, w) in grad.weights.iter_mut().zip(&self.weights) {
                *g += l2 * w;
            }
        }
        (total / n + self.l2_penalty(), grad)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = DetectorFile {
            kind: MODEL_KIND.to_string(),
            d: self.dim(),
            weights: self.weights.clone(),
            bias: self.bias,
            hyper: self.hyper,
            featurizer: self.featurizer.clone(),
        };
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut w, &file)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_reader(BufReader::new(File::open(path)?))?;
        check_kind(&value, MODEL_KIND)?;
        let file: DetectorFile = serde_json::from_value(value)?;
        if file.weights.len() != NUM_CLASSES * file.d || file.featurizer.dim() != file.d {
            return Err(Error::Validation(format!(
                "detector file declares d={} but holds {} weights and a featurizer of dimension {}",
                file.d,
                file.weights.len(),
                file.featurizer.dim()
            )));
        }
        if !file.weights.iter().chain(&file.bias).all(|w| w.is_finite()) {
            return Err(Error::Validation("detector weights must be finite".into()));
        }
        Ok(DetectorModel {
            featurizer: file.featurizer,
            weights: file.weights,
            bias: file.bias,
            hyper: file.hyper,
        })
    }
}

pub(crate) fn check_kind(value: &serde_json::Value, expected: &str) -> Result<()> {
    let found = value.get("kind").and_then(|k| k.as_str()).unwrap_or("");
    if found != expected {
        return Err(Error::SchemaVersion {
            expected: expected.to_string(),
            found: found.to_string(),
        });
    }
    Ok(())
}

pub fn examples_with<E: Encoder>(encoder: &E, pair: &SentencePair) -> Result<Vec<Example>> {
    let labels = pair
        .gold_labels
        .as_ref()
        .ok_or_else(|| Error::Validation("training pair lacks gold labels".into()))?;
    labels.check_len(pair.source.len())?;
    Ok(labels
        .classes()
        .into_iter()
        .enumerate()
        .map(|(i, gold)| Example {
            features: encoder.encode(&pair.source, i),
            gold,
        })
        .collect())
}

/// Train a detector with Adam on mini-batches of sentences.
///
/// The returned weights are those of the epoch with the lowest full-corpus
/// loss, the untrained model included, so the final loss never exceeds the
/// initial one.
pub fn train(
    corpus: &[SentencePair],
    featurizer: HashedFeaturizer,
    cfg: TrainConfig,
) -> Result<(DetectorModel, TrainReport)> {
    if corpus.is_empty() {
        return Err(Error::Usage("cannot train a detector on an empty corpus".into()));
    }
    if cfg.batch_size == 0 {
        return Err(Error::Usage("batch size must be positive".into()));
    }
    if featurizer.dim() != cfg.dim {
        return Err(Error::Contract(format!(
            "featurizer dimension {} does not match configured dimension {}",
            featurizer.dim(),
            cfg.dim
        )));
    }
    let mut model = DetectorModel::zeros(featurizer, cfg);
    let encoded: Vec<Vec<Example>> = corpus
        .iter()
        .map(|p| model.examples(p))
        .collect::<Result<_>>()?;
    let everything: Vec<Example> = encoded.iter().flatten().cloned().collect();

    let initial_loss = model.loss(&everything);
    let mut best = (initial_loss, 0, model.weights.clone(), model.bias);
    let adam_cfg = AdamConfig {
        lr: cfg.lr,
        ..AdamConfig::default()
    };
    let mut w_opt = Adam::new(adam_cfg, model.weights.len());
    let mut b_opt = Adam::new(adam_cfg, NUM_CLASSES);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..encoded.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut batch = Vec::new();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().flat_map(|&i| encoded[i].iter().cloned()));
            let (_, grad) = model.loss_and_gradient(&batch);
            w_opt.step(&mut model.weights, &grad.weights);
            b_opt.step(&mut model.bias, &grad.bias);
        }
        let loss = model.loss(&everything);
        epoch_losses.push(loss);
        if loss < best.0 {
            best = (loss, epoch, model.weights.clone(), model.bias);
        }
    }

    let (final_loss, best_epoch, weights, bias) = best;
    model.weights = weights;
    model.bias = bias;
    Ok((
        model,
        TrainReport {
            initial_loss,
            final_loss,
            epoch_losses,
            best_epoch,
        },
    ))
}
