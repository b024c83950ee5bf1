//! Classifier contract and the lightweight multinomial reference backend.
//!
//! Every model that takes part in training, inference and voting implements
//! [`ClassifierBackend`]. Pretrained encoders plug in as external adapters
//! described by an [`AdapterDescriptor`]; the crate itself ships
//! [`LightweightBackend`], a multinomial naive Bayes model over the
//! [`WordTokenizer`] vocabulary that trains in milliseconds.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{DatasetBundle, Document, LabelSpace};
use crate::error::{Error, Result};
use crate::jsonl;
use crate::preprocess::{compose_input, encode, EncodedExample, Scenario, Tokenizer};
use crate::tokenizer::{WordTokenizer, CLS_ID, PAD_ID, SEP_ID};

/// Probability floor used when scoring a gold label, so that a zero
/// posterior yields a large finite loss.
pub const LOSS_PROBABILITY_FLOOR: f64 = 1e-15;

pub trait ClassifierBackend {
    fn model_id(&self) -> &str;

    fn tokenizer(&self) -> &dyn Tokenizer;

    fn label_space(&self) -> &LabelSpace;

    /// One distribution per example, aligned with [`Self::label_space`].
    fn predict_proba(&self, batch: &[EncodedExample]) -> Result<Vec<Vec<f64>>>;

    /// Applies one update on a labeled batch and returns the mean
    /// cross-entropy of the batch under the parameters before the update.
    /// A learning rate of zero leaves the parameters untouched.
    fn fine_tune_step(&mut self, batch: &[EncodedExample], learning_rate: f64) -> Result<f64>;
}

/// Rejects empty batches and examples encoded against another vocabulary.
pub fn check_batch<B: ClassifierBackend + ?Sized>(backend: &B, batch: &[EncodedExample]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let expected = backend.tokenizer().fingerprint();
    if let Some(ex) = batch.iter().find(|ex| ex.tokenizer != expected) {
        return Err(Error::TokenizerMismatch {
            expected: expected.to_owned(),
            found: ex.tokenizer.clone(),
        });
    }
    Ok(())
}

/// Mean categorical cross-entropy of the gold labels.
pub fn cross_entropy(probabilities: &[Vec<f64>], batch: &[EncodedExample]) -> Result<f64> {
    let mut total = 0.0;
    for (p, ex) in probabilities.iter().zip(batch) {
        let y = ex
            .label_index
            .ok_or_else(|| Error::InvalidConfig("training example has no label".into()))?;
        let py = *p
            .get(y)
            .ok_or_else(|| Error::InvalidDistribution(format!("label index {y} out of range")))?;
        total -= py.max(LOSS_PROBABILITY_FLOOR).ln();
    }
    Ok(total / batch.len() as f64)
}

/// Composes and encodes documents. Documents with nothing to say under the
/// scenario are skipped and counted; with `labeled`, documents without a
/// gold label are skipped as well.
pub fn encode_documents(
    documents: &[Document],
    scenario: Scenario,
    tokenizer: &dyn Tokenizer,
    label_space: &LabelSpace,
    max_len: usize,
    labeled: bool,
) -> Result<(Vec<EncodedExample>, usize)> {
    let mut out = Vec::with_capacity(documents.len());
    let mut skipped = 0;
    for doc in documents {
        let label_index = match &doc.gold_label {
            Some(l) => Some(
                label_space
                    .index_of(l)
                    .ok_or_else(|| Error::UnknownLabel(l.to_string()))?,
            ),
            None if labeled => {
                skipped += 1;
                continue;
            }
            None => None,
        };
        let text = match compose_input(doc, scenario) {
            Ok(t) => t,
            Err(Error::UnusableDocument { .. }) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let mut ex = encode(&text, tokenizer, max_len)?;
        ex.label_index = label_index;
        out.push(ex);
    }
    Ok((out, skipped))
}

/// Multinomial naive Bayes over token ids with additive smoothing.
///
/// The model vocabulary is every tokenizer id except `[PAD]`, `[CLS]` and
/// `[SEP]`, so `[UNK]` is an ordinary token. Parameters are kept as
/// (possibly fractional) counts; log-probabilities are derived on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct LightweightBackend {
    model_id: String,
    tokenizer: WordTokenizer,
    label_space: LabelSpace,
    alpha: f64,
    update_scale: f64,
    class_weights: Vec<f64>,
    token_counts: Vec<Vec<f64>>,
    class_totals: Vec<f64>,
}

/// Count increment per unit of learning rate in [`LightweightBackend::fine_tune_step`]:
/// a step at learning rate 1e-6 adds each batch document once.
pub const DEFAULT_UPDATE_SCALE: f64 = 1e6;

impl LightweightBackend {
    pub fn untrained(
        model_id: impl Into<String>,
        tokenizer: WordTokenizer,
        label_space: LabelSpace,
        alpha: f64,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "smoothing constant must be > 0, got {alpha}"
            )));
        }
        let v = tokenizer.vocab_size();
        let l = label_space.len();
        Ok(LightweightBackend {
            model_id: model_id.into(),
            tokenizer,
            label_space,
            alpha,
            update_scale: DEFAULT_UPDATE_SCALE,
            class_weights: vec![0.0; l],
            token_counts: vec![vec![0.0; v]; l],
            class_totals: vec![0.0; l],
        })
    }

    pub fn with_update_scale(mut self, scale: f64) -> Self {
        self.update_scale = scale;
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn word_tokenizer(&self) -> &WordTokenizer {
        &self.tokenizer
    }

    /// Number of token types the likelihoods range over.
    pub fn model_vocab_size(&self) -> usize {
        self.tokenizer.vocab_size() - 3
    }

    fn is_counted(id: u32) -> bool {
        !matches!(id, PAD_ID | CLS_ID | SEP_ID)
    }

    /// Adds every example to its class with the given weight.
    pub fn fit(&mut self, examples: &[EncodedExample], weight: f64) -> Result<()> {
        check_batch(self, examples)?;
        for ex in examples {
            let y = ex
                .label_index
                .filter(|&y| y < self.label_space.len())
                .ok_or_else(|| Error::InvalidConfig("training example has no valid label".into()))?;
            self.class_weights[y] += weight;
            for &id in ex.active_ids() {
                if Self::is_counted(id) {
                    self.token_counts[y][id as usize] += weight;
                    self.class_totals[y] += weight;
                }
            }
        }
        Ok(())
    }

    /// Log class priors, proportional to the (weighted) class frequencies.
    /// An untrained model has uniform priors.
    pub fn class_log_priors(&self) -> Vec<f64> {
        let total: f64 = self.class_weights.iter().sum();
        if total <= 0.0 {
            let p = -(self.label_space.len() as f64).ln();
            return vec![p; self.label_space.len()];
        }
        self.class_weights.iter().map(|w| (w / total).ln()).collect()
    }

    /// `log((count + alpha) / (total + alpha * V))`.
    pub fn token_log_likelihood(&self, id: u32, label_index: usize) -> f64 {
        let v = self.model_vocab_size() as f64;
        let count = self.token_counts[label_index][id as usize];
        ((count + self.alpha) / (self.class_totals[label_index] + self.alpha * v)).ln()
    }

    /// Token-by-label log-likelihood matrix over the model vocabulary, in
    /// tokenizer id order.
    pub fn token_log_likelihoods(&self) -> Vec<(u32, Vec<f64>)> {
        (0..self.tokenizer.vocab_size() as u32)
            .filter(|&id| Self::is_counted(id))
            .map(|id| {
                let row = (0..self.label_space.len())
                    .map(|c| self.token_log_likelihood(id, c))
                    .collect();
                (id, row)
            })
            .collect()
    }

    fn posterior(&self, ex: &EncodedExample, priors: &[f64]) -> Vec<f64> {
        let mut scores = priors.to_vec();
        for &id in ex.active_ids() {
            if !Self::is_counted(id) {
                continue;
            }
            for (c, s) in scores.iter_mut().enumerate() {
                *s += self.token_log_likelihood(id, c);
            }
        }
        softmax(&scores)
    }

    pub fn save(&self, dir: &Path) -> Result<AdapterDescriptor> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.tokenizer.save(&dir.join(VOCAB_FILE))?;
        let weights = LightweightWeights {
            model_id: self.model_id.clone(),
            tokenizer: self.tokenizer.fingerprint().to_owned(),
            alpha: self.alpha,
            update_scale: self.update_scale,
            class_weights: self.class_weights.clone(),
            token_counts: self.token_counts.clone(),
        };
        jsonl::write_json(&dir.join(WEIGHTS_FILE), &weights)?;
        let descriptor = AdapterDescriptor {
            model_id: self.model_id.clone(),
            kind: LIGHTWEIGHT_KIND.to_owned(),
            vocab_path: PathBuf::from(VOCAB_FILE),
            weights_path: PathBuf::from(WEIGHTS_FILE),
            label_order: self.label_space.clone(),
        };
        jsonl::write_json(&dir.join(DESCRIPTOR_FILE), &descriptor)?;
        Ok(descriptor)
    }
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

impl ClassifierBackend for LightweightBackend {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn tokenizer(&self) -> &dyn Tokenizer {
        &self.tokenizer
    }

    fn label_space(&self) -> &LabelSpace {
        &self.label_space
    }

    fn predict_proba(&self, batch: &[EncodedExample]) -> Result<Vec<Vec<f64>>> {
        check_batch(self, batch)?;
        let priors = self.class_log_priors();
        Ok(batch.iter().map(|ex| self.posterior(ex, &priors)).collect())
    }

    /// Closed-form refit: the batch counts are added with weight
    /// `learning_rate * update_scale`.
    fn fine_tune_step(&mut self, batch: &[EncodedExample], learning_rate: f64) -> Result<f64> {
        let loss = cross_entropy(&self.predict_proba(batch)?, batch)?;
        let weight = learning_rate * self.update_scale;
        if weight > 0.0 {
            self.fit(batch, weight)?;
        }
        Ok(loss)
    }
}

/// Builds a vocabulary from the composed training texts of a bundle.
pub fn vocabulary_for(documents: &[Document], scenario: Scenario) -> WordTokenizer {
    WordTokenizer::from_texts(documents.iter().filter_map(|d| compose_input(d, scenario).ok()), 1)
}

/// Fits a lightweight backend on the training partition in one pass.
pub fn train_lightweight(
    model_id: &str,
    bundle: &DatasetBundle,
    scenario: Scenario,
    alpha: f64,
    max_len: usize,
) -> Result<LightweightBackend> {
    let tokenizer = vocabulary_for(&bundle.train, scenario);
    let (examples, _) = encode_documents(&bundle.train, scenario, &tokenizer, &bundle.label_space, max_len, true)?;
    if examples.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut backend = LightweightBackend::untrained(model_id, tokenizer, bundle.label_space.clone(), alpha)?;
    backend.fit(&examples, 1.0)?;
    Ok(backend)
}

pub const LIGHTWEIGHT_KIND: &str = "lightweight";
pub const DESCRIPTOR_FILE: &str = "descriptor.json";
const VOCAB_FILE: &str = "vocab.txt";
const WEIGHTS_FILE: &str = "weights.json";

/// Points at a backend's vocabulary and weights. Relative paths resolve
/// against the directory holding the descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdapterDescriptor {
    pub model_id: String,
    #[serde(default = "default_kind")]
    pub kind: String,
    pub vocab_path: PathBuf,
    pub weights_path: PathBuf,
    pub label_order: LabelSpace,
}

fn default_kind() -> String {
    LIGHTWEIGHT_KIND.to_owned()
}

#[derive(Debug, Serialize, Deserialize)]
struct LightweightWeights {
    model_id: String,
    tokenizer: String,
    alpha: f64,
    update_scale: f64,
    class_weights: Vec<f64>,
    token_counts: Vec<Vec<f64>>,
}

impl AdapterDescriptor {
    pub fn read(path: &Path) -> Result<Self> {
        jsonl::read_json(path)
    }

    /// Loads the backend the descriptor at `path` describes. Only the
    /// lightweight kind is built in; other kinds report
    /// [`Error::UnsupportedAdapter`].
    pub fn load(path: &Path) -> Result<LightweightBackend> {
        let d = Self::read(path)?;
        if d.kind != LIGHTWEIGHT_KIND {
            return Err(Error::UnsupportedAdapter(d.kind));
        }
        let base = path.parent().unwrap_or(Path::new("."));
        let tokenizer = WordTokenizer::load(&base.join(&d.vocab_path))?;
        let weights_path = base.join(&d.weights_path);
        let w: LightweightWeights = jsonl::read_json(&weights_path)?;
        if w.tokenizer != tokenizer.fingerprint() {
            return Err(Error::TokenizerMismatch {
                expected: w.tokenizer,
                found: tokenizer.fingerprint().to_owned(),
            });
        }
        let shape_ok = w.class_weights.len() == d.label_order.len()
            && w.token_counts.len() == d.label_order.len()
            && w.token_counts.iter().all(|row| row.len() == tokenizer.vocab_size());
        if !shape_ok {
            return Err(Error::malformed(
                &weights_path,
                "weight shapes do not match vocabulary and labels",
            ));
        }
        let mut backend = LightweightBackend::untrained(d.model_id, tokenizer, d.label_order, w.alpha)?
            .with_update_scale(w.update_scale);
        backend.class_totals = w.token_counts.iter().map(|row| row.iter().sum()).collect();
        backend.class_weights = w.class_weights;
        backend.token_counts = w.token_counts;
        Ok(backend)
    }
}
