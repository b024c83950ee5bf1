#![allow(dead_code)]

use std::collections::HashMap;

use sciclass::backend::{check_batch, ClassifierBackend};
use sciclass::corpus::{DatasetBundle, Document, LabelSpace, SplitRatios};
use sciclass::preprocess::{EncodedExample, Tokenizer};
use sciclass::tokenizer::WordTokenizer;
use sciclass::Result;

/// Backend whose validation micro-F1 after epoch `e` is `scores[e - 1]`.
///
/// Validation documents are titled [`val_word`], all gold label 0. After `e`
/// training steps the backend predicts label 0 for the first
/// `round(scores[e - 1] * n)` of them and label 1 for the rest. Training
/// must run one step per epoch (batch size at least the train size). A NaN
/// score makes the matching step report a NaN loss.
#[derive(Debug, Clone)]
pub struct ScriptedBackend {
    pub tokenizer: WordTokenizer,
    pub labels: LabelSpace,
    rank: HashMap<u32, usize>,
    scores: Vec<f64>,
    n_val: usize,
    pub steps: usize,
}

/// Letters only, so the word survives cleaning.
pub fn val_word(i: usize) -> String {
    let mut w = String::from("v");
    let mut x = i;
    for _ in 0..4 {
        w.push((b'a' + (x % 26) as u8) as char);
        x /= 26;
    }
    w
}

impl ScriptedBackend {
    pub fn new(n_val: usize, scores: Vec<f64>) -> Self {
        let words: Vec<String> = (0..n_val).map(val_word).chain(["train".to_owned()]).collect();
        let tokenizer = WordTokenizer::from_words(words);
        let rank = (0..n_val).map(|i| (tokenizer.id(&val_word(i)).unwrap(), i)).collect();
        ScriptedBackend {
            tokenizer,
            labels: LabelSpace::from_names(&["gold", "other"]).unwrap(),
            rank,
            scores,
            n_val,
            steps: 0,
        }
    }

    fn correct_prefix(&self) -> usize {
        let s = self.scores[self.steps.max(1) - 1];
        (s * self.n_val as f64).round() as usize
    }
}

impl ClassifierBackend for ScriptedBackend {
    fn model_id(&self) -> &str {
        "scripted"
    }

    fn tokenizer(&self) -> &dyn Tokenizer {
        &self.tokenizer
    }

    fn label_space(&self) -> &LabelSpace {
        &self.labels
    }

    fn predict_proba(&self, batch: &[EncodedExample]) -> Result<Vec<Vec<f64>>> {
        let k = self.correct_prefix();
        Ok(batch
            .iter()
            .map(|ex| match self.rank.get(&ex.input_ids[1]) {
                Some(&r) if r < k => vec![1.0, 0.0],
                _ => vec![0.0, 1.0],
            })
            .collect())
    }

    fn fine_tune_step(&mut self, batch: &[EncodedExample], _lr: f64) -> Result<f64> {
        check_batch(self, batch)?;
        self.steps += 1;
        Ok(if self.scores[self.steps - 1].is_nan() {
            f64::NAN
        } else {
            1.0
        })
    }
}

/// Four training documents and `n_val` validation documents for
/// [`ScriptedBackend`].
pub fn scripted_bundle(n_val: usize) -> DatasetBundle {
    let labels = LabelSpace::from_names(&["gold", "other"]).unwrap();
    let train = (0..4)
        .map(|i| Document::new(format!("t{i}"), "train", "").with_label(if i % 2 == 0 { "gold" } else { "other" }))
        .collect();
    let validation = (0..n_val)
        .map(|i| Document::new(format!("v{i}"), val_word(i), "").with_label("gold"))
        .collect();
    DatasetBundle {
        label_space: labels,
        train,
        validation,
        test: Vec::new(),
        seed: 0,
        ratios: SplitRatios::default(),
    }
}

/// Independent early-stopping oracle: (epochs run, best epoch, best score).
pub fn early_stop_oracle(scores: &[f64], patience: usize) -> (usize, usize, f64) {
    let mut best_epoch = 0;
    let mut best = f64::NEG_INFINITY;
    for (i, &s) in scores.iter().enumerate() {
        let epoch = i + 1;
        if s > best {
            best = s;
            best_epoch = epoch;
        }
        if epoch - best_epoch >= patience {
            return (epoch, best_epoch, best);
        }
    }
    (scores.len(), best_epoch, best)
}
