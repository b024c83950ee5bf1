//! Fine-tuning orchestration: warmup/decay schedule, early stopping on
//! validation micro-F1, best-checkpoint selection and the learning-rate grid.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backend::{encode_documents, ClassifierBackend};
use crate::corpus::DatasetBundle;
use crate::error::{Error, Result};
use crate::evaluation::{argmax, confusion_indices, micro_metrics};
use crate::preprocess::{EncodedExample, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rates: Vec<f64>,
    /// Optimizer epsilon for gradient-based adapters.
    pub adam_epsilon: f64,
    pub max_epochs: usize,
    /// Share of all optimization steps spent warming up.
    pub warmup_fraction: f64,
    /// Epochs without strict improvement tolerated before stopping.
    pub patience: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub max_len: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rates: vec![2e-5, 5e-6, 1e-6, 2e-6],
            adam_epsilon: 1e-8,
            max_epochs: 20,
            warmup_fraction: 1e-4,
            patience: 3,
            batch_size: 16,
            seed: 42,
            max_len: 512,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_owned()));
        if self.learning_rates.is_empty() {
            return bad("learning_rates is empty");
        }
        if self.learning_rates.iter().any(|lr| !(lr.is_finite() && *lr > 0.0)) {
            return bad("learning rates must be finite and > 0");
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return bad("warmup_fraction must be in [0, 1)");
        }
        if self.patience < 1 {
            return bad("patience must be at least 1");
        }
        if self.max_epochs < 1 || self.batch_size < 1 {
            return bad("max_epochs and batch_size must be at least 1");
        }
        if self.max_len < 3 {
            return bad("max_len must be at least 3");
        }
        Ok(())
    }

    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(&Sha256::digest(&json)[..8])
    }
}

/// Linear warmup from 0 to 1 over `warmup_steps`, then linear decay to 0
/// at `total_steps`.
pub fn schedule_multiplier(step: usize, total_steps: usize, warmup_steps: usize) -> Result<f64> {
    if step > total_steps || warmup_steps >= total_steps {
        return Err(Error::InvalidConfig(format!(
            "schedule needs step <= total and warmup < total (step {step}, warmup {warmup_steps}, total {total_steps})"
        )));
    }
    if step < warmup_steps {
        return Ok(step as f64 / warmup_steps as f64);
    }
    Ok((total_steps - step) as f64 / (total_steps - warmup_steps) as f64)
}

/// Warmup length for a fractional warmup: rounded up, at least one step
/// when the fraction is positive, always below `total_steps`.
pub fn warmup_steps(total_steps: usize, fraction: f64) -> usize {
    if fraction <= 0.0 || total_steps <= 1 {
        return 0;
    }
    ((total_steps as f64 * fraction).ceil() as usize).clamp(1, total_steps - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_micro_f1: f64,
    /// Scheduled rate at the last step of the epoch.
    pub learning_rate: f64,
}

#[derive(Debug, Clone)]
pub struct Checkpoint<B> {
    pub backend: B,
    pub epoch: usize,
    pub val_micro_f1: f64,
    pub config_fingerprint: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Improved,
    Continue,
    Stop,
}

/// Tracks the best validation score; ties do not count as improvement.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: Option<(usize, f64)>,
    stale: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping {
            patience,
            best: None,
            stale: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, score: f64) -> Verdict {
        match self.best {
            Some((_, best)) if score <= best => {
                self.stale += 1;
                if self.stale >= self.patience {
                    Verdict::Stop
                } else {
                    Verdict::Continue
                }
            }
            _ => {
                self.best = Some((epoch, score));
                self.stale = 0;
                Verdict::Improved
            }
        }
    }

    pub fn best(&self) -> Option<(usize, f64)> {
        self.best
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<B> {
    pub learning_rate: f64,
    pub checkpoint: Checkpoint<B>,
    pub records: Vec<EpochRecord>,
    pub stopped_early: bool,
}

/// Micro-F1 of argmax predictions on labeled examples.
pub fn validation_micro_f1<B: ClassifierBackend + ?Sized>(
    backend: &B,
    examples: &[EncodedExample],
    batch_size: usize,
) -> Result<f64> {
    let mut golds = Vec::with_capacity(examples.len());
    let mut preds = Vec::with_capacity(examples.len());
    for chunk in examples.chunks(batch_size.max(1)) {
        for (p, ex) in backend.predict_proba(chunk)?.iter().zip(chunk) {
            golds.push(ex.label_index.expect("validation examples are labeled"));
            preds.push(argmax(p));
        }
    }
    let matrix = confusion_indices(backend.label_space().clone(), &golds, &preds)?;
    Ok(micro_metrics(&matrix)?.micro_f1)
}

/// Trains one backend at one learning rate until `max_epochs` or until
/// validation micro-F1 has not strictly improved for `patience` epochs.
/// The returned checkpoint is the best-scoring epoch's snapshot.
pub fn fine_tune<B: ClassifierBackend + Clone>(
    mut backend: B,
    bundle: &DatasetBundle,
    scenario: Scenario,
    config: &TrainConfig,
    lr: f64,
) -> Result<TrainOutcome<B>> {
    config.validate()?;
    if !config.learning_rates.contains(&lr) {
        return Err(Error::InvalidConfig(format!(
            "learning rate {lr:e} is not in the configured grid"
        )));
    }
    let labels = backend.label_space().clone();
    let (train, _) = encode_documents(
        &bundle.train,
        scenario,
        backend.tokenizer(),
        &labels,
        config.max_len,
        true,
    )?;
    let (val, _) = encode_documents(
        &bundle.validation,
        scenario,
        backend.tokenizer(),
        &labels,
        config.max_len,
        true,
    )?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::InvalidConfig(
            "train and validation partitions need labeled documents".into(),
        ));
    }

    let batches_per_epoch = train.len().div_ceil(config.batch_size);
    let total_steps = batches_per_epoch * config.max_epochs;
    let warmup = warmup_steps(total_steps, config.warmup_fraction);
    let fingerprint = config.fingerprint();

    let mut stopper = EarlyStopping::new(config.patience);
    let mut records = Vec::new();
    let mut best: Option<Checkpoint<B>> = None;
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut step = 0;
    let mut stopped_early = false;

    for epoch in 1..=config.max_epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ epoch as u64);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut current_lr = 0.0;
        for idx in order.chunks(config.batch_size) {
            let batch: Vec<EncodedExample> = idx.iter().map(|&i| train[i].clone()).collect();
            current_lr = lr * schedule_multiplier(step, total_steps, warmup)?;
            let loss = backend.fine_tune_step(&batch, current_lr)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { lr });
            }
            loss_sum += loss;
            step += 1;
        }
        let score = validation_micro_f1(&backend, &val, config.batch_size)?;
        records.push(EpochRecord {
            epoch,
            train_loss: loss_sum / batches_per_epoch as f64,
            val_micro_f1: score,
            learning_rate: current_lr,
        });
        match stopper.observe(epoch, score) {
            Verdict::Improved => {
                best = Some(Checkpoint {
                    backend: backend.clone(),
                    epoch,
                    val_micro_f1: score,
                    config_fingerprint: fingerprint.clone(),
                })
            }
            Verdict::Continue => {}
            Verdict::Stop => {
                stopped_early = epoch < config.max_epochs;
                break;
            }
        }
    }
    Ok(TrainOutcome {
        learning_rate: lr,
        checkpoint: best.expect("at least one epoch ran"),
        records,
        stopped_early,
    })
}

#[derive(Debug, Clone)]
pub struct LrSearch<B> {
    pub best_lr: f64,
    /// Completed runs in grid order.
    pub runs: Vec<TrainOutcome<B>>,
    /// Rates whose run diverged.
    pub diverged: Vec<f64>,
}

impl<B> LrSearch<B> {
    pub fn best(&self) -> &TrainOutcome<B> {
        self.runs
            .iter()
            .find(|r| r.learning_rate == self.best_lr)
            .expect("best rate has a run")
    }
}

/// Picks the rate with the highest checkpoint score; equal scores go to the
/// smaller rate.
pub fn select_best_lr(candidates: impl IntoIterator<Item = (f64, f64)>) -> Option<f64> {
    candidates
        .into_iter()
        .fold(None, |best: Option<(f64, f64)>, (lr, score)| match best {
            Some((blr, bscore)) if bscore > score || (bscore == score && blr <= lr) => Some((blr, bscore)),
            _ => Some((lr, score)),
        })
        .map(|(lr, _)| lr)
}

/// Runs [`fine_tune`] once per configured rate, each from a fresh backend
/// built by `factory`.
pub fn lr_search<B, F>(
    mut factory: F,
    bundle: &DatasetBundle,
    scenario: Scenario,
    config: &TrainConfig,
) -> Result<LrSearch<B>>
where
    B: ClassifierBackend + Clone,
    F: FnMut() -> Result<B>,
{
    config.validate()?;
    let mut runs = Vec::new();
    let mut diverged = Vec::new();
    for &lr in &config.learning_rates {
        match fine_tune(factory()?, bundle, scenario, config, lr) {
            Ok(run) => runs.push(run),
            Err(Error::Divergence { lr }) => diverged.push(lr),
            Err(e) => return Err(e),
        }
    }
    let best_lr = select_best_lr(runs.iter().map(|r| (r.learning_rate, r.checkpoint.val_micro_f1)))
        .ok_or_else(|| Error::AllDiverged(diverged.clone()))?;
    Ok(LrSearch {
        best_lr,
        runs,
        diverged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_boundaries() {
        assert_eq!(schedule_multiplier(0, 1100, 100).unwrap(), 0.0);
        assert_eq!(schedule_multiplier(100, 1100, 100).unwrap(), 1.0);
        assert_eq!(schedule_multiplier(600, 1100, 100).unwrap(), 0.5);
        assert_eq!(schedule_multiplier(1100, 1100, 100).unwrap(), 0.0);
        assert_eq!(schedule_multiplier(50, 1100, 100).unwrap(), 0.5);
        assert_eq!(schedule_multiplier(0, 10, 0).unwrap(), 1.0);
        assert!(schedule_multiplier(1101, 1100, 100).is_err());
        assert!(schedule_multiplier(0, 100, 100).is_err());
    }

    #[test]
    fn warmup_fraction_rounds_up() {
        assert_eq!(warmup_steps(1000, 1e-4), 1);
        assert_eq!(warmup_steps(100_000, 1e-4), 10);
        assert_eq!(warmup_steps(100_001, 1e-4), 11);
        assert_eq!(warmup_steps(1000, 0.0), 0);
        assert_eq!(warmup_steps(1, 0.5), 0);
        assert_eq!(warmup_steps(4, 0.99), 3);
    }

    #[test]
    fn early_stopping_examples() {
        let run = |scores: &[f64], patience| {
            let mut s = EarlyStopping::new(patience);
            let mut last = 0;
            for (i, &x) in scores.iter().enumerate() {
                last = i + 1;
                if s.observe(i + 1, x) == Verdict::Stop {
                    break;
                }
            }
            (last, s.best().unwrap().0)
        };
        assert_eq!(run(&[0.5, 0.6, 0.59, 0.58], 2), (4, 2));
        assert_eq!(run(&[0.7, 0.7], 1), (2, 1));
        let rising: Vec<f64> = (1..=20).map(|i| i as f64 / 20.0).collect();
        assert_eq!(run(&rising, 3), (20, 20));
    }

    #[test]
    fn best_lr_rules() {
        let peaks = [(2e-5, 0.80), (5e-6, 0.85), (1e-6, 0.90), (2e-6, 0.88)];
        assert_eq!(select_best_lr(peaks), Some(1e-6));
        assert_eq!(select_best_lr([(5e-6, 0.7)]), Some(5e-6));
        assert_eq!(select_best_lr([(5e-6, 0.9), (1e-6, 0.9), (2e-6, 0.9)]), Some(1e-6));
        assert_eq!(select_best_lr([]), None);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let mut c = TrainConfig::default();
        c.learning_rates.clear();
        assert!(c.validate().is_err());
        let c = TrainConfig {
            warmup_fraction: 1.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = TrainConfig {
            patience: 0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = TrainConfig {
            learning_rates: vec![-1.0],
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn fingerprint_tracks_fields() {
        let a = TrainConfig::default();
        let b = TrainConfig {
            patience: 4,
            ..Default::default()
        };
        assert_eq!(a.fingerprint(), TrainConfig::default().fingerprint());
        assert_ne!(a.fingerprint(), b.fingerprint());
    }
}
