use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{batch_loss, evaluate, EpochRecord, History};
use crate::error::{Error, Result};
use crate::layers::Mode;
use crate::models::Model;
use crate::numerics::{adam_step, AdamConfig, AdamState, Rng, Scalar};
use crate::textpipe::{Dataset, Example};

fn d_batch() -> usize {
    16
}
fn d_epochs() -> usize {
    30
}
fn d_lr() -> f64 {
    3e-4
}
fn d_beta1() -> f64 {
    0.9
}
fn d_beta2() -> f64 {
    0.999
}
fn d_eps() -> f64 {
    1e-8
}
fn d_true() -> bool {
    true
}
fn d_one() -> usize {
    1
}
fn d_clip() -> f64 {
    5.0
}

/// Optimisation settings. Defaults are the small-model values: batches of 16,
/// 30 epochs, Adam at 3e-4.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "d_batch")]
    pub batch_size: usize,
    #[serde(default = "d_epochs")]
    pub epochs: usize,
    #[serde(default = "d_lr")]
    pub lr: f64,
    #[serde(default = "d_beta1")]
    pub beta1: f64,
    #[serde(default = "d_beta2")]
    pub beta2: f64,
    #[serde(default = "d_eps")]
    pub eps: f64,
    #[serde(default)]
    pub seed: u64,
    /// Reshuffle the training split every epoch.
    #[serde(default = "d_true")]
    pub shuffle: bool,
    /// Evaluate on dev every this many epochs (and always after the last).
    #[serde(default = "d_one")]
    pub eval_every: usize,
    /// Global gradient-norm ceiling.
    #[serde(default = "d_clip")]
    pub clip_norm: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: d_batch(),
            epochs: d_epochs(),
            lr: d_lr(),
            beta1: d_beta1(),
            beta2: d_beta2(),
            eps: d_eps(),
            seed: 0,
            shuffle: true,
            eval_every: 1,
            clip_norm: d_clip(),
        }
    }
}

impl TrainConfig {
    pub fn small() -> Self {
        Self::default()
    }

    /// Large-model batches of 50.
    pub fn large() -> Self {
        TrainConfig { batch_size: 50, ..Self::default() }
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig { lr: self.lr, beta1: self.beta1, beta2: self.beta2, eps: self.eps }
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.batch_size == 0 {
            bad.push("batch_size must be positive".to_string());
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            bad.push(format!("lr must be a non-negative number, got {}", self.lr));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                bad.push(format!("{name} must be in [0, 1), got {b}"));
            }
        }
        if !(self.eps > 0.0) {
            bad.push(format!("eps must be positive, got {}", self.eps));
        }
        if self.eval_every == 0 {
            bad.push("eval_every must be positive".into());
        }
        if !(self.clip_norm > 0.0) {
            bad.push(format!("clip_norm must be positive, got {}", self.clip_norm));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad))
        }
    }
}

/// Generator streams derived from the user seed, one per purpose.
pub mod streams {
    pub const INIT: u64 = 1;
    pub const SHUFFLE: u64 = 2;
    pub const DROPOUT: u64 = 3;
}

/// Mini-batch Adam on `dataset.train`, evaluating on `dataset.dev`.
///
/// The model ends with the parameters of the epoch with the highest dev
/// accuracy (earliest on ties). Runs are bit-reproducible for a given seed.
pub fn train<T: Scalar>(model: &mut Model<T>, dataset: &Dataset, config: &TrainConfig) -> Result<History> {
    train_with_progress(model, dataset, config, |_| {})
}

/// [`train`] that reports each finished epoch to `on_epoch`.
pub fn train_with_progress<T: Scalar>(
    model: &mut Model<T>,
    dataset: &Dataset,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<History> {
    config.validate()?;
    let mut history = History::default();
    if config.epochs == 0 {
        return Ok(history);
    }
    let examples = &dataset.train.examples;
    if examples.is_empty() {
        return Err(Error::arg("training split is empty"));
    }
    let adam = config.adam();
    let mut states: Vec<AdamState<T>> = model
        .params()
        .tensors()
        .iter()
        .map(|t| AdamState::new(t.shape(), adam))
        .collect();
    let mut shuffle_rng = Rng::with_stream(config.seed, streams::SHUFFLE);
    let mut dropout_rng = Rng::with_stream(config.seed, streams::DROPOUT);
    let clip = T::lit(config.clip_norm);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut best = None;

    for epoch in 1..=config.epochs {
        let start = Instant::now();
        if config.shuffle {
            shuffle_rng.shuffle(&mut order);
        }
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        let mut clipped = 0usize;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<&Example> = chunk.iter().map(|&i| &examples[i]).collect();
            let (loss, mut grads) = batch_loss(model, model.params(), &batch, Mode::Train, &mut dropout_rng)?;
            let norm = grads.global_norm();
            if !loss.is_finite() || !norm.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b + 1 });
            }
            if norm > clip {
                grads.scale(clip / norm);
                clipped += 1;
            }
            for ((p, g), st) in model.params_mut().tensors_mut().iter_mut().zip(grads.tensors()).zip(&mut states) {
                adam_step(p, g, st)?;
            }
            history.steps += 1;
            loss_sum += loss.as_f64();
            batches += 1;
        }
        let mut record = EpochRecord {
            epoch,
            train_loss: loss_sum / batches as f64,
            dev_accuracy: None,
            dev_loss: None,
            seconds: 0.0,
            clipped_batches: clipped,
        };
        let due = epoch % config.eval_every == 0 || epoch == config.epochs;
        if due && !dataset.dev.is_empty() {
            let m = evaluate(model, &dataset.dev.examples)?;
            record.dev_accuracy = Some(m.accuracy);
            record.dev_loss = Some(m.loss);
            if history.best_dev_accuracy.is_none_or(|b| m.accuracy > b) {
                history.best_dev_accuracy = Some(m.accuracy);
                history.best_epoch = Some(epoch);
                best = Some(model.params().clone());
            }
        }
        record.seconds = start.elapsed().as_secs_f64();
        on_epoch(&record);
        history.epochs.push(record);
    }
    if let Some(params) = best {
        *model.params_mut() = params;
    } else {
        history.best_epoch = Some(config.epochs);
    }
    Ok(history)
}
