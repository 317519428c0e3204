use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{dataset_accuracy, ModelError, PairClassifier, PairEncoder};
use crate::corpus::LabeledPair;

/// How long a fine-tuning stage runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// Exactly this many epochs.
    Epochs(usize),
    /// Stop once dev accuracy has not improved for `patience` epochs, then
    /// restore the best-dev parameters. `max_epochs` caps the run.
    EarlyStop { patience: usize, max_epochs: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_tokens: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub schedule: Schedule,
    pub rng_seed: u64,
    /// Rescale each batch gradient so its global L2 norm is at most this.
    #[serde(default = "default_clip")]
    pub max_grad_norm: Option<f64>,
}

fn default_clip() -> Option<f64> {
    Some(1.0)
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_tokens: 200,
            learning_rate: 2e-5,
            batch_size: 16,
            schedule: Schedule::EarlyStop {
                patience: 3,
                max_epochs: 100,
            },
            rng_seed: 0,
            max_grad_norm: default_clip(),
        }
    }
}

impl TrainConfig {
    pub fn epochs(n: usize) -> Self {
        Self {
            schedule: Schedule::Epochs(n),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.max_tokens < 2 {
            return Err(ModelError::Config("max_tokens must be at least 2".into()));
        }
        if self.batch_size == 0 {
            return Err(ModelError::Config("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(ModelError::Config("learning_rate must be positive".into()));
        }
        if let Some(c) = self.max_grad_norm {
            if !(c.is_finite() && c > 0.0) {
                return Err(ModelError::Config("max_grad_norm must be positive".into()));
            }
        }
        if let Schedule::EarlyStop { patience: 0, .. } = self.schedule {
            return Err(ModelError::Config("patience must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean training loss per epoch.
    pub train_loss: Vec<f64>,
    /// Dev accuracy per epoch; `None` when no dev set was supplied.
    pub dev_accuracy: Vec<Option<f64>>,
    pub stopped_epoch: usize,
    /// Epoch whose parameters were kept (early stopping only).
    pub best_epoch: Option<usize>,
}

/// Mini-batch SGD on cross-entropy. Dev accuracy drives early stopping when
/// the schedule asks for it.
pub fn finetune<E: PairEncoder>(
    model: PairClassifier<E>,
    train: &[LabeledPair],
    dev: Option<&[LabeledPair]>,
    cfg: &TrainConfig,
) -> Result<(PairClassifier<E>, TrainReport), ModelError> {
    if matches!(cfg.schedule, Schedule::EarlyStop { .. }) && dev.is_none() {
        return Err(ModelError::MissingDev);
    }
    let max_tokens = cfg.max_tokens;
    match dev {
        Some(dev) => finetune_with_monitor(model, train, cfg, Some(&mut |m: &PairClassifier<E>| {
            dataset_accuracy(m, dev, max_tokens)
        })),
        None => finetune_with_monitor(model, train, cfg, None),
    }
}

/// Per-epoch dev metric; higher is better.
pub type Monitor<'a, E> = &'a mut dyn FnMut(&PairClassifier<E>) -> f64;

/// Training loop with an arbitrary per-epoch dev metric.
pub fn finetune_with_monitor<E: PairEncoder>(
    mut model: PairClassifier<E>,
    train: &[LabeledPair],
    cfg: &TrainConfig,
    mut monitor: Option<Monitor<'_, E>>,
) -> Result<(PairClassifier<E>, TrainReport), ModelError> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(ModelError::EmptyTrainSet);
    }
    let (max_epochs, patience) = match cfg.schedule {
        Schedule::Epochs(n) => (n, None),
        Schedule::EarlyStop { patience, max_epochs } => {
            if monitor.is_none() {
                return Err(ModelError::MissingDev);
            }
            (max_epochs, Some(patience))
        }
    };
    let mut report = TrainReport::default();
    if max_epochs == 0 {
        return Ok((model, report));
    }

    let inputs: Vec<E::Input> = train
        .iter()
        .map(|p| model.encoder.prepare(&p.text_a, &p.text_b, cfg.max_tokens))
        .collect();
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut enc_grads = model.encoder.params().zeros_like();
    let mut head_grads = model.head.zeros_like();

    let mut best: Option<(f64, usize, PairClassifier<E>)> = None;
    let mut since_best = 0;
    for epoch in 1..=max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (batch_idx, batch) in order.chunks(cfg.batch_size).enumerate() {
            enc_grads.fill_zero();
            head_grads.fill_zero();
            let mut batch_loss = 0.0;
            for &i in batch {
                batch_loss += model.accumulate_gradient(&inputs[i], train[i].label, &mut enc_grads, &mut head_grads);
            }
            if !batch_loss.is_finite() {
                return Err(ModelError::NonFiniteLoss {
                    epoch,
                    batch: batch_idx,
                    loss: batch_loss,
                });
            }
            loss_sum += batch_loss;
            let mut step = -cfg.learning_rate / batch.len() as f64;
            if let Some(max_norm) = cfg.max_grad_norm {
                let norm = (enc_grads.squared_norm() + head_grads.squared_norm()).sqrt() / batch.len() as f64;
                if norm > max_norm {
                    step *= max_norm / norm;
                }
            }
            model.encoder.params_mut().scaled_add(step, &enc_grads);
            model.head.scaled_add(step, &head_grads);
        }
        model.epochs_trained += 1;
        report.train_loss.push(loss_sum / train.len() as f64);
        let metric = monitor.as_mut().map(|m| m(&model));
        report.dev_accuracy.push(metric);
        report.stopped_epoch = epoch;

        if let (Some(patience), Some(metric)) = (patience, metric) {
            match &best {
                Some((b, _, _)) if metric <= *b => since_best += 1,
                _ => {
                    best = Some((metric, epoch, model.clone()));
                    since_best = 0;
                }
            }
            if since_best >= patience {
                break;
            }
        }
    }
    if let Some((_, epoch, snapshot)) = best {
        report.best_epoch = Some(epoch);
        model = snapshot;
    }
    Ok((model, report))
}

/// Fine-tunes on the intermediate task for a fixed number of epochs, then on
/// the final task. All parameters stay trainable in both stages.
pub fn double_finetune<E: PairEncoder>(
    base: PairClassifier<E>,
    intermediate: &[LabeledPair],
    final_train: &[LabeledPair],
    final_dev: Option<&[LabeledPair]>,
    cfg_mid: &TrainConfig,
    cfg_final: &TrainConfig,
) -> Result<(PairClassifier<E>, [TrainReport; 2]), ModelError> {
    if intermediate.is_empty() {
        return Err(ModelError::EmptyIntermediate);
    }
    if !matches!(cfg_mid.schedule, Schedule::Epochs(_)) {
        return Err(ModelError::IntermediateNeedsEpochs);
    }
    if final_train.is_empty() {
        return Err(ModelError::EmptyTrainSet);
    }
    let (mid, mid_report) = finetune(base, intermediate, None, cfg_mid)?;
    let (fin, fin_report) = finetune(mid, final_train, final_dev, cfg_final)?;
    Ok((fin, [mid_report, fin_report]))
}
