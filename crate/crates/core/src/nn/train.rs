use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::network::{backward_into, forward, Mode};
use super::optim::{PlateauScheduler, Velocity};
use super::{GradientVector, ModelParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub momentum: f64,
    pub initial_lr: f64,
    pub lr_floor: f64,
    pub lr_decay_factor: f64,
    pub l2_coeff: f64,
    pub dropout_rate: f64,
    pub plateau_patience: usize,
    /// Smallest validation-accuracy gain that counts as improvement.
    pub min_delta: f64,
    /// Hard cap on epochs in case the plateau rule never fires.
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 256,
            momentum: 0.9,
            initial_lr: 0.1,
            lr_floor: 0.001,
            lr_decay_factor: 10.0,
            l2_coeff: 1e-3,
            dropout_rate: 0.33,
            plateau_patience: 3,
            min_delta: 1e-4,
            max_epochs: 100,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.batch_size == 0 {
            return bad("batch size must be positive");
        }
        if !(self.lr_floor > 0.0 && self.lr_floor <= self.initial_lr) {
            return bad("need 0 < lr_floor <= initial_lr");
        }
        if self.lr_decay_factor <= 1.0 {
            return bad("lr decay factor must exceed 1");
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad("dropout rate must lie in [0, 1)");
        }
        if self.plateau_patience == 0 || self.max_epochs == 0 {
            return bad("patience and max_epochs must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ModelParams,
    pub history: Vec<EpochRecord>,
    pub steps: usize,
}

/// Fraction of samples whose predicted label matches the truth.
pub fn accuracy<I: AsRef<[f32]>>(model: &ModelParams, xs: &[I], ys: &[u8]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::Empty("accuracy on empty set".into()));
    }
    let mut hits = 0usize;
    for (x, &y) in xs.iter().zip(ys) {
        let cache = forward(model, x.as_ref(), Mode::Infer, 0.0)?;
        if cache.dist.predicted == usize::from(y) {
            hits += 1;
        }
    }
    Ok(hits as f64 / xs.len() as f64)
}

/// Minibatch SGD with momentum, dropout and plateau-driven learning-rate
/// decay. Runs until a plateau at the rate floor (or `max_epochs`).
pub fn train<I: AsRef<[f32]>>(
    mut model: ModelParams,
    train_x: &[I],
    train_y: &[u8],
    val_x: &[I],
    val_y: &[u8],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_x.is_empty() || val_x.is_empty() {
        return Err(Error::Empty("training and validation sets must be nonempty".into()));
    }
    if train_x.len() != train_y.len() || val_x.len() != val_y.len() {
        return Err(Error::Config("image/label count mismatch".into()));
    }
    let classes = model.arch().classes;
    if let Some(&y) = train_y.iter().chain(val_y).find(|&&y| usize::from(y) >= classes) {
        return Err(Error::Config(format!("label {y} outside 0..{classes}")));
    }

    let mut rng = crate::seed::rng(cfg.seed);
    let mut velocity = Velocity::zeros(model.len());
    let mut sched = PlateauScheduler::new(cfg);
    let mut grad = GradientVector::zeros_like(&model);
    let mut order: Vec<usize> = (0..train_x.len()).collect();
    let mut history = Vec::new();
    let mut steps = 0;
    let mut target = vec![0.0; classes];

    for epoch in 0..cfg.max_epochs {
        let lr = sched.lr();
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grad.fill_zero();
            for &i in batch {
                let x = train_x[i].as_ref();
                let cache = forward(&model, x, Mode::Train(&mut rng), cfg.dropout_rate)?;
                let y = usize::from(train_y[i]);
                loss_sum -= cache.dist.probs[y].max(1e-12).ln();
                target.iter_mut().for_each(|t| *t = 0.0);
                target[y] = 1.0;
                backward_into(&model, x, &target, &cache, &mut grad)?;
            }
            grad.scale(1.0 / batch.len() as f64);
            model.apply_step(&grad, &mut velocity, lr, cfg)?;
            steps += 1;
        }
        let train_loss = loss_sum / train_x.len() as f64;
        if !train_loss.is_finite() {
            return Err(Error::NonFinite(format!("training loss at epoch {epoch}")));
        }
        let val_acc = accuracy(&model, val_x, val_y)?;
        let rec = EpochRecord {
            epoch,
            lr,
            train_loss,
            val_acc,
        };
        on_epoch(&rec);
        history.push(rec);
        if sched.observe(val_acc).stop {
            break;
        }
    }
    Ok(TrainOutcome {
        model,
        history,
        steps,
    })
}
