use super::train::{EpochRecord, TrainConfig};
use super::{GradientVector, ModelParams};
use crate::error::{Error, Result};

/// Momentum buffer, one entry per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Velocity(pub Vec<f64>);

impl Velocity {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }
}

/// Classic momentum with L2 decay folded into the gradient:
/// `v ← μ·v − lr·(g + 2·λ·w)`, `w ← w + v`.
pub fn sgd_momentum_step(
    params: &mut [f64],
    grads: &[f64],
    velocity: &mut Velocity,
    lr: f64,
    momentum: f64,
    l2_coeff: f64,
) -> Result<()> {
    if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFinite(format!(
            "gradient coordinate {i} is {}",
            grads[i]
        )));
    }
    for ((w, &g), v) in params.iter_mut().zip(grads).zip(velocity.0.iter_mut()) {
        *v = momentum * *v - lr * (g + 2.0 * l2_coeff * *w);
        *w += *v;
    }
    Ok(())
}

impl ModelParams {
    pub fn apply_step(
        &mut self,
        grads: &GradientVector,
        velocity: &mut Velocity,
        lr: f64,
        cfg: &TrainConfig,
    ) -> Result<()> {
        sgd_momentum_step(
            self.values_mut(),
            grads.combined(),
            velocity,
            lr,
            cfg.momentum,
            cfg.l2_coeff,
        )?;
        if !self.is_finite() {
            return Err(Error::NonFinite("parameters diverged".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrDecision {
    pub lr: f64,
    pub reduced: bool,
    pub stop: bool,
}

/// Reduce-on-plateau over validation accuracy.
///
/// An epoch counts as an improvement when its accuracy beats the best so far
/// by more than `min_delta`. After `patience` epochs without improvement the
/// rate is divided by the decay factor (clamped at the floor) and the counter
/// resets; a plateau that happens at the floor ends training.
#[derive(Debug, Clone)]
pub struct PlateauScheduler {
    lr: f64,
    floor: f64,
    factor: f64,
    patience: usize,
    min_delta: f64,
    best: f64,
    wait: usize,
}

impl PlateauScheduler {
    pub fn new(cfg: &TrainConfig) -> Self {
        Self {
            lr: cfg.initial_lr,
            floor: cfg.lr_floor,
            factor: cfg.lr_decay_factor,
            patience: cfg.plateau_patience,
            min_delta: cfg.min_delta,
            best: f64::NEG_INFINITY,
            wait: 0,
        }
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    fn at_floor(&self) -> bool {
        self.lr <= self.floor * (1.0 + 1e-9)
    }

    pub fn observe(&mut self, val_acc: f64) -> LrDecision {
        if val_acc > self.best + self.min_delta {
            self.best = val_acc;
            self.wait = 0;
        } else {
            self.wait += 1;
        }
        let mut decision = LrDecision {
            lr: self.lr,
            reduced: false,
            stop: false,
        };
        if self.wait >= self.patience {
            if self.at_floor() {
                decision.stop = true;
            } else {
                self.lr = (self.lr / self.factor).max(self.floor);
                self.wait = 0;
                decision.lr = self.lr;
                decision.reduced = true;
            }
        }
        decision
    }
}

/// Replays the plateau rule over a completed history and returns the rate
/// for the next epoch.
pub fn lr_schedule(history: &[EpochRecord], cfg: &TrainConfig) -> Result<LrDecision> {
    if history.is_empty() {
        return Err(Error::Empty("learning-rate history".into()));
    }
    let mut sched = PlateauScheduler::new(cfg);
    let mut last = None;
    for rec in history {
        last = Some(sched.observe(rec.val_acc));
    }
    Ok(last.expect("nonempty"))
}
