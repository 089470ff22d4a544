//! One-hidden-layer meta-classifier: standardized features → 15 ReLU → 2-way
//! softmax, trained with the same SGD/momentum/plateau recipe as the CNNs.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use super::logistic::Standardizer;
use crate::container::{Chunk, Container, Tensor};
use crate::error::{Error, Result};
use crate::nn::{sgd_momentum_step, PlateauScheduler, TrainConfig, Velocity};

pub const HIDDEN: usize = 15;
const OUTPUTS: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct MlpMetaModel {
    pub standardization: Standardizer,
    /// `[hidden × inputs]` row-major, then hidden biases, then
    /// `[2 × hidden]`, then output biases.
    pub params: Vec<f64>,
    pub epochs: usize,
}

struct Shape {
    inputs: usize,
}

impl Shape {
    fn len(&self) -> usize {
        HIDDEN * self.inputs + HIDDEN + OUTPUTS * HIDDEN + OUTPUTS
    }

    fn split<'a>(&self, p: &'a [f64]) -> (&'a [f64], &'a [f64], &'a [f64], &'a [f64]) {
        let (w1, rest) = p.split_at(HIDDEN * self.inputs);
        let (b1, rest) = rest.split_at(HIDDEN);
        let (w2, b2) = rest.split_at(OUTPUTS * HIDDEN);
        (w1, b1, w2, b2)
    }
}

struct Forward {
    hidden: [f64; HIDDEN],
    probs: [f64; OUTPUTS],
}

fn forward(shape: &Shape, p: &[f64], z: &[f64]) -> Forward {
    let (w1, b1, w2, b2) = shape.split(p);
    let mut hidden = [0.0; HIDDEN];
    for (h, out) in hidden.iter_mut().enumerate() {
        let row = &w1[h * shape.inputs..(h + 1) * shape.inputs];
        let a: f64 = b1[h] + row.iter().zip(z).map(|(w, x)| w * x).sum::<f64>();
        *out = a.max(0.0);
    }
    let mut logits = [0.0; OUTPUTS];
    for (k, l) in logits.iter_mut().enumerate() {
        *l = b2[k] + w2[k * HIDDEN..(k + 1) * HIDDEN].iter().zip(&hidden).map(|(w, h)| w * h).sum::<f64>();
    }
    let m = logits[0].max(logits[1]);
    let e = [(logits[0] - m).exp(), (logits[1] - m).exp()];
    let s = e[0] + e[1];
    Forward {
        hidden,
        probs: [e[0] / s, e[1] / s],
    }
}

/// Accumulates the cross-entropy gradient of one sample into `g`.
fn backward(shape: &Shape, p: &[f64], z: &[f64], fwd: &Forward, label: bool, g: &mut [f64]) {
    let (_, _, w2, _) = shape.split(p);
    let target = [f64::from(u8::from(!label)), f64::from(u8::from(label))];
    let d_out = [fwd.probs[0] - target[0], fwd.probs[1] - target[1]];
    let n_w1 = HIDDEN * shape.inputs;
    let off_w2 = n_w1 + HIDDEN;
    let off_b2 = off_w2 + OUTPUTS * HIDDEN;
    for k in 0..OUTPUTS {
        g[off_b2 + k] += d_out[k];
        for h in 0..HIDDEN {
            g[off_w2 + k * HIDDEN + h] += d_out[k] * fwd.hidden[h];
        }
    }
    for h in 0..HIDDEN {
        if fwd.hidden[h] <= 0.0 {
            continue;
        }
        let d = d_out[0] * w2[h] + d_out[1] * w2[HIDDEN + h];
        g[n_w1 + h] += d;
        for (gi, x) in g[h * shape.inputs..(h + 1) * shape.inputs].iter_mut().zip(z) {
            *gi += d * x;
        }
    }
}

impl MlpMetaModel {
    fn shape(&self) -> Shape {
        Shape {
            inputs: self.standardization.n_kept(),
        }
    }

    /// `[P(negative), P(positive)]` for one raw feature row.
    pub fn probabilities(&self, row: &[f64]) -> [f64; 2] {
        let z = self.standardization.transform(row);
        forward(&self.shape(), &self.params, &z).probs
    }

    /// Meta-classifier score: probability of the positive (correct) class.
    pub fn score(&self, row: &[f64]) -> f64 {
        self.probabilities(row)[1]
    }

    pub fn to_container(&self) -> Container {
        let s = &self.standardization;
        let as_f64 = |v: &[usize]| v.iter().map(|&i| i as f64).collect::<Vec<_>>();
        let mut c = Container::new();
        c.push("params", Chunk::Tensor(Tensor::vector(self.params.clone())))
            .push("std_kept", Chunk::Tensor(Tensor::vector(as_f64(&s.kept))))
            .push("std_mean", Chunk::Tensor(Tensor::vector(s.mean.clone())))
            .push("std_sd", Chunk::Tensor(Tensor::vector(s.sd.clone())))
            .push("std_dropped", Chunk::Tensor(Tensor::vector(as_f64(&s.dropped))))
            .push(
                "meta",
                Chunk::Tensor(Tensor::vector(vec![s.n_inputs as f64, self.epochs as f64])),
            );
        c
    }

    pub fn from_container(c: &Container) -> Result<Self> {
        let idx = |name: &str| -> Result<Vec<usize>> {
            Ok(c.tensor(name)?.values.iter().map(|&v| v as usize).collect())
        };
        let meta = &c.tensor("meta")?.values;
        if meta.len() != 2 {
            return Err(Error::Format("meta-model header".into()));
        }
        let standardization = Standardizer {
            kept: idx("std_kept")?,
            mean: c.tensor("std_mean")?.values.clone(),
            sd: c.tensor("std_sd")?.values.clone(),
            dropped: idx("std_dropped")?,
            n_inputs: meta[0] as usize,
        };
        let model = MlpMetaModel {
            standardization,
            params: c.tensor("params")?.values.clone(),
            epochs: meta[1] as usize,
        };
        let s = &model.standardization;
        if model.params.len() != model.shape().len() || s.mean.len() != s.kept.len() || s.sd.len() != s.kept.len() {
            return Err(Error::Format("meta-model tensor sizes disagree".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_container().write(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_container(&Container::read(path)?)
    }
}

/// Fits the meta MLP. A seeded 90/10 split of the rows drives plateau
/// detection; `cfg` supplies batch size, momentum, rates and L2 (its
/// dropout rate is ignored).
pub fn fit_mlp_meta_with(rows: &[Vec<f64>], labels: &[bool], seed: u64, cfg: &TrainConfig) -> Result<MlpMetaModel> {
    cfg.validate()?;
    if rows.len() != labels.len() {
        return Err(Error::Config("feature/label count mismatch".into()));
    }
    let n_pos = labels.iter().filter(|&&b| b).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateClasses { n_pos, n_neg });
    }
    let standardization = Standardizer::fit(rows)?;
    let z: Vec<Vec<f64>> = rows.iter().map(|r| standardization.transform(r)).collect();
    let shape = Shape {
        inputs: standardization.n_kept(),
    };

    let mut rng = crate::seed::rng(seed);
    let mut params = vec![0.0; shape.len()];
    let b1 = (6.0 / (shape.inputs + HIDDEN) as f64).sqrt();
    let b2 = (6.0 / (HIDDEN + OUTPUTS) as f64).sqrt();
    let n_w1 = HIDDEN * shape.inputs;
    for w in &mut params[..n_w1] {
        *w = rng.random_range(-b1..=b1);
    }
    for w in &mut params[n_w1 + HIDDEN..n_w1 + HIDDEN + OUTPUTS * HIDDEN] {
        *w = rng.random_range(-b2..=b2);
    }

    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.shuffle(&mut rng);
    let n_val = (rows.len() / 10).max(1).min(rows.len() - 1);
    let (val_idx, train_idx) = order.split_at(n_val);
    let mut train_idx = train_idx.to_vec();

    let accuracy = |p: &[f64]| {
        let hits = val_idx
            .iter()
            .filter(|&&i| (forward(&shape, p, &z[i]).probs[1] >= 0.5) == labels[i])
            .count();
        hits as f64 / val_idx.len() as f64
    };

    let mut velocity = Velocity::zeros(params.len());
    let mut sched = PlateauScheduler::new(cfg);
    let mut grad = vec![0.0; params.len()];
    let mut epochs = 0;
    for _ in 0..cfg.max_epochs {
        epochs += 1;
        let lr = sched.lr();
        train_idx.shuffle(&mut rng);
        for batch in train_idx.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for &i in batch {
                let fwd = forward(&shape, &params, &z[i]);
                backward(&shape, &params, &z[i], &fwd, labels[i], &mut grad);
            }
            let inv = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= inv);
            sgd_momentum_step(&mut params, &grad, &mut velocity, lr, cfg.momentum, cfg.l2_coeff)?;
        }
        if !params.iter().all(|p| p.is_finite()) {
            return Err(Error::NonFinite("meta-classifier weights diverged".into()));
        }
        if sched.observe(accuracy(&params)).stop {
            break;
        }
    }
    Ok(MlpMetaModel {
        standardization,
        params,
        epochs,
    })
}

pub fn fit_mlp_meta(rows: &[Vec<f64>], labels: &[bool], seed: u64) -> Result<MlpMetaModel> {
    fit_mlp_meta_with(rows, labels, seed, &TrainConfig::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<bool>) {
        let mut rng = crate::seed::rng(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n {
            let a: f64 = rng.random_range(-1.0..1.0);
            let b: f64 = rng.random_range(-1.0..1.0);
            rows.push(vec![a, b]);
            labels.push((a > 0.0) != (b > 0.0));
        }
        (rows, labels)
    }

    #[test]
    fn learns_xor() {
        let (rows, labels) = xor(2000, 3);
        let m = fit_mlp_meta(&rows, &labels, 11).unwrap();
        let acc = rows
            .iter()
            .zip(&labels)
            .filter(|(r, &l)| (m.score(r) >= 0.5) == l)
            .count() as f64
            / rows.len() as f64;
        assert!(acc > 0.9, "xor accuracy {acc}");
    }

    #[test]
    fn deterministic_and_normalized() {
        let (rows, labels) = xor(300, 5);
        let a = fit_mlp_meta(&rows, &labels, 2).unwrap();
        let b = fit_mlp_meta(&rows, &labels, 2).unwrap();
        assert_eq!(a, b);
        for r in &rows {
            let p = a.probabilities(r);
            assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
            assert!((0.0..=1.0).contains(&p[1]));
        }
    }

    #[test]
    fn analytic_gradient_matches_differences() {
        let shape = Shape { inputs: 3 };
        let mut rng = crate::seed::rng(9);
        let p: Vec<f64> = (0..shape.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let z = [0.3, -1.2, 0.7];
        let fwd = forward(&shape, &p, &z);
        let mut g = vec![0.0; p.len()];
        backward(&shape, &p, &z, &fwd, true, &mut g);
        let loss = |q: &[f64]| -forward(&shape, q, &z).probs[1].ln();
        for j in 0..p.len() {
            let mut hi = p.clone();
            let mut lo = p.clone();
            hi[j] += 1e-6;
            lo[j] -= 1e-6;
            let fd = (loss(&hi) - loss(&lo)) / 2e-6;
            assert!((fd - g[j]).abs() < 1e-6, "coord {j}: {fd} vs {}", g[j]);
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let (rows, labels) = xor(200, 1);
        let m = fit_mlp_meta(&rows, &labels, 4).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("meta.bin");
        m.save(&p).unwrap();
        assert_eq!(MlpMetaModel::load(&p).unwrap(), m);
    }
}
