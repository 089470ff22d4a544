use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{GradientVector, ModelParams, KERNEL};
use crate::error::{Error, Result};

const LEAK: f64 = 0.1;
const PROB_FLOOR: f64 = 1e-12;

/// Leaky ReLU with slope 0.1 on the negative side; returns 0 at 0.
pub fn leaky_relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else if x < 0.0 {
        LEAK * x
    } else {
        0.0
    }
}

fn leaky_relu_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        LEAK
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= sum);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassDistribution {
    pub probs: Vec<f64>,
    pub predicted: usize,
}

impl ClassDistribution {
    /// Argmax with ties going to the lowest index.
    pub fn new(probs: Vec<f64>) -> Self {
        let mut predicted = 0;
        for (k, &p) in probs.iter().enumerate() {
            if p > probs[predicted] {
                predicted = k;
            }
        }
        Self { probs, predicted }
    }

    pub fn max_prob(&self) -> f64 {
        self.probs[self.predicted]
    }

    /// One-hot encoding of the predicted label.
    pub fn one_hot(&self) -> Vec<f64> {
        let mut t = vec![0.0; self.probs.len()];
        t[self.predicted] = 1.0;
        t
    }
}

/// `−log f(ŷ|x,w)`, with the probability clamped at 1e-12.
pub fn nll_at_predicted(dist: &ClassDistribution) -> f64 {
    -dist.max_prob().max(PROB_FLOOR).ln()
}

pub enum Mode<'a> {
    Infer,
    Train(&'a mut ChaCha8Rng),
}

/// Inverted-dropout masks (entries 0 or 1/(1−rate)) after pool1 and conv3.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMasks {
    pub after_pool1: Vec<f64>,
    pub after_conv3: Vec<f64>,
}

impl DropoutMasks {
    pub fn sample(model: &ModelParams, rate: f64, rng: &mut ChaCha8Rng) -> Self {
        let arch = model.arch();
        let chain = arch.spatial_chain();
        let keep = 1.0 / (1.0 - rate);
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep })
                .collect()
        };
        let after_pool1 = draw(arch.filters * chain[2] * chain[2]);
        let after_conv3 = draw(arch.filters * chain[5] * chain[5]);
        Self {
            after_pool1,
            after_conv3,
        }
    }
}

/// Everything backward needs, recorded during forward.
#[derive(Debug, Clone)]
pub struct ActivationCache {
    fingerprint: u64,
    input: Vec<f64>,
    z1: Vec<f64>,
    arg1: Vec<usize>,
    x2: Vec<f64>,
    z2: Vec<f64>,
    arg2: Vec<usize>,
    p2: Vec<f64>,
    flat: Vec<f64>,
    masks: Option<DropoutMasks>,
    pub dist: ClassDistribution,
}

impl ActivationCache {
    pub fn masks(&self) -> Option<&DropoutMasks> {
        self.masks.as_ref()
    }
}

fn conv_forward(
    input: &[f64],
    in_ch: usize,
    side: usize,
    weights: &[f64],
    biases: &[f64],
    out: &mut [f64],
) {
    let out_side = side - (KERNEL - 1);
    let plane = out_side * out_side;
    for (o, bias) in biases.iter().enumerate() {
        let dst = &mut out[o * plane..(o + 1) * plane];
        dst.iter_mut().for_each(|v| *v = *bias);
        for i in 0..in_ch {
            let src = &input[i * side * side..(i + 1) * side * side];
            let kern = &weights[(o * in_ch + i) * KERNEL * KERNEL..][..KERNEL * KERNEL];
            for ky in 0..KERNEL {
                for kx in 0..KERNEL {
                    let w = kern[ky * KERNEL + kx];
                    for y in 0..out_side {
                        let s = &src[(y + ky) * side + kx..][..out_side];
                        let d = &mut dst[y * out_side..][..out_side];
                        for (dv, sv) in d.iter_mut().zip(s) {
                            *dv += w * sv;
                        }
                    }
                }
            }
        }
    }
}

/// Accumulates weight/bias gradients and, when `d_input` is given, the input
/// gradient of a valid 3×3 convolution.
#[allow(clippy::too_many_arguments)]
fn conv_backward(
    input: &[f64],
    in_ch: usize,
    side: usize,
    weights: &[f64],
    d_out: &[f64],
    d_weights: &mut [f64],
    d_biases: &mut [f64],
    mut d_input: Option<&mut [f64]>,
) {
    let out_side = side - (KERNEL - 1);
    let plane = out_side * out_side;
    for (o, db) in d_biases.iter_mut().enumerate() {
        let g = &d_out[o * plane..(o + 1) * plane];
        *db += g.iter().sum::<f64>();
        for i in 0..in_ch {
            let src = &input[i * side * side..(i + 1) * side * side];
            let base = (o * in_ch + i) * KERNEL * KERNEL;
            for ky in 0..KERNEL {
                for kx in 0..KERNEL {
                    let mut acc = 0.0;
                    for y in 0..out_side {
                        let s = &src[(y + ky) * side + kx..][..out_side];
                        let gr = &g[y * out_side..][..out_side];
                        acc += s.iter().zip(gr).map(|(a, b)| a * b).sum::<f64>();
                    }
                    d_weights[base + ky * KERNEL + kx] += acc;
                }
            }
            if let Some(d_in) = d_input.as_deref_mut() {
                let dst = &mut d_in[i * side * side..(i + 1) * side * side];
                for ky in 0..KERNEL {
                    for kx in 0..KERNEL {
                        let w = weights[base + ky * KERNEL + kx];
                        for y in 0..out_side {
                            let gr = &g[y * out_side..][..out_side];
                            let d = &mut dst[(y + ky) * side + kx..][..out_side];
                            for (dv, gv) in d.iter_mut().zip(gr) {
                                *dv += w * gv;
                            }
                        }
                    }
                }
            }
        }
    }
}

/// 2×2 stride-2 max pooling with floor on odd sides. Records the flat index
/// of each window's maximum (first in row-major order on ties).
fn max_pool(input: &[f64], channels: usize, side: usize) -> (Vec<f64>, Vec<usize>) {
    let out_side = side / 2;
    let mut out = Vec::with_capacity(channels * out_side * out_side);
    let mut arg = Vec::with_capacity(out.capacity());
    for c in 0..channels {
        let base = c * side * side;
        for y in 0..out_side {
            for x in 0..out_side {
                let mut best = base + 2 * y * side + 2 * x;
                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                    let idx = base + (2 * y + dy) * side + 2 * x + dx;
                    if input[idx] > input[best] {
                        best = idx;
                    }
                }
                out.push(input[best]);
                arg.push(best);
            }
        }
    }
    (out, arg)
}

fn to_f64(input: &[f32]) -> Vec<f64> {
    input.iter().map(|&v| f64::from(v)).collect()
}

/// Runs the network on one image. In train mode dropout masks are drawn
/// from the supplied rng; in infer mode dropout is the identity.
pub fn forward(
    model: &ModelParams,
    input: &[f32],
    mode: Mode<'_>,
    dropout_rate: f64,
) -> Result<ActivationCache> {
    let masks = match mode {
        Mode::Infer => None,
        Mode::Train(rng) => Some(DropoutMasks::sample(model, dropout_rate, rng)),
    };
    forward_with_masks(model, input, masks)
}

/// Forward pass with explicit dropout masks (`None` = inference).
pub fn forward_with_masks(
    model: &ModelParams,
    input: &[f32],
    masks: Option<DropoutMasks>,
) -> Result<ActivationCache> {
    let arch = *model.arch();
    if input.len() != arch.input_len() {
        return Err(Error::InputShape {
            expected: arch.input_len(),
            found: input.len(),
        });
    }
    let [s0, s1, s2, s3, _s4, s5] = arch.spatial_chain();
    let f = arch.filters;
    let x = to_f64(input);

    let mut z1 = vec![0.0; f * s1 * s1];
    conv_forward(&x, 1, s0, model.weights(0), model.biases(0), &mut z1);
    let a1: Vec<f64> = z1.iter().map(|&v| leaky_relu(v)).collect();
    let (mut x2, arg1) = max_pool(&a1, f, s1);
    if let Some(m) = &masks {
        x2.iter_mut()
            .zip(&m.after_pool1)
            .for_each(|(v, k)| *v *= k);
    }

    let mut z2 = vec![0.0; f * s3 * s3];
    conv_forward(&x2, f, s2, model.weights(1), model.biases(1), &mut z2);
    let a2: Vec<f64> = z2.iter().map(|&v| leaky_relu(v)).collect();
    let (p2, arg2) = max_pool(&a2, f, s3);

    let mut flat = vec![0.0; f * s5 * s5];
    conv_forward(&p2, f, arch.spatial_chain()[4], model.weights(2), model.biases(2), &mut flat);
    if let Some(m) = &masks {
        flat.iter_mut()
            .zip(&m.after_conv3)
            .for_each(|(v, k)| *v *= k);
    }

    let classes = arch.classes;
    let dense_w = model.weights(3);
    let mut logits = model.biases(3).to_vec();
    for (j, &h) in flat.iter().enumerate() {
        let row = &dense_w[j * classes..(j + 1) * classes];
        for (l, w) in logits.iter_mut().zip(row) {
            *l += h * w;
        }
    }
    let dist = ClassDistribution::new(softmax(&logits));

    Ok(ActivationCache {
        fingerprint: model.fingerprint(),
        input: x,
        z1,
        arg1,
        x2,
        z2,
        arg2,
        p2,
        flat,
        masks,
        dist,
    })
}

/// Exact gradient of `−Σ target_k log p_k` with respect to every parameter.
/// `target` must sum to 1 (one-hot in practice). No regularization term.
pub fn backward(
    model: &ModelParams,
    input: &[f32],
    target: &[f64],
    cache: &ActivationCache,
) -> Result<GradientVector> {
    let mut grad = GradientVector::zeros_like(model);
    backward_into(model, input, target, cache, &mut grad)?;
    Ok(grad)
}

/// Like [`backward`] but accumulates into an existing gradient buffer.
pub(crate) fn backward_into(
    model: &ModelParams,
    input: &[f32],
    target: &[f64],
    cache: &ActivationCache,
    grad: &mut GradientVector,
) -> Result<()> {
    let arch = *model.arch();
    if cache.fingerprint != model.fingerprint()
        || input.len() != cache.input.len()
        || input.iter().zip(&cache.input).any(|(&a, &b)| f64::from(a) != b)
        || target.len() != arch.classes
    {
        return Err(Error::CacheMismatch);
    }
    let [_s0, s1, s2, s3, s4, _s5] = arch.spatial_chain();
    let f = arch.filters;
    let classes = arch.classes;
    let layout = model.layout().clone();
    let g = grad.combined_mut();

    // dense
    let d_logits: Vec<f64> = cache
        .dist
        .probs
        .iter()
        .zip(target)
        .map(|(p, t)| p - t)
        .collect();
    let dense = &layout.slots[3];
    let dense_w = model.weights(3);
    let mut d_flat = vec![0.0; cache.flat.len()];
    {
        let (dw, db) = split_slot(g, dense);
        for (j, &h) in cache.flat.iter().enumerate() {
            let row = &mut dw[j * classes..(j + 1) * classes];
            let wrow = &dense_w[j * classes..(j + 1) * classes];
            let mut acc = 0.0;
            for k in 0..classes {
                row[k] += h * d_logits[k];
                acc += wrow[k] * d_logits[k];
            }
            d_flat[j] = acc;
        }
        for (b, d) in db.iter_mut().zip(&d_logits) {
            *b += d;
        }
    }
    if let Some(m) = &cache.masks {
        d_flat.iter_mut().zip(&m.after_conv3).for_each(|(v, k)| *v *= k);
    }

    // conv3 (linear)
    let mut d_p2 = vec![0.0; cache.p2.len()];
    {
        let (dw, db) = split_slot(g, &layout.slots[2]);
        conv_backward(&cache.p2, f, s4, model.weights(2), &d_flat, dw, db, Some(&mut d_p2));
    }

    // pool2 + leaky relu
    let mut d_z2 = vec![0.0; cache.z2.len()];
    for (&idx, &d) in cache.arg2.iter().zip(&d_p2) {
        d_z2[idx] += d;
    }
    d_z2.iter_mut()
        .zip(&cache.z2)
        .for_each(|(d, &z)| *d *= leaky_relu_grad(z));

    // conv2
    let mut d_x2 = vec![0.0; cache.x2.len()];
    {
        let (dw, db) = split_slot(g, &layout.slots[1]);
        conv_backward(&cache.x2, f, s2, model.weights(1), &d_z2, dw, db, Some(&mut d_x2));
    }
    if let Some(m) = &cache.masks {
        d_x2.iter_mut().zip(&m.after_pool1).for_each(|(v, k)| *v *= k);
    }

    // pool1 + leaky relu
    let mut d_z1 = vec![0.0; cache.z1.len()];
    for (&idx, &d) in cache.arg1.iter().zip(&d_x2) {
        d_z1[idx] += d;
    }
    d_z1.iter_mut()
        .zip(&cache.z1)
        .for_each(|(d, &z)| *d *= leaky_relu_grad(z));

    // conv1
    let (dw, db) = split_slot(g, &layout.slots[0]);
    conv_backward(&cache.input, 1, arch.input_side, model.weights(0), &d_z1, dw, db, None);
    debug_assert_eq!(s1 / 2, s2);
    debug_assert_eq!(s3 / 2, s4);
    Ok(())
}

fn split_slot<'a>(g: &'a mut [f64], slot: &super::LayerSlot) -> (&'a mut [f64], &'a mut [f64]) {
    let seg = &mut g[slot.segment()];
    seg.split_at_mut(slot.weights.len())
}
