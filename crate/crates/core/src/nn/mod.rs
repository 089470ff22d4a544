//! Fixed-architecture CNN with exact forward and backward passes.
//!
//! Layer chain: conv1 → leaky ReLU → 2×2 max pool → dropout → conv2 → leaky
//! ReLU → 2×2 max pool → conv3 → dropout → flatten → dense → softmax. All
//! convolutions are 3×3, stride 1, no padding; pooling floors odd sizes. For
//! 28×28 inputs the spatial chain is 28→26→13→11→5→3 and the flattened
//! feature count is 3·3·16 = 144.

mod network;
mod optim;
mod train;

use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use network::{forward, forward_with_masks, backward, leaky_relu, nll_at_predicted, softmax, ActivationCache, ClassDistribution, DropoutMasks, Mode};
pub use optim::{lr_schedule, sgd_momentum_step, LrDecision, PlateauScheduler, Velocity};
pub use train::{accuracy, train, EpochRecord, TrainConfig, TrainOutcome};

use crate::error::{Error, Result};

pub const LAYER_NAMES: [&str; 4] = ["conv1", "conv2", "conv3", "dense"];
pub const KERNEL: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_side: usize,
    pub filters: usize,
    pub classes: usize,
}

impl Default for Architecture {
    fn default() -> Self {
        Self::standard()
    }
}

impl Architecture {
    /// 28×28 input, 16 filters per conv layer, 10 classes.
    pub const fn standard() -> Self {
        Self {
            input_side: 28,
            filters: 16,
            classes: 10,
        }
    }

    /// Spatial sides: input, conv1, pool1, conv2, pool2, conv3.
    pub fn spatial_chain(&self) -> [usize; 6] {
        let s0 = self.input_side;
        let s1 = s0.saturating_sub(KERNEL - 1);
        let s2 = s1 / 2;
        let s3 = s2.saturating_sub(KERNEL - 1);
        let s4 = s3 / 2;
        let s5 = s4.saturating_sub(KERNEL - 1);
        [s0, s1, s2, s3, s4, s5]
    }

    pub fn validate(&self) -> Result<()> {
        if self.filters == 0 || self.classes < 2 {
            return Err(Error::Config(format!("degenerate architecture {self:?}")));
        }
        // smallest side whose conv3 output is at least 1×1
        if self.input_side < 18 {
            return Err(Error::Config(format!(
                "input side {} too small; the conv/pool chain needs at least 18",
                self.input_side
            )));
        }
        Ok(())
    }

    pub fn input_len(&self) -> usize {
        self.input_side * self.input_side
    }

    pub fn flatten_len(&self) -> usize {
        let s = self.spatial_chain()[5];
        s * s * self.filters
    }

    pub fn layout(&self) -> ParamLayout {
        let k2 = KERNEL * KERNEL;
        let f = self.filters;
        let shapes = [
            (k2, f, LayerKind::Conv { in_channels: 1 }),
            (k2 * f, f, LayerKind::Conv { in_channels: f }),
            (k2 * f, f, LayerKind::Conv { in_channels: f }),
            (self.flatten_len(), self.classes, LayerKind::Dense),
        ];
        let mut offset = 0;
        let slots = shapes
            .iter()
            .zip(LAYER_NAMES)
            .map(|(&(fan_in, outputs, kind), name)| {
                let weights = offset..offset + fan_in * outputs;
                let biases = weights.end..weights.end + outputs;
                offset = biases.end;
                LayerSlot {
                    name,
                    kind,
                    fan_in,
                    outputs,
                    weights,
                    biases,
                }
            })
            .collect();
        ParamLayout { slots, len: offset }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Conv { in_channels: usize },
    Dense,
}

/// Position of one weight-bearing layer inside the flat parameter vector.
/// Weights come first, then biases, so `segment()` is contiguous.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerSlot {
    pub name: &'static str,
    pub kind: LayerKind,
    pub fan_in: usize,
    pub outputs: usize,
    pub weights: Range<usize>,
    pub biases: Range<usize>,
}

impl LayerSlot {
    pub fn fan_out(&self) -> usize {
        match self.kind {
            LayerKind::Conv { .. } => self.outputs * KERNEL * KERNEL,
            LayerKind::Dense => self.outputs,
        }
    }

    pub fn init_bound(&self) -> f64 {
        (6.0 / (self.fan_in + self.fan_out()) as f64).sqrt()
    }

    pub fn segment(&self) -> Range<usize> {
        self.weights.start..self.biases.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamLayout {
    pub slots: Vec<LayerSlot>,
    pub len: usize,
}

/// All trainable parameters as one flat vector `w ∈ ℝᵖ`.
///
/// Conv weights are stored `[out][in][ky][kx]`, dense weights `[feature][class]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    arch: Architecture,
    layout: ParamLayout,
    values: Vec<f64>,
}

impl ModelParams {
    pub fn zeros(arch: Architecture) -> Result<Self> {
        arch.validate()?;
        let layout = arch.layout();
        Ok(Self {
            arch,
            values: vec![0.0; layout.len],
            layout,
        })
    }

    pub fn from_values(arch: Architecture, values: Vec<f64>) -> Result<Self> {
        let mut m = Self::zeros(arch)?;
        if values.len() != m.values.len() {
            return Err(Error::Format(format!(
                "expected {} parameters, got {}",
                m.values.len(),
                values.len()
            )));
        }
        m.values = values;
        Ok(m)
    }

    /// Glorot-uniform init: weights in ±√(6/(fan_in+fan_out)), biases zero.
    ///
    /// The He bound √(6/fan_in) diverges under the lr 0.1 / momentum 0.9
    /// schedule, so the narrower Glorot bound is used.
    pub fn init(arch: Architecture, seed: u64) -> Result<Self> {
        let mut m = Self::zeros(arch)?;
        let mut rng = crate::seed::rng(seed);
        for slot in &m.layout.slots {
            let bound = slot.init_bound();
            for w in &mut m.values[slot.weights.clone()] {
                *w = rng.random_range(-bound..=bound);
            }
        }
        Ok(m)
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn slot(&self, layer: usize) -> &LayerSlot {
        &self.layout.slots[layer]
    }

    pub fn weights(&self, layer: usize) -> &[f64] {
        &self.values[self.layout.slots[layer].weights.clone()]
    }

    pub fn biases(&self, layer: usize) -> &[f64] {
        &self.values[self.layout.slots[layer].biases.clone()]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Cheap order-sensitive fingerprint of the parameter bits.
    pub fn fingerprint(&self) -> u64 {
        self.values.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, v| {
            (h ^ v.to_bits()).wrapping_mul(0x0100_0000_01b3).rotate_left(5)
        })
    }
}

/// Gradient of the loss with respect to every parameter, laid out like
/// [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector {
    layout: ParamLayout,
    values: Vec<f64>,
}

impl GradientVector {
    pub fn zeros_like(model: &ModelParams) -> Self {
        Self {
            layout: model.layout.clone(),
            values: vec![0.0; model.len()],
        }
    }

    pub fn combined(&self) -> &[f64] {
        &self.values
    }

    pub fn combined_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn layer(&self, layer: usize) -> &[f64] {
        &self.values[self.layout.slots[layer].segment()]
    }

    pub fn layer_biases(&self, layer: usize) -> &[f64] {
        &self.values[self.layout.slots[layer].biases.clone()]
    }

    pub fn per_layer(&self) -> impl Iterator<Item = (&'static str, &[f64])> {
        self.layout
            .slots
            .iter()
            .map(|s| (s.name, &self.values[s.segment()]))
    }

    pub fn n_layers(&self) -> usize {
        self.layout.slots.len()
    }

    pub fn add_assign(&mut self, other: &GradientVector) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for a in &mut self.values {
            *a *= factor;
        }
    }

    pub fn fill_zero(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }
}
