use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::image::{Image28, PIXELS};
use super::{ConceptTag, LabeledSet};
use crate::error::{Error, Result};

pub const NORMAL_MEAN: f64 = 0.5;
pub const NORMAL_SD: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    /// i.i.d. U[0, 1] pixels.
    Uniform,
    /// i.i.d. N(0.5, 0.25²) pixels clipped to [0, 1].
    Normal,
}

impl NoiseKind {
    pub fn concept(&self) -> ConceptTag {
        match self {
            NoiseKind::Uniform => ConceptTag::UniformNoise,
            NoiseKind::Normal => ConceptTag::NormalNoise,
        }
    }
}

pub fn gen_noise(kind: NoiseKind, n: usize, seed: u64) -> Result<LabeledSet> {
    if n == 0 {
        return Err(Error::Empty("noise set of size 0".into()));
    }
    let mut rng = crate::seed::rng(seed);
    let normal = Normal::new(NORMAL_MEAN, NORMAL_SD).expect("valid parameters");
    let images = (0..n)
        .map(|_| {
            let px: Vec<f32> = (0..PIXELS)
                .map(|_| match kind {
                    NoiseKind::Uniform => rng.random::<f32>(),
                    NoiseKind::Normal => normal.sample(&mut rng).clamp(0.0, 1.0) as f32,
                })
                .collect();
            Image28::new(px).expect("noise stays in range")
        })
        .collect();
    Ok(LabeledSet::unlabeled(kind.concept(), images))
}
