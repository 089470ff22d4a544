//! Per-sample uncertainty features: entropy, the softmax baseline, and
//! statistics of the loss gradient at the predicted label, per layer and
//! over the whole network.

mod features_csv;
mod stats;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use features_csv::{read_features_csv, write_features_csv, FeatureTable};
pub use stats::{grad_stats, GradStats, STAT_NAMES};

use crate::data::{ConceptTag, LabeledSet};
use crate::error::Result;
use crate::nn::{backward, forward, ClassDistribution, GradientVector, ModelParams, Mode};

pub const SCOPES: [&str; 5] = ["conv1", "conv2", "conv3", "dense", "all"];
pub const N_FEATURES: usize = 2 + SCOPES.len() * STAT_NAMES.len();

/// Column names in storage order: entropy, softmax, then `<scope>_<stat>`.
pub fn feature_names() -> Vec<String> {
    let mut names = vec!["entropy".to_string(), "softmax".to_string()];
    for scope in SCOPES {
        for stat in STAT_NAMES {
            names.push(format!("{scope}_{stat}"));
        }
    }
    names
}

pub fn feature_index(name: &str) -> Option<usize> {
    feature_names().iter().position(|n| n == name)
}

/// Normalized Shannon entropy `−(1/log q) Σ f log f`, with `0·log 0 = 0`.
pub fn entropy(dist: &ClassDistribution) -> f64 {
    let q = dist.probs.len() as f64;
    let h: f64 = dist
        .probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum();
    (-h / q.ln()).clamp(0.0, 1.0)
}

/// Maximum class probability.
pub fn softmax_score(dist: &ClassDistribution) -> f64 {
    dist.max_prob()
}

/// Gradient of `−log f(ŷ|x,w)` at the predicted label ŷ, dropout off, no
/// regularization term.
pub fn metric_gradient(model: &ModelParams, x: &[f32]) -> Result<(ClassDistribution, GradientVector)> {
    let cache = forward(model, x, Mode::Infer, 0.0)?;
    let target = cache.dist.one_hot();
    let grad = backward(model, x, &target, &cache)?;
    Ok((cache.dist, grad))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Correctness {
    Correct,
    Incorrect,
    OutOfDistribution,
}

impl Correctness {
    pub fn as_str(&self) -> &'static str {
        match self {
            Correctness::Correct => "correct",
            Correctness::Incorrect => "incorrect",
            Correctness::OutOfDistribution => "out_of_distribution",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "correct" => Some(Correctness::Correct),
            "incorrect" => Some(Correctness::Incorrect),
            "out_of_distribution" => Some(Correctness::OutOfDistribution),
            _ => None,
        }
    }
}

/// The 37 features of one sample plus its bookkeeping labels.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricVector {
    pub sample_id: String,
    pub concept: ConceptTag,
    pub correctness: Correctness,
    pub features: [f64; N_FEATURES],
}

impl MetricVector {
    pub fn entropy(&self) -> f64 {
        self.features[0]
    }

    pub fn softmax(&self) -> f64 {
        self.features[1]
    }

    pub fn stats(&self, scope: usize) -> GradStats {
        let f = &self.features[2 + scope * 7..2 + (scope + 1) * 7];
        GradStats {
            l1: f[0],
            l2: f[1],
            min: f[2],
            max: f[3],
            mean: f[4],
            skew: f[5],
            kurt: f[6],
        }
    }
}

pub fn feature_vector(
    model: &ModelParams,
    x: &[f32],
    truth: Option<u8>,
    concept: ConceptTag,
    sample_id: impl Into<String>,
) -> Result<MetricVector> {
    let (dist, grad) = metric_gradient(model, x)?;
    let mut features = [0.0; N_FEATURES];
    features[0] = entropy(&dist);
    features[1] = softmax_score(&dist);
    let mut k = 2;
    for layer in 0..grad.n_layers() {
        features[k..k + 7].copy_from_slice(&grad_stats(grad.layer(layer))?.to_array());
        k += 7;
    }
    features[k..k + 7].copy_from_slice(&grad_stats(grad.combined())?.to_array());
    let correctness = if !concept.is_in_distribution() {
        Correctness::OutOfDistribution
    } else if truth == Some(dist.predicted as u8) {
        Correctness::Correct
    } else {
        Correctness::Incorrect
    };
    Ok(MetricVector {
        sample_id: sample_id.into(),
        concept,
        correctness,
        features,
    })
}

/// Extracts features for every sample of `set`; `ids[i]` names sample `i`.
/// Runs on the current rayon pool; output order follows the input.
pub fn extract_features(model: &ModelParams, set: &LabeledSet, ids: &[String]) -> Result<Vec<MetricVector>> {
    assert_eq!(ids.len(), set.len());
    (0..set.len())
        .into_par_iter()
        .map(|i| feature_vector(model, set.images[i].pixels(), set.label(i), set.concept, ids[i].clone()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Architecture;

    #[test]
    fn entropy_extremes() {
        assert!((entropy(&ClassDistribution::new(vec![0.1; 10])) - 1.0).abs() < 1e-12);
        let mut one_hot = vec![0.0; 10];
        one_hot[4] = 1.0;
        assert_eq!(entropy(&ClassDistribution::new(one_hot)), 0.0);
    }

    #[test]
    fn softmax_score_is_max() {
        let mut p = vec![0.0; 10];
        p[0] = 0.2;
        p[1] = 0.5;
        p[2] = 0.3;
        assert_eq!(softmax_score(&ClassDistribution::new(p)), 0.5);
        assert_eq!(softmax_score(&ClassDistribution::new(vec![0.1; 10])), 0.1);
    }

    #[test]
    fn names_are_fixed() {
        let names = feature_names();
        assert_eq!(names.len(), 37);
        assert_eq!(names[0], "entropy");
        assert_eq!(names[1], "softmax");
        assert_eq!(names[2], "conv1_l1");
        assert_eq!(names[36], "all_kurt");
        assert_eq!(feature_index("all_l2"), Some(2 + 4 * 7 + 1));
    }

    #[test]
    fn dense_bias_gradient_is_probs_minus_one_hot() {
        let model = ModelParams::init(Architecture::standard(), 4).unwrap();
        let x: Vec<f32> = (0..784).map(|i| ((i * 31) % 101) as f32 / 101.0).collect();
        let (dist, grad) = metric_gradient(&model, &x).unwrap();
        let target = dist.one_hot();
        for ((g, p), t) in grad.layer_biases(3).iter().zip(&dist.probs).zip(&target) {
            assert!((g - (p - t)).abs() < 1e-15);
        }
    }

    #[test]
    fn correctness_labels() {
        let model = ModelParams::init(Architecture::standard(), 4).unwrap();
        let x = vec![0.2f32; 784];
        let pred = metric_gradient(&model, &x).unwrap().0.predicted as u8;
        let ok = feature_vector(&model, &x, Some(pred), ConceptTag::EmnistDigits, "a").unwrap();
        assert_eq!(ok.correctness, Correctness::Correct);
        let wrong = feature_vector(&model, &x, Some((pred + 1) % 10), ConceptTag::EmnistDigits, "b").unwrap();
        assert_eq!(wrong.correctness, Correctness::Incorrect);
        let ood = feature_vector(&model, &x, Some(pred), ConceptTag::Cifar10Gray, "c").unwrap();
        assert_eq!(ood.correctness, Correctness::OutOfDistribution);
    }
}
