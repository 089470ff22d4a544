//! Meta classification: separating correct from incorrect (or
//! in- from out-of-distribution) predictions using uncertainty features.

mod curves;
mod logistic;
mod mlp;

use serde::{Deserialize, Serialize};

pub use curves::{aupr, aupr_in, aupr_out, auroc, evaluate, EvalResult, PositiveCase, ScoredSample};
pub use logistic::{
    fit_logistic, fit_logistic_with, kkt_from_grad, penalized_objective, LogisticModel, Regularization, SolverConfig,
    SolverReport, Standardizer,
};
pub use mlp::{fit_mlp_meta, fit_mlp_meta_with, MlpMetaModel, HIDDEN};

use crate::data::ConceptTag;
use crate::error::{Error, Result};
use crate::metrics::{feature_names, Correctness, MetricVector, N_FEATURES};

/// Column indices fed to the trainable meta-classifiers: every feature
/// except the softmax baseline (entropy plus all gradient statistics).
pub fn classifier_feature_indices() -> Vec<usize> {
    let names = feature_names();
    (0..N_FEATURES).filter(|&i| names[i] != "softmax").collect()
}

pub fn classifier_row(features: &[f64; N_FEATURES]) -> Vec<f64> {
    classifier_feature_indices().iter().map(|&i| features[i]).collect()
}

/// Features and binary labels (true = correct prediction) for fitting a
/// meta-classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaTrainingSet {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
    pub sample_ids: Vec<String>,
}

impl MetaTrainingSet {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_positive(&self) -> usize {
        self.labels.iter().filter(|&&b| b).count()
    }
}

/// Samples from a held-out concept pool to append, all labeled incorrect.
#[derive(Debug, Clone, Copy)]
pub struct Extra<'a> {
    pub concept: ConceptTag,
    pub pool: &'a [MetricVector],
    pub count: usize,
}

/// Base rows are labeled by CNN correctness; each extra contributes the
/// first `count` rows of its pool, labeled incorrect.
pub fn build_meta_training_set(base: &[MetricVector], extras: &[Extra<'_>]) -> Result<MetaTrainingSet> {
    let mut set = MetaTrainingSet {
        rows: Vec::new(),
        labels: Vec::new(),
        sample_ids: Vec::new(),
    };
    for v in base {
        if v.correctness == Correctness::OutOfDistribution {
            return Err(Error::Config(format!("base sample {} is out of distribution", v.sample_id)));
        }
        set.rows.push(classifier_row(&v.features));
        set.labels.push(v.correctness == Correctness::Correct);
        set.sample_ids.push(v.sample_id.clone());
    }
    for e in extras {
        if e.count > e.pool.len() {
            return Err(Error::PoolExhausted {
                concept: e.concept.to_string(),
                requested: e.count,
                available: e.pool.len(),
            });
        }
        for v in &e.pool[..e.count] {
            set.rows.push(classifier_row(&v.features));
            set.labels.push(false);
            set.sample_ids.push(v.sample_id.clone());
        }
    }
    Ok(set)
}

/// The four meta-training sets of the known-unknowns experiment, each
/// adding one more concept of 200 samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentVariant {
    ValidationOnly,
    PlusNoise,
    PlusNoiseCifar,
    PlusNoiseCifarOmniglot,
}

impl AugmentVariant {
    pub const ALL: [AugmentVariant; 4] = [
        AugmentVariant::ValidationOnly,
        AugmentVariant::PlusNoise,
        AugmentVariant::PlusNoiseCifar,
        AugmentVariant::PlusNoiseCifarOmniglot,
    ];

    pub const AUGMENT_SIZE: usize = 200;

    pub fn as_str(&self) -> &'static str {
        match self {
            AugmentVariant::ValidationOnly => "val",
            AugmentVariant::PlusNoise => "val+noise",
            AugmentVariant::PlusNoiseCifar => "val+noise+cifar",
            AugmentVariant::PlusNoiseCifarOmniglot => "val+noise+cifar+omniglot",
        }
    }

    pub fn index(&self) -> usize {
        Self::ALL.iter().position(|v| v == self).expect("listed")
    }

    pub fn extra_concepts(&self) -> &'static [ConceptTag] {
        const ALL: [ConceptTag; 3] = [ConceptTag::UniformNoise, ConceptTag::Cifar10Gray, ConceptTag::Omniglot];
        &ALL[..self.index()]
    }
}
