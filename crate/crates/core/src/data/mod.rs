//! Dataset ingestion: binary format parsers, gray-scale normalization,
//! synthetic noise, and the seeded train/validation/test splits.

pub mod cifar;
mod gray_dir;
pub mod idx;
mod image;
mod noise;
mod split;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use cifar::{read_cifar10_bin, to_gray28, RgbImage32};
pub use gray_dir::{load_gray_dir, GrayDirReport};
pub use idx::{read_idx, read_idx_pair, IdxData, Orientation};
pub use image::{area_resize, Image28, PIXELS, SIDE};
pub use noise::{gen_noise, NoiseKind};
pub use split::{make_split, SplitSpec};

use crate::error::{Error, Result};

/// The image concepts used in the experiments. Only `EmnistDigits` is
/// in-distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConceptTag {
    EmnistDigits,
    EmnistLetters,
    Cifar10Gray,
    Omniglot,
    Notmnist,
    UniformNoise,
    NormalNoise,
}

impl ConceptTag {
    pub const ALL: [ConceptTag; 7] = [
        ConceptTag::EmnistDigits,
        ConceptTag::EmnistLetters,
        ConceptTag::Cifar10Gray,
        ConceptTag::Omniglot,
        ConceptTag::Notmnist,
        ConceptTag::UniformNoise,
        ConceptTag::NormalNoise,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ConceptTag::EmnistDigits => "emnist_digits",
            ConceptTag::EmnistLetters => "emnist_letters",
            ConceptTag::Cifar10Gray => "cifar10_gray",
            ConceptTag::Omniglot => "omniglot",
            ConceptTag::Notmnist => "notmnist",
            ConceptTag::UniformNoise => "uniform_noise",
            ConceptTag::NormalNoise => "normal_noise",
        }
    }

    pub fn is_in_distribution(&self) -> bool {
        matches!(self, ConceptTag::EmnistDigits)
    }
}

impl fmt::Display for ConceptTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConceptTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ConceptTag::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown concept `{s}`")))
    }
}

/// Images of one concept, optionally labeled.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pub concept: ConceptTag,
    pub images: Vec<Image28>,
    /// Empty when the concept carries no labels (noise, rendered glyph sets).
    pub labels: Vec<u8>,
}

impl LabeledSet {
    pub fn new(concept: ConceptTag, images: Vec<Image28>, labels: Vec<u8>) -> Result<Self> {
        if !labels.is_empty() && labels.len() != images.len() {
            return Err(Error::Config(format!(
                "{concept}: {} images but {} labels",
                images.len(),
                labels.len()
            )));
        }
        Ok(Self {
            concept,
            images,
            labels,
        })
    }

    pub fn unlabeled(concept: ConceptTag, images: Vec<Image28>) -> Self {
        Self {
            concept,
            images,
            labels: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn is_labeled(&self) -> bool {
        !self.labels.is_empty()
    }

    pub fn label(&self, i: usize) -> Option<u8> {
        self.labels.get(i).copied()
    }

    /// The samples at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> LabeledSet {
        LabeledSet {
            concept: self.concept,
            images: indices.iter().map(|&i| self.images[i].clone()).collect(),
            labels: if self.is_labeled() {
                indices.iter().map(|&i| self.labels[i]).collect()
            } else {
                Vec::new()
            },
        }
    }

    pub fn extend(&mut self, other: LabeledSet) -> Result<()> {
        if other.concept != self.concept || other.is_labeled() != self.is_labeled() {
            return Err(Error::Config("cannot merge sets of different kinds".into()));
        }
        self.images.extend(other.images);
        self.labels.extend(other.labels);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concept_names_round_trip() {
        for c in ConceptTag::ALL {
            assert_eq!(c.as_str().parse::<ConceptTag>().unwrap(), c);
        }
        assert!("mnist".parse::<ConceptTag>().is_err());
    }

    #[test]
    fn mismatched_labels_rejected() {
        let imgs = vec![Image28::zeros(); 3];
        assert!(LabeledSet::new(ConceptTag::EmnistDigits, imgs.clone(), vec![1, 2]).is_err());
        let s = LabeledSet::new(ConceptTag::EmnistDigits, imgs, vec![1, 2, 3]).unwrap();
        let sub = s.select(&[2, 0]);
        assert_eq!(sub.labels, vec![3, 1]);
    }
}
