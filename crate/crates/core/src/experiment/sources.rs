//! Loading the in-distribution digit pool and the unknown-concept pools,
//! each split once into disjoint evaluation and augmentation parts.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;

use super::config::ExperimentConfig;
use crate::container::{Chunk, Container, Tensor};
use crate::data::{
    gen_noise, load_gray_dir, read_cifar10_bin, read_idx_pair, to_gray28, ConceptTag, Image28, LabeledSet, NoiseKind,
    Orientation,
};
use crate::error::{Error, Result};
use crate::seed::derive;

/// Unknown concepts, in output order.
pub const UNKNOWN_CONCEPTS: [ConceptTag; 6] = [
    ConceptTag::EmnistLetters,
    ConceptTag::Cifar10Gray,
    ConceptTag::Omniglot,
    ConceptTag::Notmnist,
    ConceptTag::UniformNoise,
    ConceptTag::NormalNoise,
];

/// Concepts that reserve held-out samples for meta-training augmentation.
pub const AUGMENT_CONCEPTS: [ConceptTag; 3] = [ConceptTag::UniformNoise, ConceptTag::Cifar10Gray, ConceptTag::Omniglot];

pub fn digit_id(pool_index: usize) -> String {
    format!("emnist_digits:{pool_index}")
}

/// Train and t10k IDX pairs concatenated (train first) into one labeled pool.
pub fn load_digits(dir: &Path) -> Result<LabeledSet> {
    let mut all: Option<LabeledSet> = None;
    for prefix in ["train", "t10k"] {
        let imgs = dir.join(format!("{prefix}-images-idx3-ubyte"));
        let labs = dir.join(format!("{prefix}-labels-idx1-ubyte"));
        let (images, labels) = read_idx_pair(&imgs, &labs, Orientation::Upright)?;
        let set = LabeledSet::new(ConceptTag::EmnistDigits, images, labels)?;
        match all.as_mut() {
            Some(a) => a.extend(set)?,
            None => all = Some(set),
        }
    }
    Ok(all.expect("two parts"))
}

fn find_suffix(dir: &Path, suffix: &str) -> Result<PathBuf> {
    let mut hits: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(suffix)))
        .collect();
    hits.sort();
    hits.into_iter()
        .next()
        .ok_or_else(|| Error::MissingArtifact(format!("{}/*{suffix}", dir.display())))
}

/// Evaluation and augmentation samples of one unknown concept.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptPool {
    pub concept: ConceptTag,
    pub eval: LabeledSet,
    pub eval_ids: Vec<String>,
    pub aug: LabeledSet,
    pub aug_ids: Vec<String>,
}

fn augment_size(cfg: &ExperimentConfig, concept: ConceptTag) -> usize {
    if AUGMENT_CONCEPTS.contains(&concept) {
        cfg.augment_size
    } else {
        0
    }
}

fn concept_index(concept: ConceptTag) -> u64 {
    ConceptTag::ALL.iter().position(|&c| c == concept).expect("listed") as u64
}

/// Draws the evaluation and augmentation index lists from `n` raw samples.
fn carve(cfg: &ExperimentConfig, concept: ConceptTag, n: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    let a = augment_size(cfg, concept);
    if n <= a {
        return Err(Error::PoolExhausted {
            concept: concept.to_string(),
            requested: a + 1,
            available: n,
        });
    }
    let e = cfg.ood_eval_size.min(n - a);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut crate::seed::rng(derive(cfg.master_seed, "pool", concept_index(concept))));
    Ok((perm[..e].to_vec(), perm[e..e + a].to_vec()))
}

fn ids(concept: ConceptTag, idx: &[usize]) -> Vec<String> {
    idx.iter().map(|i| format!("{concept}:{i}")).collect()
}

fn pool_from_images(cfg: &ExperimentConfig, concept: ConceptTag, images: &[Image28]) -> Result<ConceptPool> {
    let (e, a) = carve(cfg, concept, images.len())?;
    let take = |idx: &[usize]| LabeledSet::unlabeled(concept, idx.iter().map(|&i| images[i].clone()).collect());
    Ok(ConceptPool {
        concept,
        eval: take(&e),
        eval_ids: ids(concept, &e),
        aug: take(&a),
        aug_ids: ids(concept, &a),
    })
}

fn load_uncached(cfg: &ExperimentConfig, concept: ConceptTag) -> Result<ConceptPool> {
    let paths = &cfg.data;
    match concept {
        ConceptTag::EmnistLetters => {
            let imgs = find_suffix(&paths.letters, "-images-idx3-ubyte")?;
            let labs = find_suffix(&paths.letters, "-labels-idx1-ubyte")?;
            let (images, _) = read_idx_pair(&imgs, &labs, Orientation::Transposed)?;
            pool_from_images(cfg, concept, &images)
        }
        ConceptTag::Cifar10Gray => {
            let mut files: Vec<PathBuf> = fs::read_dir(&paths.cifar)
                .map_err(|e| Error::io(&paths.cifar, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "bin"))
                .collect();
            files.sort();
            if files.is_empty() {
                return Err(Error::MissingArtifact(format!("{}/*.bin", paths.cifar.display())));
            }
            let mut records = Vec::new();
            for f in &files {
                records.extend(read_cifar10_bin(f)?);
            }
            // only the drawn records are converted
            let (e, a) = carve(cfg, concept, records.len())?;
            let take = |idx: &[usize]| LabeledSet::unlabeled(concept, idx.iter().map(|&i| to_gray28(&records[i])).collect());
            Ok(ConceptPool {
                concept,
                eval: take(&e),
                eval_ids: ids(concept, &e),
                aug: take(&a),
                aug_ids: ids(concept, &a),
            })
        }
        ConceptTag::Omniglot | ConceptTag::Notmnist => {
            let (dir, invert) = if concept == ConceptTag::Omniglot {
                (&paths.omniglot, true)
            } else {
                (&paths.notmnist, false)
            };
            let report = load_gray_dir(dir, invert, concept)?;
            for p in &report.skipped {
                log::warn!("{concept}: skipped undecodable file {}", p.display());
            }
            pool_from_images(cfg, concept, &report.set.images)
        }
        ConceptTag::UniformNoise | ConceptTag::NormalNoise => {
            let kind = if concept == ConceptTag::UniformNoise {
                NoiseKind::Uniform
            } else {
                NoiseKind::Normal
            };
            let k = concept_index(concept);
            let a = augment_size(cfg, concept);
            let eval = gen_noise(kind, cfg.ood_eval_size, derive(cfg.master_seed, "noise-eval", k))?;
            let aug = if a > 0 {
                gen_noise(kind, a, derive(cfg.master_seed, "noise-aug", k))?
            } else {
                LabeledSet::unlabeled(concept, Vec::new())
            };
            Ok(ConceptPool {
                concept,
                eval_ids: (0..eval.len()).map(|i| format!("{concept}:eval:{i}")).collect(),
                aug_ids: (0..aug.len()).map(|i| format!("{concept}:aug:{i}")).collect(),
                eval,
                aug,
            })
        }
        ConceptTag::EmnistDigits => Err(Error::Config("digits are not an unknown concept".into())),
    }
}

fn cache_path(cfg: &ExperimentConfig, concept: ConceptTag) -> PathBuf {
    cfg.cache_dir().join(format!(
        "{concept}-seed{}-eval{}-aug{}.gmc",
        cfg.master_seed,
        cfg.ood_eval_size,
        augment_size(cfg, concept)
    ))
}

fn ids_tensor(ids: &[String]) -> Tensor {
    // ids are `concept:index` or `concept:part:index`; keep the full text
    let bytes: Vec<f64> = ids.join("\n").bytes().map(f64::from).collect();
    Tensor::vector(bytes)
}

fn ids_from_tensor(t: &Tensor) -> Result<Vec<String>> {
    let bytes: Vec<u8> = t.values.iter().map(|&v| v as u8).collect();
    let text = String::from_utf8(bytes).map_err(|_| Error::Format("sample ids are not UTF-8".into()))?;
    Ok(if text.is_empty() {
        Vec::new()
    } else {
        text.split('\n').map(str::to_string).collect()
    })
}

/// Loads one unknown-concept pool, going through the on-disk cache under
/// `out_dir/cache`.
pub fn load_concept_pool(cfg: &ExperimentConfig, concept: ConceptTag) -> Result<ConceptPool> {
    let path = cache_path(cfg, concept);
    if path.exists() {
        let c = Container::read(&path)?;
        let pool = ConceptPool {
            concept,
            eval: c.dataset("eval")?.clone(),
            eval_ids: ids_from_tensor(c.tensor("eval_ids")?)?,
            aug: c.dataset("aug")?.clone(),
            aug_ids: ids_from_tensor(c.tensor("aug_ids")?)?,
        };
        if pool.eval.len() == pool.eval_ids.len() && pool.aug.len() == pool.aug_ids.len() {
            return Ok(pool);
        }
        log::warn!("ignoring inconsistent cache {}", path.display());
    }
    let pool = load_uncached(cfg, concept)?;
    let mut c = Container::new();
    c.push("eval", Chunk::Dataset(pool.eval.clone()))
        .push("eval_ids", Chunk::Tensor(ids_tensor(&pool.eval_ids)))
        .push("aug", Chunk::Dataset(pool.aug.clone()))
        .push("aug_ids", Chunk::Tensor(ids_tensor(&pool.aug_ids)));
    c.write(&path)?;
    Ok(pool)
}
