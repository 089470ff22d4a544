use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    /// Reduced sizes that finish on one machine in well under an hour.
    Desk,
    /// The original protocol: 10 CNNs, 60k/20k/200k splits, 5 meta seeds.
    Full,
}

impl Scale {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scale::Desk => "desk",
            Scale::Full => "full",
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "full" => Ok(Scale::Full),
            _ => Err(Error::Config(format!("unknown scale `{s}` (expected desk or full)"))),
        }
    }
}

/// Where each image source lives on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataPaths {
    /// Directory with the four IDX digit files (train + t10k images/labels).
    pub digits: PathBuf,
    /// Directory with `*-images-idx3-ubyte` / `*-labels-idx1-ubyte` letters
    /// in the transposed EMNIST raster.
    pub letters: PathBuf,
    /// Directory of CIFAR-10 `*.bin` batches.
    pub cifar: PathBuf,
    /// Directory of dark-on-light glyph images.
    pub omniglot: PathBuf,
    /// Directory of light-on-dark glyph images.
    pub notmnist: PathBuf,
}

impl DataPaths {
    /// Conventional layout under one data root.
    pub fn under(root: &Path) -> Self {
        Self {
            digits: root.join("digits"),
            letters: root.join("letters"),
            cifar: root.join("cifar10"),
            omniglot: root.join("omniglot"),
            notmnist: root.join("notmnist"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scale: Scale,
    pub master_seed: u64,
    pub n_cnns: usize,
    pub n_meta_seeds: usize,
    pub train_size: usize,
    pub val_size: usize,
    pub test_size: usize,
    /// Evaluation samples drawn per unknown concept.
    pub ood_eval_size: usize,
    /// Held-out samples per augmentation concept (disjoint from evaluation).
    pub augment_size: usize,
    pub data: DataPaths,
    pub out_dir: PathBuf,
    /// Worker threads; 0 means all available cores.
    pub jobs: usize,
    pub train: TrainConfig,
}

impl ExperimentConfig {
    pub fn new(scale: Scale, data: DataPaths, out_dir: PathBuf) -> Self {
        let base = Self {
            scale,
            master_seed: 42,
            n_cnns: 3,
            n_meta_seeds: 2,
            train_size: 10_000,
            val_size: 4_000,
            test_size: 20_000,
            ood_eval_size: 5_000,
            augment_size: 200,
            data,
            out_dir,
            jobs: 0,
            train: TrainConfig::default(),
        };
        match scale {
            Scale::Desk => base,
            Scale::Full => Self {
                n_cnns: 10,
                n_meta_seeds: 5,
                train_size: 60_000,
                val_size: 20_000,
                test_size: 200_000,
                ood_eval_size: 20_000,
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_cnns == 0 || self.n_meta_seeds == 0 {
            return Err(Error::Config("n_cnns and n_meta_seeds must be at least 1".into()));
        }
        if self.train_size == 0 || self.val_size == 0 || self.test_size == 0 {
            return Err(Error::Config("split sizes must be positive".into()));
        }
        if self.ood_eval_size == 0 {
            return Err(Error::Config("ood_eval_size must be positive".into()));
        }
        self.train.validate()
    }

    /// One-line description written at the top of every output file.
    pub fn header(&self) -> String {
        format!(
            "gradmeta {} scale={} seed={} n_cnns={} n_meta_seeds={} split={}/{}/{} ood_eval={} augment={}",
            env!("CARGO_PKG_VERSION"),
            self.scale,
            self.master_seed,
            self.n_cnns,
            self.n_meta_seeds,
            self.train_size,
            self.val_size,
            self.test_size,
            self.ood_eval_size,
            self.augment_size,
        )
    }

    pub fn models_dir(&self) -> PathBuf {
        self.out_dir.join("models")
    }

    pub fn features_dir(&self) -> PathBuf {
        self.out_dir.join("features")
    }

    pub fn tables_dir(&self) -> PathBuf {
        self.out_dir.join("tables")
    }

    pub fn distributions_dir(&self) -> PathBuf {
        self.out_dir.join("distributions")
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.out_dir.join("cache")
    }

    pub fn model_path(&self, member: usize) -> PathBuf {
        self.models_dir().join(format!("member_{member}.gmc"))
    }

    pub fn history_path(&self, member: usize) -> PathBuf {
        self.models_dir().join(format!("member_{member}_history.csv"))
    }

    pub fn member_features_dir(&self, member: usize) -> PathBuf {
        self.features_dir().join(format!("member_{member}"))
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.out_dir.join("run_manifest.json")
    }

    /// Thread pool honoring `jobs`.
    pub fn thread_pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))
    }
}
