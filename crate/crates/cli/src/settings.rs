//! Resolution of the experiment configuration: scale defaults, then the
//! flat config file, then flags (which clap already merges with their
//! `GRADMETA_*` environment variables).

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use gradmeta::experiment::{DataPaths, ExperimentConfig, Scale};
use serde::Deserialize;

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Flat TOML file with any of the keys below (unknown keys are rejected)
    #[arg(long, global = true, env = "GRADMETA_CONFIG", value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Experiment scale: desk (reduced sizes) or full
    #[arg(long, global = true, env = "GRADMETA_SCALE", value_parser = ["desk", "full"])]
    pub scale: Option<String>,
    /// Master seed every other seed derives from
    #[arg(long, global = true, env = "GRADMETA_SEED")]
    pub seed: Option<u64>,
    /// Number of bootstrap ensemble members
    #[arg(long, global = true, env = "GRADMETA_N_CNNS")]
    pub n_cnns: Option<usize>,
    /// Meta-MLP seeds per ensemble member
    #[arg(long, global = true, env = "GRADMETA_N_META_SEEDS")]
    pub n_meta_seeds: Option<usize>,
    /// Worker threads (0 = all cores)
    #[arg(long, global = true, env = "GRADMETA_JOBS")]
    pub jobs: Option<usize>,
    /// Output directory
    #[arg(long, global = true, env = "GRADMETA_OUT", value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Root holding digits/ letters/ cifar10/ omniglot/ notmnist/
    #[arg(long, global = true, env = "GRADMETA_DATA", value_name = "DIR")]
    pub data: Option<PathBuf>,
    /// Digit IDX directory (overrides <data>/digits)
    #[arg(long, global = true, env = "GRADMETA_DIGITS", value_name = "DIR")]
    pub digits: Option<PathBuf>,
    /// Letters IDX directory
    #[arg(long, global = true, env = "GRADMETA_LETTERS", value_name = "DIR")]
    pub letters: Option<PathBuf>,
    /// CIFAR-10 binary batch directory
    #[arg(long, global = true, env = "GRADMETA_CIFAR", value_name = "DIR")]
    pub cifar: Option<PathBuf>,
    /// Omniglot-style image directory (dark strokes on light background)
    #[arg(long, global = true, env = "GRADMETA_OMNIGLOT", value_name = "DIR")]
    pub omniglot: Option<PathBuf>,
    /// notMNIST-style image directory
    #[arg(long, global = true, env = "GRADMETA_NOTMNIST", value_name = "DIR")]
    pub notmnist: Option<PathBuf>,
    /// Cap on training epochs per network
    #[arg(long, global = true, env = "GRADMETA_MAX_EPOCHS")]
    pub max_epochs: Option<usize>,
}

/// Keys accepted in the config file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub scale: Option<String>,
    pub seed: Option<u64>,
    pub n_cnns: Option<usize>,
    pub n_meta_seeds: Option<usize>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub digits: Option<PathBuf>,
    pub letters: Option<PathBuf>,
    pub cifar: Option<PathBuf>,
    pub omniglot: Option<PathBuf>,
    pub notmnist: Option<PathBuf>,
    pub max_epochs: Option<usize>,
    pub train_size: Option<usize>,
    pub val_size: Option<usize>,
    pub test_size: Option<usize>,
    pub ood_eval_size: Option<usize>,
    pub augment_size: Option<usize>,
}

pub fn read_file_config(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config file {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing config file {}", path.display()))
}

fn pick<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

pub fn resolve(o: &Overrides) -> Result<ExperimentConfig> {
    let file = match &o.config {
        Some(p) => read_file_config(p)?,
        None => FileConfig::default(),
    };
    let scale: Scale = pick(o.scale.clone(), file.scale.clone())
        .unwrap_or_else(|| "desk".into())
        .parse()?;
    let root = pick(o.data.clone(), file.data.clone()).unwrap_or_else(|| "data".into());
    let out = pick(o.out.clone(), file.out.clone()).unwrap_or_else(|| PathBuf::from("runs").join(scale.as_str()));
    let mut cfg = ExperimentConfig::new(scale, DataPaths::under(&root), out);

    let d = &mut cfg.data;
    for (slot, flag, from_file) in [
        (&mut d.digits, &o.digits, &file.digits),
        (&mut d.letters, &o.letters, &file.letters),
        (&mut d.cifar, &o.cifar, &file.cifar),
        (&mut d.omniglot, &o.omniglot, &file.omniglot),
        (&mut d.notmnist, &o.notmnist, &file.notmnist),
    ] {
        if let Some(p) = pick(flag.clone(), from_file.clone()) {
            *slot = p;
        }
    }
    if let Some(v) = pick(o.seed, file.seed) {
        cfg.master_seed = v;
    }
    if let Some(v) = pick(o.n_cnns, file.n_cnns) {
        cfg.n_cnns = v;
    }
    if let Some(v) = pick(o.n_meta_seeds, file.n_meta_seeds) {
        cfg.n_meta_seeds = v;
    }
    if let Some(v) = pick(o.jobs, file.jobs) {
        cfg.jobs = v;
    }
    if let Some(v) = pick(o.max_epochs, file.max_epochs) {
        cfg.train.max_epochs = v;
    }
    for (slot, v) in [
        (&mut cfg.train_size, file.train_size),
        (&mut cfg.val_size, file.val_size),
        (&mut cfg.test_size, file.test_size),
        (&mut cfg.ood_eval_size, file.ood_eval_size),
        (&mut cfg.augment_size, file.augment_size),
    ] {
        if let Some(v) = v {
            *slot = v;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}
