//! The bootstrap ensemble: each member gets its own random split of the
//! digit pool, its own initialization and its own training run.

use std::fmt::Write as _;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::sources::load_digits;
use crate::container::{Chunk, Container, Tensor};
use crate::data::{make_split, LabeledSet, SplitSpec};
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::nn::{train, ModelParams, TrainConfig};
use crate::seed::MemberSeeds;

/// A trained member as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub index: usize,
    pub model: ModelParams,
    pub split: SplitSpec,
}

#[derive(Debug)]
pub enum MemberStatus {
    Trained { epochs: usize, val_acc: f64 },
    Skipped,
    Failed(Error),
}

#[derive(Debug)]
pub struct MemberReport {
    pub member: usize,
    pub status: MemberStatus,
}

#[derive(Debug)]
pub struct BootstrapReport {
    pub members: Vec<MemberReport>,
}

impl BootstrapReport {
    pub fn failures(&self) -> impl Iterator<Item = (usize, &Error)> {
        self.members.iter().filter_map(|m| match &m.status {
            MemberStatus::Failed(e) => Some((m.member, e)),
            _ => None,
        })
    }

    pub fn all_ok(&self) -> bool {
        self.failures().next().is_none()
    }
}

fn indices_tensor(idx: &[usize]) -> Tensor {
    Tensor::vector(idx.iter().map(|&i| i as f64).collect())
}

fn tensor_indices(t: &Tensor) -> Vec<usize> {
    t.values.iter().map(|&v| v as usize).collect()
}

pub fn save_member(cfg: &ExperimentConfig, m: &Member) -> Result<()> {
    let mut c = Container::new();
    c.push("model", Chunk::Model(m.model.clone()))
        .push("split_train", Chunk::Tensor(indices_tensor(&m.split.train_idx)))
        .push("split_val", Chunk::Tensor(indices_tensor(&m.split.val_idx)))
        .push("split_test", Chunk::Tensor(indices_tensor(&m.split.test_idx)));
    c.write(&cfg.model_path(m.index))
}

/// Loads member `index`; a missing checkpoint is reported by its path.
pub fn load_member(cfg: &ExperimentConfig, index: usize) -> Result<Member> {
    let path = cfg.model_path(index);
    if !path.exists() {
        return Err(Error::MissingArtifact(path.display().to_string()));
    }
    let c = Container::read(&path)?;
    let seeds = MemberSeeds::for_member(cfg.master_seed, index);
    let split = SplitSpec {
        train_idx: tensor_indices(c.tensor("split_train")?),
        val_idx: tensor_indices(c.tensor("split_val")?),
        test_idx: tensor_indices(c.tensor("split_test")?),
        seed: seeds.split,
    };
    if (split.train_idx.len(), split.val_idx.len(), split.test_idx.len()) != (cfg.train_size, cfg.val_size, cfg.test_size) {
        return Err(Error::Config(format!(
            "{} was trained with different split sizes; use a fresh output directory",
            path.display()
        )));
    }
    Ok(Member {
        index,
        model: c.model("model")?.clone(),
        split,
    })
}

fn train_member(cfg: &ExperimentConfig, digits: &LabeledSet, index: usize, progress: &(dyn Fn(&str) + Sync)) -> Result<(usize, f64)> {
    let seeds = MemberSeeds::for_member(cfg.master_seed, index);
    let split = make_split(digits.len(), (cfg.train_size, cfg.val_size, cfg.test_size), seeds.split)?;
    let tr = digits.select(&split.train_idx);
    let va = digits.select(&split.val_idx);
    let model = ModelParams::init(crate::nn::Architecture::standard(), seeds.init)?;
    let tcfg = TrainConfig {
        seed: seeds.train,
        ..cfg.train
    };
    let outcome = train(model, &tr.images, &tr.labels, &va.images, &va.labels, &tcfg, |r| {
        progress(&format!(
            "member {index} epoch {} lr {} val_acc {:.4} train_loss {:.4}",
            r.epoch, r.lr, r.val_acc, r.train_loss
        ))
    })?;
    let mut hist = format!("# {}\n# member={index}\nepoch,lr,train_loss,val_acc\n", cfg.header());
    for r in &outcome.history {
        writeln!(hist, "{},{},{:e},{:e}", r.epoch, r.lr, r.train_loss, r.val_acc).expect("string write");
    }
    write_atomic(&cfg.history_path(index), hist.as_bytes())?;
    let last = outcome.history.last().map_or(0.0, |r| r.val_acc);
    save_member(
        cfg,
        &Member {
            index,
            model: outcome.model,
            split,
        },
    )?;
    Ok((outcome.history.len(), last))
}

/// Trains every ensemble member that has no checkpoint yet. Members run as
/// independent jobs on the configured pool; one member failing does not
/// stop the others.
pub fn run_bootstrap(cfg: &ExperimentConfig, progress: &(dyn Fn(&str) + Sync)) -> Result<BootstrapReport> {
    cfg.validate()?;
    let pending: Vec<usize> = (0..cfg.n_cnns).filter(|&i| load_member(cfg, i).is_err()).collect();
    let digits = if pending.is_empty() {
        None
    } else {
        let d = load_digits(&cfg.data.digits)?;
        let requested = cfg.train_size + cfg.val_size + cfg.test_size;
        if requested > d.len() {
            return Err(Error::SplitOverflow {
                requested,
                pool: d.len(),
            });
        }
        Some(d)
    };
    let pool = cfg.thread_pool()?;
    let members = pool.install(|| {
        (0..cfg.n_cnns)
            .into_par_iter()
            .map(|i| {
                let status = match (&digits, pending.contains(&i)) {
                    (Some(d), true) => match train_member(cfg, d, i, progress) {
                        Ok((epochs, val_acc)) => {
                            progress(&format!("member {i} done after {epochs} epochs, val_acc {val_acc:.4}"));
                            MemberStatus::Trained { epochs, val_acc }
                        }
                        Err(e) => {
                            progress(&format!("member {i} FAILED: {e}"));
                            MemberStatus::Failed(e)
                        }
                    },
                    _ => {
                        progress(&format!("member {i} skipped (checkpoint exists)"));
                        MemberStatus::Skipped
                    }
                };
                MemberReport { member: i, status }
            })
            .collect()
    });
    Ok(BootstrapReport { members })
}

/// Loads every member, failing on the first missing checkpoint.
pub fn load_ensemble(cfg: &ExperimentConfig) -> Result<Vec<Member>> {
    (0..cfg.n_cnns).map(|i| load_member(cfg, i)).collect()
}
