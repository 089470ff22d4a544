//! Per-member feature matrices for every data part the experiments touch.

use std::collections::BTreeMap;

use super::bootstrap::{load_ensemble, Member};
use super::config::ExperimentConfig;
use super::sources::{digit_id, load_concept_pool, load_digits, ConceptPool, UNKNOWN_CONCEPTS};
use crate::data::{ConceptTag, LabeledSet};
use crate::error::{Error, Result};
use crate::metrics::{extract_features, read_features_csv, write_features_csv, MetricVector};

/// Feature rows of one member, by data part.
#[derive(Debug, Clone, PartialEq)]
pub struct MemberFeatures {
    pub member: usize,
    pub val: Vec<MetricVector>,
    pub test: Vec<MetricVector>,
    pub eval: BTreeMap<ConceptTag, Vec<MetricVector>>,
    pub aug: BTreeMap<ConceptTag, Vec<MetricVector>>,
}

/// File stems of the parts written per member.
pub fn part_names() -> Vec<String> {
    let mut v = vec!["val".to_string(), "test".to_string()];
    for c in UNKNOWN_CONCEPTS {
        v.push(format!("{c}_eval"));
    }
    for c in super::sources::AUGMENT_CONCEPTS {
        v.push(format!("{c}_aug"));
    }
    v
}

struct Part<'a> {
    name: String,
    set: &'a LabeledSet,
    ids: &'a [String],
}

fn member_parts<'a>(
    digits_val: &'a (LabeledSet, Vec<String>),
    digits_test: &'a (LabeledSet, Vec<String>),
    pools: &'a [ConceptPool],
) -> Vec<Part<'a>> {
    let mut parts = vec![
        Part {
            name: "val".into(),
            set: &digits_val.0,
            ids: &digits_val.1,
        },
        Part {
            name: "test".into(),
            set: &digits_test.0,
            ids: &digits_test.1,
        },
    ];
    for p in pools {
        parts.push(Part {
            name: format!("{}_eval", p.concept),
            set: &p.eval,
            ids: &p.eval_ids,
        });
    }
    for p in pools.iter().filter(|p| super::sources::AUGMENT_CONCEPTS.contains(&p.concept)) {
        parts.push(Part {
            name: format!("{}_aug", p.concept),
            set: &p.aug,
            ids: &p.aug_ids,
        });
    }
    parts
}

fn digit_part(digits: &LabeledSet, idx: &[usize]) -> (LabeledSet, Vec<String>) {
    (digits.select(idx), idx.iter().map(|&i| digit_id(i)).collect())
}

fn extract_member(cfg: &ExperimentConfig, m: &Member, digits: &LabeledSet, pools: &[ConceptPool], progress: &(dyn Fn(&str) + Sync)) -> Result<()> {
    let dir = cfg.member_features_dir(m.index);
    let val = digit_part(digits, &m.split.val_idx);
    let test = digit_part(digits, &m.split.test_idx);
    for part in member_parts(&val, &test, pools) {
        let path = dir.join(format!("{}.csv", part.name));
        if path.exists() {
            progress(&format!("member {} {} skipped (features exist)", m.index, part.name));
            continue;
        }
        let rows = extract_features(&m.model, part.set, part.ids)?;
        let comments = vec![cfg.header(), format!("member={} part={} rows={}", m.index, part.name, rows.len())];
        write_features_csv(&path, &rows, &comments)?;
        progress(&format!("member {} {}: {} rows", m.index, part.name, rows.len()));
    }
    Ok(())
}

/// Writes `features/member_<i>/<part>.csv` for every member, skipping
/// files that already exist.
pub fn run_extract(cfg: &ExperimentConfig, progress: &(dyn Fn(&str) + Sync)) -> Result<()> {
    cfg.validate()?;
    let ensemble = load_ensemble(cfg)?;
    let digits = load_digits(&cfg.data.digits)?;
    let pools = UNKNOWN_CONCEPTS
        .iter()
        .map(|&c| load_concept_pool(cfg, c))
        .collect::<Result<Vec<_>>>()?;
    let pool = cfg.thread_pool()?;
    pool.install(|| {
        for m in &ensemble {
            extract_member(cfg, m, &digits, &pools, progress)?;
        }
        Ok(())
    })
}

/// Reads back the feature matrices of member `index`.
pub fn load_member_features(cfg: &ExperimentConfig, index: usize) -> Result<MemberFeatures> {
    if !cfg.features_dir().is_dir() {
        return Err(Error::MissingArtifact(format!(
            "{}/ (run the extract stage first)",
            cfg.features_dir().display()
        )));
    }
    let dir = cfg.member_features_dir(index);
    let read = |name: &str| -> Result<Vec<MetricVector>> {
        let path = dir.join(format!("{name}.csv"));
        if !path.exists() {
            return Err(Error::MissingArtifact(path.display().to_string()));
        }
        Ok(read_features_csv(&path)?.rows)
    };
    let mut out = MemberFeatures {
        member: index,
        val: read("val")?,
        test: read("test")?,
        eval: BTreeMap::new(),
        aug: BTreeMap::new(),
    };
    for c in UNKNOWN_CONCEPTS {
        out.eval.insert(c, read(&format!("{c}_eval"))?);
    }
    for c in super::sources::AUGMENT_CONCEPTS {
        out.aug.insert(c, read(&format!("{c}_aug"))?);
    }
    Ok(out)
}

pub fn load_all_features(cfg: &ExperimentConfig) -> Result<Vec<MemberFeatures>> {
    (0..cfg.n_cnns).map(|i| load_member_features(cfg, i)).collect()
}
