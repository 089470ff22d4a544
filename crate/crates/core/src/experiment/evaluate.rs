//! The three experiment tables: threshold metrics, penalized regressions,
//! and meta-MLPs trained with known unknowns. Every cell aggregates one
//! value per ensemble member (times meta seeds where applicable).

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bootstrap::{load_ensemble, Member};
use super::config::ExperimentConfig;
use super::extract::{load_all_features, MemberFeatures};
use super::sources::digit_id;
use crate::data::ConceptTag;
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::meta::{
    build_meta_training_set, classifier_row, evaluate, fit_logistic_with, fit_mlp_meta_with, AugmentVariant,
    EvalResult, Extra, Regularization, ScoredSample, SolverConfig,
};
use crate::metrics::{feature_index, Correctness, MetricVector, SCOPES};
use crate::seed::MemberSeeds;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    pub mean: f64,
    pub sd_of_mean: f64,
}

/// Mean and standard deviation of the mean (sample sd over √n); a single
/// value has zero spread.
pub fn aggregate(values: &[f64]) -> Result<TableCell> {
    if values.is_empty() {
        return Err(Error::Empty("no values to aggregate".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Ok(TableCell { mean, sd_of_mean: 0.0 });
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(TableCell {
        mean,
        sd_of_mean: var.sqrt() / n.sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub method: String,
    pub pairing: String,
    pub auroc: TableCell,
    pub aupr_in: TableCell,
    pub aupr_out: TableCell,
    /// Number of underlying values per cell.
    pub n: usize,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub notes: Vec<String>,
    pub rows: Vec<TableRow>,
}

impl Table {
    pub fn get(&self, method: &str, pairing: &str) -> Option<&TableRow> {
        self.rows.iter().find(|r| r.method == method && r.pairing == pairing)
    }

    pub fn to_csv(&self, header: &str) -> String {
        let mut s = format!("# {header}\n# table={}\n", self.name);
        for n in &self.notes {
            writeln!(s, "# {n}").expect("string write");
        }
        s.push_str("method,pairing,auroc,auroc_sdm,aupr_in,aupr_in_sdm,aupr_out,aupr_out_sdm,n,note\n");
        for r in &self.rows {
            writeln!(
                s,
                "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{}",
                r.method,
                r.pairing,
                r.auroc.mean,
                r.auroc.sd_of_mean,
                r.aupr_in.mean,
                r.aupr_in.sd_of_mean,
                r.aupr_out.mean,
                r.aupr_out.sd_of_mean,
                r.n,
                r.note
            )
            .expect("string write");
        }
        s
    }

    /// Parses a table written by [`Table::to_csv`].
    pub fn read_csv(path: &Path) -> Result<Table> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut name = String::new();
        let mut notes = Vec::new();
        for line in text.lines().take_while(|l| l.starts_with('#')).skip(1) {
            let body = line.trim_start_matches('#').trim();
            match body.strip_prefix("table=") {
                Some(n) => name = n.to_string(),
                None => notes.push(body.to_string()),
            }
        }
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::csv(path, e))?;
            let num = |i: usize| -> Result<f64> {
                rec[i]
                    .parse()
                    .map_err(|_| Error::Format(format!("{}: bad number `{}`", path.display(), &rec[i])))
            };
            let cell = |i: usize| -> Result<TableCell> {
                Ok(TableCell {
                    mean: num(i)?,
                    sd_of_mean: num(i + 1)?,
                })
            };
            rows.push(TableRow {
                method: rec[0].to_string(),
                pairing: rec[1].to_string(),
                auroc: cell(2)?,
                aupr_in: cell(4)?,
                aupr_out: cell(6)?,
                n: num(8)? as usize,
                note: rec.get(9).unwrap_or("").to_string(),
            });
        }
        Ok(Table { name, notes, rows })
    }
}

/// A scalar score with its orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdMetric {
    pub name: String,
    pub index: usize,
    pub higher_is_positive: bool,
}

/// Softmax, entropy, and the per-scope l1/l2/min/max gradient statistics.
/// Only the softmax and the gradient minimum grow with confidence.
pub fn threshold_metrics() -> Vec<ThresholdMetric> {
    let mut out = vec![
        ThresholdMetric {
            name: "softmax".into(),
            index: 1,
            higher_is_positive: true,
        },
        ThresholdMetric {
            name: "entropy".into(),
            index: 0,
            higher_is_positive: false,
        },
    ];
    for scope in SCOPES {
        for stat in ["l1", "l2", "min", "max"] {
            let name = format!("{scope}_{stat}");
            out.push(ThresholdMetric {
                index: feature_index(&name).expect("known feature"),
                name,
                higher_is_positive: stat == "min",
            });
        }
    }
    out
}

const EMNIST_C: &str = "emnist_c";

/// Unknown concepts of the known-unknowns table, and the members of its
/// "all" union.
pub const UNION_CONCEPTS: [ConceptTag; 5] = [
    ConceptTag::Omniglot,
    ConceptTag::Notmnist,
    ConceptTag::Cifar10Gray,
    ConceptTag::NormalNoise,
    ConceptTag::UniformNoise,
];

const THRESHOLD_CONCEPTS: [ConceptTag; 3] = [ConceptTag::EmnistLetters, ConceptTag::Cifar10Gray, ConceptTag::UniformNoise];

struct Pairing<'a> {
    name: String,
    negatives: Vec<&'a MetricVector>,
}

fn pairing_name(neg: &str) -> String {
    format!("{EMNIST_C}/{neg}")
}

fn correct_test(f: &MemberFeatures) -> Vec<&MetricVector> {
    f.test.iter().filter(|v| v.correctness == Correctness::Correct).collect()
}

fn wrong_pairing(f: &MemberFeatures) -> Pairing<'_> {
    Pairing {
        name: pairing_name("emnist_w"),
        negatives: f.test.iter().filter(|v| v.correctness == Correctness::Incorrect).collect(),
    }
}

fn threshold_pairings(f: &MemberFeatures) -> Vec<Pairing<'_>> {
    let mut v = vec![wrong_pairing(f)];
    for c in THRESHOLD_CONCEPTS {
        v.push(Pairing {
            name: pairing_name(c.as_str()),
            negatives: f.eval[&c].iter().collect(),
        });
    }
    v
}

/// Size of each concept's share of the "all" union.
fn union_share(f: &MemberFeatures) -> usize {
    UNION_CONCEPTS.iter().map(|c| f.eval[c].len()).min().unwrap_or(0)
}

fn union_pairings(f: &MemberFeatures) -> Vec<Pairing<'_>> {
    let mut v = vec![wrong_pairing(f)];
    for c in UNION_CONCEPTS {
        v.push(Pairing {
            name: pairing_name(c.as_str()),
            negatives: f.eval[&c].iter().collect(),
        });
    }
    let k = union_share(f);
    v.push(Pairing {
        name: pairing_name("all"),
        negatives: UNION_CONCEPTS.iter().flat_map(|c| f.eval[c][..k].iter()).collect(),
    });
    v
}

fn score_pairings(
    positives: &[&MetricVector],
    pairings: &[Pairing<'_>],
    higher_is_positive: bool,
    score: impl Fn(&MetricVector) -> f64,
) -> Result<Vec<EvalResult>> {
    let pos: Vec<ScoredSample> = positives.iter().map(|v| ScoredSample::new(score(v), true)).collect();
    pairings
        .iter()
        .map(|p| {
            let mut s = pos.clone();
            s.extend(p.negatives.iter().map(|v| ScoredSample::new(score(v), false)));
            evaluate(&s, higher_is_positive)
        })
        .collect()
}

/// `results[unit][pairing]` → one row per pairing, aggregating over units.
fn rows_for(method: &str, pairing_names: &[String], results: &[Vec<EvalResult>], note: &str) -> Result<Vec<TableRow>> {
    pairing_names
        .iter()
        .enumerate()
        .map(|(k, pairing)| {
            let col = |f: fn(&EvalResult) -> f64| aggregate(&results.iter().map(|r| f(&r[k])).collect::<Vec<_>>());
            Ok(TableRow {
                method: method.to_string(),
                pairing: pairing.clone(),
                auroc: col(|r| r.auroc)?,
                aupr_in: col(|r| r.aupr_in)?,
                aupr_out: col(|r| r.aupr_out)?,
                n: results.len(),
                note: note.to_string(),
            })
        })
        .collect()
}

fn baseline_rows(
    features: &[MemberFeatures],
    pairings: impl Fn(&MemberFeatures) -> Vec<Pairing<'_>> + Sync,
    metrics: &[ThresholdMetric],
) -> Result<Vec<TableRow>> {
    let names: Vec<String> = pairings(&features[0]).into_iter().map(|p| p.name).collect();
    let mut rows = Vec::new();
    for m in metrics {
        let per_member = features
            .par_iter()
            .map(|f| score_pairings(&correct_test(f), &pairings(f), m.higher_is_positive, |v| v.features[m.index]))
            .collect::<Result<Vec<_>>>()?;
        rows.extend(rows_for(&m.name, &names, &per_member, "")?);
    }
    Ok(rows)
}

pub fn eval_thresholds(features: &[MemberFeatures]) -> Result<Table> {
    check_nonempty(features)?;
    Ok(Table {
        name: "thresholds".into(),
        notes: vec![
            "cells: mean and sd/sqrt(n) over ensemble members; positive case = correctly classified test digits".into(),
        ],
        rows: baseline_rows(features, threshold_pairings, &threshold_metrics())?,
    })
}

fn check_nonempty(features: &[MemberFeatures]) -> Result<()> {
    if features.is_empty() {
        Err(Error::Empty("no ensemble members".into()))
    } else {
        Ok(())
    }
}

fn baseline_metrics() -> Vec<ThresholdMetric> {
    threshold_metrics().into_iter().take(2).collect()
}

pub const REGRESSIONS: [(&str, Regularization); 4] = [
    ("glm", Regularization::GLM),
    ("lasso", Regularization::LASSO),
    ("ridge", Regularization::RIDGE),
    ("elastic_net", Regularization::ELASTIC_NET),
];

/// Logistic meta-classifiers fitted on each member's validation features,
/// scored on the threshold-table pairings.
pub fn eval_regressions(features: &[MemberFeatures]) -> Result<Table> {
    check_nonempty(features)?;
    let names: Vec<String> = threshold_pairings(&features[0]).into_iter().map(|p| p.name).collect();
    let mut rows = baseline_rows(features, threshold_pairings, &baseline_metrics())?;
    let jobs: Vec<(usize, usize)> = (0..features.len()).flat_map(|m| (0..REGRESSIONS.len()).map(move |r| (m, r))).collect();
    let results = jobs
        .par_iter()
        .map(|&(m, r)| {
            let f = &features[m];
            let set = build_meta_training_set(&f.val, &[])?;
            let model = fit_logistic_with(&set.rows, &set.labels, REGRESSIONS[r].1, &SolverConfig::default())?;
            let evals = score_pairings(&correct_test(f), &threshold_pairings(f), true, |v| {
                model.predict(&classifier_row(&v.features))
            })?;
            Ok((evals, model.report.converged))
        })
        .collect::<Result<Vec<_>>>()?;
    for (r, (name, _)) in REGRESSIONS.iter().enumerate() {
        let mine: Vec<&(Vec<EvalResult>, bool)> = jobs.iter().zip(&results).filter(|(j, _)| j.1 == r).map(|(_, x)| x).collect();
        let converged = mine.iter().filter(|x| x.1).count();
        let evals: Vec<Vec<EvalResult>> = mine.iter().map(|x| x.0.clone()).collect();
        rows.extend(rows_for(name, &names, &evals, &format!("converged {converged}/{}", mine.len()))?);
    }
    Ok(Table {
        name: "regressions".into(),
        notes: vec![
            "cells: mean and sd/sqrt(n) over ensemble members; models fitted on validation features (entropy + gradient statistics, standardized)".into(),
            "penalties on summed logistic loss: glm (0,0) lasso (1,0) ridge (0,1) elastic_net (0.5,0.5)".into(),
        ],
        rows,
    })
}

/// Meta-MLPs trained on validation features plus 200-sample unknown-concept
/// augmentations, per variant × meta seed × member.
pub fn eval_known_unknowns(cfg: &ExperimentConfig, features: &[MemberFeatures]) -> Result<Table> {
    check_nonempty(features)?;
    let names: Vec<String> = union_pairings(&features[0]).into_iter().map(|p| p.name).collect();
    let mut rows = baseline_rows(features, union_pairings, &baseline_metrics())?;
    let mut jobs = Vec::new();
    for v in AugmentVariant::ALL {
        for m in 0..features.len() {
            for s in 0..cfg.n_meta_seeds {
                jobs.push((v, m, s));
            }
        }
    }
    let results = jobs
        .par_iter()
        .map(|&(v, m, s)| {
            let f = &features[m];
            let extras: Vec<Extra<'_>> = v
                .extra_concepts()
                .iter()
                .map(|&c| Extra {
                    concept: c,
                    pool: &f.aug[&c],
                    count: cfg.augment_size,
                })
                .collect();
            let set = build_meta_training_set(&f.val, &extras)?;
            let seed = MemberSeeds::for_member(cfg.master_seed, f.member).meta(v.index(), s);
            let model = fit_mlp_meta_with(&set.rows, &set.labels, seed, &cfg.train)?;
            score_pairings(&correct_test(f), &union_pairings(f), true, |x| model.score(&classifier_row(&x.features)))
        })
        .collect::<Result<Vec<_>>>()?;
    for v in AugmentVariant::ALL {
        let evals: Vec<Vec<EvalResult>> = jobs
            .iter()
            .zip(&results)
            .filter(|(j, _)| j.0 == v)
            .map(|(_, r)| r.clone())
            .collect();
        rows.extend(rows_for(&format!("mlp[{}]", v.as_str()), &names, &evals, "")?);
    }
    let k = union_share(&features[0]);
    Ok(Table {
        name: "known_unknowns".into(),
        notes: vec![
            format!(
                "cells: mean and sd/sqrt(n); mlp rows over {} members x {} meta seeds",
                features.len(),
                cfg.n_meta_seeds
            ),
            format!(
                "all = first {k} evaluation samples of each of {}",
                UNION_CONCEPTS.map(|c| c.as_str()).join(", ")
            ),
            format!(
                "augmentation: {} held-out samples per added concept, labeled incorrect",
                cfg.augment_size
            ),
        ],
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuditReport {
    pub member: usize,
    pub n_fit_ids: usize,
    pub n_eval_ids: usize,
}

/// Checks that no evaluation sample (test digits, unknown-concept
/// evaluation parts) was used for training, validation or augmentation.
pub fn audit_sample_ids(member: &Member, f: &MemberFeatures) -> Result<AuditReport> {
    let mut fit: HashSet<String> = member.split.train_idx.iter().map(|&i| digit_id(i)).collect();
    fit.extend(f.val.iter().map(|v| v.sample_id.clone()));
    fit.extend(f.aug.values().flatten().map(|v| v.sample_id.clone()));
    let eval: Vec<&str> = f
        .test
        .iter()
        .chain(f.eval.values().flatten())
        .map(|v| v.sample_id.as_str())
        .collect();
    let clashes: Vec<&str> = eval.iter().copied().filter(|id| fit.contains(*id)).collect();
    if let Some(first) = clashes.first() {
        return Err(Error::AuditFailed {
            member: member.index,
            overlap: clashes.len(),
            example: first.to_string(),
        });
    }
    Ok(AuditReport {
        member: member.index,
        n_fit_ids: fit.len(),
        n_eval_ids: eval.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalTables {
    pub thresholds: Table,
    pub regressions: Table,
    pub known_unknowns: Table,
    pub audits: Vec<AuditReport>,
}

impl EvalTables {
    pub fn all(&self) -> [&Table; 3] {
        [&self.thresholds, &self.regressions, &self.known_unknowns]
    }
}

pub const TABLE_NAMES: [&str; 3] = ["thresholds", "regressions", "known_unknowns"];

/// Runs the audit and all three experiments from the extracted features
/// and writes `tables/<name>.csv`.
pub fn run_eval(cfg: &ExperimentConfig, progress: &(dyn Fn(&str) + Sync)) -> Result<EvalTables> {
    cfg.validate()?;
    let features = load_all_features(cfg)?;
    let ensemble = load_ensemble(cfg)?;
    let audits = ensemble
        .iter()
        .zip(&features)
        .map(|(m, f)| audit_sample_ids(m, f))
        .collect::<Result<Vec<_>>>()?;
    progress(&format!("sample-id audit passed for {} members", audits.len()));
    let pool = cfg.thread_pool()?;
    let tables = pool.install(|| -> Result<EvalTables> {
        let thresholds = eval_thresholds(&features)?;
        progress("thresholds table done");
        let regressions = eval_regressions(&features)?;
        progress("regressions table done");
        let known_unknowns = eval_known_unknowns(cfg, &features)?;
        progress("known-unknowns table done");
        Ok(EvalTables {
            thresholds,
            regressions,
            known_unknowns,
            audits,
        })
    })?;
    for t in tables.all() {
        write_atomic(&cfg.tables_dir().join(format!("{}.csv", t.name)), t.to_csv(&cfg.header()).as_bytes())?;
    }
    Ok(tables)
}
