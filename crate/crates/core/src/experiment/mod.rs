//! Orchestration of the three experiments over a bootstrap ensemble, as
//! resumable stages: train → extract → eval → report.
//!
//! Output layout under `out_dir`: `models/`, `features/`, `tables/`,
//! `distributions/`, `cache/` and `run_manifest.json`.

mod bootstrap;
mod config;
mod evaluate;
mod extract;
mod report;
mod sources;

pub use bootstrap::{load_ensemble, load_member, run_bootstrap, save_member, BootstrapReport, Member, MemberReport, MemberStatus};
pub use config::{DataPaths, ExperimentConfig, Scale};
pub use evaluate::{
    aggregate, audit_sample_ids, eval_known_unknowns, eval_regressions, eval_thresholds, run_eval, threshold_metrics,
    AuditReport, EvalTables, Table, TableCell, TableRow, ThresholdMetric, REGRESSIONS, TABLE_NAMES, UNION_CONCEPTS,
};
pub use extract::{load_all_features, load_member_features, part_names, run_extract, MemberFeatures};
pub use report::{distribution_csv, emit_distributions, record_stage, render_table, run_report, Manifest, ReportOutput, DISTRIBUTION_METRICS};
pub use sources::{digit_id, load_concept_pool, load_digits, ConceptPool, AUGMENT_CONCEPTS, UNKNOWN_CONCEPTS};

use crate::error::{Error, Result};

/// Runs every stage in order; stages skip work whose outputs exist.
pub fn run_all(cfg: &ExperimentConfig, progress: &(dyn Fn(&str) + Sync)) -> Result<EvalTables> {
    let report = run_bootstrap(cfg, progress)?;
    if let Some((member, e)) = report.failures().next() {
        return Err(Error::Config(format!("member {member} failed to train: {e}")));
    }
    record_stage(cfg, "train")?;
    run_extract(cfg, progress)?;
    record_stage(cfg, "extract")?;
    let tables = run_eval(cfg, progress)?;
    record_stage(cfg, "eval")?;
    run_report(cfg)?;
    record_stage(cfg, "report")?;
    Ok(tables)
}
