//! Plain-text table rendering, plot-ready distribution files, and the run
//! manifest.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::evaluate::{Table, TABLE_NAMES};
use super::extract::{load_all_features, MemberFeatures};
use super::sources::UNKNOWN_CONCEPTS;
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::metrics::feature_index;
use crate::seed::MemberSeeds;

/// Metrics shown in the distribution plots.
pub const DISTRIBUTION_METRICS: [&str; 3] = ["entropy", "all_l2", "all_min"];

/// Long-format `concept,correctness,metric,value` rows for one member:
/// test digits (split by correctness) and every unknown concept's
/// evaluation part.
pub fn distribution_csv(cfg: &ExperimentConfig, f: &MemberFeatures) -> (String, usize) {
    let idx: Vec<usize> = DISTRIBUTION_METRICS
        .iter()
        .map(|m| feature_index(m).expect("known feature"))
        .collect();
    let mut s = format!("# {}\n# member={}\nconcept,correctness,metric,value\n", cfg.header(), f.member);
    let mut n = 0;
    let parts = std::iter::once(&f.test).chain(UNKNOWN_CONCEPTS.iter().map(|c| &f.eval[c]));
    for rows in parts {
        for v in rows {
            for (name, &i) in DISTRIBUTION_METRICS.iter().zip(&idx) {
                writeln!(s, "{},{},{},{:e}", v.concept, v.correctness.as_str(), name, v.features[i]).expect("string write");
                n += 1;
            }
        }
    }
    (s, n)
}

pub fn emit_distributions(cfg: &ExperimentConfig, features: &[MemberFeatures]) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for f in features {
        let path = cfg.distributions_dir().join(format!("member_{}.csv", f.member));
        write_atomic(&path, distribution_csv(cfg, f).0.as_bytes())?;
        paths.push(path);
    }
    Ok(paths)
}

/// Aligned plain-text rendering, one line per row.
pub fn render_table(t: &Table, header: &str) -> String {
    let cell = |m: f64, s: f64| format!("{m:.4} ± {s:.4}");
    let mut lines: Vec<[String; 7]> = vec![[
        "method".into(),
        "pairing".into(),
        "AUROC".into(),
        "AUPR-In".into(),
        "AUPR-Out".into(),
        "n".into(),
        "note".into(),
    ]];
    for r in &t.rows {
        lines.push([
            r.method.clone(),
            r.pairing.clone(),
            cell(r.auroc.mean, r.auroc.sd_of_mean),
            cell(r.aupr_in.mean, r.aupr_in.sd_of_mean),
            cell(r.aupr_out.mean, r.aupr_out.sd_of_mean),
            r.n.to_string(),
            r.note.clone(),
        ]);
    }
    let widths: Vec<usize> = (0..7)
        .map(|c| lines.iter().map(|l| l[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = format!("{header}\ntable: {}\n", t.name);
    for n in &t.notes {
        writeln!(out, "{n}").expect("string write");
    }
    out.push('\n');
    for l in &lines {
        let cells: Vec<String> = l
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        writeln!(out, "{}", cells.join("  ").trim_end()).expect("string write");
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOutput {
    pub tables: Vec<PathBuf>,
    pub distributions: Vec<PathBuf>,
}

/// Renders `tables/*.csv` to `tables/*.txt` and writes the distribution
/// files.
pub fn run_report(cfg: &ExperimentConfig) -> Result<ReportOutput> {
    let mut tables = Vec::new();
    for name in TABLE_NAMES {
        let csv = cfg.tables_dir().join(format!("{name}.csv"));
        if !csv.exists() {
            return Err(Error::MissingArtifact(format!("{} (run the eval stage first)", csv.display())));
        }
        let t = Table::read_csv(&csv)?;
        let txt = cfg.tables_dir().join(format!("{name}.txt"));
        write_atomic(&txt, render_table(&t, &cfg.header()).as_bytes())?;
        tables.push(txt);
    }
    let features = load_all_features(cfg)?;
    let distributions = emit_distributions(cfg, &features)?;
    Ok(ReportOutput { tables, distributions })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub config: ExperimentConfig,
    pub member_seeds: Vec<MemberSeeds>,
    pub stages: Vec<String>,
}

/// Records the configuration, derived seeds, and completed stages in
/// `run_manifest.json`.
pub fn record_stage(cfg: &ExperimentConfig, stage: &str) -> Result<()> {
    let path = cfg.manifest_path();
    let mut stages = std::fs::read(&path)
        .ok()
        .and_then(|b| serde_json::from_slice::<Manifest>(&b).ok())
        .map(|m| m.stages)
        .unwrap_or_default();
    if !stages.iter().any(|s| s == stage) {
        stages.push(stage.to_string());
    }
    let m = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        member_seeds: (0..cfg.n_cnns).map(|i| MemberSeeds::for_member(cfg.master_seed, i)).collect(),
        stages,
    };
    let json = serde_json::to_vec_pretty(&m).map_err(|e| Error::Format(format!("manifest: {e}")))?;
    write_atomic(&path, &json)
}
