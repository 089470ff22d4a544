//! End-to-end stage runs on a miniature dataset.

mod common;

use std::collections::BTreeSet;

use gradmeta::experiment::{
    load_all_features, run_all, run_bootstrap, run_eval, run_extract, run_report, MemberStatus, TABLE_NAMES,
};
use gradmeta::Error;

fn quiet(_: &str) {}

#[test]
fn full_pipeline_outputs_resume_and_determinism() {
    let root = tempfile::tempdir().unwrap();
    let data = common::write_toy_data(&root.path().join("data"));
    let cfg = common::toy_config(data.clone(), &root.path().join("run_a"));

    // eval before extract names the missing stage output
    let first = run_bootstrap(&cfg, &quiet).unwrap();
    assert!(first.members.iter().all(|m| matches!(m.status, MemberStatus::Trained { .. })));
    let err = run_eval(&cfg, &quiet).unwrap_err();
    assert!(matches!(err, Error::MissingArtifact(ref p) if p.contains("features/")), "{err}");

    let tables = run_all(&cfg, &quiet).unwrap();
    // retraining is skipped once checkpoints exist
    let again = run_bootstrap(&cfg, &quiet).unwrap();
    assert!(again.members.iter().all(|m| matches!(m.status, MemberStatus::Skipped)));

    for name in TABLE_NAMES {
        assert!(cfg.tables_dir().join(format!("{name}.csv")).exists());
        assert!(cfg.tables_dir().join(format!("{name}.txt")).exists());
        let text = std::fs::read_to_string(cfg.tables_dir().join(format!("{name}.csv"))).unwrap();
        assert!(text.starts_with("# gradmeta") && text.contains("scale=desk seed=42"));
    }
    assert!(cfg.manifest_path().exists());

    for t in tables.all() {
        for r in &t.rows {
            for c in [r.auroc, r.aupr_in, r.aupr_out] {
                assert!((0.0..=1.0).contains(&c.mean) && c.sd_of_mean >= 0.0, "{r:?}");
            }
        }
    }
    let ku = &tables.known_unknowns;
    let mlp = ku.rows.iter().find(|r| r.method.starts_with("mlp")).unwrap();
    assert_eq!(mlp.n, cfg.n_cnns * cfg.n_meta_seeds);
    assert_eq!(tables.thresholds.get("entropy", "emnist_c/emnist_w").unwrap().n, cfg.n_cnns);

    // distribution rows: every test and unknown-evaluation sample × 3 metrics
    let features = load_all_features(&cfg).unwrap();
    let f = &features[0];
    let expected = 3 * (f.test.len() + f.eval.values().map(Vec::len).sum::<usize>());
    let dist = std::fs::read_to_string(cfg.distributions_dir().join("member_0.csv")).unwrap();
    let data_rows = dist.lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert_eq!(data_rows, expected);

    // re-emission is byte-identical
    let before = std::fs::read(cfg.distributions_dir().join("member_0.csv")).unwrap();
    run_report(&cfg).unwrap();
    assert_eq!(before, std::fs::read(cfg.distributions_dir().join("member_0.csv")).unwrap());

    // augmentation ids never appear among evaluation ids
    let eval_ids: BTreeSet<&str> = f.eval.values().flatten().map(|v| v.sample_id.as_str()).collect();
    assert!(f.aug.values().flatten().all(|v| !eval_ids.contains(v.sample_id.as_str())));

    // a second run from scratch with the same seed produces identical tables
    let cfg_b = common::toy_config(data, &root.path().join("run_b"));
    run_all(&cfg_b, &quiet).unwrap();
    for name in TABLE_NAMES {
        let a = std::fs::read(cfg.tables_dir().join(format!("{name}.csv"))).unwrap();
        let b = std::fs::read(cfg_b.tables_dir().join(format!("{name}.csv"))).unwrap();
        assert_eq!(a, b, "table {name} differs between runs");
    }
}

#[test]
fn extract_without_models_names_checkpoint() {
    let root = tempfile::tempdir().unwrap();
    let data = common::write_toy_data(&root.path().join("data"));
    let cfg = common::toy_config(data, &root.path().join("run"));
    let err = run_extract(&cfg, &quiet).unwrap_err();
    assert!(matches!(err, Error::MissingArtifact(ref p) if p.contains("member_0.gmc")), "{err}");
}

#[test]
fn oversized_split_is_reported() {
    let root = tempfile::tempdir().unwrap();
    let data = common::write_toy_data(&root.path().join("data"));
    let mut cfg = common::toy_config(data, &root.path().join("run"));
    cfg.test_size = 10_000;
    assert!(matches!(run_bootstrap(&cfg, &quiet), Err(Error::SplitOverflow { .. })));
}
