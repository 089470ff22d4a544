//! Feature-matrix CSV: `sample_id,concept,correctness,<37 feature columns>`,
//! preceded by `#` comment lines carrying run metadata. Floats are written
//! in shortest round-trip exponent form so a read-back is bit-exact.

use std::path::Path;

use super::{feature_names, Correctness, MetricVector, N_FEATURES};
use crate::data::ConceptTag;
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub comments: Vec<String>,
    pub rows: Vec<MetricVector>,
}

pub fn encode_features_csv(rows: &[MetricVector], comments: &[String]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for c in comments {
        out.extend_from_slice(format!("# {c}\n").as_bytes());
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["sample_id".to_string(), "concept".into(), "correctness".into()];
    header.extend(feature_names());
    w.write_record(&header).map_err(|e| Error::csv("<memory>", e))?;
    let mut rec = Vec::with_capacity(3 + N_FEATURES);
    for r in rows {
        rec.clear();
        rec.push(r.sample_id.clone());
        rec.push(r.concept.as_str().to_string());
        rec.push(r.correctness.as_str().to_string());
        rec.extend(r.features.iter().map(|v| format!("{v:e}")));
        w.write_record(&rec).map_err(|e| Error::csv("<memory>", e))?;
    }
    w.into_inner()
        .map_err(|e| Error::Format(format!("csv flush: {e}")))
}

pub fn write_features_csv(path: &Path, rows: &[MetricVector], comments: &[String]) -> Result<()> {
    write_atomic(path, &encode_features_csv(rows, comments)?)
}

pub fn read_features_csv(path: &Path) -> Result<FeatureTable> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let comments = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .map(|l| l.trim_start_matches('#').trim().to_string())
        .collect();
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    let mut expected = vec!["sample_id".to_string(), "concept".into(), "correctness".into()];
    expected.extend(feature_names());
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::Format(format!("{}: unexpected feature header", path.display())));
    }
    let bad = |what: &str, line: usize| Error::Format(format!("{}:{line}: bad {what}", path.display()));
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let concept: ConceptTag = rec[1].parse().map_err(|_| bad("concept", i))?;
        let correctness = Correctness::parse(&rec[2]).ok_or_else(|| bad("correctness", i))?;
        let mut features = [0.0; N_FEATURES];
        for (k, f) in features.iter_mut().enumerate() {
            *f = rec[3 + k].parse().map_err(|_| bad("number", i))?;
        }
        rows.push(MetricVector {
            sample_id: rec[0].to_string(),
            concept,
            correctness,
            features,
        });
    }
    Ok(FeatureTable { comments, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(vals in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::ZERO | proptest::num::f64::SUBNORMAL, N_FEATURES)) {
            let mut features = [0.0; N_FEATURES];
            features.copy_from_slice(&vals);
            let row = MetricVector {
                sample_id: "emnist_digits:test:17".into(),
                concept: ConceptTag::EmnistDigits,
                correctness: Correctness::Incorrect,
                features,
            };
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("f.csv");
            write_features_csv(&p, std::slice::from_ref(&row), &["scale=desk seed=1".into()]).unwrap();
            let back = read_features_csv(&p).unwrap();
            prop_assert_eq!(back.comments, vec!["scale=desk seed=1".to_string()]);
            prop_assert_eq!(back.rows.len(), 1);
            for (a, b) in back.rows[0].features.iter().zip(&row.features) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn rejects_foreign_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        std::fs::write(&p, "a,b,c\n1,2,3\n").unwrap();
        assert!(read_features_csv(&p).is_err());
    }
}
