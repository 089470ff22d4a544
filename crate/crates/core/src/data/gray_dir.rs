use std::fs;
use std::path::{Path, PathBuf};

use super::image::{area_resize, Image28, SIDE};
use super::{ConceptTag, LabeledSet};
use crate::error::{Error, Result};

const EXTENSIONS: [&str; 4] = ["png", "pgm", "pnm", "pbm"];

#[derive(Debug, Clone, PartialEq)]
pub struct GrayDirReport {
    pub set: LabeledSet,
    pub skipped: Vec<PathBuf>,
}

fn decode(path: &Path, invert: bool) -> Option<Image28> {
    let img = image::open(path).ok()?.to_luma8();
    let (w, h) = img.dimensions();
    if w == 0 || h == 0 {
        return None;
    }
    let raw: Vec<f64> = img
        .as_raw()
        .iter()
        .map(|&b| {
            let v = f64::from(b) / 255.0;
            if invert {
                1.0 - v
            } else {
                v
            }
        })
        .collect();
    let small = area_resize(&raw, w as usize, h as usize, SIDE, SIDE);
    let clamped: Vec<f64> = small.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
    Image28::from_f64(&clamped).ok()
}

/// Loads every PNG/PGM file of a directory (sorted by file name) as a
/// 28×28 image. `invert` flips polarity for dark-on-light sources so the
/// result matches the bright-foreground digit convention. Files that fail
/// to decode are skipped and reported.
pub fn load_gray_dir(dir: &Path, invert: bool, concept: ConceptTag) -> Result<GrayDirReport> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        })
        .collect();
    paths.sort();
    let mut images = Vec::with_capacity(paths.len());
    let mut skipped = Vec::new();
    for p in paths {
        match decode(&p, invert) {
            Some(img) => images.push(img),
            None => skipped.push(p),
        }
    }
    if !skipped.is_empty() {
        log::warn!("{}: skipped {} undecodable files", dir.display(), skipped.len());
    }
    Ok(GrayDirReport {
        set: LabeledSet::unlabeled(concept, images),
        skipped,
    })
}
