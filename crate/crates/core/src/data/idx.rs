//! IDX container (MNIST/EMNIST distribution format).
//!
//! Header: big-endian magic (`0x00000803` for u8 images, `0x00000801` for u8
//! labels), then one big-endian u32 per dimension, then raw bytes.

use std::fs;
use std::path::Path;

use super::image::{Image28, PIXELS, SIDE};
use crate::error::{Error, Result};

pub const MAGIC_IMAGES: u32 = 0x0000_0803;
pub const MAGIC_LABELS: u32 = 0x0000_0801;

/// Raster convention of the file. EMNIST ships every image transposed
/// relative to MNIST.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    #[default]
    Upright,
    Transposed,
}

#[derive(Debug, Clone, PartialEq)]
pub enum IdxData {
    Images(Vec<Image28>),
    Labels(Vec<u8>),
}

fn be_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_be_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

pub fn read_idx(path: &Path, orientation: Orientation) -> Result<IdxData> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_idx(&bytes, path, orientation)
}

pub fn parse_idx(bytes: &[u8], path: &Path, orientation: Orientation) -> Result<IdxData> {
    let truncated = |expected: usize| Error::Truncated {
        path: path.to_path_buf(),
        expected: expected as u64,
        found: bytes.len() as u64,
    };
    if bytes.len() < 4 {
        return Err(truncated(4));
    }
    let magic = be_u32(bytes, 0);
    let ndim = match magic {
        MAGIC_IMAGES => 3,
        MAGIC_LABELS => 1,
        found => {
            return Err(Error::BadMagic {
                path: path.to_path_buf(),
                found,
                expected: "0x00000801 or 0x00000803",
            })
        }
    };
    let header = 4 + 4 * ndim;
    if bytes.len() < header {
        return Err(truncated(header));
    }
    let dims: Vec<usize> = (0..ndim).map(|d| be_u32(bytes, 4 + 4 * d) as usize).collect();
    let payload: usize = dims.iter().product();
    if bytes.len() < header + payload {
        return Err(truncated(header + payload));
    }
    if bytes.len() > header + payload {
        return Err(Error::DimensionMismatch {
            path: path.to_path_buf(),
            detail: format!(
                "header declares {payload} payload bytes, file carries {}",
                bytes.len() - header
            ),
        });
    }
    let data = &bytes[header..];
    if ndim == 1 {
        return Ok(IdxData::Labels(data.to_vec()));
    }
    if dims[1] != SIDE || dims[2] != SIDE {
        return Err(Error::DimensionMismatch {
            path: path.to_path_buf(),
            detail: format!("images are {}×{}, expected 28×28", dims[1], dims[2]),
        });
    }
    let images = data
        .chunks_exact(PIXELS)
        .map(|raw| {
            let img = Image28::new(raw.iter().map(|&b| f32::from(b) / 255.0).collect())
                .expect("u8/255 is in range");
            match orientation {
                Orientation::Upright => img,
                Orientation::Transposed => img.transposed(),
            }
        })
        .collect();
    Ok(IdxData::Images(images))
}

/// Reads an image/label file pair and checks the counts agree.
pub fn read_idx_pair(
    images: &Path,
    labels: &Path,
    orientation: Orientation,
) -> Result<(Vec<Image28>, Vec<u8>)> {
    let imgs = match read_idx(images, orientation)? {
        IdxData::Images(v) => v,
        IdxData::Labels(_) => {
            return Err(Error::DimensionMismatch {
                path: images.to_path_buf(),
                detail: "expected an image file, found labels".into(),
            })
        }
    };
    let labs = match read_idx(labels, orientation)? {
        IdxData::Labels(v) => v,
        IdxData::Images(_) => {
            return Err(Error::DimensionMismatch {
                path: labels.to_path_buf(),
                detail: "expected a label file, found images".into(),
            })
        }
    };
    if imgs.len() != labs.len() {
        return Err(Error::DimensionMismatch {
            path: labels.to_path_buf(),
            detail: format!("{} images but {} labels", imgs.len(), labs.len()),
        });
    }
    Ok((imgs, labs))
}

/// Serializes 28×28 u8 rasters (row-major, as stored) into IDX bytes.
pub fn encode_idx_images(rasters: &[[u8; PIXELS]]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + rasters.len() * PIXELS);
    out.extend_from_slice(&MAGIC_IMAGES.to_be_bytes());
    out.extend_from_slice(&(rasters.len() as u32).to_be_bytes());
    out.extend_from_slice(&(SIDE as u32).to_be_bytes());
    out.extend_from_slice(&(SIDE as u32).to_be_bytes());
    for r in rasters {
        out.extend_from_slice(r);
    }
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&MAGIC_LABELS.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raster(seed: u8) -> [u8; PIXELS] {
        let mut r = [0u8; PIXELS];
        for (i, v) in r.iter_mut().enumerate() {
            *v = (i as u8).wrapping_mul(seed).wrapping_add(seed);
        }
        r
    }

    #[test]
    fn four_image_fixture_round_trips() {
        let rasters: Vec<_> = (1..=4).map(raster).collect();
        let bytes = encode_idx_images(&rasters);
        let IdxData::Images(imgs) = parse_idx(&bytes, Path::new("x"), Orientation::Upright).unwrap() else {
            panic!("expected images");
        };
        assert_eq!(imgs.len(), 4);
        for (img, r) in imgs.iter().zip(&rasters) {
            for (p, &b) in img.pixels().iter().zip(r.iter()) {
                assert_eq!((p * 255.0).round() as u8, b);
            }
        }
    }

    #[test]
    fn labels_identity() {
        let bytes = encode_idx_labels(&[0, 1, 2, 3, 4, 5, 6, 7, 8, 9]);
        let parsed = parse_idx(&bytes, Path::new("x"), Orientation::Upright).unwrap();
        assert_eq!(parsed, IdxData::Labels((0..10).collect()));
    }

    #[test]
    fn bad_magic() {
        let mut bytes = encode_idx_labels(&[1, 2]);
        bytes[3] = 0x02;
        assert!(matches!(
            parse_idx(&bytes, Path::new("x"), Orientation::Upright),
            Err(Error::BadMagic { found: 0x0000_0802, .. })
        ));
    }

    #[test]
    fn truncated_payload() {
        let bytes = encode_idx_images(&[raster(3)]);
        assert!(matches!(
            parse_idx(&bytes[..bytes.len() - 1], Path::new("x"), Orientation::Upright),
            Err(Error::Truncated { .. })
        ));
        assert!(matches!(
            parse_idx(&bytes[..10], Path::new("x"), Orientation::Upright),
            Err(Error::Truncated { .. })
        ));
    }

    #[test]
    fn wrong_raster_size() {
        let mut bytes = encode_idx_images(&[raster(3)]);
        bytes[11] = 27;
        bytes[15] = 29;
        assert!(matches!(
            parse_idx(&bytes, Path::new("x"), Orientation::Upright),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn transposed_orientation_fix() {
        // a single bright pixel at stored (row 2, col 5) must land at (5, 2)
        let mut r = [0u8; PIXELS];
        r[2 * SIDE + 5] = 255;
        let bytes = encode_idx_images(&[r]);
        let IdxData::Images(imgs) = parse_idx(&bytes, Path::new("x"), Orientation::Transposed).unwrap() else {
            panic!()
        };
        assert_eq!(imgs[0].get(5, 2), 1.0);
        assert_eq!(imgs[0].get(2, 5), 0.0);
    }
}
