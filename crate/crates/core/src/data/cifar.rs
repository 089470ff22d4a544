//! CIFAR-10 binary batches: records of 1 label byte followed by 3072 pixel
//! bytes laid out as three 32×32 planes (R, G, B).

use std::fs;
use std::path::Path;

use super::image::{area_resize, Image28, SIDE};
use crate::error::{Error, Result};

pub const RECORD: usize = 3073;
pub const CIFAR_SIDE: usize = 32;
const PLANE: usize = CIFAR_SIDE * CIFAR_SIDE;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage32 {
    pub label: u8,
    /// Channel-planar bytes: R plane, G plane, B plane.
    pub planes: Vec<u8>,
}

impl RgbImage32 {
    pub fn pixel(&self, row: usize, col: usize) -> [u8; 3] {
        let i = row * CIFAR_SIDE + col;
        [self.planes[i], self.planes[PLANE + i], self.planes[2 * PLANE + i]]
    }
}

pub fn read_cifar10_bin(path: &Path) -> Result<Vec<RgbImage32>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_cifar10(&bytes, path)
}

pub fn parse_cifar10(bytes: &[u8], path: &Path) -> Result<Vec<RgbImage32>> {
    if bytes.len() % RECORD != 0 {
        return Err(Error::CifarSize {
            path: path.to_path_buf(),
            len: bytes.len() as u64,
        });
    }
    Ok(bytes
        .chunks_exact(RECORD)
        .map(|r| RgbImage32 {
            label: r[0],
            planes: r[1..].to_vec(),
        })
        .collect())
}

pub fn encode_cifar10(images: &[RgbImage32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(images.len() * RECORD);
    for img in images {
        out.push(img.label);
        out.extend_from_slice(&img.planes);
    }
    out
}

/// Luminance `0.299R + 0.587G + 0.114B` on the unit scale, as a 32×32 raster.
pub fn luminance(rgb: &RgbImage32) -> Vec<f64> {
    (0..PLANE)
        .map(|i| {
            let r = f64::from(rgb.planes[i]) / 255.0;
            let g = f64::from(rgb.planes[PLANE + i]) / 255.0;
            let b = f64::from(rgb.planes[2 * PLANE + i]) / 255.0;
            0.299 * r + 0.587 * g + 0.114 * b
        })
        .collect()
}

/// Gray-scale conversion followed by a 32→28 area-average downscale.
pub fn to_gray28(rgb: &RgbImage32) -> Image28 {
    let y = luminance(rgb);
    let small = area_resize(&y, CIFAR_SIDE, CIFAR_SIDE, SIDE, SIDE);
    let clamped: Vec<f64> = small.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
    Image28::from_f64(&clamped).expect("clamped to unit range")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solid(r: u8, g: u8, b: u8) -> RgbImage32 {
        let mut planes = vec![r; PLANE];
        planes.extend(vec![g; PLANE]);
        planes.extend(vec![b; PLANE]);
        RgbImage32 { label: 3, planes }
    }

    #[test]
    fn two_record_fixture() {
        let mut a = solid(0, 0, 0);
        a.planes[0] = 10; // R at (0,0)
        a.planes[PLANE + 31] = 20; // G at (0,31)
        let mut b = solid(255, 255, 255);
        b.label = 9;
        b.planes[2 * PLANE + PLANE - 1] = 7; // B at (31,31)
        let bytes = encode_cifar10(&[a.clone(), b.clone()]);
        let parsed = parse_cifar10(&bytes, Path::new("x")).unwrap();
        assert_eq!(parsed, vec![a, b]);
        assert_eq!(parsed[0].pixel(0, 0), [10, 0, 0]);
        assert_eq!(parsed[0].pixel(0, 31), [0, 20, 0]);
        assert_eq!(parsed[1].pixel(31, 31), [255, 255, 7]);
        assert_eq!(parsed[1].label, 9);
    }

    #[test]
    fn record_count_arithmetic() {
        assert_eq!(parse_cifar10(&vec![0u8; 3073], Path::new("x")).unwrap().len(), 1);
        assert!(matches!(
            parse_cifar10(&vec![0u8; 3074], Path::new("x")),
            Err(Error::CifarSize { len: 3074, .. })
        ));
    }

    #[test]
    fn constant_gray_is_preserved() {
        let img = to_gray28(&solid(51, 51, 51));
        for &p in img.pixels() {
            assert!((f64::from(p) - 0.2).abs() < 1e-6);
        }
    }

    #[test]
    fn pure_red_maps_to_luma_weight() {
        let img = to_gray28(&solid(255, 0, 0));
        for &p in img.pixels() {
            assert!((f64::from(p) - 0.299).abs() < 1e-6);
        }
    }
}
