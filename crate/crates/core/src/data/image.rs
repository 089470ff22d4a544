use crate::error::{Error, Result};

pub const SIDE: usize = 28;
pub const PIXELS: usize = SIDE * SIDE;

/// A 28×28 single-channel image with every pixel in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image28(Vec<f32>);

impl Image28 {
    pub fn new(pixels: Vec<f32>) -> Result<Self> {
        if pixels.len() != PIXELS {
            return Err(Error::InvalidImage(format!(
                "expected {PIXELS} pixels, got {}",
                pixels.len()
            )));
        }
        if let Some(v) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidImage(format!("pixel value {v} outside [0, 1]")));
        }
        Ok(Self(pixels))
    }

    pub fn from_f64(pixels: &[f64]) -> Result<Self> {
        Self::new(pixels.iter().map(|&v| v as f32).collect())
    }

    pub fn zeros() -> Self {
        Self(vec![0.0; PIXELS])
    }

    pub fn pixels(&self) -> &[f32] {
        &self.0
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.0[row * SIDE + col]
    }

    pub fn transposed(&self) -> Self {
        let mut out = vec![0.0; PIXELS];
        for r in 0..SIDE {
            for c in 0..SIDE {
                out[c * SIDE + r] = self.0[r * SIDE + c];
            }
        }
        Self(out)
    }
}

impl AsRef<[f32]> for Image28 {
    fn as_ref(&self) -> &[f32] {
        &self.0
    }
}

/// Area-average resampling of a `src_w × src_h` raster to `dst_w × dst_h`.
///
/// Each output pixel is the mean of the source region it covers, with
/// partially covered source pixels weighted by their overlap. Separable:
/// rows first, then columns.
pub fn area_resize(src: &[f64], src_w: usize, src_h: usize, dst_w: usize, dst_h: usize) -> Vec<f64> {
    assert_eq!(src.len(), src_w * src_h);
    let wx = overlap_weights(src_w, dst_w);
    let wy = overlap_weights(src_h, dst_h);
    let mut tmp = vec![0.0; src_h * dst_w];
    for y in 0..src_h {
        let row = &src[y * src_w..(y + 1) * src_w];
        for (x, taps) in wx.iter().enumerate() {
            tmp[y * dst_w + x] = taps.iter().map(|&(i, w)| w * row[i]).sum();
        }
    }
    let mut out = vec![0.0; dst_w * dst_h];
    for (y, taps) in wy.iter().enumerate() {
        for x in 0..dst_w {
            out[y * dst_w + x] = taps.iter().map(|&(i, w)| w * tmp[i * dst_w + x]).sum();
        }
    }
    out
}

/// For each output cell, the (source index, normalized overlap) pairs.
fn overlap_weights(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|o| {
            let lo = o as f64 * scale;
            let hi = (o + 1) as f64 * scale;
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(src);
            let mut taps: Vec<(usize, f64)> = (first..last)
                .map(|i| {
                    let a = lo.max(i as f64);
                    let b = hi.min((i + 1) as f64);
                    (i, (b - a).max(0.0) / scale)
                })
                .filter(|&(_, w)| w > 0.0)
                .collect();
            // renormalize away rounding drift so constants are preserved exactly
            let total: f64 = taps.iter().map(|t| t.1).sum();
            taps.iter_mut().for_each(|t| t.1 /= total);
            taps
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_images() {
        assert!(Image28::new(vec![0.0; 783]).is_err());
        let mut px = vec![0.0; PIXELS];
        px[3] = 1.5;
        assert!(Image28::new(px).is_err());
    }

    #[test]
    fn identity_resize() {
        let src: Vec<f64> = (0..PIXELS).map(|i| (i % 255) as f64 / 255.0).collect();
        let out = area_resize(&src, 28, 28, 28, 28);
        assert_eq!(src, out);
    }

    #[test]
    fn integer_ratio_is_block_mean() {
        let src: Vec<f64> = (0..16).map(|i| i as f64).collect();
        let out = area_resize(&src, 4, 4, 2, 2);
        assert_eq!(out, vec![2.5, 4.5, 10.5, 12.5]);
    }

    #[test]
    fn constants_preserved_for_fractional_ratio() {
        let src = vec![0.37; 32 * 32];
        for v in area_resize(&src, 32, 32, 28, 28) {
            assert!((v - 0.37).abs() < 1e-15);
        }
    }
}
