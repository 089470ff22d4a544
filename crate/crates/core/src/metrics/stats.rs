use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const STAT_NAMES: [&str; 7] = ["l1", "l2", "min", "max", "mean", "skew", "kurt"];

/// The seven summary statistics of one gradient segment.
///
/// Skewness and kurtosis use population moments (`m₃/m₂^{3/2}`,
/// `m₄/m₂²`, Pearson kurtosis without the −3). When the variance is
/// negligible relative to the segment's scale both are reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradStats {
    pub l1: f64,
    pub l2: f64,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub skew: f64,
    pub kurt: f64,
}

impl GradStats {
    pub fn to_array(&self) -> [f64; 7] {
        [self.l1, self.l2, self.min, self.max, self.mean, self.skew, self.kurt]
    }
}

/// Variance below this fraction of the squared peak magnitude counts as zero.
const DEGENERATE_REL_VAR: f64 = 1e-24;

pub fn grad_stats(segment: &[f64]) -> Result<GradStats> {
    if segment.is_empty() {
        return Err(Error::Empty("gradient segment".into()));
    }
    let n = segment.len() as f64;
    let mut l1 = 0.0;
    let mut sq = 0.0;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for &g in segment {
        l1 += g.abs();
        sq += g * g;
        min = min.min(g);
        max = max.max(g);
        sum += g;
    }
    let mean = sum / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &g in segment {
        let d = g - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let peak = min.abs().max(max.abs());
    let (skew, kurt) = if m2 <= DEGENERATE_REL_VAR * peak * peak || m2 == 0.0 {
        (0.0, 0.0)
    } else {
        (m3 / m2.powf(1.5), m4 / (m2 * m2))
    };
    Ok(GradStats {
        l1,
        l2: sq.sqrt(),
        min,
        max,
        mean,
        skew,
        kurt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_arithmetic() {
        let s = grad_stats(&[3.0, -4.0]).unwrap();
        assert_eq!(s.l1, 7.0);
        assert_eq!(s.l2, 5.0);
        assert_eq!(s.min, -4.0);
        assert_eq!(s.max, 3.0);
        assert_eq!(s.mean, -0.5);
        // two points: symmetric, kurtosis exactly 1
        assert!(s.skew.abs() < 1e-15);
        assert!((s.kurt - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_vector_convention() {
        for c in [0.0, 1.3, -2e-9, 0.1] {
            let s = grad_stats(&[c, c, c]).unwrap();
            assert_eq!((s.skew, s.kurt), (0.0, 0.0));
        }
    }

    #[test]
    fn single_element() {
        let s = grad_stats(&[-2.0]).unwrap();
        assert_eq!((s.l1, s.l2, s.min, s.max, s.mean), (2.0, 2.0, -2.0, -2.0, -2.0));
        assert_eq!((s.skew, s.kurt), (0.0, 0.0));
    }

    #[test]
    fn tiny_but_varied_segment_keeps_shape_statistics() {
        let s = grad_stats(&[1e-15, 2e-15, 6e-15]).unwrap();
        assert!(s.skew > 0.0);
        assert!(s.kurt > 1.0);
    }

    #[test]
    fn empty_segment_rejected() {
        assert!(grad_stats(&[]).is_err());
    }
}
