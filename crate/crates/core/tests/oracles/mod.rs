//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use gradmeta::meta::ScoredSample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Confusion counts when predicting positive for every `score >= t`.
pub fn counts_at(samples: &[ScoredSample], t: f64) -> (f64, f64) {
    let tp = samples.iter().filter(|s| s.is_positive && s.score >= t).count();
    let fp = samples.iter().filter(|s| !s.is_positive && s.score >= t).count();
    (tp as f64, fp as f64)
}

pub fn distinct_desc(samples: &[ScoredSample]) -> Vec<f64> {
    let mut t: Vec<f64> = samples.iter().map(|s| s.score).collect();
    t.sort_by(|a, b| b.partial_cmp(a).unwrap());
    t.dedup();
    t
}

/// Trapezoidal ROC area over every threshold, starting from "reject all".
pub fn brute_auroc(samples: &[ScoredSample]) -> f64 {
    let p = samples.iter().filter(|s| s.is_positive).count() as f64;
    let n = samples.len() as f64 - p;
    let mut pts = vec![(0.0, 0.0)];
    for t in distinct_desc(samples) {
        let (tp, fp) = counts_at(samples, t);
        pts.push((fp / n, tp / p));
    }
    pts.windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum()
}

/// Right-continuous step area: each threshold contributes its precision
/// times the recall gained there.
pub fn brute_aupr(samples: &[ScoredSample]) -> f64 {
    let p = samples.iter().filter(|s| s.is_positive).count() as f64;
    let mut prev_r = 0.0;
    let mut area = 0.0;
    for t in distinct_desc(samples) {
        let (tp, fp) = counts_at(samples, t);
        let r = tp / p;
        if r > prev_r {
            area += (r - prev_r) * tp / (tp + fp);
            prev_r = r;
        }
    }
    area
}

/// A random instance of at most 20 samples on a coarse grid (frequent
/// ties), with both classes present.
pub fn random_instance(rng: &mut ChaCha8Rng) -> Vec<ScoredSample> {
    let n = rng.random_range(2..=20);
    let grid = rng.random_range(2..=12);
    let mut v: Vec<ScoredSample> = (0..n)
        .map(|_| ScoredSample::new(rng.random_range(0..grid) as f64 / 4.0 - 1.0, rng.random_bool(0.5)))
        .collect();
    v[0].is_positive = true;
    v[1].is_positive = false;
    v
}

/// Negated scores with complemented labels.
pub fn flip(v: &[ScoredSample]) -> Vec<ScoredSample> {
    v.iter().map(|s| ScoredSample::new(-s.score, !s.is_positive)).collect()
}

pub struct Problem {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
}

pub fn seeded_problem(seed: u64, n: usize, p: usize) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scales: Vec<f64> = (0..p).map(|j| 10f64.powi(j as i32 - 2)).collect();
    let beta: Vec<f64> = (0..p).map(|_| rng.random_range(-1.5..1.5)).collect();
    loop {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n {
            let z: Vec<f64> = (0..p).map(|_| StandardNormal.sample(&mut rng)).collect();
            let eta: f64 = 0.3 + z.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>();
            labels.push(rng.random::<f64>() < 1.0 / (1.0 + (-eta).exp()));
            rows.push(z.iter().zip(&scales).map(|(v, s)| v * s + 5.0 * s).collect());
        }
        let pos = labels.iter().filter(|&&b| b).count();
        if pos >= 5 && pos <= n - 5 {
            return Problem { rows, labels };
        }
    }
}

/// Textbook z-scores with the population standard deviation.
pub fn zscore(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len() as f64;
    let p = rows[0].len();
    let mut out = vec![vec![0.0; p]; rows.len()];
    for j in 0..p {
        let m = rows.iter().map(|r| r[j]).sum::<f64>() / n;
        let sd = (rows.iter().map(|r| (r[j] - m) * (r[j] - m)).sum::<f64>() / n).sqrt();
        for (o, r) in out.iter_mut().zip(rows) {
            o[j] = (r[j] - m) / sd;
        }
    }
    out
}

pub fn eta(z: &[f64], b0: f64, beta: &[f64]) -> f64 {
    b0 + z.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>()
}

pub fn objective(z: &[Vec<f64>], y: &[bool], b0: f64, beta: &[f64], l1: f64, l2: f64) -> f64 {
    let mut f = 0.0;
    for (zi, &yi) in z.iter().zip(y) {
        let e = eta(zi, b0, beta);
        // log(1+e^e) − y·e, computed stably
        f += e.max(0.0) + (-e.abs()).exp().ln_1p() - if yi { e } else { 0.0 };
    }
    f + l1 * beta.iter().map(|b| b.abs()).sum::<f64>() + l2 * beta.iter().map(|b| b * b).sum::<f64>()
}

/// Gradient of the smooth part (loss + ridge); index 0 is the intercept.
pub fn smooth_grad(z: &[Vec<f64>], y: &[bool], b0: f64, beta: &[f64], l2: f64) -> Vec<f64> {
    let mut g = vec![0.0; beta.len() + 1];
    for (zi, &yi) in z.iter().zip(y) {
        let r = 1.0 / (1.0 + (-eta(zi, b0, beta)).exp()) - if yi { 1.0 } else { 0.0 };
        g[0] += r;
        for j in 0..beta.len() {
            g[j + 1] += r * zi[j];
        }
    }
    for j in 0..beta.len() {
        g[j + 1] += 2.0 * l2 * beta[j];
    }
    g
}

pub fn kkt(z: &[Vec<f64>], y: &[bool], b0: f64, beta: &[f64], l1: f64, l2: f64) -> f64 {
    let g = smooth_grad(z, y, b0, beta, l2);
    let mut r = g[0].abs();
    for j in 0..beta.len() {
        let v = if beta[j] == 0.0 {
            (g[j + 1].abs() - l1).max(0.0)
        } else {
            (g[j + 1] + l1 * beta[j].signum()).abs()
        };
        r = r.max(v);
    }
    r
}

/// Exact 1-D minimization by bisection on the subgradient, one coordinate
/// at a time, until a full sweep moves nothing.
pub fn coordinate_descent(z: &[Vec<f64>], y: &[bool], l1: f64, l2: f64) -> (f64, Vec<f64>) {
    let p = z[0].len();
    let mut w = vec![0.0; p + 1];
    let deriv = |w: &[f64], k: usize| -> f64 { smooth_grad(z, y, w[0], &w[1..], l2)[k] };
    for _sweep in 0..5000 {
        let mut moved = 0.0f64;
        for k in 0..=p {
            let pen = if k == 0 { 0.0 } else { l1 };
            let old = w[k];
            let mut probe = w.clone();
            probe[k] = 0.0;
            let d0 = deriv(&probe, k);
            let new = if d0.abs() <= pen && k > 0 {
                0.0
            } else {
                // root of S'(b) + sign·pen on the side where it changes sign
                let (sign, dir) = if d0 + pen < 0.0 { (1.0, 1.0) } else { (-1.0, -1.0) };
                let h = |b: f64| {
                    let mut q = w.clone();
                    q[k] = b;
                    deriv(&q, k) + sign * pen
                };
                let (mut lo, mut hi) = (0.0f64, dir);
                while h(hi) * dir < 0.0 {
                    lo = hi;
                    hi *= 2.0;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if h(mid) * dir < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            };
            w[k] = new;
            moved = moved.max((new - old).abs());
        }
        if moved < 1e-13 {
            break;
        }
    }
    (w[0], w[1..].to_vec())
}

