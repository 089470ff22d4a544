//! Penalized logistic regression (GLM, LASSO, ridge, elastic net) fitted by
//! monotone FISTA with backtracking on standardized features.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-feature centering and scaling frozen at fit time. Features whose
/// spread is negligible are dropped and listed in `dropped`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub kept: Vec<usize>,
    pub mean: Vec<f64>,
    /// Population standard deviation (denominator n).
    pub sd: Vec<f64>,
    pub dropped: Vec<usize>,
    pub n_inputs: usize,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let n_inputs = rows.first().map(Vec::len).ok_or_else(|| Error::Empty("feature matrix".into()))?;
        if rows.iter().any(|r| r.len() != n_inputs) {
            return Err(Error::Config("ragged feature matrix".into()));
        }
        if let Some(v) = rows.iter().flatten().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("feature value {v}")));
        }
        let n = rows.len() as f64;
        let mut out = Standardizer {
            kept: Vec::new(),
            mean: Vec::new(),
            sd: Vec::new(),
            dropped: Vec::new(),
            n_inputs,
        };
        for j in 0..n_inputs {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            let scale = rows.iter().map(|r| r[j].abs()).fold(0.0, f64::max);
            if sd > 1e-12 * scale && sd > 0.0 {
                out.kept.push(j);
                out.mean.push(mean);
                out.sd.push(sd);
            } else {
                out.dropped.push(j);
            }
        }
        Ok(out)
    }

    pub fn n_kept(&self) -> usize {
        self.kept.len()
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        self.kept
            .iter()
            .zip(self.mean.iter().zip(&self.sd))
            .map(|(&j, (m, s))| (row[j] - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regularization {
    pub l1: f64,
    pub l2: f64,
}

impl Regularization {
    pub const GLM: Self = Self { l1: 0.0, l2: 0.0 };
    pub const LASSO: Self = Self { l1: 1.0, l2: 0.0 };
    pub const RIDGE: Self = Self { l1: 0.0, l2: 1.0 };
    pub const ELASTIC_NET: Self = Self { l1: 0.5, l2: 0.5 };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iter: usize,
    /// Converged once the KKT residual (∞-norm) drops to `kkt_tol · n`;
    /// the loss is summed over the n rows, so this is a per-sample level.
    pub kkt_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            kkt_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
    /// Objective decrease over the final iteration.
    pub last_change: f64,
    pub kkt_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    /// Coefficients on the standardized kept features.
    pub coeffs: Vec<f64>,
    pub intercept: f64,
    pub reg: Regularization,
    pub standardization: Standardizer,
    pub report: SolverReport,
}

impl LogisticModel {
    /// Probability of the positive class for one raw feature row.
    pub fn predict(&self, row: &[f64]) -> f64 {
        let z = self.standardization.transform(row);
        sigmoid(self.intercept + dot(&self.coeffs, &z))
    }

    /// Errors if the solver stopped at the iteration cap.
    pub fn require_converged(&self) -> Result<&Self> {
        if self.report.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged {
                iterations: self.report.iterations,
                gap: self.report.last_change,
            })
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// The smooth part of the objective: summed logistic loss plus the ridge
/// term. Parameter layout: `[intercept, β₁, …, β_p]`.
struct Problem<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    reg: Regularization,
}

impl Problem<'_> {
    fn smooth(&self, w: &[f64]) -> f64 {
        let loss: f64 = self
            .x
            .iter()
            .zip(self.y)
            .map(|(xi, &yi)| {
                let z = w[0] + dot(&w[1..], xi);
                softplus(z) - yi * z
            })
            .sum();
        loss + self.reg.l2 * w[1..].iter().map(|b| b * b).sum::<f64>()
    }

    fn smooth_grad(&self, w: &[f64], g: &mut [f64]) -> f64 {
        g.iter_mut().for_each(|v| *v = 0.0);
        let mut loss = 0.0;
        for (xi, &yi) in self.x.iter().zip(self.y) {
            let z = w[0] + dot(&w[1..], xi);
            loss += softplus(z) - yi * z;
            let r = sigmoid(z) - yi;
            g[0] += r;
            for (gj, xij) in g[1..].iter_mut().zip(xi) {
                *gj += r * xij;
            }
        }
        let mut ridge = 0.0;
        for (gj, &b) in g[1..].iter_mut().zip(&w[1..]) {
            *gj += 2.0 * self.reg.l2 * b;
            ridge += b * b;
        }
        loss + self.reg.l2 * ridge
    }

    fn l1(&self, w: &[f64]) -> f64 {
        self.reg.l1 * w[1..].iter().map(|b| b.abs()).sum::<f64>()
    }

    fn objective(&self, w: &[f64]) -> f64 {
        self.smooth(w) + self.l1(w)
    }

    /// Soft-thresholded gradient step from `y` with step `1/lip`.
    fn prox_step(&self, y: &[f64], g: &[f64], lip: f64, out: &mut [f64]) {
        out[0] = y[0] - g[0] / lip;
        let t = self.reg.l1 / lip;
        for j in 1..y.len() {
            let v = y[j] - g[j] / lip;
            out[j] = v.signum() * (v.abs() - t).max(0.0);
        }
    }

    /// Proximal step from `y` with the smallest tried Lipschitz estimate
    /// (doubling from `lip`) that satisfies the quadratic upper bound.
    fn backtrack(&self, y: &[f64], g: &[f64], f_y: f64, mut lip: f64, out: &mut [f64]) -> Result<f64> {
        loop {
            self.prox_step(y, g, lip, out);
            let mut lin = 0.0;
            let mut sq = 0.0;
            for j in 0..y.len() {
                let d = out[j] - y[j];
                lin += g[j] * d;
                sq += d * d;
            }
            if self.smooth(out) <= f_y + lin + 0.5 * lip * sq + 1e-12 * f_y.abs().max(1.0) {
                return Ok(lip);
            }
            lip *= 2.0;
            if !lip.is_finite() {
                return Err(Error::NonFinite("logistic step size".into()));
            }
        }
    }

    /// ∞-norm of the KKT violation of the full (nonsmooth) objective.
    fn kkt_residual(&self, w: &[f64], g: &mut [f64]) -> f64 {
        self.smooth_grad(w, g);
        kkt_from_grad(w, g, self.reg.l1)
    }
}

/// KKT violation given the smooth gradient: intercept and nonzero
/// coefficients need a zero subgradient; zero coefficients need
/// `|∇ⱼ| ≤ λ₁`.
pub fn kkt_from_grad(w: &[f64], g: &[f64], l1: f64) -> f64 {
    let mut r = g[0].abs();
    for j in 1..w.len() {
        let v = if w[j] != 0.0 {
            (g[j] + l1 * w[j].signum()).abs()
        } else {
            (g[j].abs() - l1).max(0.0)
        };
        r = r.max(v);
    }
    r
}

/// The penalized objective a fit minimizes, evaluated on standardized
/// features: `Σᵢ log(1+e^{zᵢ}) − yᵢzᵢ + λ₁‖β‖₁ + λ₂‖β‖²`.
pub fn penalized_objective(z_rows: &[Vec<f64>], labels: &[bool], reg: Regularization, intercept: f64, beta: &[f64]) -> f64 {
    let y: Vec<f64> = labels.iter().map(|&b| f64::from(u8::from(b))).collect();
    let mut w = vec![intercept];
    w.extend_from_slice(beta);
    Problem { x: z_rows, y: &y, reg }.objective(&w)
}

/// Fits `P(label) = σ(b₀ + βᵀz)` on standardized features `z`, minimizing
/// summed logistic loss plus the elastic-net penalty (intercept exempt).
///
/// Iteration stops when the KKT residual reaches `cfg.kkt_tol · n` or after
/// `cfg.max_iter` iterations; the latter is reported via
/// `report.converged == false` rather than as an error, since an
/// unregularized fit on separable data has no finite minimizer.
pub fn fit_logistic_with(rows: &[Vec<f64>], labels: &[bool], reg: Regularization, cfg: &SolverConfig) -> Result<LogisticModel> {
    if rows.len() != labels.len() {
        return Err(Error::Config("feature/label count mismatch".into()));
    }
    if !(reg.l1 >= 0.0 && reg.l2 >= 0.0) {
        return Err(Error::Config("penalties must be nonnegative".into()));
    }
    let n_pos = labels.iter().filter(|&&b| b).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateClasses { n_pos, n_neg });
    }
    let std = Standardizer::fit(rows)?;
    let z: Vec<Vec<f64>> = rows.iter().map(|r| std.transform(r)).collect();
    let y: Vec<f64> = labels.iter().map(|&b| f64::from(u8::from(b))).collect();
    let prob = Problem { x: &z, y: &y, reg };
    let dim = std.n_kept() + 1;

    // start from the prior: intercept = logit(class fraction)
    let mut x = vec![0.0; dim];
    x[0] = (n_pos as f64 / n_neg as f64).ln();
    let mut x_prev = x.clone();
    let mut yk = x.clone();
    let mut cand = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    let mut scratch = vec![0.0; dim];
    let mut t = 1.0f64;
    let mut lip = 1.0f64;
    let mut f_x = prob.objective(&x);
    let mut last_change = f64::INFINITY;
    let mut kkt = prob.kkt_residual(&x, &mut scratch);
    let mut iterations = 0;
    let tol = cfg.kkt_tol * rows.len() as f64;

    while kkt > tol && iterations < cfg.max_iter {
        iterations += 1;
        let f_y = prob.smooth_grad(&yk, &mut g);
        lip = prob.backtrack(&yk, &g, f_y, lip, &mut cand)?;
        let f_cand = prob.objective(&cand);
        if f_cand <= f_x {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            x_prev.copy_from_slice(&x);
            x.copy_from_slice(&cand);
            last_change = f_x - f_cand;
            f_x = f_cand;
            for j in 0..dim {
                yk[j] = x[j] + ((t - 1.0) / t_next) * (x[j] - x_prev[j]);
            }
            t = t_next;
        } else {
            // momentum overshot: take a plain proximal step from the
            // incumbent instead. Its sufficient-decrease condition already
            // guarantees descent, so it is accepted even when the objective
            // difference is lost in rounding.
            let f_xs = prob.smooth_grad(&x, &mut g);
            lip = prob.backtrack(&x, &g, f_xs, lip, &mut cand)?;
            x_prev.copy_from_slice(&x);
            x.copy_from_slice(&cand);
            let f_new = prob.objective(&x);
            last_change = f_x - f_new;
            f_x = f_new.min(f_x);
            t = 1.0;
            yk.copy_from_slice(&x);
        }
        kkt = prob.kkt_residual(&x, &mut scratch);
    }

    let report = SolverReport {
        iterations,
        converged: kkt <= tol,
        objective: f_x,
        last_change,
        kkt_residual: kkt,
    };
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("logistic coefficients".into()));
    }
    Ok(LogisticModel {
        intercept: x[0],
        coeffs: x[1..].to_vec(),
        reg,
        standardization: std,
        report,
    })
}

pub fn fit_logistic(rows: &[Vec<f64>], labels: &[bool], l1: f64, l2: f64) -> Result<LogisticModel> {
    fit_logistic_with(rows, labels, Regularization { l1, l2 }, &SolverConfig::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_glm_puts_boundary_between_points() {
        let rows = vec![vec![0.0], vec![1.0]];
        let labels = [false, true];
        let cfg = SolverConfig { max_iter: 2000, kkt_tol: 1e-8 };
        let m = fit_logistic_with(&rows, &labels, Regularization::GLM, &cfg).unwrap();
        assert!(m.predict(&[0.0]) < 0.5 && m.predict(&[1.0]) > 0.5);
        assert!(m.coeffs[0] > 0.0);
    }

    #[test]
    fn huge_l1_zeroes_everything() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i * i) as f64 % 7.0]).collect();
        let labels: Vec<bool> = (0..20).map(|i| i % 3 != 0).collect();
        let m = fit_logistic(&rows, &labels, 1e3, 0.0).unwrap();
        assert!(m.report.converged);
        assert!(m.coeffs.iter().all(|&b| b == 0.0));
        let prior = labels.iter().filter(|&&b| b).count() as f64 / 20.0;
        assert!((m.predict(&rows[0]) - prior).abs() < 1e-9);
    }

    #[test]
    fn constant_feature_is_dropped() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![3.0, i as f64]).collect();
        let labels: Vec<bool> = (0..10).map(|i| i >= 4).collect();
        let m = fit_logistic(&rows, &labels, 1.0, 0.0).unwrap();
        assert_eq!(m.standardization.dropped, vec![0]);
        assert_eq!(m.coeffs.len(), 1);
    }

    #[test]
    fn single_class_rejected() {
        let rows = vec![vec![1.0], vec![2.0]];
        assert!(matches!(
            fit_logistic(&rows, &[true, true], 1.0, 0.0),
            Err(Error::DegenerateClasses { .. })
        ));
    }

    #[test]
    fn objective_never_increases_with_more_iterations() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 1.3).cos() * 50.0, i as f64])
            .collect();
        let labels: Vec<bool> = (0..40).map(|i| (i * 7) % 5 < 2 || i > 30).collect();
        let mut prev = f64::INFINITY;
        for k in 1..60 {
            let cfg = SolverConfig { max_iter: k, kkt_tol: 0.0 };
            let f = fit_logistic_with(&rows, &labels, Regularization::ELASTIC_NET, &cfg)
                .unwrap()
                .report
                .objective;
            assert!(f <= prev, "iteration {k}: {f} > {prev}");
            prev = f;
        }
    }

    #[test]
    fn stable_softplus_and_sigmoid() {
        assert_eq!(softplus(-800.0), 0.0);
        assert_eq!(softplus(800.0), 800.0);
        assert_eq!(sigmoid(-800.0), 0.0);
        assert_eq!(sigmoid(800.0), 1.0);
    }
}
