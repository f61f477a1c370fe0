//! RBF-kernel support vector machine trained by simplified sequential
//! minimal optimization.
//!
//! The solver sweeps the training set looking for KKT violators. For each
//! violator it pairs a second index, starting from a random offset and
//! moving on until a pair makes progress, and solves the two-variable
//! subproblem analytically.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ActionabilityType;
use crate::error::{Error, Result};
use crate::seed;

/// Coefficients at or below this are not kept as support vectors.
pub const SUPPORT_EPS: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmHyperparams {
    pub c: f64,
    pub gamma: f64,
    pub tolerance: f64,
    pub max_passes: usize,
}

impl Default for SvmHyperparams {
    fn default() -> Self {
        SvmHyperparams {
            c: 20.0,
            gamma: 3.0,
            tolerance: 1e-3,
            max_passes: 200,
        }
    }
}

impl SvmHyperparams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.c > 0.0 && self.gamma > 0.0 && self.tolerance > 0.0 && self.max_passes > 0;
        if ok && self.c.is_finite() && self.gamma.is_finite() {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid SVM hyperparameters {self:?}")))
        }
    }
}

/// K(x, y) = exp(-gamma * |x - y|^2)
pub fn rbf_kernel(x: &[f64], y: &[f64], gamma: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(Error::Config(format!("gamma must be positive, got {gamma}")));
    }
    Ok(rbf_unchecked(x, y, gamma))
}

#[inline]
fn rbf_unchecked(x: &[f64], y: &[f64], gamma: f64) -> f64 {
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * d2).exp()
}

/// Trained binary classifier.
#[derive(Clone, Debug, PartialEq)]
pub struct SvmModel {
    pub category: Option<ActionabilityType>,
    pub support_vectors: Vec<Vec<f64>>,
    /// alpha_i * y_i for each support vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    pub hyperparams: SvmHyperparams,
    pub dimension: usize,
    pub converged: bool,
}

impl SvmModel {
    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dimension {
            return Err(Error::LengthMismatch {
                left: self.dimension,
                right: x.len(),
            });
        }
        let gamma = self.hyperparams.gamma;
        Ok(self
            .support_vectors
            .iter()
            .zip(&self.dual_coef)
            .map(|(sv, c)| c * rbf_unchecked(sv, x, gamma))
            .sum::<f64>()
            + self.bias)
    }
}

/// Label (+1/-1) and margin f(x). A margin of exactly 0 is labeled +1.
pub fn classify_one(model: &SvmModel, features: &[f64]) -> Result<(i8, f64)> {
    let f = model.decision_value(features)?;
    Ok((if f >= 0.0 { 1 } else { -1 }, f))
}

/// Solver diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverReport {
    pub converged: bool,
    pub sweeps: usize,
    pub steps: usize,
    /// Final multipliers, one per training point.
    pub alphas: Vec<f64>,
    pub objective: f64,
    /// Dual objective after every accepted step (only when requested).
    pub objective_trace: Vec<f64>,
}

pub fn train_svm(x: &[Vec<f64>], y: &[f64], hp: &SvmHyperparams, seed: u64) -> Result<SvmModel> {
    train_svm_with_report(x, y, hp, seed, false).map(|(m, _)| m)
}

/// Dual objective sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij.
pub fn dual_objective(alphas: &[f64], y: &[f64], kernel: &[f64]) -> f64 {
    let n = alphas.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alphas[i] == 0.0 {
            continue;
        }
        let row = &kernel[i * n..(i + 1) * n];
        let mut s = 0.0;
        for j in 0..n {
            s += alphas[j] * y[j] * row[j];
        }
        quad += alphas[i] * y[i] * s;
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

pub fn kernel_matrix(x: &[Vec<f64>], gamma: f64) -> Vec<f64> {
    let n = x.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = 1.0;
        for j in (i + 1)..n {
            let v = rbf_unchecked(&x[i], &x[j], gamma);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

struct Smo<'a> {
    n: usize,
    y: &'a [f64],
    k: Vec<f64>,
    c: f64,
    alpha: Vec<f64>,
    b: f64,
    // f(x_i) - y_i under the current alpha and b
    err: Vec<f64>,
}

impl Smo<'_> {
    fn kij(&self, i: usize, j: usize) -> f64 {
        self.k[i * self.n + j]
    }

    fn violates_kkt(&self, i: usize, tol: f64) -> bool {
        let r = self.y[i] * self.err[i];
        (r < -tol && self.alpha[i] < self.c) || (r > tol && self.alpha[i] > 0.0)
    }

    fn take_step(&mut self, i: usize, j: usize) -> bool {
        if i == j {
            return false;
        }
        let (yi, yj) = (self.y[i], self.y[j]);
        let (ai, aj) = (self.alpha[i], self.alpha[j]);
        let c = self.c;
        let (lo, hi) = if yi != yj {
            ((aj - ai).max(0.0), (c + aj - ai).min(c))
        } else {
            ((ai + aj - c).max(0.0), (ai + aj).min(c))
        };
        if hi - lo < 1e-12 {
            return false;
        }
        let (kii, kjj, kij) = (self.kij(i, i), self.kij(j, j), self.kij(i, j));
        let eta = 2.0 * kij - kii - kjj;
        if eta >= 0.0 {
            return false;
        }
        let (ei, ej) = (self.err[i], self.err[j]);
        let aj_new = (aj - yj * (ei - ej) / eta).clamp(lo, hi);
        if (aj_new - aj).abs() < 1e-12 * (1.0 + aj_new.abs() + aj.abs()) {
            return false;
        }
        let ai_new = (ai + yi * yj * (aj - aj_new)).clamp(0.0, c);
        let (dai, daj) = (ai_new - ai, aj_new - aj);

        let b1 = self.b - ei - yi * dai * kii - yj * daj * kij;
        let b2 = self.b - ej - yi * dai * kij - yj * daj * kjj;
        let b_new = if ai_new > 0.0 && ai_new < c {
            b1
        } else if aj_new > 0.0 && aj_new < c {
            b2
        } else {
            0.5 * (b1 + b2)
        };
        let db = b_new - self.b;

        let n = self.n;
        let (ri, rj) = (i * n, j * n);
        for t in 0..n {
            self.err[t] += yi * dai * self.k[ri + t] + yj * daj * self.k[rj + t] + db;
        }
        self.alpha[i] = ai_new;
        self.alpha[j] = aj_new;
        self.b = b_new;
        true
    }

    /// Bias from free multipliers, or the midpoint of the feasible interval
    /// implied by the bounded ones.
    fn final_bias(&self) -> f64 {
        let n = self.n;
        let g: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| self.alpha[j] * self.y[j] * self.kij(i, j)).sum())
            .collect();
        let margin = 1e-8 * self.c;
        let free: Vec<usize> = (0..n)
            .filter(|&i| self.alpha[i] > margin && self.alpha[i] < self.c - margin)
            .collect();
        if !free.is_empty() {
            return free.iter().map(|&i| self.y[i] - g[i]).sum::<f64>() / free.len() as f64;
        }
        let (mut lower, mut upper) = (f64::NEG_INFINITY, f64::INFINITY);
        for ((&a, &y), &gi) in self.alpha.iter().zip(self.y.iter()).zip(g.iter()) {
            let at_upper = a >= self.c - margin;
            // y_i f(x_i) >= 1 at zero, <= 1 at C
            let bound = y - gi;
            let raises_lower = (y > 0.0) != at_upper;
            if raises_lower {
                lower = lower.max(bound);
            } else {
                upper = upper.min(bound);
            }
        }
        match (lower.is_finite(), upper.is_finite()) {
            (true, true) => 0.5 * (lower + upper),
            (true, false) => lower,
            (false, true) => upper,
            (false, false) => self.b,
        }
    }
}

/// Train and also return solver diagnostics. `record_objective` stores the
/// dual objective after every accepted step (O(n^2) each).
pub fn train_svm_with_report(
    x: &[Vec<f64>],
    y: &[f64],
    hp: &SvmHyperparams,
    seed: u64,
    record_objective: bool,
) -> Result<(SvmModel, SolverReport)> {
    hp.validate()?;
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let Some(first) = x.first() else {
        return Err(Error::Empty("no training points".into()));
    };
    let dim = first.len();
    if let Some(bad) = x.iter().find(|v| v.len() != dim) {
        return Err(Error::LengthMismatch {
            left: dim,
            right: bad.len(),
        });
    }
    if y.iter().any(|v| *v != 1.0 && *v != -1.0) {
        return Err(Error::Config("labels must be +1 or -1".into()));
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(Error::Insufficient("both classes must be present".into()));
    }

    let n = x.len();
    let mut smo = Smo {
        n,
        y,
        k: kernel_matrix(x, hp.gamma),
        c: hp.c,
        alpha: vec![0.0; n],
        b: 0.0,
        err: y.iter().map(|v| -v).collect(),
    };
    let mut rng = seed::rng(seed);
    let mut trace = Vec::new();
    let (mut sweeps, mut steps, mut converged) = (0usize, 0usize, false);

    while sweeps < hp.max_passes {
        sweeps += 1;
        let (mut violators, mut changed) = (0usize, 0usize);
        for i in 0..n {
            if !smo.violates_kkt(i, hp.tolerance) {
                continue;
            }
            violators += 1;
            let start = rng.gen_range(0..n);
            for off in 0..n {
                let j = (start + off) % n;
                if smo.take_step(i, j) {
                    changed += 1;
                    steps += 1;
                    if record_objective {
                        trace.push(dual_objective(&smo.alpha, y, &smo.k));
                    }
                    break;
                }
            }
        }
        if violators == 0 {
            converged = true;
            break;
        }
        if changed == 0 {
            // Every violator is stuck; further sweeps cannot move.
            break;
        }
    }

    let bias = smo.final_bias();
    let mut support_vectors = Vec::new();
    let mut dual_coef = Vec::new();
    for i in 0..n {
        if smo.alpha[i] > SUPPORT_EPS {
            support_vectors.push(x[i].clone());
            dual_coef.push(smo.alpha[i] * y[i]);
        }
    }
    let objective = dual_objective(&smo.alpha, y, &smo.k);
    let model = SvmModel {
        category: None,
        support_vectors,
        dual_coef,
        bias,
        hyperparams: *hp,
        dimension: dim,
        converged,
    };
    let report = SolverReport {
        converged,
        sweeps,
        steps,
        alphas: smo.alpha,
        objective,
        objective_trace: trace,
    };
    Ok((model, report))
}
