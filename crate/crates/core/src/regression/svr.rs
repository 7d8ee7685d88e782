//! Gaussian-kernel epsilon-SVR trained by sequential minimal optimisation.
//!
//! The dual is written over `2n` variables (the `alpha` and `alpha*` blocks)
//! as `min 1/2 a^T Q a + p^T a` subject to `s^T a = 0` and `0 <= a <= C`,
//! with `s = [+1; -1]`, `Q_tu = s_t s_u K(x_t, x_u)` and
//! `p = [eps - y; eps + y]`. Working pairs are chosen by maximal violation
//! with second-order gain.

use serde::{Deserialize, Serialize};

use super::FeatureSet;
use crate::error::{GlrrError, Result};
use crate::Matrix;

pub const DEFAULT_EPSILON_TUBE: f64 = 0.01;
pub const KKT_TOLERANCE: f64 = 1e-6;
pub const MAX_PAIR_UPDATES: usize = 100_000;

const TAU: f64 = 1e-12;

/// `K(a, b) = exp(-gamma ||a - b||^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub gamma: f64,
}

impl KernelSpec {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(GlrrError::invalid(format!("kernel gamma must be positive, got {gamma}")));
        }
        Ok(KernelSpec { gamma })
    }

    pub fn eval_sq_dist(&self, sq_dist: f64) -> f64 {
        (-self.gamma * sq_dist).exp()
    }
}

/// Pairwise squared Euclidean distances between the rows of `a` and `b`.
pub fn sq_distances(a: &Matrix, b: &Matrix) -> Matrix {
    let a_sq: Vec<f64> = a.row_iter().map(|r| r.norm_squared()).collect();
    let b_sq: Vec<f64> = b.row_iter().map(|r| r.norm_squared()).collect();
    let mut d = a * b.transpose();
    for i in 0..d.nrows() {
        for j in 0..d.ncols() {
            d[(i, j)] = (a_sq[i] + b_sq[j] - 2.0 * d[(i, j)]).max(0.0);
        }
    }
    d
}

/// Converged dual: per-sample coefficients `alpha_i - alpha*_i` and bias.
#[derive(Debug, Clone, PartialEq)]
pub struct SvrDual {
    pub coeffs: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    /// Final maximal KKT violation `m(a) - M(a)`.
    pub violation: f64,
}

/// Solves the epsilon-SVR dual for a precomputed symmetric kernel matrix.
pub fn solve_dual(kernel: &Matrix, targets: &[f64], c: f64, epsilon: f64) -> Result<SvrDual> {
    let n = targets.len();
    if kernel.shape() != (n, n) {
        return Err(GlrrError::invalid(format!(
            "kernel matrix is {:?}, expected {n}x{n}",
            kernel.shape()
        )));
    }
    if n < 2 {
        return Err(GlrrError::invalid("SVR needs at least 2 samples"));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(GlrrError::invalid(format!("SVR C must be positive, got {c}")));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(GlrrError::invalid(format!("epsilon tube must be >= 0, got {epsilon}")));
    }
    let k = kernel.as_slice();
    let kk = |i: usize, j: usize| k[i * n + j];
    let m = 2 * n;
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let base = |t: usize| if t < n { t } else { t - n };

    let mut alpha = vec![0.0; m];
    let mut grad: Vec<f64> = (0..m)
        .map(|t| if t < n { epsilon - targets[t] } else { epsilon + targets[t - n] })
        .collect();

    let in_up = |a: f64, s: f64| (s > 0.0 && a < c) || (s < 0.0 && a > 0.0);
    let in_low = |a: f64, s: f64| (s > 0.0 && a > 0.0) || (s < 0.0 && a < c);

    let mut iterations = 0;
    let violation = loop {
        // first index: maximal violation over the "up" set
        let mut g_max = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..m {
            let s = sign(t);
            if in_up(alpha[t], s) && -s * grad[t] > g_max {
                g_max = -s * grad[t];
                i_sel = t;
            }
        }
        let mut g_min = f64::INFINITY;
        let mut j_sel = usize::MAX;
        let mut best_gain = f64::INFINITY;
        for t in 0..m {
            let s = sign(t);
            if !in_low(alpha[t], s) {
                continue;
            }
            let v = -s * grad[t];
            g_min = g_min.min(v);
            if i_sel == usize::MAX {
                continue;
            }
            let b = g_max - v;
            if b > 0.0 {
                let (bi, bt) = (base(i_sel), base(t));
                let mut a = kk(bi, bi) + kk(bt, bt) - 2.0 * kk(bi, bt);
                if a <= 0.0 {
                    a = TAU;
                }
                let gain = -(b * b) / a;
                if gain < best_gain {
                    best_gain = gain;
                    j_sel = t;
                }
            }
        }
        let gap = g_max - g_min;
        if gap < KKT_TOLERANCE || j_sel == usize::MAX {
            break gap.max(0.0);
        }
        if iterations >= MAX_PAIR_UPDATES {
            return Err(GlrrError::SvrNonConvergence {
                iterations,
                max_violation: gap,
            });
        }
        iterations += 1;

        let (i, j) = (i_sel, j_sel);
        let (si, sj) = (sign(i), sign(j));
        let (bi, bj) = (base(i), base(j));
        let qii = kk(bi, bi);
        let qjj = kk(bj, bj);
        let qij = si * sj * kk(bi, bj);
        let (old_i, old_j) = (alpha[i], alpha[j]);

        if si != sj {
            let mut quad = qii + qjj + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = qii + qjj - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let di = (alpha[i] - old_i) * si;
        let dj = (alpha[j] - old_j) * sj;
        let col_i = &k[bi * n..(bi + 1) * n];
        let col_j = &k[bj * n..(bj + 1) * n];
        for t in 0..n {
            let change = di * col_i[t] + dj * col_j[t];
            grad[t] += change;
            grad[t + n] -= change;
        }
    };

    // bias from free variables; otherwise midpoint of the feasible interval
    let mut upper = f64::INFINITY;
    let mut lower = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    for t in 0..m {
        let s = sign(t);
        let yg = s * grad[t];
        if alpha[t] >= c {
            if s < 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if s > 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else {
            free_count += 1;
            free_sum += yg;
        }
    }
    let rho = if free_count > 0 {
        free_sum / free_count as f64
    } else {
        0.5 * (upper + lower)
    };

    Ok(SvrDual {
        coeffs: (0..n).map(|i| alpha[i] - alpha[i + n]).collect(),
        bias: -rho,
        iterations,
        violation,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvrModel {
    pub dual_coeffs: Vec<f64>,
    pub bias: f64,
    pub training_features: Matrix,
    pub kernel: KernelSpec,
    pub c: f64,
    pub epsilon_tube: f64,
    pub iterations: usize,
    pub kkt_violation: f64,
}

impl SvrModel {
    pub fn predict(&self, features: &Matrix) -> Result<Vec<f64>> {
        if features.ncols() != self.training_features.ncols() {
            return Err(GlrrError::invalid(format!(
                "SVR model expects {} features, got {}",
                self.training_features.ncols(),
                features.ncols()
            )));
        }
        let d = sq_distances(features, &self.training_features);
        Ok(predict_from_sq_dist(&d, &self.dual_coeffs, self.bias, self.kernel))
    }

    /// Primal epsilon-insensitive objective `1/2 ||w||^2 + C sum max(0, |r_i| - eps)`
    /// evaluated on the training set.
    pub fn primal_objective(&self, targets: &[f64]) -> f64 {
        let k = self.training_kernel();
        let coef = nalgebra::DVector::from_column_slice(&self.dual_coeffs);
        let kc = &k * &coef;
        let reg = 0.5 * coef.dot(&kc);
        let loss: f64 = targets
            .iter()
            .zip(kc.iter())
            .map(|(y, f)| ((y - f - self.bias).abs() - self.epsilon_tube).max(0.0))
            .sum();
        reg + self.c * loss
    }

    /// Dual objective (maximisation form) at the stored coefficients.
    pub fn dual_objective(&self, targets: &[f64]) -> f64 {
        let k = self.training_kernel();
        let coef = nalgebra::DVector::from_column_slice(&self.dual_coeffs);
        let quad = 0.5 * coef.dot(&(&k * &coef));
        let lin: f64 = coef
            .iter()
            .zip(targets)
            .map(|(b, y)| b * y - self.epsilon_tube * b.abs())
            .sum();
        lin - quad
    }

    fn training_kernel(&self) -> Matrix {
        sq_distances(&self.training_features, &self.training_features).map(|d| self.kernel.eval_sq_dist(d))
    }
}

pub(crate) fn predict_from_sq_dist(sq_dist: &Matrix, coeffs: &[f64], bias: f64, kernel: KernelSpec) -> Vec<f64> {
    sq_dist
        .row_iter()
        .map(|row| {
            row.iter()
                .zip(coeffs)
                .filter(|(_, &a)| a != 0.0)
                .map(|(&d, &a)| a * kernel.eval_sq_dist(d))
                .sum::<f64>()
                + bias
        })
        .collect()
}

pub fn fit_svr(data: &FeatureSet, c: f64, kernel: KernelSpec, epsilon_tube: f64) -> Result<SvrModel> {
    let k = sq_distances(data.features(), data.features()).map(|d| kernel.eval_sq_dist(d));
    let dual = solve_dual(&k, data.targets(), c, epsilon_tube)?;
    Ok(SvrModel {
        dual_coeffs: dual.coeffs,
        bias: dual.bias,
        training_features: data.features().clone(),
        kernel,
        c,
        epsilon_tube,
        iterations: dual.iterations,
        kkt_violation: dual.violation,
    })
}
