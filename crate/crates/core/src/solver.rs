//! Linearized ADMM for graph-regularized low-rank representation:
//!
//! ```text
//! min_{Z,E}  ||Z||_* + lambda ||E||_{2,1} + (beta/2) tr(Z L Z^T)   s.t.  X = X Z + E
//! ```
//!
//! The split `Z = J` moves the nuclear norm onto `J`; each iteration updates
//! `J` (singular value thresholding), `E` (column shrinkage) and `Z` (one
//! linearized proximal step solved against `beta L + mu (||X||_F^2 + 1) I`),
//! then the two multipliers and the penalty `mu`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{GlrrError, Result};
use crate::graph::Laplacian;
use crate::prox::{ensure_finite, inf_norm, l21_shrink, svt};
use crate::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlrrConfig {
    /// Weight of the column-sparse noise term.
    pub lambda: f64,
    /// Weight of the graph smoothness term.
    pub beta: f64,
    pub mu0: f64,
    pub mu_max: f64,
    pub rho: f64,
    pub eps: f64,
    pub max_iter: usize,
}

impl Default for GlrrConfig {
    fn default() -> Self {
        GlrrConfig {
            lambda: 1.0,
            beta: 1.0,
            mu0: 1e-6,
            mu_max: 1e11,
            rho: 1.1,
            eps: 1e-11,
            max_iter: 1000,
        }
    }
}

impl GlrrConfig {
    pub fn with_weights(self, lambda: f64, beta: f64) -> Self {
        GlrrConfig { lambda, beta, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.lambda) {
            return Err(GlrrError::invalid(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(GlrrError::invalid(format!("beta must be >= 0, got {}", self.beta)));
        }
        if !positive(self.mu0) || !positive(self.mu_max) || self.mu0 > self.mu_max {
            return Err(GlrrError::invalid(format!(
                "need 0 < mu0 <= mu_max, got mu0={} mu_max={}",
                self.mu0, self.mu_max
            )));
        }
        if !(self.rho > 1.0 && self.rho.is_finite()) {
            return Err(GlrrError::invalid(format!("rho must exceed 1, got {}", self.rho)));
        }
        if !positive(self.eps) {
            return Err(GlrrError::invalid(format!("eps must be positive, got {}", self.eps)));
        }
        if self.max_iter == 0 {
            return Err(GlrrError::invalid("max_iter must be at least 1"));
        }
        Ok(())
    }
}

/// Live iterate of the solver.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub z: Matrix,
    pub j: Matrix,
    pub e: Matrix,
    pub y1: Matrix,
    pub y2: Matrix,
    pub mu: f64,
    /// Linearization anchor: `Z` from the previous iteration.
    pub z_prev: Matrix,
}

impl AdmmState {
    /// All-zero start for a `d x n` data matrix.
    pub fn zeros(d: usize, n: usize, mu: f64) -> Self {
        AdmmState {
            z: DMatrix::zeros(n, n),
            j: DMatrix::zeros(n, n),
            e: DMatrix::zeros(d, n),
            y1: DMatrix::zeros(n, n),
            y2: DMatrix::zeros(d, n),
            mu,
            z_prev: DMatrix::zeros(n, n),
        }
    }

    fn check_shapes(&self, x: &Matrix) -> Result<()> {
        let (d, n) = x.shape();
        let ok = self.z.shape() == (n, n)
            && self.j.shape() == (n, n)
            && self.y1.shape() == (n, n)
            && self.z_prev.shape() == (n, n)
            && self.e.shape() == (d, n)
            && self.y2.shape() == (d, n);
        if !ok {
            return Err(GlrrError::invalid(format!("ADMM state shapes inconsistent with {d}x{n} data")));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(GlrrError::invalid(format!("penalty mu must be positive, got {}", self.mu)));
        }
        Ok(())
    }

    fn is_finite(&self) -> bool {
        [&self.z, &self.j, &self.e, &self.y1, &self.y2]
            .iter()
            .all(|m| m.iter().all(|v| v.is_finite()))
            && self.mu.is_finite()
    }

    /// `(||X - XZ - E||_inf, ||Z - J||_inf)`.
    pub fn residuals(&self, x: &Matrix) -> (f64, f64) {
        let primal = inf_norm(&(x - x * &self.z - &self.e));
        let consensus = inf_norm(&(&self.z - &self.j));
        (primal, consensus)
    }
}

/// One row of the convergence history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualRecord {
    pub iteration: usize,
    /// `||X - XZ - E||_inf` after the iteration.
    pub primal: f64,
    /// `||Z - J||_inf` after the iteration.
    pub consensus: f64,
    /// Penalty used during the iteration.
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlrrSolution {
    pub z: Matrix,
    pub e: Matrix,
    pub iterations: usize,
    pub residuals: Vec<ResidualRecord>,
    pub converged: bool,
}

impl GlrrSolution {
    pub fn final_residuals(&self) -> Option<(f64, f64)> {
        self.residuals.last().map(|r| (r.primal, r.consensus))
    }
}

/// `J = svt(Z + Y1/mu, 1/mu)`.
pub fn update_j(state: &AdmmState) -> Result<Matrix> {
    let mu = state.mu;
    svt(&(&state.z + &state.y1 / mu), 1.0 / mu)
}

/// `E = l21_shrink(X - XZ - Y2/mu, lambda/mu)`.
pub fn update_e(state: &AdmmState, x: &Matrix, lambda: f64) -> Result<Matrix> {
    let mu = state.mu;
    let q = x - x * &state.z - &state.y2 / mu;
    l21_shrink(&q, lambda / mu)
}

/// Right-hand side of the closed-form `Z` step:
/// `mu ||X||^2 Zk - mu X^T X Zk - mu X^T E + mu X^T X - X^T Y2 + mu J - Y1`.
fn z_numerator(state: &AdmmState, x: &Matrix, x_norm_sq: f64) -> Matrix {
    let mu = state.mu;
    // X^T (X - X Zk - E - Y2/mu) groups the four X^T terms into one d x n product.
    let inner = x - x * &state.z_prev - &state.e - &state.y2 / mu;
    let mut num = x.tr_mul(&inner) * mu;
    num += &state.z_prev * (mu * x_norm_sq);
    num += &state.j * mu;
    num -= &state.y1;
    num
}

/// `beta L + shift I` in a form that can be inverted for any shift.
enum ZSystem {
    /// `L` contributes nothing; the system is a scalar multiple of the identity.
    Scalar,
    /// `L = Q diag(ev) Q^T`, so the inverse is `Q diag(1/(beta ev + shift)) Q^T`.
    Spectral { q: Matrix, scaled: Vec<f64> },
}

impl ZSystem {
    fn build(laplacian: &Laplacian, beta: f64) -> Self {
        let l = laplacian.matrix();
        if beta == 0.0 || l.iter().all(|&v| v == 0.0) {
            return ZSystem::Scalar;
        }
        let eig = l.clone().symmetric_eigen();
        ZSystem::Spectral {
            q: eig.eigenvectors,
            scaled: eig.eigenvalues.iter().map(|ev| beta * ev).collect(),
        }
    }

    /// Returns `num (beta L + shift I)^{-1}`.
    fn apply(&self, num: Matrix, shift: f64) -> Result<Matrix> {
        match self {
            ZSystem::Scalar => Ok(num / shift),
            ZSystem::Spectral { q, scaled } => {
                let mut t = num * q;
                for (mut col, s) in t.column_iter_mut().zip(scaled) {
                    let denom = s + shift;
                    if !(denom > 0.0) {
                        return Err(GlrrError::NumericalFailure {
                            routine: "z_system",
                            detail: format!("system not positive definite (eigenvalue term {s:e}, shift {shift:e})"),
                        });
                    }
                    col /= denom;
                }
                Ok(t * q.transpose())
            }
        }
    }
}

fn check_problem(x: &Matrix, laplacian: &Laplacian, beta: f64) -> Result<()> {
    ensure_finite(x, "data matrix")?;
    let n = x.ncols();
    if laplacian.size() != n {
        return Err(GlrrError::invalid(format!(
            "Laplacian is {}x{} but data has {n} columns",
            laplacian.size(),
            laplacian.size()
        )));
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(GlrrError::invalid(format!("beta must be >= 0, got {beta}")));
    }
    Ok(())
}

/// Closed-form minimiser of the linearized `Z` subproblem.
pub fn update_z(state: &AdmmState, x: &Matrix, laplacian: &Laplacian, beta: f64) -> Result<Matrix> {
    check_problem(x, laplacian, beta)?;
    let x_norm_sq = x.norm_squared();
    ZSystem::build(laplacian, beta).apply(z_numerator(state, x, x_norm_sq), state.mu * (x_norm_sq + 1.0))
}

fn step_with(
    state: &mut AdmmState,
    x: &Matrix,
    x_norm_sq: f64,
    system: &ZSystem,
    config: &GlrrConfig,
) -> Result<()> {
    state.j = update_j(state)?;
    state.e = update_e(state, x, config.lambda)?;
    let shift = state.mu * (x_norm_sq + 1.0);
    state.z = system.apply(z_numerator(state, x, x_norm_sq), shift)?;

    let mu = state.mu;
    state.y1 += (&state.z - &state.j) * mu;
    state.y2 += (x * &state.z + &state.e - x) * mu;
    state.mu = (config.rho * mu).min(config.mu_max);
    state.z_prev.copy_from(&state.z);
    Ok(())
}

/// One full iteration: `J`, `E`, `Z`, multipliers, penalty, anchor.
pub fn admm_step(
    state: &AdmmState,
    x: &Matrix,
    laplacian: &Laplacian,
    config: &GlrrConfig,
) -> Result<AdmmState> {
    config.validate()?;
    check_problem(x, laplacian, config.beta)?;
    state.check_shapes(x)?;
    let x_norm_sq = x.norm_squared();
    let system = ZSystem::build(laplacian, config.beta);
    let mut next = state.clone();
    step_with(&mut next, x, x_norm_sq, &system, config)?;
    if !next.is_finite() {
        return Err(GlrrError::Divergence { iteration: 1 });
    }
    Ok(next)
}

/// Runs the solver from the all-zero initialisation until both residuals
/// drop below `eps` or `max_iter` iterations have been spent.
pub fn solve(x: &Matrix, laplacian: &Laplacian, config: &GlrrConfig) -> Result<GlrrSolution> {
    config.validate()?;
    check_problem(x, laplacian, config.beta)?;
    let (d, n) = x.shape();
    if n < 2 {
        return Err(GlrrError::invalid(format!("need at least 2 samples, got {n}")));
    }
    let x_norm_sq = x.norm_squared();
    let mut state = AdmmState::zeros(d, n, config.mu0);
    let mut residuals = Vec::new();
    let mut converged = false;
    let system = ZSystem::build(laplacian, config.beta);

    for iteration in 1..=config.max_iter {
        let mu = state.mu;
        step_with(&mut state, x, x_norm_sq, &system, config)?;
        if !state.is_finite() {
            return Err(GlrrError::Divergence { iteration });
        }
        let (primal, consensus) = state.residuals(x);
        residuals.push(ResidualRecord {
            iteration,
            primal,
            consensus,
            mu,
        });
        if primal < config.eps && consensus < config.eps {
            converged = true;
            break;
        }
    }

    log::debug!(
        "glrr solve: n={n} d={d} lambda={} beta={} iterations={} converged={converged}",
        config.lambda,
        config.beta,
        residuals.len()
    );
    Ok(GlrrSolution {
        z: state.z,
        e: state.e,
        iterations: residuals.len(),
        residuals,
        converged,
    })
}
