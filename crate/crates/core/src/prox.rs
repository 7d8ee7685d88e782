//! Proximal operators and matrix norms used by the ADMM subproblems.
//!
//! Every function here is pure: inputs are borrowed, outputs are freshly
//! allocated.

use nalgebra::DMatrix;

use crate::error::{GlrrError, Result};
use crate::Matrix;

/// Relative floor below which singular values count as zero for rank reporting.
pub const RANK_TOLERANCE: f64 = 1e-14;

pub(crate) fn ensure_finite(m: &Matrix, what: &str) -> Result<()> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(GlrrError::invalid(format!("{what}: empty matrix")));
    }
    if let Some(pos) = m.iter().position(|v| !v.is_finite()) {
        return Err(GlrrError::invalid(format!(
            "{what}: non-finite entry at linear index {pos}"
        )));
    }
    Ok(())
}

/// Thin SVD `m = U diag(s) V^T` with `s` descending.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

pub fn svd(m: &Matrix) -> Result<ThinSvd> {
    ensure_finite(m, "svd")?;
    let a = faer::Mat::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    let dec = a.thin_svd().map_err(|e| GlrrError::NumericalFailure {
        routine: "svd",
        detail: format!("{e:?} on {}x{} input (frobenius norm {:e})", m.nrows(), m.ncols(), m.norm()),
    })?;
    let (u, v) = (dec.U(), dec.V());
    Ok(ThinSvd {
        u: DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)]),
        s: dec.S().column_vector().iter().copied().collect(),
        v: DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)]),
    })
}

/// Singular values of `m` in descending order.
pub fn singular_values(m: &Matrix) -> Result<Vec<f64>> {
    let mut s = svd(m)?.s;
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Singular value thresholding: the proximal map of `tau * ||.||_*`.
///
/// Returns `U diag(max(s - tau, 0)) V^T`.
pub fn svt(m: &Matrix, tau: f64) -> Result<Matrix> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(GlrrError::invalid(format!("svt: threshold {tau} must be finite and >= 0")));
    }
    let dec = svd(m)?;
    let kept = dec.s.iter().take_while(|&&s| s > tau).count();
    if kept == 0 {
        return Ok(DMatrix::zeros(m.nrows(), m.ncols()));
    }
    let mut left = dec.u.columns(0, kept).into_owned();
    for (k, mut col) in left.column_iter_mut().enumerate() {
        col *= dec.s[k] - tau;
    }
    Ok(left * dec.v.columns(0, kept).transpose())
}

/// Column-wise shrinkage: the proximal map of `tau * ||.||_{2,1}`.
///
/// Column `q` becomes `(|q| - tau)/|q| * q` when `|q| > tau`, otherwise zero.
pub fn l21_shrink(q: &Matrix, tau: f64) -> Result<Matrix> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(GlrrError::invalid(format!(
            "l21_shrink: threshold {tau} must be finite and >= 0"
        )));
    }
    ensure_finite(q, "l21_shrink")?;
    let mut out = q.clone();
    if tau == 0.0 {
        return Ok(out);
    }
    for mut col in out.column_iter_mut() {
        let norm = col.norm();
        if norm > tau {
            col *= (norm - tau) / norm;
        } else {
            col.fill(0.0);
        }
    }
    Ok(out)
}

/// Sum of column Euclidean norms.
pub fn l21_norm(m: &Matrix) -> f64 {
    m.column_iter().map(|c| c.norm()).sum()
}

/// Largest absolute entry.
pub fn inf_norm(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn frobenius_norm(m: &Matrix) -> f64 {
    m.norm()
}

/// Sum of singular values.
pub fn nuclear_norm(m: &Matrix) -> Result<f64> {
    Ok(svd(m)?.s.iter().sum())
}

/// Number of singular values above `RANK_TOLERANCE * s_max`.
pub fn numerical_rank(m: &Matrix) -> Result<usize> {
    let s = singular_values(m)?;
    let top = s.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return Ok(0);
    }
    Ok(s.iter().filter(|&&v| v > RANK_TOLERANCE * top).count())
}
