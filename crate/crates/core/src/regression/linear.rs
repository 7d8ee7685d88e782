use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::FeatureSet;
use crate::error::{GlrrError, Result};
use crate::Matrix;

/// `y = w^T x + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// 0 for ordinary least squares.
    pub ridge_alpha: f64,
}

impl LinearModel {
    pub fn predict(&self, features: &Matrix) -> Result<Vec<f64>> {
        if features.ncols() != self.weights.len() {
            return Err(GlrrError::invalid(format!(
                "linear model expects {} features, got {}",
                self.weights.len(),
                features.ncols()
            )));
        }
        let w = DVector::from_column_slice(&self.weights);
        Ok((features * w).iter().map(|v| v + self.intercept).collect())
    }
}

/// Column means of the features and mean of the targets, with centred copies.
fn centre(data: &FeatureSet) -> (Matrix, DVector<f64>, DVector<f64>, f64) {
    let x = data.features();
    let n = x.nrows() as f64;
    let x_mean = DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / n));
    let y_mean = data.targets().iter().sum::<f64>() / n;
    let mut xc = x.clone();
    for (j, mut col) in xc.column_iter_mut().enumerate() {
        col.add_scalar_mut(-x_mean[j]);
    }
    let yc = DVector::from_iterator(data.len(), data.targets().iter().map(|v| v - y_mean));
    (xc, yc, x_mean, y_mean)
}

/// Least squares with intercept; rank-deficient designs get the minimum-norm weights.
pub fn fit_ols(data: &FeatureSet) -> Result<LinearModel> {
    if data.len() < 2 {
        return Err(GlrrError::invalid("OLS needs at least 2 samples"));
    }
    let (xc, yc, x_mean, y_mean) = centre(data);
    let size = xc.nrows().max(xc.ncols()) as f64;
    let svd = xc.svd(true, true);
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = top * f64::EPSILON * size;
    let w = if top == 0.0 {
        DVector::zeros(data.dim())
    } else {
        svd.solve(&yc, cutoff).map_err(|e| GlrrError::NumericalFailure {
            routine: "ols",
            detail: e.to_string(),
        })?
    };
    let intercept = y_mean - w.dot(&x_mean);
    Ok(LinearModel {
        weights: w.iter().copied().collect(),
        intercept,
        ridge_alpha: 0.0,
    })
}

/// L2-penalised least squares; the intercept is not penalised.
pub fn fit_ridge(data: &FeatureSet, alpha: f64) -> Result<LinearModel> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(GlrrError::invalid(format!("ridge alpha must be positive, got {alpha}")));
    }
    if data.is_empty() {
        return Err(GlrrError::invalid("ridge needs at least 1 sample"));
    }
    let (xc, yc, x_mean, y_mean) = centre(data);
    let mut gram = xc.tr_mul(&xc);
    for i in 0..gram.nrows() {
        gram[(i, i)] += alpha;
    }
    let rhs = xc.tr_mul(&yc);
    let w = gram
        .cholesky()
        .ok_or_else(|| GlrrError::NumericalFailure {
            routine: "ridge",
            detail: format!("normal matrix not positive definite at alpha={alpha}"),
        })?
        .solve(&rhs);
    let intercept = y_mean - w.dot(&x_mean);
    Ok(LinearModel {
        weights: w.iter().copied().collect(),
        intercept,
        ridge_alpha: alpha,
    })
}
