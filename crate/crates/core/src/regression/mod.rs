//! Downstream regressors consuming learned features: OLS, ridge and
//! Gaussian-kernel epsilon-SVR, plus k-fold grid-search cross-validation.

mod cv;
mod linear;
mod svr;

pub use cv::{grid_search_cv, kfold_partition, log_lattice, svr_grid, CvCell, CvOutcome, DEFAULT_FOLDS};
pub use linear::{fit_ols, fit_ridge, LinearModel};
pub use svr::{
    fit_svr, solve_dual, sq_distances, KernelSpec, SvrDual, SvrModel, DEFAULT_EPSILON_TUBE, KKT_TOLERANCE,
    MAX_PAIR_UPDATES,
};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{GlrrError, Result};
use crate::Matrix;

/// Samples as rows, with one target per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    features: Matrix,
    targets: Vec<f64>,
}

impl FeatureSet {
    pub fn new(features: Matrix, targets: Vec<f64>) -> Result<Self> {
        if features.nrows() != targets.len() {
            return Err(GlrrError::invalid(format!(
                "{} feature rows but {} targets",
                features.nrows(),
                targets.len()
            )));
        }
        if features.iter().chain(&targets).any(|v| !v.is_finite()) {
            return Err(GlrrError::invalid("feature set contains non-finite values"));
        }
        Ok(FeatureSet { features, targets })
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Feature dimension.
    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Rows picked by `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> FeatureSet {
        FeatureSet {
            features: self.features.select_rows(indices),
            targets: indices.iter().map(|&i| self.targets[i]).collect(),
        }
    }
}

/// Per-column mean and standard deviation learned from a training set.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    mean: DVector<f64>,
    scale: DVector<f64>,
}

impl Standardizer {
    pub fn fit(features: &Matrix) -> Self {
        let n = features.nrows() as f64;
        let mean = DVector::from_iterator(features.ncols(), features.column_iter().map(|c| c.sum() / n));
        let scale = DVector::from_iterator(
            features.ncols(),
            features.column_iter().zip(mean.iter()).map(|(c, m)| {
                let var = c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
                // constant columns are only centred
                if var > 0.0 { var.sqrt() } else { 1.0 }
            }),
        );
        Standardizer { mean, scale }
    }

    pub fn transform(&self, features: &Matrix) -> Matrix {
        let mut out = features.clone();
        for (j, mut col) in out.column_iter_mut().enumerate() {
            col.add_scalar_mut(-self.mean[j]);
            col /= self.scale[j];
        }
        out
    }
}

/// A regressor together with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    Ols,
    Ridge { alpha: f64 },
    Svr { gamma: f64, c: f64, epsilon: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    Linear(LinearModel),
    Svr(SvrModel),
}

impl FittedModel {
    pub fn predict(&self, features: &Matrix) -> Result<Vec<f64>> {
        match self {
            FittedModel::Linear(m) => m.predict(features),
            FittedModel::Svr(m) => m.predict(features),
        }
    }
}

pub fn fit(spec: &ModelSpec, data: &FeatureSet) -> Result<FittedModel> {
    match *spec {
        ModelSpec::Ols => fit_ols(data).map(FittedModel::Linear),
        ModelSpec::Ridge { alpha } => fit_ridge(data, alpha).map(FittedModel::Linear),
        ModelSpec::Svr { gamma, c, epsilon } => {
            fit_svr(data, c, KernelSpec::new(gamma)?, epsilon).map(FittedModel::Svr)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardizer_uses_training_statistics() {
        let train = Matrix::from_row_slice(3, 2, &[1.0, 5.0, 2.0, 5.0, 3.0, 5.0]);
        let s = Standardizer::fit(&train);
        let out = s.transform(&train);
        assert!((out.column(0).sum()).abs() < 1e-12);
        assert_eq!(out.column(1).amax(), 0.0);
        let other = s.transform(&Matrix::from_row_slice(1, 2, &[4.0, 6.0]));
        assert!((other[(0, 0)] - 2.0 / (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(other[(0, 1)], 1.0);
    }

    #[test]
    fn feature_set_validation() {
        assert!(FeatureSet::new(Matrix::zeros(2, 1), vec![1.0]).is_err());
        assert!(FeatureSet::new(Matrix::zeros(1, 1), vec![f64::NAN]).is_err());
    }
}
