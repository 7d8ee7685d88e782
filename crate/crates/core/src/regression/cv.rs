use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::svr::{solve_dual, sq_distances};
use super::{fit, FeatureSet, ModelSpec};
use crate::error::{GlrrError, Result};
use crate::metrics::rmse;
use crate::rng;
use crate::Matrix;

pub const DEFAULT_FOLDS: usize = 5;

/// `{1e-3, 1e-2, ..., 1e3}`.
pub fn log_lattice() -> Vec<f64> {
    vec![1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3]
}

/// Cartesian `(gamma, C)` grid, gamma-major, both ascending as given.
pub fn svr_grid(gammas: &[f64], cs: &[f64], epsilon: f64) -> Vec<ModelSpec> {
    gammas
        .iter()
        .flat_map(|&gamma| cs.iter().map(move |&c| ModelSpec::Svr { gamma, c, epsilon }))
        .collect()
}

/// Seeded partition of `0..n` into `folds` parts whose sizes differ by at most one.
pub fn kfold_partition(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(GlrrError::invalid(format!("need at least 2 folds, got {folds}")));
    }
    if n < folds {
        return Err(GlrrError::invalid(format!(
            "{n} samples cannot fill {folds} folds with at least one sample each"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::substream(seed, rng::FOLDS, n as u64));
    let mut parts = vec![Vec::new(); folds];
    for (pos, idx) in order.into_iter().enumerate() {
        parts[pos % folds].push(idx);
    }
    for p in &mut parts {
        p.sort_unstable();
    }
    Ok(parts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvCell {
    pub spec: ModelSpec,
    /// Mean validation RMSE across folds; `None` if any fold failed to fit.
    pub rmse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub best: ModelSpec,
    pub best_score: f64,
    pub cells: Vec<CvCell>,
    /// Validation index sets, relative to the searched feature set.
    pub folds: Vec<Vec<usize>>,
}

fn complement(n: usize, fold: &[usize]) -> Vec<usize> {
    let mut held = vec![false; n];
    for &i in fold {
        held[i] = true;
    }
    (0..n).filter(|&i| !held[i]).collect()
}

/// Kernel matrices per gamma are shared across folds and C values.
struct KernelCache {
    sq_dist: Option<Matrix>,
    gamma: f64,
    kernel: Option<Matrix>,
}

impl KernelCache {
    fn kernel(&mut self, data: &FeatureSet, gamma: f64) -> &Matrix {
        let d = self
            .sq_dist
            .get_or_insert_with(|| sq_distances(data.features(), data.features()));
        if self.kernel.is_none() || self.gamma != gamma {
            self.kernel = Some(d.map(|v| (-gamma * v).exp()));
            self.gamma = gamma;
        }
        self.kernel.as_ref().expect("kernel set above")
    }
}

fn fold_rmse_svr(kernel: &Matrix, data: &FeatureSet, train: &[usize], val: &[usize], c: f64, eps: f64) -> Result<f64> {
    let k_train = kernel.select_rows(train).select_columns(train);
    let y_train: Vec<f64> = train.iter().map(|&i| data.targets()[i]).collect();
    let dual = solve_dual(&k_train, &y_train, c, eps)?;
    let k_val = kernel.select_rows(val).select_columns(train);
    let coef = nalgebra::DVector::from_column_slice(&dual.coeffs);
    let pred: Vec<f64> = (k_val * coef).iter().map(|v| v + dual.bias).collect();
    let truth: Vec<f64> = val.iter().map(|&i| data.targets()[i]).collect();
    rmse(&pred, &truth)
}

fn fold_rmse_generic(spec: &ModelSpec, data: &FeatureSet, train: &[usize], val: &[usize]) -> Result<f64> {
    let model = fit(spec, &data.subset(train))?;
    let held = data.subset(val);
    rmse(&model.predict(held.features())?, held.targets())
}

/// Exhaustive k-fold search; the score is mean validation RMSE and ties go
/// to the earliest grid point.
pub fn grid_search_cv(data: &FeatureSet, grid: &[ModelSpec], folds: usize, seed: u64) -> Result<CvOutcome> {
    if grid.is_empty() {
        return Err(GlrrError::invalid("empty hyperparameter grid"));
    }
    let n = data.len();
    let parts = kfold_partition(n, folds, seed)?;
    let trains: Vec<Vec<usize>> = parts.iter().map(|p| complement(n, p)).collect();
    let mut cache = KernelCache {
        sq_dist: None,
        gamma: f64::NAN,
        kernel: None,
    };

    let mut cells = Vec::with_capacity(grid.len());
    let mut best: Option<(ModelSpec, f64)> = None;
    for spec in grid {
        let mut total = 0.0;
        let mut failed = None;
        for (train, val) in trains.iter().zip(&parts) {
            let score = match *spec {
                ModelSpec::Svr { gamma, c, epsilon } => {
                    let kernel = cache.kernel(data, gamma);
                    fold_rmse_svr(kernel, data, train, val, c, epsilon)
                }
                _ => fold_rmse_generic(spec, data, train, val),
            };
            match score {
                Ok(s) => total += s,
                Err(e) => {
                    failed = Some(e);
                    break;
                }
            }
        }
        let rmse = match failed {
            None => Some(total / folds as f64),
            Some(e) => {
                log::warn!("cv cell {spec:?} failed: {e}");
                None
            }
        };
        if let Some(score) = rmse {
            if best.is_none_or(|(_, b)| score < b) {
                best = Some((*spec, score));
            }
        }
        cells.push(CvCell { spec: *spec, rmse });
    }

    let (best, best_score) = best.ok_or_else(|| GlrrError::NumericalFailure {
        routine: "grid_search_cv",
        detail: "every grid cell failed to fit".into(),
    })?;
    Ok(CvOutcome {
        best,
        best_score,
        cells,
        folds: parts,
    })
}
