//! Repeated-split evaluation protocol.
//!
//! GLRR features are learned transductively: the representation `Z` is solved
//! once on all samples (spectra plus baseline retrievals, never the AERONET
//! labels), and every split reuses it. Hyperparameters, including `(lambda,
//! beta)`, are chosen by k-fold cross-validation restricted to the training
//! indices of each split.

use std::collections::BTreeMap;
use std::rc::Rc;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::RetrievalDataset;
use crate::error::{GlrrError, Result};
use crate::graph::{build_knn_graph, laplacian, GraphConfig, Laplacian};
use crate::metrics::{mean_std, pearson_r, rmse};
use crate::regression::{
    fit, grid_search_cv, log_lattice, svr_grid, CvOutcome, FeatureSet, ModelSpec, Standardizer,
    DEFAULT_EPSILON_TUBE, DEFAULT_FOLDS,
};
use crate::rng;
use crate::solver::{solve, GlrrConfig, GlrrSolution};
use crate::Matrix;

/// Name of the physical-model reference row in reports.
pub const BASELINE_ROW: &str = "physical_baseline";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// OLS on standardized spectra.
    Ols,
    /// Ridge on standardized spectra.
    Ridge,
    /// SVR on standardized spectra.
    Svr,
    /// SVR on plain LRR features (`beta = 0`).
    LrrSvr,
    /// SVR on graph-regularized LRR features.
    GlrrSvr,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Ols, Method::Ridge, Method::Svr, Method::LrrSvr, Method::GlrrSvr];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ols => "ols",
            Method::Ridge => "ridge",
            Method::Svr => "svr",
            Method::LrrSvr => "lrr_svr",
            Method::GlrrSvr => "glrr_svr",
        }
    }
}

/// Hyperparameter lattices searched by cross-validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperGrids {
    pub gamma: Vec<f64>,
    pub c: Vec<f64>,
    pub alpha: Vec<f64>,
    pub lambda: Vec<f64>,
    pub beta: Vec<f64>,
}

impl Default for HyperGrids {
    fn default() -> Self {
        HyperGrids {
            gamma: log_lattice(),
            c: log_lattice(),
            alpha: log_lattice(),
            lambda: log_lattice(),
            beta: log_lattice(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub train_percentages: Vec<f64>,
    pub repeats: usize,
    pub folds: usize,
    pub methods: Vec<Method>,
    pub epsilon_tube: f64,
    pub grids: HyperGrids,
    /// Solver settings; `lambda` and `beta` here are ignored in favour of the grids.
    pub glrr: GlrrConfig,
    pub graph: GraphConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            train_percentages: (1..=9).map(|k| k as f64 / 10.0).collect(),
            repeats: 10,
            folds: DEFAULT_FOLDS,
            methods: Method::ALL.to_vec(),
            epsilon_tube: DEFAULT_EPSILON_TUBE,
            grids: HyperGrids::default(),
            glrr: GlrrConfig::default(),
            graph: GraphConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(GlrrError::invalid("repeats must be at least 1"));
        }
        if self.train_percentages.is_empty() {
            return Err(GlrrError::invalid("no training percentages configured"));
        }
        if let Some(f) = self.train_percentages.iter().find(|f| !(**f > 0.0 && **f < 1.0)) {
            return Err(GlrrError::invalid(format!("training fraction {f} outside (0, 1)")));
        }
        if !(self.epsilon_tube >= 0.0 && self.epsilon_tube.is_finite()) {
            return Err(GlrrError::invalid("epsilon_tube must be finite and >= 0"));
        }
        let g = &self.grids;
        for (name, grid) in [("gamma", &g.gamma), ("c", &g.c), ("alpha", &g.alpha), ("lambda", &g.lambda), ("beta", &g.beta)] {
            if grid.is_empty() {
                return Err(GlrrError::invalid(format!("{name} grid is empty")));
            }
            if grid.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return Err(GlrrError::invalid(format!("{name} grid has invalid values")));
            }
        }
        self.glrr.validate()
    }
}

/// Disjoint train/test index sets, each sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded random split with `round(fraction * n)` training samples.
pub fn random_split(n: usize, fraction: f64, seed: u64) -> Result<Split> {
    let train_size = (fraction * n as f64).round();
    if !(train_size >= 1.0 && train_size <= n as f64 - 1.0) {
        return Err(GlrrError::invalid(format!(
            "fraction {fraction} of {n} samples leaves an empty train or test set"
        )));
    }
    let train_size = train_size as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::substream(seed, rng::SPLIT, 0));
    let mut train = order[..train_size].to_vec();
    let mut test = order[train_size..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

/// Solver output for one `(lambda, beta)` cell, reshaped for regression.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnedFeatures {
    /// `n x n`; column `i` is the representation of sample `i`.
    pub z: Matrix,
    pub converged: bool,
    pub iterations: usize,
}

impl LearnedFeatures {
    fn from_solution(sol: GlrrSolution) -> Self {
        LearnedFeatures {
            converged: sol.converged,
            iterations: sol.iterations,
            z: sol.z,
        }
    }

    /// Samples as rows.
    pub fn rows(&self) -> Matrix {
        self.z.transpose()
    }
}

pub fn baseline_laplacian(dataset: &RetrievalDataset, graph: &GraphConfig) -> Result<Laplacian> {
    laplacian(&build_knn_graph(&dataset.baseline, graph)?)
}

/// Builds the baseline graph and solves for `Z` on every sample.
pub fn learn_features(dataset: &RetrievalDataset, glrr: &GlrrConfig, graph: &GraphConfig) -> Result<LearnedFeatures> {
    let lap = baseline_laplacian(dataset, graph)?;
    solve(&dataset.spectra, &lap, glrr).map(LearnedFeatures::from_solution)
}

/// Memoised solver runs keyed by `(lambda, beta)`; shared across folds, splits and repeats.
pub struct FeatureCache<'a> {
    dataset: &'a RetrievalDataset,
    laplacian: Laplacian,
    solver: GlrrConfig,
    entries: BTreeMap<(u64, u64), std::result::Result<Rc<(LearnedFeatures, Matrix)>, String>>,
}

impl<'a> FeatureCache<'a> {
    pub fn new(dataset: &'a RetrievalDataset, solver: GlrrConfig, graph: &GraphConfig) -> Result<Self> {
        Ok(FeatureCache {
            dataset,
            laplacian: baseline_laplacian(dataset, graph)?,
            solver,
            entries: BTreeMap::new(),
        })
    }

    pub fn laplacian(&self) -> &Laplacian {
        &self.laplacian
    }

    /// Features and their row-major form (samples as rows).
    pub fn get(&mut self, lambda: f64, beta: f64) -> std::result::Result<Rc<(LearnedFeatures, Matrix)>, String> {
        let key = (lambda.to_bits(), beta.to_bits());
        if let Some(hit) = self.entries.get(&key) {
            return hit.clone();
        }
        let cfg = self.solver.with_weights(lambda, beta);
        let entry = solve(&self.dataset.spectra, &self.laplacian, &cfg)
            .map(|sol| {
                let f = LearnedFeatures::from_solution(sol);
                let rows = f.rows();
                Rc::new((f, rows))
            })
            .map_err(|e| e.to_string());
        if let Err(e) = &entry {
            log::warn!("GLRR solve failed at lambda={lambda} beta={beta}: {e}");
        }
        self.entries.insert(key, entry.clone());
        entry
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Fits `spec` on the training rows and scores it on the test rows.
pub fn evaluate_fixed(features: &Matrix, targets: &[f64], split: &Split, spec: &ModelSpec) -> Result<Score> {
    let all = FeatureSet::new(features.clone(), targets.to_vec())?;
    let train = all.subset(&split.train);
    let test = all.subset(&split.test);
    let model = fit(spec, &train)?;
    let pred = model.predict(test.features())?;
    Score::of(&pred, test.targets())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub rmse: f64,
    /// Missing when predictions or targets are constant.
    pub r: Option<f64>,
}

impl Score {
    pub fn of(pred: &[f64], truth: &[f64]) -> Result<Self> {
        Ok(Score {
            rmse: rmse(pred, truth)?,
            r: pearson_r(pred, truth).ok(),
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

impl Hyper {
    fn with_model(mut self, spec: &ModelSpec) -> Self {
        match *spec {
            ModelSpec::Ols => {}
            ModelSpec::Ridge { alpha } => self.alpha = Some(alpha),
            ModelSpec::Svr { gamma, c, .. } => {
                self.gamma = Some(gamma);
                self.c = Some(c);
            }
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Method,
    pub rmse: Option<f64>,
    pub r: Option<f64>,
    pub hyper: Hyper,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver_converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Global indices of every sample touched by cross-validation.
    #[serde(skip)]
    pub cv_indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub repeat: usize,
    pub percentage: f64,
    pub split: Split,
    pub baseline: Score,
    pub results: Vec<MethodResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportCell {
    pub method: String,
    pub percentage: f64,
    pub rmse_mean: Option<f64>,
    pub rmse_std: Option<f64>,
    pub r_mean: Option<f64>,
    pub r_std: Option<f64>,
    pub completed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub samples: usize,
    pub bands: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub config: ExperimentConfig,
    pub dataset: DatasetSummary,
    pub cells: Vec<ReportCell>,
    pub runs: Vec<RunRecord>,
}

impl EvaluationReport {
    pub fn cell(&self, method: &str, percentage: f64) -> Option<&ReportCell> {
        self.cells.iter().find(|c| c.method == method && c.percentage == percentage)
    }

    pub fn failures(&self) -> usize {
        self.cells.iter().map(|c| c.failed).sum()
    }
}

fn optional_stats(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        (None, None)
    } else {
        let (m, s) = mean_std(values);
        (Some(m), Some(s))
    }
}

fn aggregate(method: &str, percentage: f64, scores: &[Option<Score>]) -> ReportCell {
    let rmses: Vec<f64> = scores.iter().flatten().map(|s| s.rmse).collect();
    let rs: Vec<f64> = scores.iter().flatten().filter_map(|s| s.r).collect();
    let (rmse_mean, rmse_std) = optional_stats(&rmses);
    let (r_mean, r_std) = optional_stats(&rs);
    ReportCell {
        method: method.to_string(),
        percentage,
        rmse_mean,
        rmse_std,
        r_mean,
        r_std,
        completed: rmses.len(),
        failed: scores.len() - rmses.len(),
    }
}

/// Everything a single split needs.
struct SplitContext<'c> {
    config: &'c ExperimentConfig,
    dataset: &'c RetrievalDataset,
    split: &'c Split,
    fold_seed: u64,
}

impl SplitContext<'_> {
    fn svr_grid(&self) -> Vec<ModelSpec> {
        svr_grid(&self.config.grids.gamma, &self.config.grids.c, self.config.epsilon_tube)
    }

    fn training_set(&self, rows: &Matrix) -> Result<FeatureSet> {
        FeatureSet::new(rows.select_rows(&self.split.train), self.split.train.iter().map(|&i| self.dataset.aeronet[i]).collect())
    }

    fn cv(&self, rows: &Matrix, grid: &[ModelSpec]) -> Result<(CvOutcome, Vec<usize>)> {
        let train = self.training_set(rows)?;
        let outcome = grid_search_cv(&train, grid, self.config.folds, self.fold_seed)?;
        let touched = outcome.folds.iter().flatten().map(|&i| self.split.train[i]).collect();
        Ok((outcome, touched))
    }

    fn raw_features(&self) -> Matrix {
        let rows = self.dataset.spectra.transpose();
        let scaler = Standardizer::fit(&rows.select_rows(&self.split.train));
        scaler.transform(&rows)
    }

    fn score(&self, rows: &Matrix, spec: &ModelSpec) -> Result<Score> {
        evaluate_fixed(rows, &self.dataset.aeronet, self.split, spec)
    }

    fn run_raw(&self, method: Method) -> Result<MethodResult> {
        let rows = self.raw_features();
        let (spec, cv_indices) = match method {
            Method::Ols => (ModelSpec::Ols, Vec::new()),
            Method::Ridge => {
                let grid: Vec<ModelSpec> = self.config.grids.alpha.iter().map(|&alpha| ModelSpec::Ridge { alpha }).collect();
                let (cv, touched) = self.cv(&rows, &grid)?;
                (cv.best, touched)
            }
            Method::Svr => {
                let (cv, touched) = self.cv(&rows, &self.svr_grid())?;
                (cv.best, touched)
            }
            _ => unreachable!("representation methods handled separately"),
        };
        let score = self.score(&rows, &spec)?;
        Ok(MethodResult {
            method,
            rmse: Some(score.rmse),
            r: score.r,
            hyper: Hyper::default().with_model(&spec),
            solver_converged: None,
            error: None,
            cv_indices,
        })
    }

    /// Joint CV over `(lambda, beta)` cells and the SVR grid; the cell with the
    /// lowest CV RMSE wins, earliest in lattice order on ties.
    fn run_representation(&self, method: Method, cache: &mut FeatureCache) -> Result<MethodResult> {
        let betas: Vec<f64> = match method {
            Method::LrrSvr => vec![0.0],
            _ => self.config.grids.beta.clone(),
        };
        let grid = self.svr_grid();
        let mut best: Option<(f64, f64, ModelSpec, f64)> = None;
        let mut cv_indices = Vec::new();
        let mut failures = Vec::new();
        for &lambda in &self.config.grids.lambda {
            for &beta in &betas {
                let entry = match cache.get(lambda, beta) {
                    Ok(e) => e,
                    Err(e) => {
                        failures.push(format!("lambda={lambda} beta={beta}: {e}"));
                        continue;
                    }
                };
                match self.cv(&entry.1, &grid) {
                    Ok((cv, touched)) => {
                        cv_indices = touched;
                        if best.as_ref().is_none_or(|b| cv.best_score < b.3) {
                            best = Some((lambda, beta, cv.best, cv.best_score));
                        }
                    }
                    Err(e) => failures.push(format!("lambda={lambda} beta={beta}: {e}")),
                }
            }
        }
        let (lambda, beta, spec, _) = best.ok_or_else(|| GlrrError::NumericalFailure {
            routine: "representation cv",
            detail: failures.join("; "),
        })?;
        let entry = cache.get(lambda, beta).map_err(|e| GlrrError::NumericalFailure {
            routine: "glrr",
            detail: e,
        })?;
        let score = self.score(&entry.1, &spec)?;
        let hyper = Hyper {
            lambda: Some(lambda),
            beta: Some(beta),
            ..Hyper::default()
        }
        .with_model(&spec);
        Ok(MethodResult {
            method,
            rmse: Some(score.rmse),
            r: score.r,
            hyper,
            solver_converged: Some(entry.0.converged),
            error: None,
            cv_indices,
        })
    }

    fn run(&self, method: Method, cache: &mut FeatureCache) -> MethodResult {
        let outcome = match method {
            Method::Ols | Method::Ridge | Method::Svr => self.run_raw(method),
            Method::LrrSvr | Method::GlrrSvr => self.run_representation(method, cache),
        };
        outcome.unwrap_or_else(|e| MethodResult {
            method,
            rmse: None,
            r: None,
            hyper: Hyper::default(),
            solver_converged: None,
            error: Some(e.to_string()),
            cv_indices: Vec::new(),
        })
    }
}

fn split_seed(seed: u64, repeat: usize, pct_index: usize) -> u64 {
    rng::derive_seed(seed, rng::SPLIT, ((repeat as u64) << 32) | pct_index as u64)
}

fn fold_seed(seed: u64, repeat: usize, pct_index: usize) -> u64 {
    rng::derive_seed(seed, rng::FOLDS, ((repeat as u64) << 32) | pct_index as u64)
}

/// Runs the whole protocol. Per-method failures are recorded in the report
/// rather than aborting.
pub fn run_experiment(dataset: &RetrievalDataset, config: &ExperimentConfig) -> Result<EvaluationReport> {
    config.validate()?;
    let n = dataset.len();
    let needs_features = config.methods.iter().any(|m| matches!(m, Method::LrrSvr | Method::GlrrSvr));
    let mut cache = FeatureCache::new(dataset, config.glrr, &config.graph)?;
    if !needs_features {
        log::debug!("no representation methods configured; solver will not run");
    }

    let mut runs = Vec::new();
    for repeat in 0..config.repeats {
        for (pidx, &pct) in config.train_percentages.iter().enumerate() {
            let split = random_split(n, pct, split_seed(config.seed, repeat, pidx))?;
            let ctx = SplitContext {
                config,
                dataset,
                split: &split,
                fold_seed: fold_seed(config.seed, repeat, pidx),
            };
            let pred: Vec<f64> = split.test.iter().map(|&i| dataset.baseline[i]).collect();
            let truth: Vec<f64> = split.test.iter().map(|&i| dataset.aeronet[i]).collect();
            let baseline = Score::of(&pred, &truth)?;
            let results = config.methods.iter().map(|&m| ctx.run(m, &mut cache)).collect();
            log::info!("repeat {repeat} train fraction {pct}: done");
            runs.push(RunRecord {
                repeat,
                percentage: pct,
                split,
                baseline,
                results,
            });
        }
    }

    let mut cells = Vec::new();
    for &pct in &config.train_percentages {
        let scores: Vec<Option<Score>> = runs.iter().filter(|r| r.percentage == pct).map(|r| Some(r.baseline)).collect();
        cells.push(aggregate(BASELINE_ROW, pct, &scores));
    }
    for &method in &config.methods {
        for &pct in &config.train_percentages {
            let scores: Vec<Option<Score>> = runs
                .iter()
                .filter(|r| r.percentage == pct)
                .flat_map(|r| r.results.iter().filter(|m| m.method == method))
                .map(|m| m.rmse.map(|rmse| Score { rmse, r: m.r }))
                .collect();
            cells.push(aggregate(method.name(), pct, &scores));
        }
    }

    Ok(EvaluationReport {
        config: config.clone(),
        dataset: DatasetSummary {
            samples: n,
            bands: dataset.bands(),
        },
        cells,
        runs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub train_fraction: f64,
    pub lambdas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            train_fraction: 0.5,
            lambdas: log_lattice(),
            betas: log_lattice(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub lambda: f64,
    pub beta: f64,
    pub rmse: Option<f64>,
    pub converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub sweep: SweepConfig,
    pub seed: u64,
    /// SVR parameters chosen by CV at the lattice centre and held fixed.
    pub model: ModelSpec,
    pub centre: (f64, f64),
    pub split: Split,
    /// Lambda-major, both ascending as configured.
    pub cells: Vec<SweepCell>,
    pub argmin: Option<(f64, f64)>,
}

/// RMSE surface over `(lambda, beta)` on one seeded split, with the SVR
/// parameters fixed by CV at the centre of the lattice.
pub fn sweep_lambda_beta(dataset: &RetrievalDataset, config: &ExperimentConfig, sweep: &SweepConfig) -> Result<SweepGrid> {
    config.validate()?;
    if sweep.lambdas.is_empty() || sweep.betas.is_empty() {
        return Err(GlrrError::invalid("sweep lattice is empty"));
    }
    let in_range = |v: &f64| (1e-3..=1e3).contains(v);
    if !sweep.lambdas.iter().all(in_range) || !sweep.betas.iter().all(in_range) {
        return Err(GlrrError::invalid("sweep lattice must lie within [1e-3, 1e3]"));
    }
    let split = random_split(dataset.len(), sweep.train_fraction, rng::derive_seed(config.seed, "sweep", 0))?;
    let ctx = SplitContext {
        config,
        dataset,
        split: &split,
        fold_seed: rng::derive_seed(config.seed, "sweep-folds", 0),
    };
    let mut cache = FeatureCache::new(dataset, config.glrr, &config.graph)?;
    let centre = (sweep.lambdas[sweep.lambdas.len() / 2], sweep.betas[sweep.betas.len() / 2]);
    let centre_rows = cache.get(centre.0, centre.1).map_err(|e| GlrrError::NumericalFailure {
        routine: "glrr",
        detail: e,
    })?;
    let (cv, _) = ctx.cv(&centre_rows.1, &ctx.svr_grid())?;
    let model = cv.best;

    let mut cells = Vec::new();
    let mut argmin: Option<(f64, f64, f64)> = None;
    for &lambda in &sweep.lambdas {
        for &beta in &sweep.betas {
            let cell = match cache.get(lambda, beta) {
                Ok(entry) => match ctx.score(&entry.1, &model) {
                    Ok(s) => SweepCell {
                        lambda,
                        beta,
                        rmse: Some(s.rmse),
                        converged: Some(entry.0.converged),
                        error: None,
                    },
                    Err(e) => SweepCell {
                        lambda,
                        beta,
                        rmse: None,
                        converged: Some(entry.0.converged),
                        error: Some(e.to_string()),
                    },
                },
                Err(e) => SweepCell {
                    lambda,
                    beta,
                    rmse: None,
                    converged: None,
                    error: Some(e),
                },
            };
            if let Some(r) = cell.rmse {
                if argmin.is_none_or(|(_, _, b)| r < b) {
                    argmin = Some((lambda, beta, r));
                }
            }
            cells.push(cell);
        }
    }
    Ok(SweepGrid {
        sweep: sweep.clone(),
        seed: config.seed,
        model,
        centre,
        split,
        cells,
        argmin: argmin.map(|(l, b, _)| (l, b)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticSpec};

    #[test]
    fn split_examples() {
        let s = random_split(10, 0.5, 3).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (5, 5));
        let mut all = [s.train.clone(), s.test.clone()].concat();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!(s, random_split(10, 0.5, 3).unwrap());
        assert!(random_split(10, 0.01, 0).is_err());
        assert!(random_split(10, 0.99, 0).is_err());
    }

    #[test]
    fn splits_vary_with_seed() {
        let first = random_split(50, 0.5, 0).unwrap();
        let distinct = (1..=100).filter(|&s| random_split(50, 0.5, s).unwrap() != first).count();
        assert_eq!(distinct, 100);
    }

    fn tiny() -> RetrievalDataset {
        generate_synthetic(&SyntheticSpec {
            n: 24,
            d: 6,
            r: 2,
            seed: 3,
            ..Default::default()
        })
        .unwrap()
        .dataset
    }

    fn quick_config() -> ExperimentConfig {
        ExperimentConfig {
            repeats: 1,
            train_percentages: vec![0.5],
            grids: HyperGrids {
                gamma: vec![0.1, 1.0],
                c: vec![1.0, 10.0],
                alpha: vec![0.1, 1.0],
                lambda: vec![0.1, 1.0],
                beta: vec![0.1, 1.0],
            },
            glrr: GlrrConfig {
                max_iter: 300,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn single_cell_report() {
        let cfg = ExperimentConfig {
            methods: vec![Method::Ridge],
            ..quick_config()
        };
        let report = run_experiment(&tiny(), &cfg).unwrap();
        assert_eq!(report.cells.len(), 2);
        assert!(report.cell(BASELINE_ROW, 0.5).is_some());
        let cell = report.cell("ridge", 0.5).unwrap();
        assert_eq!(cell.completed, 1);
        assert_eq!(cell.rmse_std, Some(0.0));
    }

    #[test]
    fn baseline_row_recomputes_from_split() {
        let data = tiny();
        let report = run_experiment(&data, &ExperimentConfig { methods: vec![Method::Ols], ..quick_config() }).unwrap();
        let run = &report.runs[0];
        let pred: Vec<f64> = run.split.test.iter().map(|&i| data.baseline[i]).collect();
        let truth: Vec<f64> = run.split.test.iter().map(|&i| data.aeronet[i]).collect();
        assert_eq!(run.baseline, Score::of(&pred, &truth).unwrap());
    }

    #[test]
    fn cv_touches_training_indices_only() {
        let report = run_experiment(&tiny(), &quick_config()).unwrap();
        for run in &report.runs {
            for result in &run.results {
                assert!(result.error.is_none(), "{:?}", result.error);
                for i in &result.cv_indices {
                    assert!(run.split.train.binary_search(i).is_ok());
                }
            }
        }
    }

    #[test]
    fn one_by_one_sweep_matches_direct_evaluation() {
        let data = tiny();
        let cfg = quick_config();
        let sweep = SweepConfig {
            train_fraction: 0.5,
            lambdas: vec![1.0],
            betas: vec![0.1],
        };
        let grid = sweep_lambda_beta(&data, &cfg, &sweep).unwrap();
        assert_eq!(grid.cells.len(), 1);
        assert_eq!(grid.argmin, Some((1.0, 0.1)));
        let features = learn_features(&data, &cfg.glrr.with_weights(1.0, 0.1), &cfg.graph).unwrap();
        let direct = evaluate_fixed(&features.rows(), &data.aeronet, &grid.split, &grid.model).unwrap();
        assert_eq!(grid.cells[0].rmse, Some(direct.rmse));
    }

    #[test]
    fn sweep_rejects_out_of_range_lattice() {
        let sweep = SweepConfig {
            lambdas: vec![1e4],
            ..Default::default()
        };
        assert!(sweep_lambda_beta(&tiny(), &quick_config(), &sweep).is_err());
    }
}
