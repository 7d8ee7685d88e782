//! Graph-regularized low-rank representation (GLRR) for aerosol optical
//! depth retrieval.
//!
//! The crate covers the whole chain: proximal kernels, the baseline-driven
//! affinity graph, the linearized ADMM solver, downstream regressors with
//! grid-search cross-validation, and the repeated-split evaluation protocol.

pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod graph;
pub mod metrics;
pub mod prox;
pub mod regression;
pub mod report;
pub mod rng;
pub mod solver;
pub mod validate;

pub use config::RunConfig;
pub use data::{RetrievalDataset, SyntheticSpec};
pub use error::{GlrrError, Result};
pub use eval::{EvaluationReport, ExperimentConfig, Method, SweepConfig, SweepGrid};
pub use graph::{AffinityGraph, GraphConfig, Laplacian, Sigma};
pub use regression::{FeatureSet, ModelSpec};
pub use solver::{AdmmState, GlrrConfig, GlrrSolution, ResidualRecord};

/// Dense real matrix used throughout (column-major storage).
pub type Matrix = nalgebra::DMatrix<f64>;
