//! Heat-kernel kNN affinity graph over scalar baseline retrievals, and its
//! combinatorial Laplacian `L = D - W`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{GlrrError, Result};
use crate::Matrix;

pub const DEFAULT_K: usize = 5;

/// Heat-kernel bandwidth: fixed, or chosen from the data by [`auto_sigma`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Sigma {
    #[default]
    Auto,
    Fixed(f64),
}

impl fmt::Display for Sigma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sigma::Auto => f.write_str("auto"),
            Sigma::Fixed(s) => write!(f, "{s}"),
        }
    }
}

impl Serialize for Sigma {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Sigma::Auto => s.serialize_str("auto"),
            Sigma::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Sigma {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Sigma::Fixed(v)),
            Raw::Int(v) => Ok(Sigma::Fixed(v as f64)),
            Raw::Text(t) if t.eq_ignore_ascii_case("auto") => Ok(Sigma::Auto),
            Raw::Text(t) => t
                .parse::<f64>()
                .map(Sigma::Fixed)
                .map_err(|_| serde::de::Error::custom(format!("sigma must be a number or \"auto\", got {t:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    pub k: usize,
    pub sigma: Sigma,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            k: DEFAULT_K,
            sigma: Sigma::Auto,
        }
    }
}

/// Symmetric, nonnegative, zero-diagonal weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityGraph {
    weights: Matrix,
    sigma: f64,
}

impl AffinityGraph {
    /// Wraps an explicit weight matrix after checking symmetry and sign.
    ///
    /// Diagonal entries are allowed; they cancel in the Laplacian.
    pub fn from_weights(weights: Matrix) -> Result<Self> {
        validate_weights(&weights)?;
        Ok(AffinityGraph {
            weights,
            sigma: f64::NAN,
        })
    }

    /// Edgeless graph on `n` nodes.
    pub fn empty(n: usize) -> Self {
        AffinityGraph {
            weights: DMatrix::zeros(n, n),
            sigma: f64::NAN,
        }
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn size(&self) -> usize {
        self.weights.nrows()
    }

    /// Bandwidth used to build the graph (NaN for explicit weights).
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn edge_count(&self) -> usize {
        let n = self.size();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.weights[(i, j)] > 0.0)
            .count()
    }
}

fn validate_weights(w: &Matrix) -> Result<()> {
    if w.nrows() != w.ncols() {
        return Err(GlrrError::invalid(format!(
            "weight matrix must be square, got {}x{}",
            w.nrows(),
            w.ncols()
        )));
    }
    let n = w.nrows();
    for i in 0..n {
        for j in 0..n {
            let v = w[(i, j)];
            if !v.is_finite() || v < 0.0 {
                return Err(GlrrError::invalid(format!("weight ({i},{j}) = {v} is not a finite nonnegative value")));
            }
            if v != w[(j, i)] {
                return Err(GlrrError::invalid(format!("weight matrix is not symmetric at ({i},{j})")));
            }
        }
    }
    Ok(())
}

/// `L = D - W` together with the degree vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian {
    matrix: Matrix,
    degrees: DVector<f64>,
}

impl Laplacian {
    /// Laplacian of the edgeless graph; turns the graph penalty off.
    pub fn zero(n: usize) -> Self {
        Laplacian {
            matrix: DMatrix::zeros(n, n),
            degrees: DVector::zeros(n),
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn degrees(&self) -> &DVector<f64> {
        &self.degrees
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    /// `tr(Z L Z^T)` for a representation with one column per node.
    pub fn quadratic_trace(&self, z: &Matrix) -> f64 {
        (z * &self.matrix).component_mul(z).sum()
    }
}

/// Indices of the `k` nearest neighbours of each sample, self excluded.
/// Ties in distance go to the smaller index.
pub fn knn_sets(baseline: &[f64], k: usize) -> Vec<Vec<usize>> {
    let n = baseline.len();
    (0..n)
        .map(|j| {
            let mut others: Vec<usize> = (0..n).filter(|&i| i != j).collect();
            others.sort_by(|&a, &b| {
                let da = (baseline[a] - baseline[j]).abs();
                let db = (baseline[b] - baseline[j]).abs();
                da.total_cmp(&db).then(a.cmp(&b))
            });
            others.truncate(k);
            others
        })
        .collect()
}

/// Undirected edge set of the symmetrised kNN relation, as `(i, j)` with `i < j`.
fn knn_edges(baseline: &[f64], k: usize) -> Vec<(usize, usize)> {
    let n = baseline.len();
    let mut adjacent = vec![false; n * n];
    for (j, neighbours) in knn_sets(baseline, k).into_iter().enumerate() {
        for i in neighbours {
            adjacent[i * n + j] = true;
            adjacent[j * n + i] = true;
        }
    }
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| adjacent[i * n + j])
        .collect()
}

fn check_baseline(baseline: &[f64], k: usize) -> Result<()> {
    let n = baseline.len();
    if n < 2 {
        return Err(GlrrError::invalid(format!("graph needs at least 2 samples, got {n}")));
    }
    if k == 0 || k >= n {
        return Err(GlrrError::invalid(format!("neighbour count k={k} must satisfy 1 <= k <= n-1 = {}", n - 1)));
    }
    if baseline.iter().any(|v| !v.is_finite()) {
        return Err(GlrrError::invalid("baseline retrievals contain non-finite values"));
    }
    Ok(())
}

/// Median absolute baseline gap over the kNN edge set; 1 when that median is 0.
pub fn auto_sigma(baseline: &[f64], k: usize) -> Result<f64> {
    check_baseline(baseline, k)?;
    let mut gaps: Vec<f64> = knn_edges(baseline, k)
        .into_iter()
        .map(|(i, j)| (baseline[i] - baseline[j]).abs())
        .collect();
    gaps.sort_by(f64::total_cmp);
    let m = gaps.len();
    let median = if m == 0 {
        0.0
    } else if m % 2 == 1 {
        gaps[m / 2]
    } else {
        0.5 * (gaps[m / 2 - 1] + gaps[m / 2])
    };
    if median > 0.0 {
        Ok(median)
    } else {
        log::warn!("baseline gaps on kNN edges have zero median; falling back to sigma = 1");
        Ok(1.0)
    }
}

/// Builds `w_ij = exp(-(y_i - y_j)^2 / (2 sigma^2))` on the symmetrised kNN
/// edge set and zero elsewhere.
pub fn build_knn_graph(baseline: &[f64], config: &GraphConfig) -> Result<AffinityGraph> {
    check_baseline(baseline, config.k)?;
    let sigma = match config.sigma {
        Sigma::Auto => auto_sigma(baseline, config.k)?,
        Sigma::Fixed(s) if s > 0.0 && s.is_finite() => s,
        Sigma::Fixed(s) => return Err(GlrrError::invalid(format!("sigma must be positive, got {s}"))),
    };
    let n = baseline.len();
    let two_sigma_sq = 2.0 * sigma * sigma;
    let mut weights = DMatrix::zeros(n, n);
    for (i, j) in knn_edges(baseline, config.k) {
        let gap = baseline[i] - baseline[j];
        let w = (-(gap * gap) / two_sigma_sq).exp();
        weights[(i, j)] = w;
        weights[(j, i)] = w;
    }
    Ok(AffinityGraph { weights, sigma })
}

/// `L = D - W` with `D_ii = sum_j w_ij`.
pub fn laplacian(graph: &AffinityGraph) -> Result<Laplacian> {
    let w = &graph.weights;
    validate_weights(w)?;
    let n = w.nrows();
    let degrees = DVector::from_fn(n, |i, _| w.row(i).sum());
    let mut matrix = -w.clone();
    for i in 0..n {
        // self-loops cancel (D_ii and W_ii both carry w_ii), so sum them out exactly
        matrix[(i, i)] = (0..n).filter(|&j| j != i).map(|j| w[(i, j)]).sum();
    }
    Ok(Laplacian { matrix, degrees })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn fixed(k: usize, sigma: f64) -> GraphConfig {
        GraphConfig {
            k,
            sigma: Sigma::Fixed(sigma),
        }
    }

    #[test]
    fn three_point_example() {
        let g = build_knn_graph(&[0.0, 1.0, 10.0], &fixed(1, 1.0)).unwrap();
        let w = g.weights();
        assert_eq!(w[(0, 1)], (-0.5f64).exp());
        assert_eq!(w[(1, 2)], (-40.5f64).exp());
        assert_eq!(w[(0, 2)], 0.0);
        assert_eq!(w, &w.transpose());
        assert!((0..3).all(|i| w[(i, i)] == 0.0));
    }

    #[test]
    fn identical_neighbours_get_unit_weight() {
        let g = build_knn_graph(&[0.3, 0.3, 5.0], &fixed(1, 0.2)).unwrap();
        assert_eq!(g.weights()[(0, 1)], 1.0);
    }

    #[test]
    fn ties_break_by_index() {
        let sets = knn_sets(&[0.0, 1.0, 2.0], 1);
        assert_eq!(sets, vec![vec![1], vec![0], vec![1]]);
    }

    #[test]
    fn auto_sigma_examples() {
        assert_eq!(auto_sigma(&[0.0, 1.0, 2.0], 1).unwrap(), 1.0);
        assert_eq!(auto_sigma(&[0.4, 0.4, 0.4], 1).unwrap(), 1.0);
        assert_eq!(auto_sigma(&[0.0, 2.0], 1).unwrap(), 2.0);
    }

    #[test]
    fn constant_baseline_with_auto_sigma_is_fully_weighted() {
        let g = build_knn_graph(&[0.7; 4], &GraphConfig { k: 1, sigma: Sigma::Auto }).unwrap();
        assert_eq!(g.sigma(), 1.0);
        assert!(g.weights().iter().all(|&w| w == 0.0 || w == 1.0));
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(build_knn_graph(&[1.0], &fixed(1, 1.0)).is_err());
        assert!(build_knn_graph(&[1.0, 2.0], &fixed(2, 1.0)).is_err());
        assert!(build_knn_graph(&[1.0, 2.0], &fixed(0, 1.0)).is_err());
        assert!(build_knn_graph(&[1.0, f64::NAN], &fixed(1, 1.0)).is_err());
        assert!(build_knn_graph(&[1.0, 2.0], &fixed(1, 0.0)).is_err());
    }

    #[test]
    fn laplacian_examples() {
        let l = laplacian(&AffinityGraph::empty(3)).unwrap();
        assert_eq!(l.matrix(), &DMatrix::zeros(3, 3));

        let g = AffinityGraph::from_weights(dmatrix![0.0, 1.0; 1.0, 0.0]).unwrap();
        let l = laplacian(&g).unwrap();
        assert_eq!(l.matrix(), &dmatrix![1.0, -1.0; -1.0, 1.0]);
    }

    #[test]
    fn asymmetric_weights_rejected() {
        assert!(AffinityGraph::from_weights(dmatrix![0.0, 1.0; 0.5, 0.0]).is_err());
    }

    #[test]
    fn self_loops_cancel() {
        let base = dmatrix![0.0, 0.4, 0.1; 0.4, 0.0, 0.9; 0.1, 0.9, 0.0];
        let mut looped = base.clone();
        looped[(0, 0)] = 0.7;
        looped[(2, 2)] = 3.0;
        let a = laplacian(&AffinityGraph::from_weights(base).unwrap()).unwrap();
        let b = laplacian(&AffinityGraph::from_weights(looped).unwrap()).unwrap();
        assert_eq!(a.matrix(), b.matrix());
    }

    #[test]
    fn larger_sigma_never_shrinks_weights() {
        let y = [0.1, 0.5, 0.55, 1.2, 2.0, 0.3];
        let narrow = build_knn_graph(&y, &fixed(2, 0.1)).unwrap();
        let wide = build_knn_graph(&y, &fixed(2, 0.8)).unwrap();
        for (a, b) in narrow.weights().iter().zip(wide.weights().iter()) {
            assert!(b >= a);
        }
    }

    #[test]
    fn sigma_config_parses() {
        #[derive(Deserialize)]
        struct Wrap {
            graph: GraphConfig,
        }
        let w: Wrap = toml::from_str("[graph]\nk = 3\nsigma = \"auto\"").unwrap();
        assert_eq!(w.graph.sigma, Sigma::Auto);
        let w: Wrap = toml::from_str("[graph]\nsigma = 0.25").unwrap();
        assert_eq!(w.graph, fixed(5, 0.25));
    }
}
