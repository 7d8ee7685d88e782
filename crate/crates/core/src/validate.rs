//! Quick invariant and oracle checks run by the `validate` command.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::graph::{laplacian, AffinityGraph};
use crate::metrics::{pearson_r, rmse};
use crate::prox::{inf_norm, l21_shrink, svd, svt};
use crate::solver::{update_z, AdmmState};
use crate::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> AffinityGraph {
    let mut w = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen_bool(0.3) {
                let v = rng.gen_range(0.0..1.0);
                w[(i, j)] = v;
                w[(j, i)] = v;
            }
        }
    }
    AffinityGraph::from_weights(w).expect("symmetric nonnegative weights")
}

fn check(name: &'static str, worst: f64, tolerance: f64) -> CheckOutcome {
    CheckOutcome {
        name,
        worst,
        tolerance,
        passed: worst.is_finite() && worst < tolerance,
    }
}

fn prox_checks(rng: &mut ChaCha8Rng, trials: usize) -> Vec<CheckOutcome> {
    let mut svt_dev = 0.0_f64;
    let mut l21_dev = 0.0_f64;
    for _ in 0..trials {
        let (r, c) = (rng.gen_range(1..12), rng.gen_range(1..12));
        let m = gaussian(rng, r, c);
        let tau = rng.gen_range(0.0..2.0);
        let got = svt(&m, tau).expect("finite input");
        // reconstruct from all singular triplets, thresholded one by one
        let dec = svd(&m).expect("finite input");
        let mut want = Matrix::zeros(r, c);
        for k in 0..dec.s.len() {
            let s = (dec.s[k] - tau).max(0.0);
            want += dec.u.column(k) * dec.v.column(k).transpose() * s;
        }
        svt_dev = svt_dev.max(inf_norm(&(got - want)));

        let got = l21_shrink(&m, tau).expect("finite input");
        for j in 0..c {
            let norm = m.column(j).iter().map(|v| v * v).sum::<f64>().sqrt();
            let factor = if norm > tau { 1.0 - tau / norm } else { 0.0 };
            for i in 0..r {
                l21_dev = l21_dev.max((got[(i, j)] - factor * m[(i, j)]).abs());
            }
        }
    }
    vec![check("svt_oracle", svt_dev, 1e-9), check("l21_shrink_oracle", l21_dev, 1e-9)]
}

fn laplacian_checks(rng: &mut ChaCha8Rng, trials: usize) -> Vec<CheckOutcome> {
    let mut null_dev = 0.0_f64;
    let mut trace_dev = 0.0_f64;
    for _ in 0..trials {
        let n = rng.gen_range(2..20);
        let g = random_graph(rng, n);
        let lap = laplacian(&g).expect("valid graph");
        let ones = Matrix::from_element(n, 1, 1.0);
        null_dev = null_dev.max(inf_norm(&(lap.matrix() * ones)));
        let rows = rng.gen_range(1..6);
        let z = gaussian(rng, rows, n);
        let mut pairwise = 0.0;
        for i in 0..n {
            for j in 0..n {
                pairwise += g.weights()[(i, j)] * (z.column(i) - z.column(j)).norm_squared();
            }
        }
        let want = 0.5 * pairwise;
        let got = lap.quadratic_trace(&z);
        trace_dev = trace_dev.max((got - want).abs() / want.abs().max(1.0));
    }
    vec![check("laplacian_null_space", null_dev, 1e-12), check("laplacian_trace_identity", trace_dev, 1e-10)]
}

fn z_update_check(rng: &mut ChaCha8Rng, trials: usize) -> CheckOutcome {
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let (d, n) = (rng.gen_range(1..10), rng.gen_range(2..15));
        let x = gaussian(rng, d, n);
        let lap = laplacian(&random_graph(rng, n)).expect("valid graph");
        let beta = rng.gen_range(0.0..3.0);
        let mut state = AdmmState::zeros(d, n, rng.gen_range(0.1..10.0));
        state.z_prev = gaussian(rng, n, n);
        state.j = gaussian(rng, n, n);
        state.e = gaussian(rng, d, n);
        state.y1 = gaussian(rng, n, n);
        state.y2 = gaussian(rng, d, n);
        let z = update_z(&state, &x, &lap, beta).expect("positive definite system");
        let mu = state.mu;
        let eta = x.norm_squared();
        // gradient of the linearized Z subproblem at the returned point
        let coupling = x.tr_mul(&(&x * &state.z_prev + &state.e - &x + &state.y2 / mu));
        let grad = &z * lap.matrix() * beta
            + (&z - &state.j + &state.y1 / mu) * mu
            + (coupling + (&z - &state.z_prev) * eta) * mu;
        worst = worst.max(inf_norm(&grad) / (1.0 + inf_norm(&z)));
    }
    check("z_update_stationarity", worst, 1e-8)
}

fn metric_checks(rng: &mut ChaCha8Rng, trials: usize) -> Vec<CheckOutcome> {
    let mut rmse_dev = 0.0_f64;
    let mut affine_dev = 0.0_f64;
    for _ in 0..trials {
        let m = rng.gen_range(2..40);
        let a: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        let b: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        let mean_sq = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / m as f64;
        rmse_dev = rmse_dev.max((rmse(&a, &b).expect("equal lengths") - mean_sq.sqrt()).abs());
        let scale = rng.gen_range(0.1..10.0);
        let shift = rng.gen_range(-5.0..5.0);
        let moved: Vec<f64> = a.iter().map(|v| scale * v + shift).collect();
        if let (Ok(r0), Ok(r1)) = (pearson_r(&a, &b), pearson_r(&moved, &b)) {
            affine_dev = affine_dev.max((r0 - r1).abs());
        }
    }
    vec![check("rmse_oracle", rmse_dev, 1e-12), check("pearson_affine_invariance", affine_dev, 1e-10)]
}

/// Runs every check with a seeded generator; `trials` instances per check.
pub fn run_checks(seed: u64, trials: usize) -> Vec<CheckOutcome> {
    let mut rng = crate::rng::substream(seed, "validate", 0);
    let mut out = prox_checks(&mut rng, trials);
    out.extend(laplacian_checks(&mut rng, trials));
    out.push(z_update_check(&mut rng, trials));
    out.extend(metric_checks(&mut rng, trials));
    out
}
