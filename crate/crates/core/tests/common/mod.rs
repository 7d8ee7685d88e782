//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use glrr_core::Matrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Singular value thresholding through nalgebra's own SVD, one triplet at a time.
pub fn svt_reference(m: &Matrix, tau: f64) -> Matrix {
    let dec = m.clone().svd(true, true);
    let u = dec.u.unwrap();
    let vt = dec.v_t.unwrap();
    let mut out = Matrix::zeros(m.nrows(), m.ncols());
    for (k, s) in dec.singular_values.iter().enumerate() {
        let shrunk = (s - tau).max(0.0);
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out[(i, j)] += shrunk * u[(i, k)] * vt[(k, j)];
            }
        }
    }
    out
}

/// Column shrinkage written out entry by entry.
pub fn l21_reference(m: &Matrix, tau: f64) -> Matrix {
    let mut out = m.clone();
    for j in 0..m.ncols() {
        let mut sq = 0.0;
        for i in 0..m.nrows() {
            sq += m[(i, j)] * m[(i, j)];
        }
        let norm = sq.sqrt();
        let factor = if norm > tau { (norm - tau) / norm } else { 0.0 };
        for i in 0..m.nrows() {
            out[(i, j)] = factor * m[(i, j)];
        }
    }
    out
}

/// Random symmetric nonnegative weights with zero diagonal; roughly `density` of pairs connected.
pub fn random_weights(rng: &mut ChaCha8Rng, n: usize, density: f64) -> Matrix {
    let mut w = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen_bool(density) {
                let v = rng.gen_range(0.0..2.0);
                w[(i, j)] = v;
                w[(j, i)] = v;
            }
        }
    }
    w
}

/// `0.5 * sum_ij w_ij ||z_i - z_j||^2` over columns of `z`.
pub fn pairwise_smoothness(w: &Matrix, z: &Matrix) -> f64 {
    let n = w.nrows();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut sq = 0.0;
            for r in 0..z.nrows() {
                let diff = z[(r, i)] - z[(r, j)];
                sq += diff * diff;
            }
            total += w[(i, j)] * sq;
        }
    }
    0.5 * total
}

pub fn gaussian_kernel(a: &Matrix, b: &Matrix, gamma: f64) -> Matrix {
    Matrix::from_fn(a.nrows(), b.nrows(), |i, j| {
        let mut sq = 0.0;
        for k in 0..a.ncols() {
            let diff = a[(i, k)] - b[(j, k)];
            sq += diff * diff;
        }
        (-gamma * sq).exp()
    })
}

/// Euclidean projection onto `{v in [0, c]^2n : sum(v[..n]) = sum(v[n..])}`,
/// found by bisection on the multiplier of the equality constraint.
fn project(v: &[f64], n: usize, c: f64) -> Vec<f64> {
    let sign = |k: usize| if k < n { 1.0 } else { -1.0 };
    let clipped = |tau: f64| -> Vec<f64> {
        v.iter()
            .enumerate()
            .map(|(k, &x)| (x - tau * sign(k)).clamp(0.0, c))
            .collect()
    };
    let balance = |p: &[f64]| -> f64 { p.iter().enumerate().map(|(k, x)| sign(k) * x).sum() };
    let (mut lo, mut hi) = (-1e6_f64, 1e6_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        // balance is nonincreasing in tau
        if balance(&clipped(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    clipped(0.5 * (lo + hi))
}

/// Dual coefficients `alpha - alpha*` and bias of epsilon-SVR, by accelerated
/// projected gradient on the 2n-variable box-and-equality QP.
/// `0.5 b^T K b + eps |b|_1 - y^T b`, the SVR dual in difference variables.
pub fn svr_dual_value(kernel: &Matrix, y: &[f64], eps: f64, b: &[f64]) -> f64 {
    let n = y.len();
    let quad: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| b[i] * b[j] * kernel[(i, j)]).sum();
    0.5 * quad + eps * b.iter().map(|v| v.abs()).sum::<f64>() - b.iter().zip(y).map(|(a, t)| a * t).sum::<f64>()
}

pub fn svr_dual_reference(kernel: &Matrix, y: &[f64], c: f64, eps: f64) -> (Vec<f64>, f64) {
    let n = y.len();
    let top = kernel.clone().symmetric_eigen().eigenvalues.max();
    let step = 1.0 / (2.0 * top);
    let beta_of = |a: &[f64]| -> Vec<f64> { (0..n).map(|i| a[i] - a[n + i]).collect() };
    let grad = |a: &[f64]| -> Vec<f64> {
        let b = beta_of(a);
        let kb: Vec<f64> = (0..n).map(|i| (0..n).map(|j| kernel[(i, j)] * b[j]).sum()).collect();
        (0..2 * n)
            .map(|k| if k < n { kb[k] + eps - y[k] } else { -kb[k - n] + eps + y[k - n] })
            .collect()
    };

    let mut x = vec![0.0; 2 * n];
    let mut yk = x.clone();
    let mut t = 1.0_f64;
    for _ in 0..400_000 {
        let g = grad(&yk);
        let moved: Vec<f64> = yk.iter().zip(&g).map(|(v, gv)| v - step * gv).collect();
        let next = project(&moved, n, c);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let momentum = (t - 1.0) / t_next;
        yk = next.iter().zip(&x).map(|(a, b)| a + momentum * (a - b)).collect();
        let change: f64 = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        x = next;
        t = t_next;
        if change < 1e-15 {
            break;
        }
    }

    let beta = beta_of(&x);
    let kb: Vec<f64> = (0..n).map(|i| (0..n).map(|j| kernel[(i, j)] * beta[j]).sum()).collect();
    // bias from free variables; otherwise the midpoint of the KKT interval
    let tol = 1e-8 * c;
    let mut free = Vec::new();
    let (mut lower, mut upper) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..n {
        let (a, s) = (x[i], x[n + i]);
        // bias values at which sample i sits exactly on the lower / upper tube edge
        let b_alpha = y[i] - eps - kb[i];
        let b_star = y[i] + eps - kb[i];
        if a > tol && a < c - tol {
            free.push(b_alpha);
        }
        if s > tol && s < c - tol {
            free.push(b_star);
        }
        if a < c - tol {
            lower = lower.max(b_alpha);
        }
        if a > tol {
            upper = upper.min(b_alpha);
        }
        if s > tol {
            lower = lower.max(b_star);
        }
        if s < c - tol {
            upper = upper.min(b_star);
        }
    }
    let bias = if free.is_empty() {
        0.5 * (lower + upper)
    } else {
        free.iter().sum::<f64>() / free.len() as f64
    };
    (beta, bias)
}

/// Sample correlation by the textbook two-pass formula.
pub fn pearson_reference(a: &[f64], b: &[f64]) -> f64 {
    let m = a.len() as f64;
    let ma = a.iter().sum::<f64>() / m;
    let mb = b.iter().sum::<f64>() / m;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

pub fn rmse_reference(a: &[f64], b: &[f64]) -> f64 {
    let mut total = 0.0;
    for (x, y) in a.iter().zip(b) {
        total += (x - y).powi(2);
    }
    (total / a.len() as f64).sqrt()
}
