mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use glrr_core::config::RunConfig;
use glrr_core::data::{generate_synthetic, read_csv, write_csv, SyntheticSpec};
use glrr_core::eval::{learn_features, run_experiment, ExperimentConfig, HyperGrids, Method, BASELINE_ROW};
use glrr_core::graph::GraphConfig;
use glrr_core::prox::{inf_norm, l21_shrink, svt};
use glrr_core::regression::{fit_svr, FeatureSet, KernelSpec};
use glrr_core::{GlrrConfig, Matrix};

#[test]
fn svt_and_l21_match_references() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let (r, c) = (rng.gen_range(1..15), rng.gen_range(1..15));
        let m = gaussian(&mut rng, r, c);
        let tau = rng.gen_range(0.0..3.0);
        assert!(inf_norm(&(svt(&m, tau).unwrap() - svt_reference(&m, tau))) < 1e-10);
        assert!(inf_norm(&(l21_shrink(&m, tau).unwrap() - l21_reference(&m, tau))) < 1e-14);
    }
}

#[test]
fn svr_matches_projected_gradient_dual() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..3 {
        let x = gaussian(&mut rng, 10, 3);
        let y: Vec<f64> = (0..10).map(|i| x[(i, 0)].tanh() - 0.2 * x[(i, 2)]).collect();
        let (gamma, c, eps) = (0.5, 2.0, 0.01);
        let data = FeatureSet::new(x.clone(), y.clone()).unwrap();
        let model = fit_svr(&data, c, KernelSpec::new(gamma).unwrap(), eps).unwrap();
        let kernel = gaussian_kernel(&x, &x, gamma);
        let (beta, bias) = svr_dual_reference(&kernel, &y, c, eps);
        let (got, want) = (
            svr_dual_value(&kernel, &y, eps, &model.dual_coeffs),
            svr_dual_value(&kernel, &y, eps, &beta),
        );
        let gap = got - want;
        assert!(gap.abs() <= 1e-9 * want.abs().max(1.0), "dual value {got} vs {want}");
        // the dual is strongly convex in beta with modulus min eig(K)
        let min_eig = kernel.clone().symmetric_eigen().eigenvalues.min();
        let dist = model.dual_coeffs.iter().zip(&beta).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(dist <= (2.0 * gap.max(0.0) / min_eig).sqrt() + 1e-7, "coefficient distance {dist}");
        assert!((model.bias - bias).abs() < 1e-5);
        // strong duality on the training problem
        let (p, d) = (model.primal_objective(&y), model.dual_objective(&y));
        assert!((p - d).abs() <= 1e-5 * p.abs().max(1.0), "primal {p} dual {d}");
    }
}

#[test]
fn features_permute_with_samples() {
    let dataset = generate_synthetic(&SyntheticSpec {
        n: 30,
        d: 6,
        r: 2,
        seed: 4,
        ..SyntheticSpec::default()
    })
    .unwrap()
    .dataset;
    let cfg = GlrrConfig {
        max_iter: 150,
        ..GlrrConfig::default().with_weights(0.5, 1.0)
    };
    let graph = GraphConfig::default();
    let base = learn_features(&dataset, &cfg, &graph).unwrap();

    let mut order: Vec<usize> = (0..30).collect();
    order.reverse();
    order.swap(3, 17);
    let moved = learn_features(&dataset.select(&order), &cfg, &graph).unwrap();
    let mut dev = 0.0_f64;
    for (a, &i) in order.iter().enumerate() {
        for (b, &j) in order.iter().enumerate() {
            dev = dev.max((moved.z[(a, b)] - base.z[(i, j)]).abs());
        }
    }
    assert!(dev < 1e-8 * (1.0 + inf_norm(&base.z)), "deviation {dev}");
}

#[test]
fn csv_round_trip_is_exact() {
    let synth = generate_synthetic(&SyntheticSpec {
        n: 25,
        d: 5,
        r: 2,
        seed: 6,
        ..SyntheticSpec::default()
    })
    .unwrap();
    let mut buf = Vec::new();
    write_csv(&synth.dataset, &["seed: 6".to_string()], &mut buf).unwrap();
    let loaded = read_csv(buf.as_slice()).unwrap();
    assert_eq!(loaded.dropped, 0);
    assert_eq!(loaded.dataset, synth.dataset);

    let path = tempfile::tempdir().unwrap();
    let file = path.path().join("d.csv");
    std::fs::write(&file, &buf).unwrap();
    assert_eq!(glrr_core::data::load_csv(&file).unwrap().dataset, synth.dataset);
}

fn mean_and_population_std(v: &[f64]) -> (f64, f64) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64;
    (m, var.sqrt())
}

#[test]
fn report_cells_aggregate_runs_exactly() {
    let dataset = generate_synthetic(&SyntheticSpec {
        n: 30,
        d: 5,
        r: 2,
        seed: 8,
        ..SyntheticSpec::default()
    })
    .unwrap()
    .dataset;
    let grid = vec![0.1, 10.0];
    let config = ExperimentConfig {
        repeats: 3,
        train_percentages: vec![0.4, 0.6],
        methods: vec![Method::Ols, Method::Ridge, Method::Svr, Method::GlrrSvr],
        grids: HyperGrids {
            gamma: grid.clone(),
            c: grid.clone(),
            alpha: grid.clone(),
            lambda: grid.clone(),
            beta: grid,
        },
        glrr: GlrrConfig {
            max_iter: 100,
            ..GlrrConfig::default()
        },
        ..ExperimentConfig::default()
    };
    let report = run_experiment(&dataset, &config).unwrap();
    assert_eq!(report.cells.len(), 2 + 4 * 2);
    for cell in &report.cells {
        let runs = report.runs.iter().filter(|r| r.percentage == cell.percentage);
        let values: Vec<f64> = if cell.method == BASELINE_ROW {
            runs.map(|r| r.baseline.rmse).collect()
        } else {
            runs.flat_map(|r| r.results.iter().filter(|m| m.method.name() == cell.method).filter_map(|m| m.rmse))
                .collect()
        };
        let (m, s) = mean_and_population_std(&values);
        assert_eq!(cell.completed, values.len());
        assert_eq!(cell.rmse_mean, Some(m), "{}", cell.method);
        assert_eq!(cell.rmse_std, Some(s), "{}", cell.method);
        assert!(s >= 0.0);
    }
}

#[test]
fn defaults_reference_file_is_current() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../config/defaults.toml");
    let text = std::fs::read_to_string(path).unwrap();
    assert_eq!(RunConfig::from_toml(&text).unwrap(), RunConfig::default());
    let body: String = text.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
    assert_eq!(body.trim(), RunConfig::reference().trim());
}

#[test]
fn gaussian_kernel_reference_is_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = gaussian(&mut rng, 6, 2);
    let k = gaussian_kernel(&x, &x, 0.7);
    assert!(inf_norm(&(&k - k.transpose())) == 0.0);
    assert!(k.diagonal().iter().all(|&v| v == 1.0));
    let _ = Matrix::identity(2, 2);
}
