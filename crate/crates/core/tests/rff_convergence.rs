use kirl::config::{KernelConfig, RffConfig};
use kirl::data::gen_gaussian_toy;
use kirl::kernels::{gram_matrix, KernelSpec};
use kirl::rff::sample_projection;
use kirl::solver::fit_context;
use kirl::tradeoff::{train_target_head, Task};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn mean_sq_error(x: &DMatrix<f64>, k: &DMatrix<f64>, d: usize, seeds: u64) -> f64 {
    (0..seeds)
        .map(|seed| {
            let r = sample_projection(x.ncols(), d, 0.7, seed).unwrap().feature_matrix(x).unwrap();
            (&r * r.transpose() - k).norm_squared() / k.len() as f64
        })
        .sum::<f64>()
        / seeds as f64
}

#[test]
fn gram_error_decays_like_inverse_dim() {
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let x = DMatrix::from_fn(60, 2, |_, _| rng.random::<f64>());
    let k = gram_matrix(&x, &KernelSpec::rbf(0.7, 2).unwrap()).unwrap();
    let e: Vec<f64> = [100, 400, 1600].iter().map(|&d| mean_sq_error(&x, &k, d, 8)).collect();
    for w in e.windows(2) {
        let ratio = w[0] / w[1];
        assert!((2.0..=8.0).contains(&ratio), "errors {e:?}");
    }
}

struct Metrics {
    objective: f64,
    accuracy: f64,
}

fn fit_metrics(rff: Option<RffConfig>) -> Metrics {
    let data = gen_gaussian_toy(300, 5).unwrap();
    let cfg = KernelConfig {
        rff,
        ..KernelConfig::default()
    };
    let model = fit_context(&data, &cfg).unwrap().fit(0.3, 1e-3, None).unwrap().model;
    let z = model.encode(&data.x).unwrap();
    let head = train_target_head(&z, &data.y, Task::of(&data.y), 1e-6).unwrap();
    Metrics {
        objective: model.objective(),
        accuracy: head.utility(&z, &data.y).unwrap(),
    }
}

#[test]
fn random_features_approach_exact_metrics() {
    let exact = fit_metrics(None);
    let gap = |d: usize| {
        let m = fit_metrics(Some(RffConfig { dim: d, seed: 3 }));
        ((m.objective - exact.objective).abs() / exact.objective, (m.accuracy - exact.accuracy).abs())
    };
    let (small_obj, _) = gap(20);
    let (large_obj, large_acc) = gap(800);
    assert!(large_obj < small_obj, "{large_obj} vs {small_obj}");
    assert!(large_obj <= 0.01, "objective gap {large_obj}");
    assert!(large_acc <= 0.05, "accuracy gap {large_acc}");
}
