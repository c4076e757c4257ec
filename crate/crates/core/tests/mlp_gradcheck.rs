//! Backpropagation against central finite differences.

use aggsense_core::neural::{init_mlp, MlpParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EPS: f64 = 1e-4;

fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs()).max(1e-8)
}

struct Case {
    params: MlpParams,
    inputs: Vec<Vec<f64>>,
    targets: Vec<bool>,
    l2: f64,
}

fn random_case(seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_in = rng.gen_range(1..=6);
    let depth = rng.gen_range(1..=3);
    let mut sizes = vec![n_in];
    for _ in 0..depth {
        sizes.push(rng.gen_range(1..=6));
    }
    sizes.push(1);
    let mut params = init_mlp(&sizes, seed).unwrap();
    for b in params.biases.iter_mut().flatten() {
        *b = rng.gen_range(-0.5..0.5);
    }
    let batch = rng.gen_range(1..=8);
    let inputs = (0..batch)
        .map(|_| (0..n_in).map(|_| rng.gen_range(-2.0..2.0)).collect())
        .collect();
    let targets = (0..batch).map(|_| rng.gen()).collect();
    Case {
        params,
        inputs,
        targets,
        l2: rng.gen_range(0.0..0.1),
    }
}

fn max_rel_error(case: &Case) -> f64 {
    let loss = |p: &MlpParams| p.loss_and_gradient(&case.inputs, &case.targets, case.l2).0;
    let (_, analytic) = case.params.loss_and_gradient(&case.inputs, &case.targets, case.l2);
    let mut worst: f64 = 0.0;
    for l in 0..case.params.weights.len() {
        for i in 0..case.params.weights[l].len() {
            let mut plus = case.params.clone();
            let mut minus = case.params.clone();
            plus.weights[l][i] += EPS;
            minus.weights[l][i] -= EPS;
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * EPS);
            worst = worst.max(relative_error(analytic.weights[l][i], numeric));
        }
        for i in 0..case.params.biases[l].len() {
            let mut plus = case.params.clone();
            let mut minus = case.params.clone();
            plus.biases[l][i] += EPS;
            minus.biases[l][i] -= EPS;
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * EPS);
            worst = worst.max(relative_error(analytic.biases[l][i], numeric));
        }
    }
    worst
}

#[test]
fn analytic_gradient_matches_finite_differences() {
    let mut overall: f64 = 0.0;
    for seed in 0..40 {
        let err = max_rel_error(&random_case(seed));
        assert!(err <= 1e-5, "seed {seed}: relative error {err:e}");
        overall = overall.max(err);
    }
    eprintln!("max relative error over 40 configurations: {overall:e}");
}
