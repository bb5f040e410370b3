//! Training-path checks against independent LASSO oracles: a dense 1-D grid
//! search, coordinate descent run to tight tolerance, a QR least-squares
//! solve, and the stationarity conditions of the trained weights.

mod common;

use gamelm::elm::{
    self, fit, hidden_output, init_hidden_layer, least_squares_weights, train, ConstraintMode,
    TrainerConfig, DEFAULT_RIDGE_EPS,
};
use gamelm::fista::fista;
use gamelm::metrics::evaluate;
use gamelm::operators::lasso_objective;
use gamelm::solver::{variant_preset, Variant};
use ndarray::{arr1, arr2, Array1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{cd_lasso, grid_min_1d, l2, qr_solve, random_matrix, random_vector};

fn tight_trainer(lambda_reg: f64) -> TrainerConfig {
    TrainerConfig {
        hidden_nodes: 1,
        lambda_reg,
        solver: variant_preset(Variant::Game)
            .with_tol(1e-12)
            .with_max_iter(200_000),
        ..TrainerConfig::default()
    }
}

/// One-dimensional problem pinned by a dense grid scan of the objective
/// 0.5 (10 - b)^2 + 2 |b|, whose minimizer is 8.
#[test]
fn scalar_lasso_matches_grid_oracle() {
    let h = arr2(&[[1.0]]);
    let y = arr1(&[10.0]);
    let lambda = 2.0;

    let objective = |b: f64| 0.5 * (10.0 - b).powi(2) + lambda * b.abs();
    let grid = grid_min_1d(objective, 0.0, 10.0, 1e-4);
    assert!((grid - 8.0).abs() <= 1e-9, "grid oracle moved: {grid}");

    let (beta, result) = train(&h, &y, &tight_trainer(lambda)).unwrap();
    assert!(result.converged());
    assert!((beta[0] - grid).abs() <= 1e-4, "trained {}", beta[0]);

    let (fista_beta, trace) = fista(&h, &y, lambda, 1e-12, 100_000).unwrap();
    assert!(trace.converged);
    assert!((fista_beta[0] - grid).abs() <= 1e-4, "fista {}", fista_beta[0]);
}

#[test]
fn trained_weights_match_coordinate_descent() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let h = random_matrix(20, 5, &mut rng);
    let y = random_vector(20, &mut rng);
    let lambda = 0.1;

    let oracle = cd_lasso(&h, &y, lambda, 1e-10, 100_000);
    let oracle_objective = lasso_objective(&h, &y, &oracle, lambda);

    let cfg = TrainerConfig { hidden_nodes: 5, ..tight_trainer(lambda) };
    let (beta, result) = train(&h, &y, &cfg).unwrap();
    assert!(result.converged(), "{:?}", result.termination);
    let trained_objective = lasso_objective(&h, &y, &beta, lambda);
    assert!(
        (trained_objective - oracle_objective).abs() <= 1e-4,
        "objectives {trained_objective} vs {oracle_objective}"
    );

    let (fista_beta, _) = fista(&h, &y, lambda, 1e-12, 200_000).unwrap();
    let fista_objective = lasso_objective(&h, &y, &fista_beta, lambda);
    assert!((fista_objective - oracle_objective).abs() <= 1e-6);
}

/// Stationarity at the trained point: bounded correlations on the zero set,
/// threshold-matching correlations elsewhere.
#[test]
fn trained_weights_satisfy_stationarity() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let h = random_matrix(30, 8, &mut rng);
    let true_beta = arr1(&[1.5, 0.0, -0.8, 0.0, 0.0, 0.4, 0.0, 0.0]);
    let noise = random_vector(30, &mut rng) * 0.01;
    let y = h.dot(&true_beta) + noise;
    let lambda = 0.05;

    let cfg = TrainerConfig { hidden_nodes: 8, ..tight_trainer(lambda) };
    let (beta, _) = train(&h, &y, &cfg).unwrap();
    let gradient = h.t().dot(&(h.dot(&beta) - &y));
    for i in 0..beta.len() {
        if beta[i] == 0.0 {
            assert!(
                gradient[i].abs() <= lambda + 1e-4,
                "coordinate {i}: |{}| > {lambda}",
                gradient[i]
            );
        } else {
            let want = -lambda * beta[i].signum();
            assert!(
                (gradient[i] - want).abs() <= 1e-4,
                "coordinate {i}: {} vs {want}",
                gradient[i]
            );
        }
    }
}

#[test]
fn sparsity_grows_with_regularization() {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let h = random_matrix(40, 10, &mut rng);
    let y = random_vector(40, &mut rng);
    let mut previous_zeros = 0;
    for lambda in [1e-3, 1e-2, 1e-1, 1.0, 10.0] {
        let cfg = TrainerConfig { hidden_nodes: 10, ..tight_trainer(lambda) };
        let (beta, _) = train(&h, &y, &cfg).unwrap();
        let zeros = beta.iter().filter(|v| **v == 0.0).count();
        assert!(
            zeros >= previous_zeros,
            "lambda {lambda}: zeros fell from {previous_zeros} to {zeros}"
        );
        previous_zeros = zeros;
    }
}

#[test]
fn training_never_loses_to_trivial_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(109);
    let h = random_matrix(25, 6, &mut rng);
    let y = random_vector(25, &mut rng);
    let lambda = 0.05;
    let cfg = TrainerConfig { hidden_nodes: 6, ..tight_trainer(lambda) };
    let (beta, _) = train(&h, &y, &cfg).unwrap();

    let l1 = |b: &Array1<f64>| b.iter().map(|v| v.abs()).sum::<f64>();
    let unhalved = |b: &Array1<f64>| {
        let r = &y - &h.dot(b);
        r.dot(&r) + lambda * l1(b)
    };
    assert!(unhalved(&beta) <= unhalved(&Array1::zeros(6)) + 1e-12);

    let ls = least_squares_weights(&h, &y, DEFAULT_RIDGE_EPS).unwrap();
    assert!(unhalved(&beta) <= unhalved(&ls) + 1e-12);
    assert!(
        lasso_objective(&h, &y, &beta, lambda) <= lasso_objective(&h, &y, &ls, lambda) + 1e-12
    );
}

/// The constraint form projects onto the unit L1 ball, so trained weights
/// stay inside it.
#[test]
fn ball_constrained_training_stays_feasible() {
    let mut rng = ChaCha8Rng::seed_from_u64(113);
    let h = random_matrix(30, 5, &mut rng);
    let y = random_vector(30, &mut rng) * 3.0;
    let cfg = TrainerConfig {
        hidden_nodes: 5,
        constraint_mode: ConstraintMode::L1BallProjection,
        ..tight_trainer(0.0)
    };
    let (beta, result) = train(&h, &y, &cfg).unwrap();
    assert!(result.converged());
    let norm1: f64 = beta.iter().map(|v| v.abs()).sum();
    assert!(norm1 <= 1.0 + 1e-9, "||beta||_1 = {norm1}");
}

#[test]
fn fista_objective_tail_is_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(127);
    let h = random_matrix(30, 8, &mut rng);
    let y = random_vector(30, &mut rng);
    let (_, trace) = fista(&h, &y, 0.01, 1e-12, 50_000).unwrap();
    assert!(trace.converged);
    let tail_start = trace.objectives.len().saturating_sub(50);
    let tail = &trace.objectives[tail_start..];
    for pair in tail.windows(2) {
        assert!(pair[1] <= pair[0] + 1e-10, "tail objective rose: {pair:?}");
    }
    assert!(trace.final_objective() <= trace.objectives[0] + 1e-12);
}

#[test]
fn least_squares_matches_qr_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(131);
    let h = random_matrix(20, 5, &mut rng);
    let y = random_vector(20, &mut rng);
    let beta = least_squares_weights(&h, &y, DEFAULT_RIDGE_EPS).unwrap();
    let oracle = qr_solve(&h, &y);
    assert!(l2(&(&beta - &oracle)) <= 1e-8, "{beta:?} vs {oracle:?}");
}

/// Noiseless linear targets through the full pipeline: predictions on the
/// training inputs come back almost exactly.
#[test]
fn noiseless_fit_reconstructs_training_targets() {
    let mut rng = ChaCha8Rng::seed_from_u64(137);
    let x = random_matrix(200, 3, &mut rng) * 3.0;
    let (w, bias) = init_hidden_layer(3, 5, 7);
    let h = hidden_output(&x, &w, &bias).unwrap();
    let true_beta = random_vector(5, &mut rng);
    let y = h.dot(&true_beta);

    let cfg = TrainerConfig {
        hidden_nodes: 5,
        lambda_reg: 1e-6,
        solver: variant_preset(Variant::Game)
            .with_tol(1e-8)
            .with_max_iter(100_000),
        seed: 7,
        ..TrainerConfig::default()
    };
    let (model, result) = fit(&x, &y, &cfg).unwrap();
    assert!(result.converged());
    let predictions = model.predict(&x).unwrap();
    let report = evaluate(&y, &predictions).unwrap();
    assert!(report.rmse <= 1e-2, "rmse {}", report.rmse);
}

#[test]
fn deterministic_training_runs() {
    let mut rng = ChaCha8Rng::seed_from_u64(139);
    let x = random_matrix(30, 2, &mut rng);
    let y = random_vector(30, &mut rng);
    let cfg = TrainerConfig { hidden_nodes: 10, seed: 42, ..TrainerConfig::default() };
    let (model1, result1) = fit(&x, &y, &cfg).unwrap();
    let (model2, result2) = fit(&x, &y, &cfg).unwrap();
    assert_eq!(model1.beta, model2.beta);
    assert_eq!(model1.hidden_weights, model2.hidden_weights);
    assert_eq!(result1.iterations, result2.iterations);
    assert_eq!(result1.residuals, result2.residuals);
}

/// When both methods run to tight tolerance on a small problem they agree on
/// the objective.
#[test]
fn solver_and_fista_agree_on_small_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(149);
    for trial in 0..5 {
        let h = random_matrix(15, 4, &mut rng);
        let y = random_vector(15, &mut rng);
        let lambda = 0.05;
        let cfg = TrainerConfig { hidden_nodes: 4, ..tight_trainer(lambda) };
        let (beta, _) = train(&h, &y, &cfg).unwrap();
        let (fista_beta, _) = fista(&h, &y, lambda, 1e-12, 200_000).unwrap();
        let a = lasso_objective(&h, &y, &beta, lambda);
        let b = lasso_objective(&h, &y, &fista_beta, lambda);
        assert!((a - b).abs() <= 1e-4, "trial {trial}: {a} vs {b}");
    }
}

#[test]
fn sigmoid_features_stay_in_unit_interval() {
    let mut rng = ChaCha8Rng::seed_from_u64(151);
    let x = random_matrix(50, 4, &mut rng);
    let (w, bias) = init_hidden_layer(4, 30, 3);
    let h = elm::hidden_output(&x, &w, &bias).unwrap();
    assert!(h.iter().all(|&v| v > 0.0 && v < 1.0));
}
