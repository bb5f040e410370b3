//! Extreme learning machine construction and training: a random frozen hidden
//! layer, a sigmoid feature matrix, output weights trained by the adaptive
//! extragradient loop against the L1-regularized least-squares objective, and
//! the plain least-squares baseline.

use std::fs;
use std::io::{self, BufRead, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::data::Scaler;
use crate::operators::{LassoGradient, MonotoneOperator, OperatorError};
use crate::sets::{L1Ball, SetError, Shrinkage};
use crate::solver::{solve, SolveResult, SolverConfig, SolverError};

/// Ridge added to the normal equations as a singularity guard.
pub const DEFAULT_RIDGE_EPS: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum ElmError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("design matrix is empty")]
    EmptyDesign,
    #[error("normal equations are singular even with the ridge guard")]
    SingularSystem,
    #[error("invalid trainer configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("malformed model file: {0}")]
    ModelFormat(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Set(#[from] SetError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
}

/// How the backward step of the training loop treats the L1 term: soft
/// thresholding (penalty form, the default) or an exact projection onto the
/// unit L1 ball (constraint form).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ConstraintMode {
    #[default]
    Shrink,
    L1BallProjection,
}

#[derive(Clone, Debug)]
pub struct TrainerConfig {
    /// Hidden-node count `m`.
    pub hidden_nodes: usize,
    /// L1 regularization weight.
    pub lambda_reg: f64,
    pub solver: SolverConfig,
    pub constraint_mode: ConstraintMode,
    /// Orthonormalize the hidden-weight columns when `m <= D`.
    pub orthonormal_hidden: bool,
    pub seed: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            hidden_nodes: 100,
            lambda_reg: 1e-3,
            solver: SolverConfig::default(),
            constraint_mode: ConstraintMode::Shrink,
            orthonormal_hidden: false,
            seed: 0,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<(), ElmError> {
        if self.hidden_nodes == 0 {
            return Err(ElmError::InvalidConfig("hidden_nodes must be positive"));
        }
        if !(self.lambda_reg >= 0.0) {
            return Err(ElmError::InvalidConfig("lambda_reg must be nonnegative"));
        }
        self.solver.validate()?;
        Ok(())
    }
}

/// A trained single-hidden-layer model: frozen random input weights and bias,
/// learned output weights, and optionally the unit-range scaler the training
/// data was prepared with.
#[derive(Clone, Debug)]
pub struct ElmModel {
    /// Input weights, one column per hidden node (D x m).
    pub hidden_weights: Array2<f64>,
    /// Hidden biases (m).
    pub hidden_bias: Array1<f64>,
    /// Output weights (m).
    pub beta: Array1<f64>,
    pub activation: Activation,
    pub scaler: Option<Scaler>,
}

/// Draws the frozen hidden layer: weights uniform on [-1, 1), biases uniform
/// on [0, 1). Deterministic for a given seed.
pub fn init_hidden_layer(d: usize, m: usize, seed: u64) -> (Array2<f64>, Array1<f64>) {
    assert!(d >= 1 && m >= 1, "layer dimensions must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = Array2::from_shape_fn((d, m), |_| rng.random_range(-1.0..1.0));
    let b = Array1::from_shape_fn(m, |_| rng.random_range(0.0..1.0));
    (w, b)
}

/// Modified Gram-Schmidt on the columns. Only meaningful when the column
/// count does not exceed the row count.
pub fn orthonormalize_columns(w: &mut Array2<f64>) {
    let m = w.ncols();
    for j in 0..m {
        for k in 0..j {
            let proj = w.column(j).dot(&w.column(k));
            let prev = w.column(k).to_owned();
            w.column_mut(j).zip_mut_with(&prev, |a, &b| *a -= proj * b);
        }
        let col = w.column(j);
        let norm = col.dot(&col).sqrt();
        if norm > 0.0 {
            w.column_mut(j).mapv_inplace(|v| v / norm);
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// The hidden-layer feature matrix: `H[n][j] = sigmoid(w_j . x_n + b_j)`.
pub fn hidden_output(
    x: &Array2<f64>,
    w: &Array2<f64>,
    bias: &Array1<f64>,
) -> Result<Array2<f64>, ElmError> {
    if x.ncols() != w.nrows() {
        return Err(ElmError::DimensionMismatch { expected: w.nrows(), got: x.ncols() });
    }
    if bias.len() != w.ncols() {
        return Err(ElmError::DimensionMismatch { expected: w.ncols(), got: bias.len() });
    }
    let mut h = x.dot(w);
    for mut row in h.rows_mut() {
        row += bias;
    }
    h.mapv_inplace(sigmoid);
    Ok(h)
}

/// Trains output weights for the feature matrix `h` and targets `y` by
/// running the extragradient loop on the gradient map of
/// `0.5 ||y - H beta||^2`, with the backward step chosen by the constraint
/// mode: soft threshold `shrink(., lambda_reg * lambda_n)` or projection onto
/// the unit L1 ball. Starts from the zero vector.
///
/// The returned weights are the backward-step image of the final iterate, so
/// the zero set (or ball feasibility) is exact rather than tolerance-level.
pub fn train(
    h: &Array2<f64>,
    y: &Array1<f64>,
    cfg: &TrainerConfig,
) -> Result<(Array1<f64>, SolveResult), ElmError> {
    cfg.validate()?;
    if h.nrows() != y.len() {
        return Err(ElmError::DimensionMismatch { expected: h.nrows(), got: y.len() });
    }
    let gradient = LassoGradient::new(h.clone(), y.clone())?;
    let start = Array1::zeros(h.ncols());
    let (result, beta) = match cfg.constraint_mode {
        ConstraintMode::Shrink => {
            let set = Shrinkage::new(cfg.lambda_reg)?;
            let result = solve(&gradient, &set, &start, None, &cfg.solver)?;
            let beta = backward_image(&gradient, &set, &result)?;
            (result, beta)
        }
        ConstraintMode::L1BallProjection => {
            let set = L1Ball::new(1.0)?;
            let result = solve(&gradient, &set, &start, None, &cfg.solver)?;
            let beta = backward_image(&gradient, &set, &result)?;
            (result, beta)
        }
    };
    Ok((beta, result))
}

fn backward_image(
    gradient: &LassoGradient,
    set: &dyn crate::sets::FeasibleSet,
    result: &SolveResult,
) -> Result<Array1<f64>, ElmError> {
    let lambda = result.stepsizes.last().copied().unwrap_or(1.0);
    let g = gradient.apply(&result.solution)?;
    Ok(set.project(&(&result.solution - &(&g * lambda)), lambda)?)
}

/// Convenience wrapper: draws the hidden layer from the trainer seed, builds
/// the feature matrix for `x`, trains the output weights and assembles the
/// model (without a scaler).
pub fn fit(
    x: &Array2<f64>,
    y: &Array1<f64>,
    cfg: &TrainerConfig,
) -> Result<(ElmModel, SolveResult), ElmError> {
    cfg.validate()?;
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(ElmError::EmptyDesign);
    }
    let (mut w, bias) = init_hidden_layer(x.ncols(), cfg.hidden_nodes, cfg.seed);
    if cfg.orthonormal_hidden && cfg.hidden_nodes <= x.ncols() {
        orthonormalize_columns(&mut w);
    }
    let h = hidden_output(x, &w, &bias)?;
    let (beta, result) = train(&h, y, cfg)?;
    let model = ElmModel {
        hidden_weights: w,
        hidden_bias: bias,
        beta,
        activation: Activation::Sigmoid,
        scaler: None,
    };
    Ok((model, result))
}

impl ElmModel {
    pub fn input_dim(&self) -> usize {
        self.hidden_weights.nrows()
    }

    pub fn hidden_nodes(&self) -> usize {
        self.hidden_weights.ncols()
    }

    /// Network output `hidden_output(X) . beta`, mapped back through the
    /// inverse target scaling when a scaler is attached. Features are passed
    /// to the hidden layer as given.
    pub fn predict(&self, x: &Array2<f64>) -> Result<Array1<f64>, ElmError> {
        let h = hidden_output(x, &self.hidden_weights, &self.hidden_bias)?;
        let raw = h.dot(&self.beta);
        Ok(match &self.scaler {
            Some(scaler) => scaler.inverse_transform_target(&raw),
            None => raw,
        })
    }

    /// Writes the model as a flat text file: a dimensions header, then the
    /// weight rows, bias, output weights and scaler ranges as CSV reals with
    /// 17 significant digits (bit-stable round trip).
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ElmError> {
        let mut out = io::BufWriter::new(fs::File::create(path)?);
        let has_scaler = usize::from(self.scaler.is_some());
        writeln!(
            out,
            "elm,{},{},sigmoid,{}",
            self.input_dim(),
            self.hidden_nodes(),
            has_scaler
        )?;
        for row in self.hidden_weights.rows() {
            writeln!(out, "{}", join_reals(row.iter()))?;
        }
        writeln!(out, "{}", join_reals(self.hidden_bias.iter()))?;
        writeln!(out, "{}", join_reals(self.beta.iter()))?;
        if let Some(scaler) = &self.scaler {
            writeln!(out, "{}", join_reals(scaler.feature_ranges.iter().map(|(lo, _)| lo)))?;
            writeln!(out, "{}", join_reals(scaler.feature_ranges.iter().map(|(_, hi)| hi)))?;
            writeln!(
                out,
                "{}",
                join_reals([scaler.target_range.0, scaler.target_range.1].iter())
            )?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ElmError> {
        let file = io::BufReader::new(fs::File::open(path)?);
        let mut lines = file.lines();
        let header = lines
            .next()
            .ok_or_else(|| ElmError::ModelFormat("empty file".into()))??;
        let fields: Vec<&str> = header.split(',').collect();
        if fields.len() != 5 || fields[0] != "elm" || fields[3] != "sigmoid" {
            return Err(ElmError::ModelFormat(format!("bad header `{header}`")));
        }
        let d: usize = fields[1]
            .parse()
            .map_err(|_| ElmError::ModelFormat("bad input dimension".into()))?;
        let m: usize = fields[2]
            .parse()
            .map_err(|_| ElmError::ModelFormat("bad hidden count".into()))?;
        let has_scaler = match fields[4] {
            "0" => false,
            "1" => true,
            other => return Err(ElmError::ModelFormat(format!("bad scaler flag `{other}`"))),
        };

        let mut next_row = |expect: usize| -> Result<Vec<f64>, ElmError> {
            let line = lines
                .next()
                .ok_or_else(|| ElmError::ModelFormat("file truncated".into()))??;
            let row = parse_reals(&line)?;
            if row.len() != expect {
                return Err(ElmError::ModelFormat(format!(
                    "expected {expect} values, got {}",
                    row.len()
                )));
            }
            Ok(row)
        };

        let mut hidden_weights = Array2::zeros((d, m));
        for i in 0..d {
            let row = next_row(m)?;
            for (j, v) in row.into_iter().enumerate() {
                hidden_weights[(i, j)] = v;
            }
        }
        let hidden_bias = Array1::from(next_row(m)?);
        let beta = Array1::from(next_row(m)?);
        let scaler = if has_scaler {
            let lows = next_row(d)?;
            let highs = next_row(d)?;
            let target = next_row(2)?;
            Some(Scaler {
                feature_ranges: lows.into_iter().zip(highs).collect(),
                target_range: (target[0], target[1]),
            })
        } else {
            None
        };
        Ok(Self {
            hidden_weights,
            hidden_bias,
            beta,
            activation: Activation::Sigmoid,
            scaler,
        })
    }
}

fn parse_reals(line: &str) -> Result<Vec<f64>, ElmError> {
    line.split(',')
        .map(|cell| {
            cell.trim()
                .parse::<f64>()
                .map_err(|_| ElmError::ModelFormat(format!("bad real `{cell}`")))
        })
        .collect()
}

fn join_reals<'a>(values: impl Iterator<Item = &'a f64>) -> String {
    values
        .map(|v| format!("{v:.16e}"))
        .collect::<Vec<_>>()
        .join(",")
}

/// Least-squares output weights through the ridge-guarded normal equations
/// `(H^T H + eps I) beta = H^T y`, solved by Cholesky factorization.
pub fn least_squares_weights(
    h: &Array2<f64>,
    y: &Array1<f64>,
    ridge_eps: f64,
) -> Result<Array1<f64>, ElmError> {
    if h.nrows() == 0 || h.ncols() == 0 {
        return Err(ElmError::EmptyDesign);
    }
    if h.nrows() != y.len() {
        return Err(ElmError::DimensionMismatch { expected: h.nrows(), got: y.len() });
    }
    let mut gram = h.t().dot(h);
    for i in 0..gram.nrows() {
        gram[(i, i)] += ridge_eps;
    }
    let rhs = h.t().dot(y);
    let l = cholesky(&gram).ok_or(ElmError::SingularSystem)?;
    let beta = cholesky_solve(&l, &rhs);
    let residual = &gram.dot(&beta) - &rhs;
    let rhs_norm = rhs.dot(&rhs).sqrt();
    if residual.dot(&residual).sqrt() > 1e-8 * rhs_norm {
        return Err(ElmError::SingularSystem);
    }
    Ok(beta)
}

fn cholesky(a: &Array2<f64>) -> Option<Array2<f64>> {
    let n = a.nrows();
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[(i, j)];
            for k in 0..j {
                sum -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l[(i, j)] = sum.sqrt();
            } else {
                l[(i, j)] = sum / l[(j, j)];
            }
        }
    }
    Some(l)
}

fn cholesky_solve(l: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut y = Array1::<f64>::zeros(n);
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[(i, k)] * y[k];
        }
        y[i] = sum / l[(i, i)];
    }
    let mut x = Array1::<f64>::zeros(n);
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in (i + 1)..n {
            sum -= l[(k, i)] * x[k];
        }
        x[i] = sum / l[(i, i)];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Termination;
    use ndarray::{arr1, arr2};

    #[test]
    fn hidden_layer_respects_ranges() {
        let (w, b) = init_hidden_layer(4, 200, 11);
        assert!(w.iter().all(|&v| (-1.0..1.0).contains(&v)));
        assert!(b.iter().all(|&v| (0.0..1.0).contains(&v)));
    }

    #[test]
    fn hidden_layer_is_deterministic() {
        let (w1, b1) = init_hidden_layer(3, 7, 5);
        let (w2, b2) = init_hidden_layer(3, 7, 5);
        assert_eq!(w1, w2);
        assert_eq!(b1, b2);
    }

    #[test]
    fn hidden_layer_weight_mean_near_zero() {
        let (w, _) = init_hidden_layer(10, 1000, 123);
        let mean = w.sum() / w.len() as f64;
        assert!(mean.abs() <= 0.05, "mean {mean}");
    }

    #[test]
    fn sigmoid_of_zero_activation_is_half() {
        let x = arr2(&[[1.0, 2.0]]);
        let w = Array2::zeros((2, 3));
        let b = Array1::zeros(3);
        let h = hidden_output(&x, &w, &b).unwrap();
        assert!(h.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn sigmoid_hand_values() {
        // scalar node: a = 2, b = -2, so x = 1 gives 0.5 and x = 2 gives
        // 1 / (1 + e^-2).
        let w = arr2(&[[2.0]]);
        let b = arr1(&[-2.0]);
        let h1 = hidden_output(&arr2(&[[1.0]]), &w, &b).unwrap();
        assert!((h1[(0, 0)] - 0.5).abs() < 1e-15);
        let h2 = hidden_output(&arr2(&[[2.0]]), &w, &b).unwrap();
        assert!((h2[(0, 0)] - 0.8807970779778823).abs() < 1e-12);
    }

    #[test]
    fn hidden_output_entries_in_open_unit_interval() {
        let (w, b) = init_hidden_layer(5, 40, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = Array2::from_shape_fn((30, 5), |_| rng.random_range(0.0..1.0));
        let h = hidden_output(&x, &w, &b).unwrap();
        assert!(h.iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn train_on_zero_targets_stops_at_zero() {
        let h = arr2(&[[0.5, 0.2], [0.1, 0.9]]);
        let y = Array1::zeros(2);
        let cfg = TrainerConfig { hidden_nodes: 2, ..TrainerConfig::default() };
        let (beta, result) = train(&h, &y, &cfg).unwrap();
        assert_eq!(beta, Array1::zeros(2));
        assert_eq!(result.iterations, 1);
        assert_eq!(result.termination, Termination::EarlyExact);
    }

    #[test]
    fn least_squares_identity_design() {
        let y = arr1(&[1.0, -2.0, 0.5]);
        let beta = least_squares_weights(&Array2::eye(3), &y, DEFAULT_RIDGE_EPS).unwrap();
        for (b, t) in beta.iter().zip(y.iter()) {
            assert!((b - t).abs() <= 1e-9);
        }
    }

    #[test]
    fn least_squares_orthonormal_columns() {
        // Tall design with orthonormal columns: beta = H^T y.
        let h = arr2(&[[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]);
        let y = arr1(&[3.0, -4.0, 10.0]);
        let beta = least_squares_weights(&h, &y, DEFAULT_RIDGE_EPS).unwrap();
        assert!((beta[0] - 3.0).abs() <= 1e-8);
        assert!((beta[1] + 4.0).abs() <= 1e-8);
    }

    #[test]
    fn predict_zero_weights_is_zero() {
        let model = ElmModel {
            hidden_weights: Array2::zeros((2, 4)),
            hidden_bias: Array1::zeros(4),
            beta: Array1::zeros(4),
            activation: Activation::Sigmoid,
            scaler: None,
        };
        let out = model.predict(&arr2(&[[1.0, 2.0], [3.0, 4.0]])).unwrap();
        assert_eq!(out, Array1::zeros(2));
    }

    #[test]
    fn predict_single_node_scalar_product() {
        let model = ElmModel {
            hidden_weights: Array2::zeros((1, 1)),
            hidden_bias: Array1::zeros(1),
            beta: arr1(&[2.0]),
            activation: Activation::Sigmoid,
            scaler: None,
        };
        // H entries are sigmoid(0) = 0.5, so predictions are 2 * 0.5 = 1.
        let out = model.predict(&arr2(&[[0.0], [5.0] /* w = 0 kills input */])).unwrap();
        assert!(out.iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn orthonormalized_columns_are_orthonormal() {
        let (mut w, _) = init_hidden_layer(8, 5, 17);
        orthonormalize_columns(&mut w);
        for j in 0..5 {
            for k in 0..=j {
                let dot = w.column(j).dot(&w.column(k));
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((dot - want).abs() <= 1e-10, "col {j}.{k} dot {dot}");
            }
        }
    }

    #[test]
    fn model_round_trips_bit_exactly() {
        let (w, b) = init_hidden_layer(3, 4, 9);
        let model = ElmModel {
            hidden_weights: w,
            hidden_bias: b,
            beta: arr1(&[0.1, -0.25, 0.0, 1.0 / 3.0]),
            activation: Activation::Sigmoid,
            scaler: Some(Scaler {
                feature_ranges: vec![(0.0, 1.0), (-2.5, 3.5), (7.0, 7.0)],
                target_range: (-1.0, 2.0),
            }),
        };
        let path = std::env::temp_dir().join("gamelm_model_roundtrip.txt");
        model.save(&path).unwrap();
        let loaded = ElmModel::load(&path).unwrap();
        assert_eq!(model.hidden_weights, loaded.hidden_weights);
        assert_eq!(model.hidden_bias, loaded.hidden_bias);
        assert_eq!(model.beta, loaded.beta);
        assert_eq!(model.scaler, loaded.scaler);
    }

    #[test]
    fn trainer_config_validation() {
        let cfg = TrainerConfig { hidden_nodes: 0, ..TrainerConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = TrainerConfig { lambda_reg: -1.0, ..TrainerConfig::default() };
        assert!(cfg.validate().is_err());
    }
}
