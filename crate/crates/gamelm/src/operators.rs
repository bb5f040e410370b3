//! Concrete monotone operators: the random affine operator of the synthetic
//! benchmark and the least-squares gradient of L1-regularized training, with
//! Lipschitz-constant and monotonicity probes.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::sets::Polyhedron;

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("dimension mismatch: operator expects {expected}, point has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("shift vector length {len} does not match matrix dimension {dim}")]
    ShiftMismatch { len: usize, dim: usize },
    #[error("design matrix has {rows} rows but target has {len} entries")]
    TargetMismatch { rows: usize, len: usize },
}

/// A map `F: R^n -> R^n` evaluated pointwise by the solver.
pub trait MonotoneOperator: Send + Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &Array1<f64>) -> Result<Array1<f64>, OperatorError>;
}

/// Spectral-norm estimate produced by power iteration. `converged` is false
/// when the iteration cap was hit; `value` is then the best estimate so far.
#[derive(Clone, Copy, Debug)]
pub struct SpectralEstimate {
    pub value: f64,
    pub converged: bool,
}

/// The affine operator `F(x) = Mx + xi`.
#[derive(Clone, Debug)]
pub struct AffineOperator {
    matrix: Array2<f64>,
    shift: Array1<f64>,
}

impl AffineOperator {
    pub fn new(matrix: Array2<f64>, shift: Array1<f64>) -> Result<Self, OperatorError> {
        if matrix.nrows() != matrix.ncols() {
            return Err(OperatorError::NotSquare {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        if shift.len() != matrix.nrows() {
            return Err(OperatorError::ShiftMismatch {
                len: shift.len(),
                dim: matrix.nrows(),
            });
        }
        Ok(Self { matrix, shift })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn shift(&self) -> &Array1<f64> {
        &self.shift
    }

    /// Spectral norm of the matrix, i.e. the Lipschitz constant of `F`,
    /// via power iteration on `M^T M`.
    pub fn lipschitz_estimate(&self) -> SpectralEstimate {
        let gram = self.matrix.t().dot(&self.matrix);
        let est = power_iteration(&gram, POWER_TOL, POWER_CAP);
        SpectralEstimate {
            value: est.value.max(0.0).sqrt(),
            converged: est.converged,
        }
    }
}

impl MonotoneOperator for AffineOperator {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply(&self, x: &Array1<f64>) -> Result<Array1<f64>, OperatorError> {
        if x.len() != self.dim() {
            return Err(OperatorError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(self.matrix.dot(x) + &self.shift)
    }
}

/// The gradient map `beta -> H^T (H beta - y)` of the halved least-squares
/// energy `0.5 * ||y - H beta||^2`. Products `H^T H` and `H^T y` are cached
/// by default so each evaluation is one `m x m` mat-vec.
#[derive(Clone, Debug)]
pub struct LassoGradient {
    h: Array2<f64>,
    y: Array1<f64>,
    cache: Option<(Array2<f64>, Array1<f64>)>,
}

impl LassoGradient {
    pub fn new(h: Array2<f64>, y: Array1<f64>) -> Result<Self, OperatorError> {
        let mut op = Self::uncached(h, y)?;
        op.cache = Some((op.h.t().dot(&op.h), op.h.t().dot(&op.y)));
        Ok(op)
    }

    /// Recompute mode: evaluates `H^T (H beta - y)` directly, trading the
    /// `m x m` cache for two rectangular mat-vecs per call.
    pub fn uncached(h: Array2<f64>, y: Array1<f64>) -> Result<Self, OperatorError> {
        if h.nrows() != y.len() {
            return Err(OperatorError::TargetMismatch {
                rows: h.nrows(),
                len: y.len(),
            });
        }
        Ok(Self { h, y, cache: None })
    }

    pub fn design(&self) -> &Array2<f64> {
        &self.h
    }

    pub fn target(&self) -> &Array1<f64> {
        &self.y
    }

    /// `||H^T H||`, the Lipschitz constant of the gradient map, via power
    /// iteration on the (symmetric positive semidefinite) Gram matrix.
    pub fn lipschitz_estimate(&self) -> SpectralEstimate {
        match &self.cache {
            Some((hth, _)) => power_iteration(hth, POWER_TOL, POWER_CAP),
            None => power_iteration(&self.h.t().dot(&self.h), POWER_TOL, POWER_CAP),
        }
    }
}

impl MonotoneOperator for LassoGradient {
    fn dim(&self) -> usize {
        self.h.ncols()
    }

    fn apply(&self, beta: &Array1<f64>) -> Result<Array1<f64>, OperatorError> {
        if beta.len() != self.dim() {
            return Err(OperatorError::DimensionMismatch {
                expected: self.dim(),
                got: beta.len(),
            });
        }
        match &self.cache {
            Some((hth, hty)) => Ok(hth.dot(beta) - hty),
            None => Ok(self.h.t().dot(&(self.h.dot(beta) - &self.y))),
        }
    }
}

/// The training energy `0.5 * ||y - H beta||^2 + lambda * ||beta||_1` whose
/// smooth part has gradient [`LassoGradient`].
pub fn lasso_objective(h: &Array2<f64>, y: &Array1<f64>, beta: &Array1<f64>, lambda: f64) -> f64 {
    let residual = y - &h.dot(beta);
    0.5 * residual.dot(&residual) + lambda * beta.iter().map(|v| v.abs()).sum::<f64>()
}

/// Whether the randomly generated affine operator gets a zero or a random
/// shift vector. With a zero shift the solution of the benchmark variational
/// inequality is the origin.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum XiMode {
    Zero,
    Random,
}

/// Generates the synthetic benchmark instance: `F(x) = (R R^T + S + D) x + xi`
/// with `S` skew-symmetric and `D` diagonal positive, over the polyhedron
/// `{x : Ax <= b}` with `b >= 0` so the origin is feasible. Deterministic for
/// a given seed.
pub fn make_random_vi(
    n: usize,
    l_rows: usize,
    xi_mode: XiMode,
    seed: u64,
) -> (AffineOperator, Polyhedron) {
    assert!(n >= 1 && l_rows >= 1, "instance dimensions must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let r = Array2::from_shape_fn((n, n), |_| rng.random_range(-1.0..1.0));
    let t = Array2::from_shape_fn((n, n), |_| rng.random_range(-1.0..1.0));
    let skew = &t - &t.t();
    let mut matrix = r.dot(&r.t()) + skew;
    for i in 0..n {
        matrix[(i, i)] += rng.random_range(0.1..1.1);
    }

    let a = Array2::from_shape_fn((l_rows, n), |_| rng.random_range(-1.0..1.0));
    let b = Array1::from_shape_fn(l_rows, |_| rng.random_range(0.0..1.0));

    let shift = match xi_mode {
        XiMode::Zero => Array1::zeros(n),
        XiMode::Random => Array1::from_shape_fn(n, |_| rng.random_range(-1.0..1.0)),
    };

    let op = AffineOperator::new(matrix, shift).expect("square by construction");
    let set = Polyhedron::new_origin_feasible(a, b).expect("b >= 0 by construction");
    (op, set)
}

/// Samples pairs of standard-normal points and returns the smallest observed
/// monotonicity ratio `<F(x) - F(y), x - y> / ||x - y||^2`. Nonnegative (up to
/// rounding) for monotone operators.
pub fn monotonicity_probe(op: &dyn MonotoneOperator, n_samples: usize, seed: u64) -> f64 {
    assert!(n_samples >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = op.dim();
    let mut minimum = f64::INFINITY;
    for _ in 0..n_samples {
        let x = Array1::from_shape_fn(dim, |_| standard_normal(&mut rng));
        let y = Array1::from_shape_fn(dim, |_| standard_normal(&mut rng));
        let diff = &x - &y;
        let norm_sq = diff.dot(&diff);
        if norm_sq == 0.0 {
            continue;
        }
        let fx = op.apply(&x).expect("probe uses operator dimension");
        let fy = op.apply(&y).expect("probe uses operator dimension");
        let ratio = (&fx - &fy).dot(&diff) / norm_sq;
        minimum = minimum.min(ratio);
    }
    minimum
}

pub(crate) fn standard_normal(rng: &mut impl Rng) -> f64 {
    // Box-Muller; clamped away from zero so ln stays finite.
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

const POWER_TOL: f64 = 1e-8;
const POWER_CAP: usize = 1000;

/// Power iteration for the largest eigenvalue of a symmetric positive
/// semidefinite matrix, with Rayleigh-quotient convergence test.
fn power_iteration(sym: &Array2<f64>, tol: f64, cap: usize) -> SpectralEstimate {
    let n = sym.nrows();
    if n == 0 {
        return SpectralEstimate { value: 0.0, converged: true };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e3779b9);
    let mut v: Array1<f64> = Array1::from_shape_fn(n, |_| rng.random_range(0.5..1.5));
    let norm = v.dot(&v).sqrt();
    v /= norm;
    let mut eigenvalue = 0.0;
    for _ in 0..cap {
        let w = sym.dot(&v);
        let w_norm = w.dot(&w).sqrt();
        if w_norm == 0.0 {
            return SpectralEstimate { value: 0.0, converged: true };
        }
        let next = &w / w_norm;
        let rayleigh = next.dot(&sym.dot(&next));
        let settled = (rayleigh - eigenvalue).abs() <= tol * rayleigh.abs().max(1.0);
        eigenvalue = rayleigh;
        v = next;
        if settled {
            return SpectralEstimate { value: eigenvalue, converged: true };
        }
    }
    SpectralEstimate { value: eigenvalue, converged: false }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr1, arr2};

    #[test]
    fn affine_at_origin_returns_shift() {
        let op = AffineOperator::new(
            arr2(&[[1.0, 2.0], [3.0, 4.0]]),
            arr1(&[5.0, -6.0]),
        )
        .unwrap();
        assert_eq!(op.apply(&arr1(&[0.0, 0.0])).unwrap(), arr1(&[5.0, -6.0]));
    }

    #[test]
    fn affine_identity_matrix_is_identity_map() {
        let op = AffineOperator::new(Array2::eye(3), Array1::zeros(3)).unwrap();
        let x = arr1(&[0.1, -2.0, 7.5]);
        assert_eq!(op.apply(&x).unwrap(), x);
    }

    #[test]
    fn affine_hand_computed_product() {
        let op = AffineOperator::new(
            arr2(&[[2.0, 0.0], [0.0, 3.0]]),
            arr1(&[1.0, -1.0]),
        )
        .unwrap();
        assert_eq!(op.apply(&arr1(&[1.0, 1.0])).unwrap(), arr1(&[3.0, 2.0]));
    }

    #[test]
    fn affine_dimension_mismatch() {
        let op = AffineOperator::new(Array2::eye(2), Array1::zeros(2)).unwrap();
        assert!(matches!(
            op.apply(&arr1(&[1.0])).unwrap_err(),
            OperatorError::DimensionMismatch { expected: 2, got: 1 }
        ));
    }

    #[test]
    fn lasso_gradient_vanishes_at_exact_fit() {
        let h = arr2(&[[1.0, 0.0], [0.0, 2.0], [1.0, 1.0]]);
        let beta = arr1(&[0.5, -1.5]);
        let y = h.dot(&beta);
        let op = LassoGradient::new(h, y).unwrap();
        let g = op.apply(&beta).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-12), "{g:?}");
    }

    #[test]
    fn lasso_gradient_identity_design() {
        let op = LassoGradient::new(Array2::eye(3), Array1::zeros(3)).unwrap();
        let beta = arr1(&[1.0, -2.0, 0.5]);
        assert_eq!(op.apply(&beta).unwrap(), beta);
    }

    #[test]
    fn lasso_gradient_hand_computed() {
        let op = LassoGradient::new(arr2(&[[1.0], [1.0]]), arr1(&[1.0, 1.0])).unwrap();
        assert_eq!(op.apply(&arr1(&[0.0])).unwrap(), arr1(&[-2.0]));
    }

    #[test]
    fn cached_and_uncached_agree() {
        let h = arr2(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]);
        let y = arr1(&[1.0, -1.0, 0.5]);
        let cached = LassoGradient::new(h.clone(), y.clone()).unwrap();
        let plain = LassoGradient::uncached(h, y).unwrap();
        let beta = arr1(&[0.3, -0.7]);
        let a = cached.apply(&beta).unwrap();
        let b = plain.apply(&beta).unwrap();
        for (u, v) in a.iter().zip(b.iter()) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn scaled_identity_spectral_norm() {
        let op = AffineOperator::new(Array2::eye(3) * 2.0, Array1::zeros(3)).unwrap();
        let est = op.lipschitz_estimate();
        assert!(est.converged);
        assert!((est.value - 2.0).abs() <= 1e-6);
    }

    #[test]
    fn orthonormal_columns_unit_norm() {
        let h = arr2(&[[1.0, 0.0], [0.0, 1.0]]);
        let op = LassoGradient::new(h, Array1::zeros(2)).unwrap();
        let est = op.lipschitz_estimate();
        assert!(est.converged);
        assert!((est.value - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn one_dimensional_instance_is_positive_scalar() {
        // In one dimension the skew part vanishes, so M = r^2 + d > 0.
        let (op, _) = make_random_vi(1, 1, XiMode::Zero, 7);
        assert_eq!(op.dim(), 1);
        assert!(op.matrix()[(0, 0)] > 0.0);
    }

    #[test]
    fn generation_is_deterministic() {
        let (op1, set1) = make_random_vi(6, 3, XiMode::Random, 99);
        let (op2, set2) = make_random_vi(6, 3, XiMode::Random, 99);
        assert_eq!(op1.matrix(), op2.matrix());
        assert_eq!(op1.shift(), op2.shift());
        assert_eq!(set1.constraints().0, set2.constraints().0);
        assert_eq!(set1.constraints().1, set2.constraints().1);
    }

    #[test]
    fn identity_probe_is_one() {
        let op = AffineOperator::new(Array2::eye(4), Array1::zeros(4)).unwrap();
        let probe = monotonicity_probe(&op, 50, 3);
        assert!((probe - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn skew_probe_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = Array2::from_shape_fn((4, 4), |_| rng.random_range(-1.0..1.0));
        let skew = &t - &t.t();
        let op = AffineOperator::new(skew, Array1::zeros(4)).unwrap();
        let probe = monotonicity_probe(&op, 100, 11);
        assert!(probe.abs() <= 1e-10, "skew probe {probe}");
    }

    #[test]
    fn objective_at_zero_is_half_target_norm() {
        let h = arr2(&[[1.0, 0.0], [0.0, 1.0]]);
        let y = arr1(&[3.0, 4.0]);
        let obj = lasso_objective(&h, &y, &Array1::zeros(2), 0.5);
        assert!((obj - 12.5).abs() < 1e-12);
    }
}
