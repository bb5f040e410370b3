//! Feasible sets and their Euclidean projections, plus the soft-threshold
//! (shrinkage) operator used as the backward step in L1-regularized training.

use ndarray::{Array1, Array2};
use thiserror::Error;

/// Default termination tolerance for the cyclic polyhedron projection.
pub const DEFAULT_PROJECTION_TOL: f64 = 1e-10;
/// Default sweep cap for the cyclic polyhedron projection.
pub const DEFAULT_SWEEP_CAP: usize = 5000;

#[derive(Debug, Error)]
pub enum SetError {
    #[error("dimension mismatch: set expects {expected}, point has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("half-space normal vector has zero norm")]
    ZeroNormal,
    #[error("polyhedron projection did not converge within {sweeps} sweeps (last move {last_move:e})")]
    NoConvergence { sweeps: usize, last_move: f64 },
    #[error("constraint matrix has {rows} rows but bound vector has {len} entries")]
    ShapeMismatch { rows: usize, len: usize },
    #[error("origin is infeasible: bound {index} is negative ({value})")]
    OriginInfeasible { index: usize, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

/// Backward step of the iteration: an exact or iterative Euclidean projection,
/// or a proximal map whose threshold scales with the current stepsize.
pub trait FeasibleSet: Send + Sync {
    /// Applies the projection (or prox) to `x`. `lambda` is the stepsize of
    /// the current iteration; plain projections ignore it.
    fn project(&self, x: &Array1<f64>, lambda: f64) -> Result<Array1<f64>, SetError>;
}

/// The unconstrained set: projection is the identity.
#[derive(Clone, Debug, Default)]
pub struct WholeSpace;

impl FeasibleSet for WholeSpace {
    fn project(&self, x: &Array1<f64>, _lambda: f64) -> Result<Array1<f64>, SetError> {
        Ok(x.clone())
    }
}

/// The polyhedron `{x : Ax <= b}` given as an intersection of half-spaces.
#[derive(Clone, Debug)]
pub struct Polyhedron {
    a: Array2<f64>,
    b: Array1<f64>,
    tol: f64,
    sweep_cap: usize,
}

impl Polyhedron {
    /// Builds the set from the constraint matrix and bounds.
    pub fn new(a: Array2<f64>, b: Array1<f64>) -> Result<Self, SetError> {
        if a.nrows() != b.len() {
            return Err(SetError::ShapeMismatch {
                rows: a.nrows(),
                len: b.len(),
            });
        }
        Ok(Self {
            a,
            b,
            tol: DEFAULT_PROJECTION_TOL,
            sweep_cap: DEFAULT_SWEEP_CAP,
        })
    }

    /// Like [`Polyhedron::new`] but additionally checks that the origin is
    /// feasible, i.e. every bound is nonnegative.
    pub fn new_origin_feasible(a: Array2<f64>, b: Array1<f64>) -> Result<Self, SetError> {
        if let Some((index, &value)) = b.iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(SetError::OriginInfeasible { index, value });
        }
        Self::new(a, b)
    }

    pub fn with_projection_params(mut self, tol: f64, sweep_cap: usize) -> Self {
        self.tol = tol;
        self.sweep_cap = sweep_cap;
        self
    }

    pub fn constraints(&self) -> (&Array2<f64>, &Array1<f64>) {
        (&self.a, &self.b)
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    /// Componentwise feasibility check `Ax <= b + tol`.
    pub fn contains(&self, x: &Array1<f64>, tol: f64) -> bool {
        self.a
            .dot(x)
            .iter()
            .zip(self.b.iter())
            .all(|(ax, bi)| *ax <= bi + tol)
    }
}

impl FeasibleSet for Polyhedron {
    fn project(&self, x: &Array1<f64>, _lambda: f64) -> Result<Array1<f64>, SetError> {
        project_polyhedron(x, self, self.tol)
    }
}

/// The L1 ball `{x : ||x||_1 <= radius}`.
#[derive(Clone, Debug)]
pub struct L1Ball {
    radius: f64,
}

impl L1Ball {
    pub fn new(radius: f64) -> Result<Self, SetError> {
        if !(radius > 0.0) {
            return Err(SetError::InvalidParameter("L1 ball radius must be positive"));
        }
        Ok(Self { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

impl FeasibleSet for L1Ball {
    fn project(&self, x: &Array1<f64>, _lambda: f64) -> Result<Array1<f64>, SetError> {
        Ok(project_l1_ball(x, self.radius))
    }
}

/// Soft-threshold backward step with threshold `weight * lambda`, the proximal
/// map of `lambda * weight * ||.||_1`. Used when training output weights with
/// an L1 penalty instead of a hard feasibility constraint.
#[derive(Clone, Debug)]
pub struct Shrinkage {
    weight: f64,
}

impl Shrinkage {
    pub fn new(weight: f64) -> Result<Self, SetError> {
        if !(weight >= 0.0) {
            return Err(SetError::InvalidParameter("shrinkage weight must be nonnegative"));
        }
        Ok(Self { weight })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }
}

impl FeasibleSet for Shrinkage {
    fn project(&self, x: &Array1<f64>, lambda: f64) -> Result<Array1<f64>, SetError> {
        Ok(shrink(x, self.weight * lambda))
    }
}

/// Projects `x` onto the half-space `{z : <a, z> <= beta}`.
pub fn project_halfspace(
    x: &Array1<f64>,
    a: &Array1<f64>,
    beta: f64,
) -> Result<Array1<f64>, SetError> {
    if a.len() != x.len() {
        return Err(SetError::DimensionMismatch {
            expected: a.len(),
            got: x.len(),
        });
    }
    let norm_sq = a.dot(a);
    if norm_sq == 0.0 {
        return Err(SetError::ZeroNormal);
    }
    let slack = a.dot(x) - beta;
    if slack <= 0.0 {
        Ok(x.clone())
    } else {
        Ok(x - &(a * (slack / norm_sq)))
    }
}

/// Projects `x` onto the polyhedron by Dykstra's cyclic corrections over the
/// half-space rows, terminating when a full sweep moves the point less than
/// `tol`. Exact in the limit for intersections of half-spaces.
pub fn project_polyhedron(
    x: &Array1<f64>,
    set: &Polyhedron,
    tol: f64,
) -> Result<Array1<f64>, SetError> {
    if x.len() != set.dim() {
        return Err(SetError::DimensionMismatch {
            expected: set.dim(),
            got: x.len(),
        });
    }
    if !(tol > 0.0) {
        return Err(SetError::InvalidParameter("projection tolerance must be positive"));
    }
    let rows = set.a.nrows();
    let mut point = x.clone();
    let mut corrections = vec![Array1::<f64>::zeros(x.len()); rows];
    let mut last_move = f64::INFINITY;
    for _ in 0..set.sweep_cap {
        let sweep_start = point.clone();
        for (i, correction) in corrections.iter_mut().enumerate() {
            let shifted = &point + &*correction;
            let row = set.a.row(i).to_owned();
            let projected = project_halfspace(&shifted, &row, set.b[i])?;
            *correction = &shifted - &projected;
            point = projected;
        }
        let diff = &point - &sweep_start;
        last_move = diff.dot(&diff).sqrt();
        if last_move <= tol {
            return Ok(point);
        }
    }
    Err(SetError::NoConvergence {
        sweeps: set.sweep_cap,
        last_move,
    })
}

/// Exact projection onto the L1 ball of the given radius via sort-then-threshold.
pub fn project_l1_ball(x: &Array1<f64>, radius: f64) -> Array1<f64> {
    let l1: f64 = x.iter().map(|v| v.abs()).sum();
    if l1 <= radius {
        return x.clone();
    }
    let mut magnitudes: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    magnitudes.sort_unstable_by(|a, b| b.partial_cmp(a).expect("non-finite input"));
    let mut cumulative = 0.0;
    let mut threshold = 0.0;
    for (j, &u) in magnitudes.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - radius) / (j + 1) as f64;
        if u - candidate > 0.0 {
            threshold = candidate;
        } else {
            break;
        }
    }
    shrink(x, threshold)
}

/// Componentwise soft threshold: `sign(s_i) * max(|s_i| - rho, 0)`.
pub fn shrink(s: &Array1<f64>, rho: f64) -> Array1<f64> {
    s.mapv(|v| v.signum() * (v.abs() - rho).max(0.0))
}
