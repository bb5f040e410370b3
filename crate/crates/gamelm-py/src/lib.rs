//! Python bindings for the gamelm solvers: variant presets, the adaptive
//! extragradient solve, projections, regularized ELM training, the FISTA
//! baseline and the evaluation metrics. Matrices cross the boundary as lists
//! of rows.

use ndarray::{Array1, Array2};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use gamelm::elm;
use gamelm::fista;
use gamelm::metrics;
use gamelm::operators;
use gamelm::sets;
use gamelm::solver;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_matrix(rows: Vec<Vec<f64>>) -> PyResult<Array2<f64>> {
    if rows.is_empty() {
        return Err(PyValueError::new_err("matrix must have at least one row"));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err("matrix rows have differing lengths"));
    }
    let mut data = Vec::with_capacity(rows.len() * cols);
    for row in &rows {
        data.extend_from_slice(row);
    }
    Array2::from_shape_vec((rows.len(), cols), data).map_err(value_err)
}

/// Solver parameters; build one with `variant_preset` or the constructor.
#[pyclass(name = "SolverConfig")]
#[derive(Clone)]
struct PySolverConfig {
    inner: solver::SolverConfig,
}

#[pymethods]
impl PySolverConfig {
    #[new]
    #[pyo3(signature = (rho, alpha, beta, mu=0.4, lambda0=0.01, tol=1e-6, max_iter=10_000))]
    fn new(
        rho: f64,
        alpha: f64,
        beta: f64,
        mu: f64,
        lambda0: f64,
        tol: f64,
        max_iter: usize,
    ) -> PyResult<Self> {
        let inner = solver::SolverConfig {
            rho,
            alpha,
            beta,
            mu,
            lambda0,
            tol,
            max_iter,
            ..solver::SolverConfig::default()
        };
        inner.validate().map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn rho(&self) -> f64 {
        self.inner.rho
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu
    }

    #[getter]
    fn lambda0(&self) -> f64 {
        self.inner.lambda0
    }

    #[getter]
    fn tol(&self) -> f64 {
        self.inner.tol
    }

    #[setter]
    fn set_tol(&mut self, tol: f64) -> PyResult<()> {
        self.inner.tol = tol;
        self.inner.validate().map_err(value_err)
    }

    #[getter]
    fn max_iter(&self) -> usize {
        self.inner.max_iter
    }

    #[setter]
    fn set_max_iter(&mut self, max_iter: usize) -> PyResult<()> {
        self.inner.max_iter = max_iter;
        self.inner.validate().map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "SolverConfig(rho={}, alpha={}, beta={}, mu={}, lambda0={}, tol={:e}, max_iter={})",
            self.inner.rho,
            self.inner.alpha,
            self.inner.beta,
            self.inner.mu,
            self.inner.lambda0,
            self.inner.tol,
            self.inner.max_iter
        )
    }
}

/// Outcome of a solve with per-iteration residual and stepsize traces.
#[pyclass(name = "SolveResult")]
struct PySolveResult {
    inner: solver::SolveResult,
}

#[pymethods]
impl PySolveResult {
    #[getter]
    fn solution(&self) -> Vec<f64> {
        self.inner.solution.to_vec()
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    #[getter]
    fn residuals(&self) -> Vec<f64> {
        self.inner.residuals.clone()
    }

    #[getter]
    fn stepsizes(&self) -> Vec<f64> {
        self.inner.stepsizes.clone()
    }

    #[getter]
    fn elapsed(&self) -> f64 {
        self.inner.elapsed
    }

    #[getter]
    fn termination(&self) -> String {
        self.inner.termination.to_string()
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged()
    }

    fn __repr__(&self) -> String {
        format!(
            "SolveResult(iterations={}, termination='{}', final_residual={:e})",
            self.inner.iterations,
            self.inner.termination,
            self.inner.final_residual()
        )
    }
}

/// The affine map `F(x) = M x + shift`.
#[pyclass(name = "AffineOperator")]
#[derive(Clone)]
struct PyAffineOperator {
    inner: operators::AffineOperator,
}

#[pymethods]
impl PyAffineOperator {
    #[new]
    fn new(matrix: Vec<Vec<f64>>, shift: Vec<f64>) -> PyResult<Self> {
        let inner = operators::AffineOperator::new(to_matrix(matrix)?, Array1::from(shift))
            .map_err(value_err)?;
        Ok(Self { inner })
    }

    fn apply(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        use operators::MonotoneOperator as _;
        Ok(self.inner.apply(&Array1::from(x)).map_err(value_err)?.to_vec())
    }

    fn lipschitz(&self) -> (f64, bool) {
        let est = self.inner.lipschitz_estimate();
        (est.value, est.converged)
    }

    #[getter]
    fn dim(&self) -> usize {
        use operators::MonotoneOperator as _;
        self.inner.dim()
    }
}

/// The polyhedron `{x : Ax <= b}`.
#[pyclass(name = "Polyhedron")]
#[derive(Clone)]
struct PyPolyhedron {
    inner: sets::Polyhedron,
}

#[pymethods]
impl PyPolyhedron {
    #[new]
    fn new(a: Vec<Vec<f64>>, b: Vec<f64>) -> PyResult<Self> {
        let inner = sets::Polyhedron::new(to_matrix(a)?, Array1::from(b)).map_err(value_err)?;
        Ok(Self { inner })
    }

    fn contains(&self, x: Vec<f64>, tol: f64) -> bool {
        self.inner.contains(&Array1::from(x), tol)
    }

    #[pyo3(signature = (x, tol=1e-10))]
    fn project(&self, x: Vec<f64>, tol: f64) -> PyResult<Vec<f64>> {
        Ok(sets::project_polyhedron(&Array1::from(x), &self.inner, tol)
            .map_err(value_err)?
            .to_vec())
    }
}

/// The L1 ball of a given radius.
#[pyclass(name = "L1Ball")]
#[derive(Clone)]
struct PyL1Ball {
    inner: sets::L1Ball,
}

#[pymethods]
impl PyL1Ball {
    #[new]
    fn new(radius: f64) -> PyResult<Self> {
        Ok(Self { inner: sets::L1Ball::new(radius).map_err(value_err)? })
    }

    fn project(&self, x: Vec<f64>) -> Vec<f64> {
        sets::project_l1_ball(&Array1::from(x), self.inner.radius()).to_vec()
    }
}

/// A trained single-hidden-layer model.
#[pyclass(name = "ElmModel")]
struct PyElmModel {
    inner: elm::ElmModel,
}

#[pymethods]
impl PyElmModel {
    fn predict(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        Ok(self.inner.predict(&to_matrix(x)?).map_err(value_err)?.to_vec())
    }

    #[getter]
    fn beta(&self) -> Vec<f64> {
        self.inner.beta.to_vec()
    }

    #[getter]
    fn hidden_nodes(&self) -> usize {
        self.inner.hidden_nodes()
    }

    #[getter]
    fn input_dim(&self) -> usize {
        self.inner.input_dim()
    }

    fn save(&self, path: String) -> PyResult<()> {
        self.inner.save(&path).map_err(|e| PyIOError::new_err(e.to_string()))
    }

    #[staticmethod]
    fn load(path: String) -> PyResult<Self> {
        Ok(Self {
            inner: elm::ElmModel::load(&path).map_err(|e| PyIOError::new_err(e.to_string()))?,
        })
    }
}

/// Regression metrics for one prediction vector.
#[pyclass(name = "MetricsReport")]
struct PyMetricsReport {
    inner: metrics::MetricsReport,
}

#[pymethods]
impl PyMetricsReport {
    #[getter]
    fn rmse(&self) -> f64 {
        self.inner.rmse
    }

    #[getter]
    fn mae(&self) -> f64 {
        self.inner.mae
    }

    #[getter]
    fn sse_sst(&self) -> Option<f64> {
        self.inner.sse_sst
    }

    #[getter]
    fn ssr_sst(&self) -> Option<f64> {
        self.inner.ssr_sst
    }

    fn __repr__(&self) -> String {
        format!(
            "MetricsReport(rmse={:.6}, mae={:.6}, sse_sst={:?}, ssr_sst={:?})",
            self.inner.rmse, self.inner.mae, self.inner.sse_sst, self.inner.ssr_sst
        )
    }
}

/// Named parameter preset: GAME, DIEM, IREM, REM or EM.
#[pyfunction]
fn variant_preset(name: &str) -> PyResult<PySolverConfig> {
    let variant: solver::Variant = name.parse().map_err(value_err)?;
    Ok(PySolverConfig { inner: solver::variant_preset(variant) })
}

/// Seeded random benchmark instance: an affine operator with positive
/// definite matrix and a polyhedron containing the origin.
#[pyfunction]
#[pyo3(signature = (n, l_rows, seed, xi_random=false))]
fn make_random_vi(
    n: usize,
    l_rows: usize,
    seed: u64,
    xi_random: bool,
) -> (PyAffineOperator, PyPolyhedron) {
    let mode = if xi_random { operators::XiMode::Random } else { operators::XiMode::Zero };
    let (op, set) = operators::make_random_vi(n, l_rows, mode, seed);
    (PyAffineOperator { inner: op }, PyPolyhedron { inner: set })
}

/// Runs the adaptive extragradient iteration on the operator over the given
/// set (a `Polyhedron`, an `L1Ball`, or `None` for the whole space).
#[pyfunction]
#[pyo3(signature = (op, set, x0, config, x_minus1=None))]
fn solve_vi(
    op: &PyAffineOperator,
    set: Option<&Bound<'_, PyAny>>,
    x0: Vec<f64>,
    config: &PySolverConfig,
    x_minus1: Option<Vec<f64>>,
) -> PyResult<PySolveResult> {
    let x0 = Array1::from(x0);
    let x_minus1 = x_minus1.map(Array1::from);
    let result = match set {
        None => solver::solve(&op.inner, &sets::WholeSpace, &x0, x_minus1.as_ref(), &config.inner),
        Some(any) => {
            if let Ok(poly) = any.extract::<PyPolyhedron>() {
                solver::solve(&op.inner, &poly.inner, &x0, x_minus1.as_ref(), &config.inner)
            } else if let Ok(ball) = any.extract::<PyL1Ball>() {
                solver::solve(&op.inner, &ball.inner, &x0, x_minus1.as_ref(), &config.inner)
            } else {
                return Err(PyValueError::new_err(
                    "set must be a Polyhedron, an L1Ball, or None",
                ));
            }
        }
    };
    Ok(PySolveResult { inner: result.map_err(value_err)? })
}

/// Componentwise soft threshold.
#[pyfunction]
fn shrink(s: Vec<f64>, rho: f64) -> Vec<f64> {
    sets::shrink(&Array1::from(s), rho).to_vec()
}

/// Trains an L1-regularized single-hidden-layer model on raw features.
#[pyfunction]
#[pyo3(signature = (x, y, hidden_nodes=100, lambda_reg=1e-3, variant="GAME", seed=0, tol=1e-6, max_iter=10_000))]
#[allow(clippy::too_many_arguments)]
fn train_elm(
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    hidden_nodes: usize,
    lambda_reg: f64,
    variant: &str,
    seed: u64,
    tol: f64,
    max_iter: usize,
) -> PyResult<(PyElmModel, PySolveResult)> {
    let variant: solver::Variant = variant.parse().map_err(value_err)?;
    let cfg = elm::TrainerConfig {
        hidden_nodes,
        lambda_reg,
        solver: solver::variant_preset(variant).with_tol(tol).with_max_iter(max_iter),
        seed,
        ..elm::TrainerConfig::default()
    };
    let (model, result) = elm::fit(&to_matrix(x)?, &Array1::from(y), &cfg).map_err(value_err)?;
    Ok((PyElmModel { inner: model }, PySolveResult { inner: result }))
}

/// FISTA on the same objective; returns (beta, objectives, iterations, converged).
#[pyfunction]
#[pyo3(signature = (h, y, lambda_reg, tol=1e-6, max_iter=10_000))]
fn run_fista(
    h: Vec<Vec<f64>>,
    y: Vec<f64>,
    lambda_reg: f64,
    tol: f64,
    max_iter: usize,
) -> PyResult<(Vec<f64>, Vec<f64>, usize, bool)> {
    let (beta, trace) = fista::fista(&to_matrix(h)?, &Array1::from(y), lambda_reg, tol, max_iter)
        .map_err(value_err)?;
    Ok((beta.to_vec(), trace.objectives, trace.iterations, trace.converged))
}

/// The training energy `0.5 ||y - H beta||^2 + lambda ||beta||_1`.
#[pyfunction]
fn lasso_objective(
    h: Vec<Vec<f64>>,
    y: Vec<f64>,
    beta: Vec<f64>,
    lambda_reg: f64,
) -> PyResult<f64> {
    Ok(operators::lasso_objective(
        &to_matrix(h)?,
        &Array1::from(y),
        &Array1::from(beta),
        lambda_reg,
    ))
}

/// Regression metrics of predictions against actual values.
#[pyfunction]
fn evaluate(y: Vec<f64>, yhat: Vec<f64>) -> PyResult<PyMetricsReport> {
    let inner = metrics::evaluate(&Array1::from(y), &Array1::from(yhat)).map_err(value_err)?;
    Ok(PyMetricsReport { inner })
}

/// Seeded k-fold split of `0..n` into (train, test) index lists.
#[pyfunction]
fn kfold_split(n: usize, k: usize, seed: u64) -> PyResult<Vec<(Vec<usize>, Vec<usize>)>> {
    metrics::kfold_split(n, k, seed).map_err(value_err)
}

#[pymodule]
fn gamelm_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySolverConfig>()?;
    m.add_class::<PySolveResult>()?;
    m.add_class::<PyAffineOperator>()?;
    m.add_class::<PyPolyhedron>()?;
    m.add_class::<PyL1Ball>()?;
    m.add_class::<PyElmModel>()?;
    m.add_class::<PyMetricsReport>()?;
    m.add_function(wrap_pyfunction!(variant_preset, m)?)?;
    m.add_function(wrap_pyfunction!(make_random_vi, m)?)?;
    m.add_function(wrap_pyfunction!(solve_vi, m)?)?;
    m.add_function(wrap_pyfunction!(shrink, m)?)?;
    m.add_function(wrap_pyfunction!(train_elm, m)?)?;
    m.add_function(wrap_pyfunction!(run_fista, m)?)?;
    m.add_function(wrap_pyfunction!(lasso_objective, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(kfold_split, m)?)?;
    Ok(())
}
