//! Classical FISTA baseline for the same L1-regularized least-squares
//! objective: constant step 1/L with L from the power-iteration estimate,
//! Nesterov momentum, no restarts.

use std::io::{self, Write};
use std::time::Instant;

use ndarray::Array1;
use ndarray::Array2;
use thiserror::Error;

use crate::operators::{lasso_objective, LassoGradient, MonotoneOperator, OperatorError};
use crate::sets::shrink;

#[derive(Debug, Error)]
pub enum FistaError {
    #[error("iterate became non-finite at iteration {iteration}")]
    NonFiniteIterate { iteration: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// Per-iteration objective values and run statistics.
#[derive(Clone, Debug)]
pub struct FistaTrace {
    pub objectives: Vec<f64>,
    pub iterations: usize,
    pub elapsed: f64,
    pub converged: bool,
}

impl FistaTrace {
    /// Writes the trace as CSV with columns `iter,objective`.
    pub fn write_trace(&self, w: &mut impl Write) -> io::Result<()> {
        writeln!(w, "iter,objective")?;
        for (i, obj) in self.objectives.iter().enumerate() {
            writeln!(w, "{},{:e}", i + 1, obj)?;
        }
        Ok(())
    }

    pub fn final_objective(&self) -> f64 {
        self.objectives.last().copied().unwrap_or(f64::NAN)
    }
}

/// Minimizes `0.5 ||y - H beta||^2 + lambda_reg ||beta||_1` from the zero
/// vector, stopping when `||beta_k - beta_{k-1}|| < tol` or at the iteration
/// cap.
pub fn fista(
    h: &Array2<f64>,
    y: &Array1<f64>,
    lambda_reg: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(Array1<f64>, FistaTrace), FistaError> {
    if !(lambda_reg >= 0.0) {
        return Err(FistaError::InvalidParameter("lambda_reg must be nonnegative"));
    }
    if !(tol > 0.0) {
        return Err(FistaError::InvalidParameter("tol must be positive"));
    }
    if max_iter == 0 {
        return Err(FistaError::InvalidParameter("max_iter must be positive"));
    }

    let gradient = LassoGradient::new(h.clone(), y.clone())?;
    let lipschitz = gradient.lipschitz_estimate().value;
    // A zero design matrix has Lipschitz constant 0; any step works then.
    let step = if lipschitz > 0.0 { 1.0 / lipschitz } else { 1.0 };

    let start = Instant::now();
    let mut x = Array1::<f64>::zeros(h.ncols());
    let mut extrapolated = x.clone();
    let mut t = 1.0_f64;
    let mut objectives = Vec::new();
    let mut converged = false;

    for iteration in 1..=max_iter {
        let g = gradient.apply(&extrapolated)?;
        let x_next = shrink(&(&extrapolated - &(&g * step)), lambda_reg * step);
        if !x_next.iter().all(|v| v.is_finite()) {
            return Err(FistaError::NonFiniteIterate { iteration });
        }
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let momentum = (t - 1.0) / t_next;
        let delta = &x_next - &x;
        extrapolated = &x_next + &(&delta * momentum);
        objectives.push(lasso_objective(h, y, &x_next, lambda_reg));
        let moved = delta.dot(&delta).sqrt();
        x = x_next;
        t = t_next;
        if moved < tol {
            converged = true;
            break;
        }
    }

    let trace = FistaTrace {
        iterations: objectives.len(),
        objectives,
        elapsed: start.elapsed().as_secs_f64(),
        converged,
    };
    Ok((x, trace))
}
