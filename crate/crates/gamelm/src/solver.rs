//! Self-adaptive accelerated extragradient iteration for monotone variational
//! inequalities, with double inertial extrapolation, a relaxation parameter,
//! and a stepsize updated from local curvature at every iteration. Setting
//! individual parameters to zero or one recovers the classical reduced
//! variants (see [`Variant`]).

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;
use std::time::Instant;

use ndarray::Array1;
use thiserror::Error;

use crate::operators::MonotoneOperator;
use crate::sets::{FeasibleSet, SetError};

/// Relative floor below which `F(b)` and `F(c)` are treated as equal in the
/// stepsize rule, so the degenerate branch is taken instead of dividing by a
/// rounding-level difference.
pub const EXACTNESS_THRESHOLD: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("dimension mismatch: operator expects {expected}, iterate has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("iterate became non-finite at iteration {iteration}")]
    NonFiniteIterate { iteration: usize },
    #[error("unknown variant `{0}` (expected GAME, DIEM, IREM, REM or EM)")]
    UnknownVariant(String),
    #[error("projection failed: {0}")]
    Projection(#[from] SetError),
    #[error("operator failed: {0}")]
    Operator(#[from] crate::operators::OperatorError),
}

/// Per-iteration increment `zeta_n` added to the stepsize when the curvature
/// ratio does not bind. Evaluated at n = 1, 2, ...
#[derive(Clone, Debug, PartialEq)]
pub enum ZetaSchedule {
    /// `num / (slope * n + offset)`.
    Reciprocal { num: f64, slope: f64, offset: f64 },
    Constant(f64),
}

impl ZetaSchedule {
    pub fn value(&self, n: usize) -> f64 {
        match *self {
            ZetaSchedule::Reciprocal { num, slope, offset } => num / (slope * n as f64 + offset),
            ZetaSchedule::Constant(c) => c,
        }
    }

    /// Partial sum of the first `n` increments, the additive headroom the
    /// stepsize can have gained by iteration `n`.
    pub fn partial_sum(&self, n: usize) -> f64 {
        (1..=n).map(|k| self.value(k)).sum()
    }

    fn validate(&self) -> Result<(), SolverError> {
        let ok = match *self {
            ZetaSchedule::Reciprocal { num, slope, offset } => {
                num > 0.0 && slope >= 0.0 && offset > 0.0
            }
            ZetaSchedule::Constant(c) => c > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(SolverError::InvalidConfig("zeta schedule must be strictly positive"))
        }
    }
}

impl Default for ZetaSchedule {
    /// `1 / (10n + 9)`.
    fn default() -> Self {
        ZetaSchedule::Reciprocal { num: 1.0, slope: 10.0, offset: 9.0 }
    }
}

/// Solver parameters. Construct through [`SolverConfig::new`] or
/// [`variant_preset`]; [`solve`] re-validates before running.
#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Relaxation weight blending the inertial point into the update, in (0, 1].
    pub rho: f64,
    /// First inertial weight, in [0, 1).
    pub alpha: f64,
    /// Second inertial weight, in [0, alpha].
    pub beta: f64,
    /// Curvature safety factor in (0, 1).
    pub mu: f64,
    /// Initial stepsize.
    pub lambda0: f64,
    /// Stepsize increment schedule.
    pub zeta: ZetaSchedule,
    /// Residual threshold for convergence.
    pub tol: f64,
    /// Iteration cap.
    pub max_iter: usize,
    /// Iterate-norm bound beyond which the run is declared divergent.
    pub divergence_bound: f64,
}

impl SolverConfig {
    pub fn new(rho: f64, alpha: f64, beta: f64) -> Result<Self, SolverError> {
        let cfg = Self { rho, alpha, beta, ..Self::default() };
        cfg.validate()?;
        if !cfg.relaxation_inertia_guaranteed() {
            log::warn!(
                "rho={rho}, alpha={alpha}, beta={beta} sit outside the region with a \
                 worst-case convergence guarantee; the benchmark presets do too and \
                 converge in practice"
            );
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(SolverError::InvalidConfig("rho must lie in (0, 1]"));
        }
        // The IREM preset uses beta > alpha, so only the individual ranges
        // are hard errors; the beta <= alpha ordering of the convergence
        // analysis is reported through `relaxation_inertia_guaranteed`.
        if !(0.0 <= self.alpha && self.alpha < 1.0) {
            return Err(SolverError::InvalidConfig("alpha must lie in [0, 1)"));
        }
        if !(0.0 <= self.beta && self.beta < 1.0) {
            return Err(SolverError::InvalidConfig("beta must lie in [0, 1)"));
        }
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return Err(SolverError::InvalidConfig("mu must lie in (0, 1)"));
        }
        if !(self.lambda0 > 0.0) {
            return Err(SolverError::InvalidConfig("lambda0 must be positive"));
        }
        if !(self.tol > 0.0) {
            return Err(SolverError::InvalidConfig("tol must be positive"));
        }
        if self.max_iter == 0 {
            return Err(SolverError::InvalidConfig("max_iter must be positive"));
        }
        if !(self.divergence_bound > 0.0) {
            return Err(SolverError::InvalidConfig("divergence_bound must be positive"));
        }
        self.zeta.validate()
    }

    /// Whether (rho, alpha, beta) lie in the region where the worst-case
    /// convergence analysis applies: beta <= alpha, rho < 1/(1+delta) and
    /// alpha < 1 - sqrt(2/delta) for some delta > 2. The presets sit outside
    /// this region and are used anyway; a warning is emitted at construction.
    pub fn relaxation_inertia_guaranteed(&self) -> bool {
        self.beta <= self.alpha
            && self.rho < 1.0 / 3.0
            && self.alpha < 1.0 - (2.0 * self.rho / (1.0 - self.rho)).sqrt()
    }

    /// Inertial weight for iteration `n`. Constant today; a per-iteration
    /// schedule can slot in here without touching the iteration.
    pub fn alpha_at(&self, _n: usize) -> f64 {
        self.alpha
    }

    pub fn beta_at(&self, _n: usize) -> f64 {
        self.beta
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_lambda0(mut self, lambda0: f64) -> Self {
        self.lambda0 = lambda0;
        self
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rho: 0.6,
            alpha: 0.5,
            beta: 0.2,
            mu: 0.4,
            lambda0: 0.01,
            zeta: ZetaSchedule::default(),
            tol: 1e-6,
            max_iter: 10_000,
            divergence_bound: 1e12,
        }
    }
}

/// The named parameter presets used throughout the benchmarks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Full method: relaxation plus both inertial terms.
    Game,
    /// Double inertial extragradient method (no relaxation).
    Diem,
    /// Inertial relaxed extragradient method (single inertial term).
    Irem,
    /// Relaxed extragradient method (no inertia).
    Rem,
    /// Plain extragradient method.
    Em,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Game,
        Variant::Diem,
        Variant::Irem,
        Variant::Rem,
        Variant::Em,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Game => "GAME",
            Variant::Diem => "DIEM",
            Variant::Irem => "IREM",
            Variant::Rem => "REM",
            Variant::Em => "EM",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = SolverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "GAME" => Ok(Variant::Game),
            "DIEM" => Ok(Variant::Diem),
            "IREM" => Ok(Variant::Irem),
            "REM" => Ok(Variant::Rem),
            "EM" => Ok(Variant::Em),
            other => Err(SolverError::UnknownVariant(other.to_string())),
        }
    }
}

/// Benchmark parameter presets: (rho, alpha, beta) per variant with
/// mu = 0.4, lambda0 = 0.01 and zeta_n = 1/(10n+9) shared by all.
pub fn variant_preset(variant: Variant) -> SolverConfig {
    let (rho, alpha, beta) = match variant {
        Variant::Game => (0.6, 0.5, 0.2),
        Variant::Diem => (1.0, 0.5, 0.2),
        Variant::Irem => (0.6, 0.0, 0.2),
        Variant::Rem => (0.6, 0.0, 0.0),
        Variant::Em => (1.0, 0.0, 0.0),
    };
    SolverConfig { rho, alpha, beta, ..SolverConfig::default() }
}

/// One step of the iteration: current and previous iterates, the stepsize,
/// and the iteration index (starting at 1).
#[derive(Clone, Debug)]
pub struct IterateState {
    pub s_curr: Array1<f64>,
    pub s_prev: Array1<f64>,
    pub lambda: f64,
    pub n: usize,
}

impl IterateState {
    pub fn new(s_curr: Array1<f64>, s_prev: Array1<f64>, lambda: f64) -> Result<Self, SolverError> {
        if s_curr.len() != s_prev.len() {
            return Err(SolverError::DimensionMismatch {
                expected: s_curr.len(),
                got: s_prev.len(),
            });
        }
        if !(lambda > 0.0) {
            return Err(SolverError::InvalidConfig("stepsize must be positive"));
        }
        Ok(Self { s_curr, s_prev, lambda, n: 1 })
    }
}

/// Why a solve stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    /// Residual fell below the tolerance.
    Converged,
    /// Iteration cap reached.
    MaxIterations,
    /// Iterate norm exceeded the divergence bound or became non-finite.
    Diverged,
    /// Residual hit exactly zero: the predictor point solves the problem.
    EarlyExact,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Termination::Converged => "converged",
            Termination::MaxIterations => "max-iterations",
            Termination::Diverged => "diverged",
            Termination::EarlyExact => "early-exact",
        };
        f.write_str(s)
    }
}

/// Outcome of a solve with the full per-iteration trace.
#[derive(Clone, Debug)]
pub struct SolveResult {
    pub solution: Array1<f64>,
    pub iterations: usize,
    /// `||b_n - c_n||` per iteration.
    pub residuals: Vec<f64>,
    /// `lambda_n` used at each iteration.
    pub stepsizes: Vec<f64>,
    pub elapsed: f64,
    pub termination: Termination,
}

impl SolveResult {
    pub fn converged(&self) -> bool {
        matches!(self.termination, Termination::Converged | Termination::EarlyExact)
    }

    pub fn final_residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(f64::NAN)
    }

    /// Writes the trace as CSV with columns `iter,residual,lambda`.
    pub fn write_trace(&self, w: &mut impl Write) -> io::Result<()> {
        writeln!(w, "iter,residual,lambda")?;
        for (i, (r, l)) in self.residuals.iter().zip(&self.stepsizes).enumerate() {
            writeln!(w, "{},{:e},{:e}", i + 1, r, l)?;
        }
        Ok(())
    }
}

/// Stepsize rule: the curvature ratio `mu * ||b - c|| / ||F(b) - F(c)||`
/// capped by `lambda_n + zeta_n`, falling back to the additive growth when
/// `F(b)` and `F(c)` coincide to rounding.
pub fn update_stepsize(
    lambda_n: f64,
    b: &Array1<f64>,
    c: &Array1<f64>,
    fb: &Array1<f64>,
    fc: &Array1<f64>,
    mu: f64,
    zeta_n: f64,
) -> f64 {
    let grown = lambda_n + zeta_n;
    let fdiff = fb - fc;
    let fdiff_norm = fdiff.dot(&fdiff).sqrt();
    let fb_norm = fb.dot(fb).sqrt();
    if fdiff_norm > EXACTNESS_THRESHOLD * fb_norm.max(1.0) {
        let diff = b - c;
        let ratio = mu * diff.dot(&diff).sqrt() / fdiff_norm;
        ratio.min(grown)
    } else {
        grown
    }
}

/// One iteration of the method:
///
/// ```text
/// a = s + alpha (s - s_prev)
/// b = s + beta  (s - s_prev)
/// c = P(b - lambda F(b))
/// s_next = (1 - rho) a + rho (c - lambda (F(c) - F(b)))
/// ```
///
/// followed by the stepsize update. Returns the advanced state and the
/// residual `||b - c||`. Costs exactly two operator evaluations and one
/// projection.
pub fn game_iteration(
    state: &IterateState,
    op: &dyn MonotoneOperator,
    set: &dyn FeasibleSet,
    cfg: &SolverConfig,
) -> Result<(IterateState, f64), SolverError> {
    if state.s_curr.len() != op.dim() {
        return Err(SolverError::DimensionMismatch {
            expected: op.dim(),
            got: state.s_curr.len(),
        });
    }
    let alpha = cfg.alpha_at(state.n);
    let beta = cfg.beta_at(state.n);
    let lambda = state.lambda;

    let momentum = &state.s_curr - &state.s_prev;
    let a = &state.s_curr + &(&momentum * alpha);
    let b = &state.s_curr + &(&momentum * beta);
    let fb = op.apply(&b)?;
    let c = set.project(&(&b - &(&fb * lambda)), lambda)?;
    let fc = op.apply(&c)?;
    let extragradient = &c - &(&(&fc - &fb) * lambda);
    let s_next = if cfg.rho == 1.0 {
        extragradient
    } else {
        &a * (1.0 - cfg.rho) + &(&extragradient * cfg.rho)
    };
    if !s_next.iter().all(|v| v.is_finite()) {
        return Err(SolverError::NonFiniteIterate { iteration: state.n });
    }

    let residual_vec = &b - &c;
    let residual = residual_vec.dot(&residual_vec).sqrt();
    let lambda_next =
        update_stepsize(lambda, &b, &c, &fb, &fc, cfg.mu, cfg.zeta.value(state.n));

    let next = IterateState {
        s_prev: state.s_curr.clone(),
        s_curr: s_next,
        lambda: lambda_next,
        n: state.n + 1,
    };
    Ok((next, residual))
}

/// Runs the iteration from `x0` (and `x_minus1`, defaulting to `x0`) until the
/// residual drops below the tolerance, hits exactly zero, the iteration cap is
/// reached, or the iterate diverges. A non-finite iterate is reported as
/// divergence, not an error.
pub fn solve(
    op: &dyn MonotoneOperator,
    set: &dyn FeasibleSet,
    x0: &Array1<f64>,
    x_minus1: Option<&Array1<f64>>,
    cfg: &SolverConfig,
) -> Result<SolveResult, SolverError> {
    cfg.validate()?;
    if !x0.iter().all(|v| v.is_finite()) {
        return Err(SolverError::InvalidConfig("starting point must be finite"));
    }
    let s_prev = x_minus1.cloned().unwrap_or_else(|| x0.clone());
    let mut state = IterateState::new(x0.clone(), s_prev, cfg.lambda0)?;

    let start = Instant::now();
    let mut residuals = Vec::new();
    let mut stepsizes = Vec::new();
    let (solution, termination) = loop {
        if state.n > cfg.max_iter {
            break (state.s_curr, Termination::MaxIterations);
        }
        if state.s_curr.dot(&state.s_curr).sqrt() > cfg.divergence_bound {
            break (state.s_curr, Termination::Diverged);
        }
        match game_iteration(&state, op, set, cfg) {
            Ok((next, residual)) => {
                residuals.push(residual);
                stepsizes.push(state.lambda);
                if residual == 0.0 {
                    break (next.s_curr, Termination::EarlyExact);
                }
                if residual < cfg.tol {
                    break (next.s_curr, Termination::Converged);
                }
                state = next;
            }
            Err(SolverError::NonFiniteIterate { .. }) => {
                break (state.s_curr, Termination::Diverged);
            }
            Err(e) => return Err(e),
        }
    };

    Ok(SolveResult {
        solution,
        iterations: residuals.len(),
        residuals,
        stepsizes,
        elapsed: start.elapsed().as_secs_f64(),
        termination,
    })
}
