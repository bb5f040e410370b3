// Validation uses `!(x > 0.0)` so NaN parameters are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::type_complexity)]

//! Self-adaptive accelerated extragradient solvers for monotone variational
//! inequalities, applied to training L1-regularized extreme learning machines
//! for regression, with a FISTA baseline, evaluation metrics, dataset
//! ingestion and a benchmark harness.
//!
//! The solver combines double inertial extrapolation, a relaxation parameter
//! and a stepsize adapted from local curvature at every iteration, so it needs
//! no prior Lipschitz estimate. Zeroing individual parameters recovers the
//! classical inertial/relaxed/plain extragradient variants, which the
//! benchmark harness compares head to head.
//!
//! ```
//! use gamelm::operators::{make_random_vi, XiMode};
//! use gamelm::solver::{solve, variant_preset, Variant};
//! use ndarray::Array1;
//!
//! let (op, set) = make_random_vi(10, 5, XiMode::Zero, 42);
//! let x0 = Array1::from_elem(10, 0.5);
//! let result = solve(&op, &set, &x0, None, &variant_preset(Variant::Game)).unwrap();
//! assert!(result.converged());
//! ```

pub mod bench;
pub mod data;
pub mod elm;
pub mod fista;
pub mod metrics;
pub mod operators;
pub mod sets;
pub mod solver;

pub use solver::{solve, variant_preset, SolveResult, SolverConfig, Termination, Variant};
