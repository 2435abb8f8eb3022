//! Proximal quasi-Newton solvers for `min_x 1/2 ||Ax - b||^2 + lambda ||x||_1`
//! with "identity minus rank one" metrics `H = sigma I - u u^T`.
//!
//! The scaled proximal step under such a metric reduces to a scalar
//! piecewise-linear root-finding problem, solved in [`prox`]. [`metrics`]
//! builds `H` each iteration, [`solver`] runs the main loop, [`fimro`] is the
//! accelerated variant and [`baselines`] holds ISTA, FISTA and CG. All
//! operator applications go through [`LinearOperator`], which counts them.

pub mod baselines;
pub mod bench;
pub mod error;
pub mod fimro;
pub mod invariants;
pub mod linops;
pub mod metrics;
pub mod problem;
pub mod problems;
pub mod prox;
pub mod scalar;
pub mod solver;
pub mod trace;
pub mod vecops;

pub use baselines::{fista, ista, linear_cg, reference_solution, FirstOrderConfig};
pub use bench::{bench, run_method, BenchConfig, BenchRow, Method};
pub use error::{Error, Result};
pub use fimro::{fimro, FimroConfig};
pub use linops::{operator_norm, CallCounts, LinearOperator, MatVec, NormEstimate};
pub use problem::{subgradient_norm, BpdnProblem, Metadata, Param};
pub use prox::{prox_imro, shrink, ProxMethod, ProxResult, RankOneMetric};
pub use scalar::Scalar;
pub use solver::{solve, solve_observed, FirstStep, SolverConfig, Variant};
pub use trace::{SolveOutput, SolverTrace, Status, StopRule, TraceRecord};

/// Double-precision aliases.
pub type Operator = LinearOperator<f64>;
pub type Problem = BpdnProblem<f64>;
pub type Metric = RankOneMetric<f64>;
pub type Trace = SolverTrace<f64>;
