//! Variable-order Caputo derivatives at second order, fast.
//!
//! The crate provides
//!
//! * [`order`]: the variable order `α(t)`, the uniform time mesh and the
//!   per-step superconvergence offsets `σ_k`;
//! * [`direct`]: the L2-1σ coefficients `g_l^(k)` and the O(k) evaluator,
//!   plus an adaptive-quadrature Caputo oracle;
//! * [`esa`]: the exponential-sum approximation of the power kernel;
//! * [`fast`]: the FL2-1σ evaluator built on a per-exponential history bank;
//! * [`grid`]: compact fourth-order operators on tensor-product meshes and a
//!   sine-transform solver;
//! * [`solver`]: time stepping for the sub-diffusion problem with either
//!   evaluator.

// `!(x > 0.0)` is how NaN gets rejected; index loops walk parallel arrays.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod direct;
pub mod error;
pub mod esa;
pub mod fast;
pub mod grid;
pub mod order;
pub mod quadrature;
pub mod solver;
pub mod special;

pub use direct::{caputo_oracle, direct_sweep, evaluate_direct, g_row, CoefficientRowG};
pub use error::{Error, Result};
pub use esa::{CertifyReport, EsaParams, EsaQuadrature, LadderRule};
pub use fast::{
    check_rho_gap, check_rho_properties, coefficient_epsilon_bound, default_epsilon, evaluate_fast,
    fast_sweep, rho_row, step_operator, CoefficientRowRho, HistoryBank, PanelIntegrals, RhoReport,
    RhoViolation, StepOperator,
};
pub use grid::{Field, Norms, SineSolver, SpatialMesh};
pub use order::{build_schedule, solve_sigma, OrderFunction, SigmaSchedule, TemporalMesh};
pub use solver::{
    example1_2d, example2_3d, run, run_scalar, EpsilonPolicy, ProblemSpec, RunReport,
    ScalarProblem, Scheme, SolverConfig,
};
