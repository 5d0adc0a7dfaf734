//! Numerical laboratory for the degenerate fractional Dirichlet problem
//! `|Du|^gamma Delta^s u = f` on an interval, with exterior data on the
//! whole line.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod fast;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod operator;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{gradient_central, sample_function, Bias, ExteriorData, GradientScheme, Grid1D, GridFunction, InteriorFill};
pub use operator::{
    apply_frac_laplacian, apply_frac_laplacian_fast, apply_pucci, build_operator, c_norm, tail_integral,
    Discretization, OperatorSpec, PucciSign, TailSpec, TailValue,
};
pub use solver::{
    extremal_solution, residual_degenerate, solve_linear_dirichlet, solve_regularized, vanishing_viscosity,
    GradientKind, Method, Side, Solution, SolutionKind, SolverConfig,
};
