//! Exact rational scalars, dense rational linear algebra, and exact LP
//! feasibility. Nothing in this crate ever rounds.

mod linsolve;
mod matrix;
mod rational;
mod simplex;

pub use linsolve::{solve_linear_system, LinearSolution};
pub use matrix::{add, axpy, fmt_vector, scale, RationalMatrix, RationalVector};
pub use rational::{frac, int, Rational};
pub use simplex::{lp_nonneg_feasible, nonneg_solution, Feasibility};
