//! Two-counter machines compiled into fluid Skorokhod problems, with an exact
//! event-driven simulator for the reflected piecewise-linear paths and
//! checkers that tie machine runs to simulated trajectories.
//!
//! Every number is an exact [`Rational`](exact_num::Rational); no comparison
//! anywhere uses a tolerance.

pub mod corpus;
pub mod counter_machine;
pub mod error;
pub mod exact_num;
pub mod formats;
pub mod fluid_sim;
pub mod matrix_props;
pub mod reduction;
pub mod verify;

pub use error::{Error, Result};
