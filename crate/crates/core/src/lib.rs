//! Radial solutions of the Lane–Emden system for the p- and q-Laplacian on a ball:
//! parameter algebra, existence/nonexistence classification, shooting,
//! the integral operator and energy checks.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifier;
pub mod cli;
pub mod energy;
pub mod error;
pub mod integrator;
pub mod io;
pub mod operator;
pub mod params;
pub mod quadrature;
pub mod shooting;

pub use classifier::{classify, Classification, ConditionId, ConditionResult, Verdict};
pub use error::{Error, Result};
pub use params::{DerivedExponents, ProblemParams};
pub use shooting::{
    integrate_to_first_zero, shoot_scan, solve_dirichlet, DirichletSolution, Outcome, ShootingOptions, State,
    Trajectory,
};
