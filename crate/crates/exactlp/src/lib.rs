//! Linear programming in equality standard form with certificates.
//!
//! [`solve`] returns an optimal primal/dual pair, a Farkas vector, or an
//! unbounded ray. Every outcome can be re-checked with the `verify_*`
//! functions by direct substitution.

pub mod scalar;
pub mod simplex;

pub use scalar::{Scalar, Tol, EPS};
pub use simplex::{
    solve, verify_farkas, verify_optimal, verify_ray, LinearProgram, LpError, LpOutcome, Optimum,
};
