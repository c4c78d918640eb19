//! Numerical toolkit for sets of minimal logarithmic capacity in the complex plane.
//!
//! Given an algebraic function built from groups of branch points (sums and
//! fractional powers of products `[(1 - z_1/z)...(1 - z_m/z)]^(1/n)`, anchored
//! at infinity), this crate computes the system of analytic arcs of smallest
//! logarithmic capacity whose complement keeps the function single-valued:
//!
//! 1. [`algebra`] expands the function at infinity and reports its branch-point
//!    groups and the connectivity each admissible cut system must realize;
//! 2. [`qdiff`] builds the monic rational quadratic differential whose critical
//!    trajectories carry the arcs, and traces those trajectories;
//! 3. [`solver`] finds the free zeros of the differential so that all arc
//!    periods are purely imaginary and the required connectivity appears;
//! 4. [`capacity`] computes discretized equilibrium measures, capacity, and the
//!    Green function, and certifies the result (equal one-sided normal
//!    derivatives, local minimality under perturbations, geometric bounds);
//! 5. [`pade`] computes diagonal Pade approximants at configurable precision
//!    and measures how their poles cluster on the computed set.
//!
//! [`files`] and [`svg`] define the JSON problem/result formats and the figure
//! export used by the `capmin` command-line tool.

pub mod algebra;
pub mod capacity;
pub mod examples;
pub mod files;
pub mod geom;
pub mod hp;
pub mod pade;
pub mod qdiff;
pub mod quad;
pub mod roots;
pub mod solver;
pub mod svg;

use num_complex::Complex64;
use thiserror::Error;

/// Errors produced by every fallible operation in the crate.
///
/// The variants map onto the CLI exit-code contract: invalid input (1),
/// numerical failure (2), check failure (3); internal invariant violations
/// are reported as numerical failures (2) since they indicate a computation
/// that cannot be trusted.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    /// Exit code for the CLI: 0 is success, so errors start at 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) => 1,
            Error::Numerical(_) => 2,
            Error::CheckFailed(_) => 3,
            Error::Internal(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Characteristic length of a problem: the largest branch-point modulus.
///
/// Tolerances, anchor radii, launch offsets and the default Pade pole
/// classification radius all scale with this value. Clamped away from zero so
/// that degenerate inputs still get usable absolute tolerances.
pub fn problem_scale(points: &[Complex64]) -> f64 {
    points
        .iter()
        .map(|z| z.norm())
        .fold(1e-8_f64, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scale_is_largest_modulus() {
        let pts = [
            Complex64::new(1.0, 3.0),
            Complex64::new(-4.0, 2.0),
            Complex64::new(0.0, 2.0),
        ];
        assert_eq!(problem_scale(&pts), (20.0_f64).sqrt());
    }

    #[test]
    fn scale_clamps_degenerate_input() {
        assert!(problem_scale(&[]) > 0.0);
        assert!(problem_scale(&[Complex64::new(0.0, 0.0)]) > 0.0);
    }

    #[test]
    fn exit_codes_follow_contract() {
        assert_eq!(Error::InvalidInput("x".into()).exit_code(), 1);
        assert_eq!(Error::Numerical("x".into()).exit_code(), 2);
        assert_eq!(Error::CheckFailed("x".into()).exit_code(), 3);
        assert_eq!(Error::Internal("x".into()).exit_code(), 2);
    }
}
