//! Verification engine for the inverse problem of the calculus of
//! variations.
//!
//! Given a semispray on the slit tangent bundle and a candidate
//! semi-basic 1-form or Lagrangian, this crate builds the induced
//! geometric structures (nonlinear connection, projectors, Jacobi
//! endomorphism, curvature, dynamical covariant derivative) by exact
//! symbolic differentiation and decides the Helmholtz conditions,
//! homogeneity-based reductions, projective and Finsler metrizability,
//! and rank-based obstructions, all evaluated at deterministically
//! seeded sample points.

pub mod calculus;
pub mod catalog;
pub mod error;
pub mod expr;
pub mod geom;
pub mod helmholtz;
pub mod report;
pub mod sample;

#[cfg(test)]
pub(crate) mod testutil;

pub use expr::{parse_expr, PhasePoint, ScalarField};
pub use sample::{SampleBox, SplitMix64, DEFAULT_SEED};
