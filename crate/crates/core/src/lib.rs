//! Conformal counterexample laboratory for `f ↦ ∫ det ∇f`.
//!
//! A sequence of Möbius maps of the unit ball converges weakly to zero in
//! W^{1,d} while the integral of its Jacobian determinant tends to the
//! volume of the ball. This crate evaluates the maps and their derivatives in
//! closed form, integrates the relevant functionals with adaptive cubature
//! graded toward the boundary concentration point, and sweeps the sequence
//! index to extrapolate limits.

// Guards are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod convergence;
pub mod error;
pub mod functionals;
pub mod harness;
pub mod linalg;
pub mod maps;
pub mod quadrature;

pub use error::{Error, Result};
pub use linalg::{conformality_defect, Jacobian, Point};
pub use maps::{MapFamily, Variant};
