//! Numerical solver for the fractionally damped wave equation
//! `∂t²u − Δu + a_γ ∂t^{γ+1}u = f` on intervals and rectangles.
//!
//! Space is discretised with P1 finite elements, time with leapfrog for the
//! wave operator and BDF2 convolution quadrature for the fractional damping,
//! optionally with startup correction weights.

// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod cli;
pub mod cq;
pub mod error;
pub mod fem;
pub mod fraccalc;
pub mod harness;
pub mod oracle;
pub mod quad;
pub mod solver;

pub use error::{Error, Result};
