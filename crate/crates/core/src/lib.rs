//! Self-similar corner solutions of the Muskat slope equation.
//!
//! Profiles `k(y)` are sought in the compactified variable `z = arctan y`,
//! discretized by nodal values on a uniform grid with a degree-4 spline
//! interpolant, and computed by Levenberg-Marquardt on the collocated
//! residual. Continuation in the asymptotic slope `s` produces a branch of
//! profiles which the diagnostics compare against the arctan profile.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod cli;
pub mod continuation;
pub mod diagnostics;
pub mod error;
pub mod lm;
pub mod quadrature;
pub mod residual;
pub mod spline;

pub use error::{Error, Result};
