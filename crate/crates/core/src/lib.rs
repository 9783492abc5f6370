//! Heterogeneity statistics for meta-analysis.
//!
//! The crate computes Cochran's Q and the I² estimators for a set of studies,
//! the exact expectation of the zero-truncated estimator Î₀² under homogeneity
//! (closed form) and heterogeneity (quadrature over the noncentral chi-square
//! law of Q), test-based 95% confidence intervals for I², and a seeded Monte
//! Carlo simulator that checks all of the above empirically.
//!
//! ```
//! use i2bias_core::bias::expectation_closed_form;
//!
//! // Seven studies, no true heterogeneity: Î₀² averages about 0.124.
//! let e = expectation_closed_form(6).unwrap();
//! assert!((e - 0.1245).abs() < 5e-4);
//! ```

// `!(x >= 0.0)` style guards reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bias;
pub mod ci;
mod error;
pub mod meta;
pub mod quad;
pub mod sim;
pub mod specfun;

pub use error::{Error, Result};
