//! Command-line front end: study CSV ingestion, heterogeneity reports,
//! bias-curve figures, Monte Carlo runs and I² intervals.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod error;
pub mod figure;
pub mod input;

pub use error::{CliError, CliResult};
