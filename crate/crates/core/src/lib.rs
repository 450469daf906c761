//! Bayesian Lasso regression for the conditional bulk and tail of a
//! positive, possibly heavy-tailed response, built on the extended
//! generalized Pareto distribution (EGPD).

pub mod egpd;
pub mod error;
pub mod model;
pub mod cli;
pub mod diagnostics;
pub mod sampler;
pub mod simulation;

pub use error::{Error, Result};
