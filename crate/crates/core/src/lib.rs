//! Monte Carlo CVA engine for shifted square-root default intensities:
//! CIR++, JCIR++ (intensity jumps) and TC-CIR++ (CIR on a compound-Poisson
//! clock), with wrong-way-risk estimators and an adaptive control variate.

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod config;
pub mod curves;
pub mod cva;
pub mod error;
pub mod experiment;
pub mod exposure;
pub mod paths;
pub mod quad;
pub mod rng;
pub mod stats;
pub mod validation;

pub use error::{Error, Result};
