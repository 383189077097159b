//! Structured-grid simulator for the non-isothermal Allen-Cahn / heat system.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod exec;
pub mod grid;
pub mod io;
pub mod linsolve;
pub mod model;
pub mod reference;
pub mod run;
pub mod stepper;
pub mod verify;

pub use error::{Error, Result};
