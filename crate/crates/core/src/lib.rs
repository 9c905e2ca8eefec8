//! Phase-field simulation of vesicle growth and shrinkage driven by osmotic
//! pressure: a coupled Allen-Cahn / Cahn-Hilliard system discretised with a
//! semi-implicit cell-centered finite-difference scheme and solved by a
//! nonlinear FAS multigrid method.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod grid;
pub mod model;
pub mod multigrid;
pub mod scheme;
pub mod sim;
pub mod smoother;

pub use error::{Error, Result};
