//! Biexciton-impurity scattering on a periodic one-dimensional lattice.

// `!(x > 0.0)` is used on purpose so that NaN fails parameter checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod exciton;
pub mod io;
pub mod lattice;
pub mod exact_diag;
pub mod linalg;
pub mod projected;
pub mod roots;
pub mod scattering;

pub use error::{Error, Result};
pub use lattice::{Method, ModelParams};
