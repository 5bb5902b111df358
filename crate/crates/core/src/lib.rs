//! Half-space Wiener-Hopf machinery for homogeneous pseudodifferential
//! symbols satisfying a principal transmission condition.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dirichlet;
pub mod error;
pub mod fourier;
pub mod halfline;
pub mod halfspace_ops;
pub mod identities;
pub mod oracles;
pub mod special;
pub mod symbols;
pub mod wiener_hopf;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
