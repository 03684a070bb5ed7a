//! Interpolation of vector-valued functions with separable matrix-valued
//! kernels, power-function error bounds, and structural analysis of kernel
//! decompositions.

pub mod decomposition;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod interpolation;
pub mod kernels;
pub mod linalg;
pub mod power;
pub mod sampling;
pub mod tuning;

pub use error::{Error, Result};
