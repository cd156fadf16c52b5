//! Kernel interpolation with the reproducing kernel of periodic Sobolev
//! spaces on the d-torus, on full tensor grids and on optimized sparse
//! grids assembled by the combination technique.
//!
//! Grid convention used throughout: node `k` of level `j` sits at
//! `k * 2^-j`, `k = 0 .. 2^j - 1`. Multi-dimensional arrays are row-major
//! with the first dimension varying slowest.

pub mod error;
mod fourier;
pub mod kernel;
pub mod norms;
pub mod sparse_grid;
pub mod special;
pub mod study;
pub mod targets;
pub mod tensor;

pub use error::{Error, Result};
