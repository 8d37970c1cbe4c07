//! Sparse recovery under regularizer-dependent notions of sparsity.
//!
//! Compound-Laplacian regularizers are built from mixing laws and minimized
//! over `A c = y` by generalized iteratively reweighted least squares
//! (G-IRLS). [`sparsity`] measures `(K, R, ε)`-sparsity of a vector and
//! [`nsp`] falsifies weak null space properties on the kernel of `A`.
//! Brute-force oracles for small instances live next to the fast paths they
//! check.

pub mod distributions;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod nsp;
pub mod quadrature;
pub mod regularizers;
pub mod solvers;
pub mod sparsity;

pub use error::{Error, Result};
