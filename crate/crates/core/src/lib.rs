//! Interacting indefinite-metric scalar field on d-dimensional de Sitter
//! space: mode sums, smeared kernels, truncated n-point functions, Gram
//! matrices, spectral support certificates and dispersion scans.

pub mod cluster;
pub mod dispersion;
pub mod error;
pub mod fixtures;
pub mod geometry;
pub mod gns;
pub mod jet;
pub mod kernels;
pub mod modes;
pub mod quadrature;
pub mod specfun;
pub mod stationary;
pub mod testfn;
pub mod wightman;

pub use error::{Error, Result};
