//! Special functions, quadrature and small linear-algebra building blocks.

pub mod banded;
pub mod bessel;
pub mod linalg;
pub mod quad;
pub mod special;

pub use bessel::{bessel_k, log_bessel_k};
pub use linalg::{duplication_matrix, spd_factor, vech, SpdMatrix};
