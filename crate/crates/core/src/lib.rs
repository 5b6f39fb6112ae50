//! Linear mixed-effects models for longitudinal data in which the random
//! effects, a continuous-time stochastic process and the measurement noise may
//! each follow a Gaussian or a normal variance-mean mixture law.

pub mod error;
pub mod estimate;
pub mod gibbs;
pub mod io;
pub mod kernels;
pub mod mixture;
pub mod model;
pub mod operator;
pub mod predict;
pub mod score;
pub mod tv;

pub use error::{Error, Result};
