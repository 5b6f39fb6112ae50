//! Subject data, parameters and the conditionally Gaussian hierarchy
//!
//! ```text
//! Y | U, W, V_z  ~ N(x beta + d U + A W, sigma^2 diag(V_z))
//! U | V_u        ~ N(-mu_u + mu_u V_u, V_u Sigma)
//! K W | V_w      ~ N(-h mu_w + mu_w V_w, diag(V_w))
//! ```

mod data;
mod latent;
mod likelihood;
mod params;
mod simulate;

pub use data::{NoiseScope, Subject, SubjectRecord};
pub use latent::LatentState;
pub use likelihood::{complete_loglik, marginal_covariance, marginal_loglik_gaussian, residuals, LoglikTerms};
pub use params::{Component, ModelParams, ProcessParams};
pub use simulate::{simulate, subject_rng};
