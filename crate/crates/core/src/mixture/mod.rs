//! The GIG law and the normal variance-mean mixture families built on it.

pub mod gig;
pub mod nvm;

pub use gig::{gig_logpdf, gig_moment, gig_sample, GigKind, GigParams, Moment};
pub use nvm::{constrain_unit, mixing_law, nvm_logpdf_1d, nvm_sample, Constraint, Family, NvmSpec};
