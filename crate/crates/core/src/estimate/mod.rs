//! Stochastic-gradient estimation, sub-sampling and standard errors.

mod fit;
mod louis;
mod pvalue;
mod schedule;
mod subsample;

pub use fit::{apply_switching, batch_means_se, fit, FitConfig, FitResult};
pub use louis::{complete_hessian, louis_observed_fim, standard_errors, LouisConfig, LouisResult};
pub use pvalue::{p_bounds, wald_p};
pub use schedule::StepSchedule;
pub use subsample::{form_groups, matrix_rank, Groups, Selection, Strategy, SubsamplePlan};
