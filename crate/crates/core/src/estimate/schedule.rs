use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Step sizes alpha_n = alpha0 / (1 + n / n0)^gamma.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    pub alpha0: f64,
    pub n0: f64,
    pub gamma: f64,
    pub burn_in: usize,
    pub total_iters: usize,
}

impl StepSchedule {
    pub fn new(alpha0: f64, n0: f64, gamma: f64, burn_in: usize, total_iters: usize) -> Result<Self> {
        let s = StepSchedule {
            alpha0,
            n0,
            gamma,
            burn_in,
            total_iters,
        };
        s.validate()?;
        Ok(s)
    }

    /// alpha0 = 1, n0 = iters/10, gamma = 0.6, burn-in = iters/2.
    pub fn with_defaults(total_iters: usize) -> Result<Self> {
        Self::new(1.0, (total_iters as f64 / 10.0).max(1.0), 0.6, total_iters / 2, total_iters)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0 > 0.0 && self.alpha0.is_finite()) {
            return Err(Error::Config(format!("alpha0 must be positive, got {}", self.alpha0)));
        }
        if !(self.n0 > 0.0 && self.n0.is_finite()) {
            return Err(Error::Config(format!("n0 must be positive, got {}", self.n0)));
        }
        // sum alpha_n diverges iff gamma <= 1, sum alpha_n^2 converges iff gamma > 1/2
        if !(self.gamma > 0.5 && self.gamma <= 1.0) {
            return Err(Error::Config(format!("gamma must lie in (0.5, 1], got {}", self.gamma)));
        }
        if self.total_iters == 0 || self.burn_in >= self.total_iters {
            return Err(Error::Config(format!(
                "need 0 <= burn_in < iters, got burn_in {} and iters {}",
                self.burn_in, self.total_iters
            )));
        }
        Ok(())
    }

    pub fn alpha(&self, n: usize) -> f64 {
        self.alpha0 / (1.0 + n as f64 / self.n0).powf(self.gamma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule() {
        let s = StepSchedule::with_defaults(1000).unwrap();
        assert_eq!(s.alpha(0), 1.0);
        assert!((s.alpha(100) - 2f64.powf(-0.6)).abs() < 1e-15);
        assert!(StepSchedule::new(1.0, 10.0, 0.5, 0, 10).is_err());
        assert!(StepSchedule::new(1.0, 10.0, 1.0, 10, 10).is_err());
    }
}
