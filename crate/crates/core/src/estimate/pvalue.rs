use crate::kernels::special::normal_cdf;

/// Two-sided normal p-value for |z|.
pub fn wald_p(z: f64) -> f64 {
    2.0 * normal_cdf(-z.abs())
}

/// Bounds on the Wald p-value of one estimate allowing for Monte-Carlo error
/// of two standard errors in both the estimate and its standard error.
pub fn p_bounds(theta: f64, se: f64, mc_se: f64, mc_se_of_se: f64) -> (f64, f64) {
    let a = theta.abs();
    let z_small = (a - 2.0 * mc_se).max(0.0) / (se + 2.0 * mc_se_of_se);
    let denom = se - 2.0 * mc_se_of_se;
    let z_large = if denom > 0.0 { (a + 2.0 * mc_se) / denom } else { f64::INFINITY };
    (wald_p(z_large), wald_p(z_small))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_corners() {
        let (lo, hi) = p_bounds(2.0, 1.0, 0.25, 0.0);
        assert!((lo - 0.012_419_330_651_552_318).abs() < 1e-10);
        assert!((hi - 0.133_614_402_537_715_95).abs() < 1e-10);
        let (lo, hi) = p_bounds(2.0, 1.0, 0.0, 0.0);
        assert_eq!(lo, hi);
    }
}
