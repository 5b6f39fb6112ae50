//! Scalar special functions not covered by `statrs`.

pub use statrs::function::gamma::{digamma, ln_gamma};

/// Trigamma function psi'(x) for x > 0.
pub fn trigamma(x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    if x < 1e-6 {
        return 1.0 / (x * x) + std::f64::consts::PI.powi(2) / 6.0;
    }
    let mut acc = 0.0;
    let mut z = x;
    while z < 8.0 {
        acc += 1.0 / (z * z);
        z += 1.0;
    }
    // asymptotic series in 1/z with Bernoulli coefficients
    let iz = 1.0 / z;
    let iz2 = iz * iz;
    let tail = iz
        + 0.5 * iz2
        + iz * iz2
            * (1.0 / 6.0
                + iz2 * (-1.0 / 30.0 + iz2 * (1.0 / 42.0 + iz2 * (-1.0 / 30.0 + iz2 * (5.0 / 66.0 + iz2 * (-691.0 / 2730.0))))));
    acc + tail
}

/// Standard normal cumulative distribution function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * statrs::function::erf::erfc_inv(2.0 * p)
}
