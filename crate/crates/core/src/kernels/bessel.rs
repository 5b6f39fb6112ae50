//! Modified Bessel function of the third kind, K_nu(x), for real order.
//!
//! The fractional part mu of the order (|mu| <= 1/2) is handled by Temme's
//! series for x < 2 and by Steed's continued fraction otherwise. The integer
//! part is reached by forward recurrence carried out on the ratio
//! K_{mu+j+1}/K_{mu+j}, so the result is accumulated in log space and neither
//! overflows for large orders nor underflows for large arguments.

use crate::error::{Error, Result};
use std::f64::consts::PI;

const G1_DAT: [f64; 14] = [
    -1.145_164_083_662_683,
    0.006_360_853_113_470_843,
    0.001_862_451_930_072_068_5,
    0.000_152_833_085_873_453_5,
    0.000_017_017_464_011_802_04,
    -6.459_750_292_334_725e-7,
    -5.181_984_843_251_938e-8,
    4.518_909_289_485_818e-10,
    3.243_322_737_102_087e-11,
    6.830_943_402_494_752e-13,
    2.835_350_275_517_21e-14,
    -7.988_390_576_932_359e-16,
    -3.372_667_730_077_195e-17,
    -3.658_633_480_921_052e-20,
];

const G2_DAT: [f64; 15] = [
    1.882_645_524_949_671_8,
    -0.077_490_658_396_167_52,
    -0.018_256_714_847_324_93,
    0.000_633_803_020_907_489_6,
    0.000_076_229_054_350_872_9,
    -9.550_164_756_172_044e-7,
    -8.892_726_810_788_635e-8,
    -1.952_133_477_231_961_4e-9,
    -9.400_305_273_588_516e-11,
    4.687_513_384_953_239e-12,
    2.265_853_574_692_576e-13,
    -1.172_550_969_848_801_5e-15,
    -7.044_133_820_024_522e-17,
    -2.437_787_831_010_769_4e-18,
    -7.522_524_321_825_39e-20,
];

const MAX_ORDER: f64 = 1.0e5;

fn cheb_eval(c: &[f64], y: f64) -> f64 {
    let y2 = 2.0 * y;
    let mut d = 0.0;
    let mut dd = 0.0;
    for &cj in c.iter().skip(1).rev() {
        let tmp = d;
        d = y2 * d - dd + cj;
        dd = tmp;
    }
    y * d - dd + 0.5 * c[0]
}

/// Returns (1/Gamma(1+mu), 1/Gamma(1-mu), gamma1(mu), gamma2(mu)) for |mu| <= 1/2.
fn temme_gamma(mu: f64) -> (f64, f64, f64, f64) {
    let y = 4.0 * mu.abs() - 1.0;
    let g1 = cheb_eval(&G1_DAT, y);
    let g2 = cheb_eval(&G2_DAT, y);
    let inv_g_1mmu = g2 + mu * g1;
    let inv_g_1pmu = g2 - mu * g1;
    (inv_g_1pmu, inv_g_1mmu, g1, g2)
}

/// ln K_mu(x) and ln K_{mu+1}(x) by Temme's series, |mu| <= 1/2, 0 < x < 2.
fn log_k_temme(mu: f64, x: f64) -> Result<(f64, f64)> {
    let half_x = 0.5 * x;
    let ln_half_x = half_x.ln();
    let half_x_mu = (mu * ln_half_x).exp();
    let pi_mu = PI * mu;
    let sigma = -mu * ln_half_x;
    let sinrat = if pi_mu.abs() < f64::EPSILON {
        1.0
    } else {
        pi_mu / pi_mu.sin()
    };
    let sinhrat = if sigma.abs() < f64::EPSILON {
        1.0
    } else {
        sigma.sinh() / sigma
    };
    let (inv_g_1pmu, inv_g_1mmu, g1, g2) = temme_gamma(mu);

    let mut fk = sinrat * (sigma.cosh() * g1 - sinhrat * ln_half_x * g2);
    let mut pk = 0.5 / half_x_mu / inv_g_1pmu;
    let mut qk = 0.5 * half_x_mu / inv_g_1mmu;
    let mut ck = 1.0;
    let mut sum0 = fk;
    let mut sum1 = pk;
    let mut converged = false;
    for k in 1..20_000 {
        let kf = k as f64;
        fk = (kf * fk + pk + qk) / (kf * kf - mu * mu);
        ck *= half_x * half_x / kf;
        pk /= kf - mu;
        qk /= kf + mu;
        let hk = -kf * fk + pk;
        let del0 = ck * fk;
        let del1 = ck * hk;
        sum0 += del0;
        sum1 += del1;
        if del0.abs() < 0.5 * sum0.abs() * f64::EPSILON && del1.abs() < 0.5 * sum1.abs() * f64::EPSILON {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::numerical(format!("Temme series did not converge (mu={mu}, x={x})")));
    }
    Ok((sum0.ln(), (sum1 * 2.0 / x).ln()))
}

/// ln K_mu(x) and ln K_{mu+1}(x) by Steed's continued fraction, |mu| <= 1/2, x >= 2.
fn log_k_steed(mu: f64, x: f64) -> Result<(f64, f64)> {
    let mut bi = 2.0 * (1.0 + x);
    let mut di = 1.0 / bi;
    let mut delhi = di;
    let mut hi = di;
    let mut qi = 0.0;
    let mut qip1 = 1.0;
    let mut ai = -(0.25 - mu * mu);
    let a1 = ai;
    let mut ci = -ai;
    let mut bqi = -ai;
    let mut s = 1.0 + bqi * delhi;
    let mut converged = false;
    for i in 2..20_000 {
        ai -= 2.0 * (i - 1) as f64;
        ci = -ai * ci / i as f64;
        let tmp = (qi - bi * qip1) / ai;
        qi = qip1;
        qip1 = tmp;
        bqi += ci * qip1;
        bi += 2.0;
        di = 1.0 / (bi + ai * di);
        delhi = (bi * di - 1.0) * delhi;
        hi += delhi;
        let dels = bqi * delhi;
        s += dels;
        if (dels / s).abs() < f64::EPSILON {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::numerical(format!("continued fraction did not converge (mu={mu}, x={x})")));
    }
    hi *= -a1;
    let ln_k_mu = 0.5 * (PI / (2.0 * x)).ln() - s.ln() - x;
    let ratio = (mu + x + 0.5 - hi) / x;
    Ok((ln_k_mu, ln_k_mu + ratio.ln()))
}

/// Natural logarithm of K_order(x).
pub fn log_bessel_k(order: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("bessel_k requires finite x > 0, got {x}")));
    }
    if !order.is_finite() {
        return Err(Error::Domain(format!("bessel_k order must be finite, got {order}")));
    }
    let nu = order.abs();
    if nu > MAX_ORDER {
        return Err(Error::Domain(format!("bessel_k order {order} exceeds {MAX_ORDER}")));
    }
    let n = (nu + 0.5).floor();
    let mu = nu - n;
    let (ln_k_mu, ln_k_mup1) = if x < 2.0 { log_k_temme(mu, x)? } else { log_k_steed(mu, x)? };
    let steps = n as usize;
    if steps == 0 {
        return Ok(ln_k_mu);
    }
    let mut ln_k = ln_k_mup1;
    let mut ratio = (ln_k_mup1 - ln_k_mu).exp();
    for j in 1..steps {
        ratio = 2.0 * (mu + j as f64) / x + 1.0 / ratio;
        ln_k += ratio.ln();
    }
    Ok(ln_k)
}

/// K_order(x). Fails with a range error when the value overflows a double.
pub fn bessel_k(order: f64, x: f64) -> Result<f64> {
    let ln_k = log_bessel_k(order, x)?;
    if ln_k > f64::MAX.ln() {
        return Err(Error::Range(format!("K_{order}({x}) overflows (log value {ln_k})")));
    }
    Ok(ln_k.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn half_integer_closed_form() {
        let x: f64 = 1.0;
        let exact = (PI / (2.0 * x)).sqrt() * (-x).exp();
        assert!(rel(bessel_k(0.5, x).unwrap(), exact) < 1e-14);
        // K_{3/2}(x) = sqrt(pi/2x) e^{-x} (1 + 1/x)
        for &x in &[1e-6, 0.3, 1.9, 2.0, 7.5, 150.0] {
            let k32 = (PI / (2.0 * x)).sqrt() * (-x).exp() * (1.0 + 1.0 / x);
            assert!(rel(bessel_k(1.5, x).unwrap(), k32) < 1e-13, "x={x}");
        }
    }

    #[test]
    fn symmetric_in_order() {
        let a = bessel_k(1.7, 2.3).unwrap();
        let b = bessel_k(-1.7, 2.3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn recurrence_holds() {
        for i in 0..=20 {
            let p = 0.5 * i as f64;
            for &x in &[0.1, 0.7, 1.99, 2.01, 5.0, 20.0, 50.0] {
                let lhs = bessel_k(p + 1.0, x).unwrap();
                let rhs = bessel_k(p - 1.0, x).unwrap() + 2.0 * p / x * bessel_k(p, x).unwrap();
                assert!(rel(lhs, rhs) < 1e-12, "p={p} x={x}");
            }
        }
    }

    #[test]
    fn large_argument_log_variant() {
        // K_0(x) ~ sqrt(pi/2x) e^{-x} (1 - 1/(8x) + 9/(128 x^2))
        let x: f64 = 2000.0;
        let approx = 0.5 * (PI / (2.0 * x)).ln() - x + (1.0 - 1.0 / (8.0 * x) + 9.0 / (128.0 * x * x)).ln();
        assert!((log_bessel_k(0.0, x).unwrap() - approx).abs() < 1e-10);
    }

    #[test]
    fn errors() {
        assert!(matches!(bessel_k(1.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(bessel_k(1.0, -1.0), Err(Error::Domain(_))));
        assert!(matches!(bessel_k(400.0, 1e-8), Err(Error::Range(_))));
        assert!(log_bessel_k(400.0, 1e-8).unwrap().is_finite());
    }
}
