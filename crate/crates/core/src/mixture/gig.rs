//! The generalized inverse Gaussian law GIG(p, a, b) with density
//! proportional to x^(p-1) exp(-(a x + b / x) / 2) on x > 0.
//!
//! The boundary cases b = 0 (Gamma with shape p and rate a/2) and a = 0
//! (inverse Gamma with shape -p and scale b/2) are handled explicitly.
//! Sampling follows Hörmann and Leydold's ratio-of-uniforms schemes.

use crate::error::{Error, Result};
use crate::kernels::bessel::log_bessel_k;
use crate::kernels::special::ln_gamma;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Open01};
use serde::{Deserialize, Serialize};

/// Below this value a scale parameter of a sampled law is treated as zero.
pub const DEGENERATE_SCALE: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GigParams {
    pub p: f64,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GigKind {
    General,
    Gamma,
    InvGamma,
}

/// A moment that may fail to exist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Moment {
    Finite(f64),
    Unbounded,
}

impl Moment {
    pub fn finite(self) -> Option<f64> {
        match self {
            Moment::Finite(v) => Some(v),
            Moment::Unbounded => None,
        }
    }
}

impl GigParams {
    pub fn new(p: f64, a: f64, b: f64) -> Result<Self> {
        let g = GigParams { p, a, b };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let GigParams { p, a, b } = *self;
        let ok = p.is_finite()
            && a.is_finite()
            && b.is_finite()
            && a >= 0.0
            && b >= 0.0
            && ((a > 0.0 && b > 0.0) || (b == 0.0 && a > 0.0 && p > 0.0) || (a == 0.0 && b > 0.0 && p < 0.0));
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!("invalid GIG parameters (p={p}, a={a}, b={b})")))
        }
    }

    pub fn kind(&self) -> GigKind {
        if self.b == 0.0 {
            GigKind::Gamma
        } else if self.a == 0.0 {
            GigKind::InvGamma
        } else {
            GigKind::General
        }
    }

    /// Law of c V when V follows `self`.
    pub fn scaled(&self, c: f64) -> GigParams {
        GigParams {
            p: self.p,
            a: self.a / c,
            b: self.b * c,
        }
    }

    /// log of the constant c in c x^(p-1) exp(-(a x + b/x)/2).
    pub fn ln_normalizer(&self) -> Result<f64> {
        self.validate()?;
        let GigParams { p, a, b } = *self;
        Ok(match self.kind() {
            GigKind::General => 0.5 * p * (a / b).ln() - std::f64::consts::LN_2 - log_bessel_k(p, (a * b).sqrt())?,
            GigKind::Gamma => p * (0.5 * a).ln() - ln_gamma(p),
            GigKind::InvGamma => -p * (0.5 * b).ln() - ln_gamma(-p),
        })
    }

    pub fn ln_pdf(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::Domain(format!("GIG density needs finite x > 0, got {x}")));
        }
        let c = self.ln_normalizer()?;
        Ok(c + (self.p - 1.0) * x.ln() - 0.5 * (self.a * x + self.b / x))
    }

    /// E[V^k]; `Unbounded` when the moment does not exist.
    pub fn moment(&self, k: f64) -> Result<Moment> {
        self.validate()?;
        let GigParams { p, a, b } = *self;
        Ok(match self.kind() {
            GigKind::General => {
                let w = (a * b).sqrt();
                let ln = 0.5 * k * (b / a).ln() + log_bessel_k(p + k, w)? - log_bessel_k(p, w)?;
                Moment::Finite(ln.exp())
            }
            GigKind::Gamma => {
                if p + k > 0.0 {
                    Moment::Finite((ln_gamma(p + k) - ln_gamma(p) - k * (0.5 * a).ln()).exp())
                } else {
                    Moment::Unbounded
                }
            }
            GigKind::InvGamma => {
                let alpha = -p;
                if alpha - k > 0.0 {
                    Moment::Finite((k * (0.5 * b).ln() + ln_gamma(alpha - k) - ln_gamma(alpha)).exp())
                } else {
                    Moment::Unbounded
                }
            }
        })
    }

    pub fn mean(&self) -> Option<f64> {
        self.moment(1.0).ok().and_then(Moment::finite)
    }

    /// Location of the density maximum (0 when the density is maximal at the origin).
    pub fn mode(&self) -> f64 {
        let GigParams { p, a, b } = *self;
        match self.kind() {
            GigKind::General => {
                let pm1 = p - 1.0;
                if pm1 >= 0.0 {
                    (pm1 + (pm1 * pm1 + a * b).sqrt()) / a
                } else {
                    b / ((pm1 * pm1 + a * b).sqrt() - pm1)
                }
            }
            GigKind::Gamma => {
                if p >= 1.0 {
                    2.0 * (p - 1.0) / a
                } else {
                    0.0
                }
            }
            GigKind::InvGamma => 0.5 * b / (1.0 - p),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let GigParams { p, a, b } = *self;
        let v = if b < DEGENERATE_SCALE && p > 0.0 {
            gamma_draw(p, rng) * 2.0 / a
        } else if a < DEGENERATE_SCALE && p < 0.0 {
            0.5 * b / gamma_draw(-p, rng)
        } else {
            let a = a.max(DEGENERATE_SCALE);
            let b = b.max(DEGENERATE_SCALE);
            let omega = (a * b).sqrt();
            let alpha = (b / a).sqrt();
            let lambda = p.abs();
            let x = if lambda > 2.0 || omega > 3.0 {
                rou_shift(lambda, omega, rng)
            } else if lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2 {
                rou_noshift(lambda, omega, rng)
            } else {
                three_piece_hat(lambda, omega, rng)
            };
            if p < 0.0 {
                alpha / x
            } else {
                alpha * x
            }
        };
        v.clamp(f64::MIN_POSITIVE, f64::MAX)
    }
}

pub fn gig_logpdf(params: &GigParams, x: f64) -> Result<f64> {
    params.ln_pdf(x)
}

pub fn gig_moment(params: &GigParams, k: i32) -> Result<Moment> {
    params.moment(k as f64)
}

pub fn gig_sample<R: Rng + ?Sized>(params: &GigParams, rng: &mut R) -> Result<f64> {
    params.validate()?;
    Ok(params.sample(rng))
}

/// Gamma(shape, 1) draw that stays positive for tiny shapes.
fn gamma_draw<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape >= 1.0 {
        return Gamma::new(shape, 1.0).expect("positive shape").sample(rng);
    }
    let g = Gamma::new(shape + 1.0, 1.0).expect("positive shape").sample(rng);
    let u: f64 = rng.sample(Open01);
    (g.ln() + u.ln() / shape).exp().max(f64::MIN_POSITIVE)
}

fn unif<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Open01)
}

/// Mode of GIG(lambda, omega, omega).
fn mode_symmetric(lambda: f64, omega: f64) -> f64 {
    if lambda >= 1.0 {
        (((lambda - 1.0).powi(2) + omega * omega).sqrt() + (lambda - 1.0)) / omega
    } else {
        omega / (((1.0 - lambda).powi(2) + omega * omega).sqrt() + (1.0 - lambda))
    }
}

fn rou_noshift<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = mode_symmetric(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);
    let ym = ((lambda + 1.0) + ((lambda + 1.0).powi(2) + omega * omega).sqrt()) / omega;
    let um = (0.5 * (lambda + 1.0) * ym.ln() - s * (ym + 1.0 / ym) - nc).exp();
    loop {
        let ux = um * unif(rng);
        let vx = unif(rng);
        let x = ux / vx;
        if vx.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

fn rou_shift<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = mode_symmetric(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);
    let a = -(2.0 * (lambda + 1.0) / omega + xm);
    let b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
    let c = xm;
    let p = b - a * a / 3.0;
    let q = (2.0 * a * a * a) / 27.0 - (a * b) / 3.0 + c;
    let fi = (-q / (2.0 * (-(p * p * p) / 27.0).sqrt())).clamp(-1.0, 1.0).acos();
    let fak = 2.0 * (-p / 3.0).sqrt();
    let y1 = fak * (fi / 3.0).cos() - a / 3.0;
    let y2 = fak * (fi / 3.0 + 4.0 / 3.0 * std::f64::consts::PI).cos() - a / 3.0;
    let uplus = (y1 - xm) * (t * y1.ln() - s * (y1 + 1.0 / y1) - nc).exp();
    let uminus = (y2 - xm) * (t * y2.ln() - s * (y2 + 1.0 / y2) - nc).exp();
    loop {
        let u = uminus + unif(rng) * (uplus - uminus);
        let v = unif(rng);
        let x = u / v + xm;
        if x > 0.0 && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

/// Rejection from a three-piece hat for 0 <= lambda < 1 and small omega.
fn three_piece_hat<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let xm = mode_symmetric(lambda, omega);
    let x0 = omega / (1.0 - lambda);
    let k0 = ((lambda - 1.0) * xm.ln() - 0.5 * omega * (xm + 1.0 / xm)).exp();
    let a0 = k0 * x0;
    let (k1, a1, k2, a2);
    if x0 >= 2.0 / omega {
        k1 = 0.0;
        a1 = 0.0;
        k2 = x0.powf(lambda - 1.0);
        a2 = k2 * 2.0 * (-omega * x0 / 2.0).exp() / omega;
    } else {
        k1 = (-omega).exp();
        a1 = if lambda == 0.0 {
            k1 * (2.0 / (omega * omega)).ln()
        } else {
            k1 / lambda * ((2.0 / omega).powf(lambda) - x0.powf(lambda))
        };
        k2 = (2.0 / omega).powf(lambda - 1.0);
        a2 = k2 * 2.0 * (-1.0f64).exp() / omega;
    }
    let total = a0 + a1 + a2;
    loop {
        let mut v = total * unif(rng);
        let (x, hx);
        if v <= a0 {
            x = x0 * v / a0;
            hx = k0;
        } else {
            v -= a0;
            if v <= a1 {
                if lambda == 0.0 {
                    x = omega * (omega.exp() * v).exp();
                    hx = k1 / x;
                } else {
                    x = (x0.powf(lambda) + lambda / k1 * v).powf(1.0 / lambda);
                    hx = k1 * x.powf(lambda - 1.0);
                }
            } else {
                v -= a1;
                let lo = x0.max(2.0 / omega);
                x = -2.0 / omega * ((-omega / 2.0 * lo).exp() - omega / (2.0 * k2) * v).ln();
                hx = k2 * (-omega / 2.0 * x).exp();
            }
        }
        let u = unif(rng) * hx;
        if x > 0.0 && u.ln() <= (lambda - 1.0) * x.ln() - omega / 2.0 * (x + 1.0 / x) {
            return x;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn validation() {
        assert!(GigParams::new(-0.5, 1.0, 1.0).is_ok());
        assert!(GigParams::new(1.0, 2.0, 0.0).is_ok());
        assert!(GigParams::new(-1.0, 0.0, 2.0).is_ok());
        assert!(GigParams::new(-1.0, 2.0, 0.0).is_err());
        assert!(GigParams::new(1.0, 0.0, 2.0).is_err());
        assert!(GigParams::new(1.0, -1.0, 2.0).is_err());
        assert!(GigParams::new(f64::NAN, 1.0, 2.0).is_err());
    }

    #[test]
    fn inverse_gaussian_density() {
        // IG(mean 1, shape 1) at x = 1 is 1/sqrt(2 pi)
        let g = GigParams::new(-0.5, 1.0, 1.0).unwrap();
        let expect = (1.0 / (2.0 * std::f64::consts::PI).sqrt()).ln();
        assert!((g.ln_pdf(1.0).unwrap() - expect).abs() < 1e-13);
        let e = GigParams::new(1.0, 2.0, 0.0).unwrap();
        assert!((e.ln_pdf(1.0).unwrap() + 1.0).abs() < 1e-14);
        assert!(matches!(g.ln_pdf(0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn moments() {
        for &nu in &[0.001, 0.3, 1.0, 5.0, 250.0, 1e4] {
            let g = GigParams::new(-0.5, nu, nu).unwrap();
            assert!((g.mean().unwrap() - 1.0).abs() < 1e-12, "nu={nu}");
            // E[1/V] = 1 + 1/nu for the unit-mean inverse Gaussian
            let inv = g.moment(-1.0).unwrap().finite().unwrap();
            assert!((inv - (1.0 + 1.0 / nu)).abs() < 1e-10 * (1.0 + 1.0 / nu), "nu={nu}");
        }
        let c = GigParams::new(-0.5, 0.0, 3.0).unwrap();
        assert_eq!(c.moment(1.0).unwrap(), Moment::Unbounded);
        assert!((c.mode() - 1.0).abs() < 1e-15);
        let gam = GigParams::new(0.8, 2.0, 0.0).unwrap();
        assert_eq!(gam.moment(-1.0).unwrap(), Moment::Unbounded);
        assert!((GigParams::new(2.0, 4.0, 0.0).unwrap().mean().unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sampler_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cases = [
            (-0.5, 4.0, 1.0),
            (0.3, 0.01, 0.02),
            (0.0, 0.1, 0.1),
            (2.5, 3.0, 1.0),
            (-3.0, 10.0, 20.0),
            (1.5, 0.0001, 0.0004),
        ];
        for &(p, a, b) in &cases {
            let g = GigParams::new(p, a, b).unwrap();
            let n = 200_000;
            let mut s = 0.0;
            let mut s2 = 0.0;
            for _ in 0..n {
                let v = g.sample(&mut rng);
                s += v;
                s2 += v * v;
            }
            let m = s / n as f64;
            let sd = (s2 / n as f64 - m * m).sqrt();
            let mean = g.mean().unwrap();
            assert!((m - mean).abs() < 4.0 * sd / (n as f64).sqrt(), "{p} {a} {b}: {m} vs {mean}");
        }
    }
}
