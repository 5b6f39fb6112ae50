//! Normal variance-mean mixtures X = delta + mu V + sqrt(V) L Z.

use crate::error::{Error, Result};
use crate::kernels::bessel::log_bessel_k;
use crate::kernels::special::ln_gamma;
use crate::mixture::gig::{GigKind, GigParams};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Normal,
    Nig,
    Gal,
    #[serde(rename = "t")]
    StudentT,
    Cauchy,
}

impl Family {
    pub fn has_nu(self) -> bool {
        !matches!(self, Family::Normal | Family::Cauchy)
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::Nig => "nig",
            Family::Gal => "gal",
            Family::StudentT => "t",
            Family::Cauchy => "cauchy",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "normal" | "gaussian" => Ok(Family::Normal),
            "nig" => Ok(Family::Nig),
            "gal" => Ok(Family::Gal),
            "t" | "student-t" | "studentt" => Ok(Family::StudentT),
            "cauchy" => Ok(Family::Cauchy),
            other => Err(Error::Unsupported(format!("unknown family '{other}'"))),
        }
    }
}

/// How the mixing law is normalised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Constraint {
    /// Mean one when the mean exists, mode one otherwise.
    UnitMean,
    UnitMode,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NvmSpec {
    pub family: Family,
    /// Tail parameter; ignored for Normal. For Cauchy it is only used with `Constraint::None`.
    pub nu: f64,
    pub mu: Vec<f64>,
    pub delta: Vec<f64>,
    pub constraint: Constraint,
}

impl NvmSpec {
    /// Symmetric, unit-constrained component of the given family.
    pub fn symmetric(family: Family, nu: f64) -> Self {
        NvmSpec {
            family,
            nu,
            mu: Vec::new(),
            delta: Vec::new(),
            constraint: Constraint::UnitMean,
        }
    }

    pub fn normal() -> Self {
        Self::symmetric(Family::Normal, f64::INFINITY)
    }

    /// Zero-mean skewed component: delta = -mu E[V].
    pub fn zero_mean(family: Family, nu: f64, mu: Vec<f64>) -> Self {
        let delta = mu.iter().map(|m| -m).collect();
        NvmSpec {
            family,
            nu,
            mu,
            delta,
            constraint: Constraint::UnitMean,
        }
    }

    /// Mixing law of V, or `None` for the Normal family (V = 1).
    pub fn mixing_law(&self) -> Result<Option<GigParams>> {
        if self.family == Family::Normal {
            return Ok(None);
        }
        mixing_law(self.family, self.nu, self.constraint).map(Some)
    }
}

fn raw_law(family: Family, nu: f64) -> Result<GigParams> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::Domain(format!("tail parameter must be positive and finite, got {nu}")));
    }
    match family {
        Family::Normal => Err(Error::Unsupported("the normal family has no mixing law".into())),
        Family::Nig => GigParams::new(-0.5, nu, nu),
        Family::Gal => GigParams::new(nu, 2.0 * nu, 0.0),
        Family::StudentT => GigParams::new(-0.5 * nu, 0.0, nu),
        Family::Cauchy => GigParams::new(-0.5, 0.0, nu),
    }
}

/// Mixing law of `family` under the requested normalisation.
///
/// The t family keeps its IGam(nu/2, nu/2) law under `UnitMean`; its scale is
/// carried by sigma instead.
pub fn mixing_law(family: Family, nu: f64, constraint: Constraint) -> Result<GigParams> {
    match constraint {
        Constraint::None => raw_law(family, nu),
        Constraint::UnitMean => constrain_unit(family, nu),
        Constraint::UnitMode => {
            let raw = if family == Family::Cauchy {
                raw_law(family, 1.0)?
            } else {
                raw_law(family, nu)?
            };
            let mode = raw.mode();
            if !(mode > 0.0) {
                return Err(Error::Parameter(format!("{family} law with nu={nu} has no positive mode")));
            }
            Ok(raw.scaled(1.0 / mode))
        }
    }
}

/// Unit-constrained mixing law: mean one when it exists, otherwise mode one.
pub fn constrain_unit(family: Family, nu: f64) -> Result<GigParams> {
    match family {
        Family::Cauchy => GigParams::new(-0.5, 0.0, 3.0),
        Family::Normal => Err(Error::Unsupported("the normal family has no mixing law".into())),
        _ => raw_law(family, nu),
    }
}

/// One draw of delta + mu V + sqrt(V) L Z.
pub fn nvm_sample<R: Rng + ?Sized>(spec: &NvmSpec, cov_factor: &DMatrix<f64>, rng: &mut R) -> Result<DVector<f64>> {
    let d = cov_factor.nrows();
    if cov_factor.ncols() != d {
        return Err(Error::Shape("covariance factor must be square".into()));
    }
    for (name, v) in [("mu", &spec.mu), ("delta", &spec.delta)] {
        if !v.is_empty() && v.len() != d {
            return Err(Error::Shape(format!("{name} has length {} but dimension is {d}", v.len())));
        }
    }
    let v = match spec.mixing_law()? {
        Some(g) => g.sample(rng),
        None => 1.0,
    };
    let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut x = cov_factor * z * v.sqrt();
    for i in 0..d {
        if !spec.mu.is_empty() {
            x[i] += spec.mu[i] * v;
        }
        if !spec.delta.is_empty() {
            x[i] += spec.delta[i];
        }
    }
    Ok(x)
}

/// log of the integral of v^(lambda-1) exp(-(A v + B / v) / 2) over v > 0.
fn ln_mixing_integral(lambda: f64, a: f64, b: f64) -> Result<f64> {
    if a > 0.0 && b > 0.0 {
        Ok(std::f64::consts::LN_2 + log_bessel_k(lambda, (a * b).sqrt())? + 0.5 * lambda * (b.ln() - a.ln()))
    } else if b == 0.0 && a > 0.0 {
        if lambda > 0.0 {
            Ok(ln_gamma(lambda) + lambda * (2.0 / a).ln())
        } else {
            Ok(f64::INFINITY)
        }
    } else if a == 0.0 && b > 0.0 {
        if lambda < 0.0 {
            Ok(ln_gamma(-lambda) + lambda * (0.5 * b).ln())
        } else {
            Ok(f64::INFINITY)
        }
    } else {
        Ok(f64::INFINITY)
    }
}

/// Marginal log-density of the scalar mixture delta + mu V + sigma sqrt(V) Z.
pub fn nvm_logpdf_1d(spec: &NvmSpec, sigma: f64, x: f64) -> Result<f64> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
    }
    if spec.mu.len() > 1 || spec.delta.len() > 1 {
        return Err(Error::Shape("univariate density needs scalar mu and delta".into()));
    }
    let mu = spec.mu.first().copied().unwrap_or(0.0);
    let delta = spec.delta.first().copied().unwrap_or(0.0);
    let s2 = sigma * sigma;
    let xc = x - delta;
    let ln_norm = -0.5 * (2.0 * std::f64::consts::PI * s2).ln();
    let law = match spec.mixing_law()? {
        None => return Ok(ln_norm - 0.5 * (xc - mu).powi(2) / s2),
        Some(g) => g,
    };
    let big_a = law.a + mu * mu / s2;
    let big_b = law.b + xc * xc / s2;
    let lambda = law.p - 0.5;
    let c = law.ln_normalizer()?;
    debug_assert!(law.kind() != GigKind::General || (law.a > 0.0 && law.b > 0.0));
    Ok(ln_norm + c + ln_mixing_integral(lambda, big_a, big_b)? + mu * xc / s2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_family() {
        assert_eq!("nig".parse::<Family>().unwrap(), Family::Nig);
        assert_eq!("t".parse::<Family>().unwrap(), Family::StudentT);
        assert!("weibull".parse::<Family>().is_err());
        let s = serde_json::to_string(&Family::StudentT).unwrap();
        assert_eq!(s, "\"t\"");
    }

    #[test]
    fn unit_laws() {
        let g = constrain_unit(Family::Nig, 5.0).unwrap();
        assert_eq!(g, GigParams { p: -0.5, a: 5.0, b: 5.0 });
        assert!((g.mean().unwrap() - 1.0).abs() < 1e-14);
        let g = constrain_unit(Family::Gal, 2.0).unwrap();
        assert_eq!(g, GigParams { p: 2.0, a: 4.0, b: 0.0 });
        assert!((g.mean().unwrap() - 1.0).abs() < 1e-14);
        let c = constrain_unit(Family::Cauchy, 1.0).unwrap();
        assert!((c.mode() - 1.0).abs() < 1e-15);
        assert!(constrain_unit(Family::Nig, 0.0).is_err());
        let m = mixing_law(Family::Nig, 2.0, Constraint::UnitMode).unwrap();
        assert!((m.mode() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn normal_density_at_zero() {
        let v = nvm_logpdf_1d(&NvmSpec::normal(), 1.0, 0.0).unwrap();
        assert!((v + 0.918_938_533_204_672_7).abs() < 1e-15);
    }

    #[test]
    fn student_t_density_matches_closed_form() {
        let nu: f64 = 3.5;
        let sigma: f64 = 1.7;
        let spec = NvmSpec::symmetric(Family::StudentT, nu);
        for &x in &[-4.0, 0.0, 0.3, 9.0] {
            let z: f64 = x / sigma;
            let expect = ln_gamma(0.5 * (nu + 1.0))
                - ln_gamma(0.5 * nu)
                - 0.5 * (nu * std::f64::consts::PI).ln()
                - sigma.ln()
                - 0.5 * (nu + 1.0) * (1.0 + z * z / nu).ln();
            assert!((nvm_logpdf_1d(&spec, sigma, x).unwrap() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn cauchy_tails_are_polynomial() {
        let spec = NvmSpec::symmetric(Family::Cauchy, 1.0);
        let r = (nvm_logpdf_1d(&spec, 1.0, 20.0).unwrap() - nvm_logpdf_1d(&spec, 1.0, 10.0).unwrap()).exp();
        assert!((r - 0.25).abs() < 0.01, "{r}");
    }
}
