//! Total-variation distances between symmetric mixture laws and the rules
//! that collapse an NIG component to its Gaussian or Cauchy limit.

use crate::error::{Error, Result};
use crate::kernels::quad::{integrate_real_line, QuadOptions};
use crate::mixture::{nvm_logpdf_1d, Constraint, Family, NvmSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const TV_OPTS: QuadOptions = QuadOptions {
    abs_tol: 2e-8,
    rel_tol: 0.0,
    max_intervals: 20_000,
};

/// Half the L1 distance between two densities on the real line.
pub fn tv_distance<F, G>(pdf_f: F, pdf_g: G) -> Result<f64>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    tv_distance_scaled(pdf_f, pdf_g, 1.0)
}

/// As [`tv_distance`], with `scale` giving the typical width of the densities.
pub fn tv_distance_scaled<F, G>(pdf_f: F, pdf_g: G, scale: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::Domain(format!("quadrature scale must be positive, got {scale}")));
    }
    let r = integrate_real_line(|x| (pdf_f(x) - pdf_g(x)).abs(), 0.0, scale, TV_OPTS)?;
    Ok((0.5 * r.value).clamp(0.0, 1.0))
}

/// Density of s sqrt(V) Z with V ~ GIG(-1/2, a, a), the unit-mean NIG with tail parameter `a`.
pub fn nig_pdf(a: f64, scale: f64) -> Result<impl Fn(f64) -> f64> {
    let spec = NvmSpec::symmetric(Family::Nig, a);
    spec.mixing_law()?;
    Ok(move |x: f64| nvm_logpdf_1d(&spec, scale, x).map(f64::exp).unwrap_or(f64::NAN))
}

/// Density of sqrt(V) Z with V ~ GIG(-1/2, 0, b): Cauchy with scale sqrt(b).
pub fn cauchy_pdf(b: f64) -> impl Fn(f64) -> f64 {
    let s = b.sqrt();
    move |x: f64| 1.0 / (std::f64::consts::PI * s * (1.0 + (x / s).powi(2)))
}

pub fn normal_pdf(sd: f64) -> impl Fn(f64) -> f64 {
    move |x: f64| (-0.5 * (x / sd).powi(2)).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
}

/// Minimises a unimodal function of one variable: bracket by expansion, then golden section.
fn minimize_1d<F: Fn(f64) -> Result<f64>>(f: F, start: f64, step: f64, tol: f64) -> Result<(f64, f64)> {
    let (mut a, mut b) = (start, start + step);
    let (mut fa, mut fb) = (f(a)?, f(b)?);
    if fb > fa {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = b + 1.618_033_988_75 * (b - a);
    let mut fc = f(c)?;
    let mut expansions = 0;
    while fc < fb {
        expansions += 1;
        if expansions > 60 {
            return Err(Error::Numerical {
                message: "failed to bracket a minimum".into(),
                achieved: fc,
            });
        }
        a = b;
        fa = fb;
        b = c;
        fb = fc;
        c = b + 1.618_033_988_75 * (b - a);
        fc = f(c)?;
    }
    let _ = fa;
    let (mut lo, mut hi) = if a < c { (a, c) } else { (c, a) };
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > tol {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 < f2 { (x1, f1) } else { (x2, f2) })
}

/// Minimum over b of TV(NIG(a, scale), Cauchy(b)) computed at the given scale,
/// without using the scaling argument. Returns (TV, best b).
pub fn tv_to_nearest_cauchy_direct(a: f64, scale: f64) -> Result<(f64, f64)> {
    if !(a > 0.0) || !(scale > 0.0) {
        return Err(Error::Domain(format!("need a > 0 and scale > 0, got a={a}, scale={scale}")));
    }
    let nig = nig_pdf(a, scale)?;
    let guess = (a.min(1.0) * scale * scale).ln();
    let obj = |u: f64| {
        let b = u.exp();
        tv_distance_scaled(&nig, cauchy_pdf(b), b.sqrt())
    };
    let (u, tv) = minimize_1d(obj, guess, 0.5, 1e-6)?;
    Ok((tv, u.exp()))
}

/// Minimum over b of TV(NIG(a, b_nig), Cauchy(b)), where `b_nig` scales the NIG
/// variable. Computed at unit scale and rescaled. Returns (TV, best b).
pub fn tv_to_nearest_cauchy(a: f64, b_nig: f64) -> Result<(f64, f64)> {
    if !(b_nig > 0.0) {
        return Err(Error::Domain(format!("need b_nig > 0, got {b_nig}")));
    }
    let (tv, b) = tv_to_nearest_cauchy_direct(a, 1.0)?;
    Ok((tv, b * b_nig * b_nig))
}

/// Minimum over sd of TV(NIG(a, 1), N(0, sd^2)). Returns (TV, best sd).
pub fn tv_to_nearest_gaussian(a: f64) -> Result<(f64, f64)> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("need a > 0, got {a}")));
    }
    let nig = nig_pdf(a, 1.0)?;
    let obj = |u: f64| tv_distance_scaled(&nig, normal_pdf(u.exp()), 1.0);
    let (u, tv) = minimize_1d(obj, 0.0, 0.2, 1e-6)?;
    Ok((tv, u.exp()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvPoint {
    pub a: f64,
    pub tv_normal: f64,
    pub best_sd: f64,
    pub tv_cauchy: f64,
    pub best_b: f64,
}

/// Both TV curves over a grid of NIG tail parameters.
pub fn tv_curve(grid: &[f64]) -> Result<Vec<TvPoint>> {
    grid.par_iter()
        .map(|&a| {
            let (tv_normal, best_sd) = tv_to_nearest_gaussian(a)?;
            let (tv_cauchy, best_b) = tv_to_nearest_cauchy(a, 1.0)?;
            Ok(TvPoint {
                a,
                tv_normal,
                best_sd,
                tv_cauchy,
                best_b,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchRule {
    pub to_gaussian_above: f64,
    pub to_cauchy_below: f64,
}

impl Default for SwitchRule {
    fn default() -> Self {
        SwitchRule {
            to_gaussian_above: 250.0,
            to_cauchy_below: 0.001,
        }
    }
}

impl SwitchRule {
    pub fn new(to_gaussian_above: f64, to_cauchy_below: f64) -> Result<Self> {
        if !(to_cauchy_below > 0.0 && to_cauchy_below < to_gaussian_above) {
            return Err(Error::Config(format!(
                "switch thresholds must satisfy 0 < {to_cauchy_below} < {to_gaussian_above}"
            )));
        }
        Ok(SwitchRule {
            to_gaussian_above,
            to_cauchy_below,
        })
    }
}

/// Replaces an NIG component by its Cauchy or Gaussian limit outside the thresholds.
pub fn apply_switch(rule: &SwitchRule, spec: &NvmSpec) -> NvmSpec {
    if spec.family != Family::Nig {
        return spec.clone();
    }
    let family = if spec.nu < rule.to_cauchy_below {
        Family::Cauchy
    } else if spec.nu > rule.to_gaussian_above {
        Family::Normal
    } else {
        return spec.clone();
    };
    NvmSpec {
        family,
        nu: spec.nu,
        mu: Vec::new(),
        delta: Vec::new(),
        constraint: Constraint::UnitMean,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_densities() {
        let tv = tv_distance(normal_pdf(1.0), normal_pdf(1.0)).unwrap();
        assert_eq!(tv, 0.0);
    }

    #[test]
    fn switch_rule() {
        let rule = SwitchRule::default();
        let s = NvmSpec::symmetric(Family::Nig, 0.0005);
        assert_eq!(apply_switch(&rule, &s).family, Family::Cauchy);
        assert_eq!(apply_switch(&rule, &NvmSpec::symmetric(Family::Nig, 300.0)).family, Family::Normal);
        let mid = NvmSpec::symmetric(Family::Nig, 5.0);
        assert_eq!(apply_switch(&rule, &mid), mid);
        let once = apply_switch(&rule, &s);
        assert_eq!(apply_switch(&rule, &once), once);
        assert!(SwitchRule::new(1.0, 2.0).is_err());
    }
}
