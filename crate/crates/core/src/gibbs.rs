//! Gibbs sweeps over one subject's latent variables: a joint Gaussian draw of
//! (W, U) given the variance factors, then conditional GIG draws of every
//! variance factor given (W, U).

use crate::error::{Error, Result};
use crate::kernels::banded::ArrowCholesky;
use crate::mixture::gig::DEGENERATE_SCALE;
use crate::mixture::GigParams;
use crate::model::{residuals, LatentState, ModelParams, NoiseScope, Subject};
use crate::operator::Discretization;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GibbsConfig {
    pub sweeps_per_step: usize,
    pub warm_start: bool,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        GibbsConfig {
            sweeps_per_step: 5,
            warm_start: true,
        }
    }
}

impl GibbsConfig {
    pub fn new(sweeps_per_step: usize, warm_start: bool) -> Result<Self> {
        if sweeps_per_step == 0 {
            return Err(Error::Config("gibbs.sweeps must be at least 1".into()));
        }
        Ok(GibbsConfig {
            sweeps_per_step,
            warm_start,
        })
    }
}

/// Gaussian full conditional of (W, U) in canonical form: precision Q (factored) and Q · mean = b.
#[derive(Debug, Clone)]
pub struct GaussianConditional {
    factor: ArrowCholesky,
    b: Vec<f64>,
    nodes: usize,
}

impl GaussianConditional {
    pub fn mean(&self) -> (DVector<f64>, Vec<f64>) {
        self.split(self.factor.solve(&self.b))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (DVector<f64>, Vec<f64>) {
        let eps: Vec<f64> = (0..self.factor.dim()).map(|_| rng.sample(StandardNormal)).collect();
        self.split(self.factor.sample(&self.b, &eps))
    }

    fn split(&self, x: Vec<f64>) -> (DVector<f64>, Vec<f64>) {
        let u = DVector::from_column_slice(&x[self.nodes..]);
        let mut w = x;
        w.truncate(self.nodes);
        (u, w)
    }
}

/// Builds the Gaussian conditional of (W, U) given the variance factors in `latent`.
pub fn gaussian_conditional(
    params: &ModelParams,
    subject: &Subject,
    disc: Option<&Discretization>,
    latent: &LatentState,
) -> Result<GaussianConditional> {
    latent.validate()?;
    let rec = &subject.record;
    let n = rec.n();
    let q = params.q();
    let nodes = disc.map_or(0, Discretization::len);
    let s2 = params.sigma * params.sigma;
    let dz: Vec<f64> = latent.v_z.iter().map(|v| 1.0 / (s2 * v)).collect();
    let fixed = &rec.x * &params.beta;
    let r0: Vec<f64> = (0..n).map(|j| (rec.y[j] - fixed[j]) * dz[j]).collect();

    const BW: usize = 2;
    let mut band = vec![vec![0.0; BW + 1]; nodes];
    let mut border = DMatrix::zeros(q, nodes);
    let mut b = vec![0.0; nodes + q];
    if let Some(disc) = disc {
        let pp = params.process.as_ref().expect("discretization implies a process");
        let k = &disc.k_matrix;
        for r in 0..nodes {
            let inv_v = 1.0 / latent.v_w[r];
            let mut entries: Vec<(usize, f64)> = Vec::with_capacity(3);
            if r > 0 {
                entries.push((r - 1, k.lower[r - 1]));
            }
            entries.push((r, k.diag[r]));
            if r + 1 < nodes {
                entries.push((r + 1, k.upper[r]));
            }
            let m_l = pp.mu() * (latent.v_w[r] - disc.h[r]);
            for &(c1, v1) in &entries {
                b[c1] += v1 * m_l * inv_v;
                for &(c2, v2) in &entries {
                    if c2 <= c1 {
                        band[c1][c1 - c2] += v1 * v2 * inv_v;
                    }
                }
            }
        }
        let obs = subject.obs.as_ref().expect("grid implies observation matrix");
        for (j, row) in obs.rows.iter().enumerate() {
            let (k0, [w0, w1]) = (row.k, row.w);
            band[k0][0] += w0 * w0 * dz[j];
            band[k0 + 1][0] += w1 * w1 * dz[j];
            band[k0 + 1][1] += w0 * w1 * dz[j];
            b[k0] += w0 * r0[j];
            b[k0 + 1] += w1 * r0[j];
            for c in 0..q {
                let dd = rec.d[(j, c)] * dz[j];
                border[(c, k0)] += dd * w0;
                border[(c, k0 + 1)] += dd * w1;
            }
        }
    }
    let mut corner = DMatrix::zeros(q, q);
    if q > 0 {
        let sigma = params.re_cov_spd()?;
        let sinv = sigma.inverse();
        corner += &sinv / latent.v_u;
        let m_u = params.mu_u() * (latent.v_u - 1.0);
        let bu = &sinv * m_u / latent.v_u;
        for c in 0..q {
            b[nodes + c] += bu[c];
        }
        for j in 0..n {
            for c1 in 0..q {
                b[nodes + c1] += rec.d[(j, c1)] * r0[j];
                for c2 in 0..q {
                    corner[(c1, c2)] += rec.d[(j, c1)] * rec.d[(j, c2)] * dz[j];
                }
            }
        }
    }
    let factor = ArrowCholesky::factor(band, BW, border, corner).map_err(|e| match e {
        Error::Factorization { pivot } => Error::numerical(format!(
            "subject {}: conditional precision of (W, U) is singular at pivot {pivot}",
            rec.id
        )),
        other => other,
    })?;
    Ok(GaussianConditional { factor, b, nodes })
}

/// One exact joint draw of (U, W) given the variance factors and the data.
pub fn draw_gaussian_block<R: Rng + ?Sized>(
    params: &ModelParams,
    subject: &Subject,
    disc: Option<&Discretization>,
    latent: &LatentState,
    rng: &mut R,
) -> Result<(DVector<f64>, Vec<f64>)> {
    Ok(gaussian_conditional(params, subject, disc, latent)?.sample(rng))
}

fn conditional(prior: &GigParams, dp: f64, da: f64, db: f64) -> Result<GigParams> {
    let p = prior.p + dp;
    let a = prior.a + da;
    let mut b = prior.b + db;
    if p <= 0.0 && b < DEGENERATE_SCALE {
        b = DEGENERATE_SCALE;
    }
    GigParams::new(p, a, b)
}

/// GIG(p - q/2, a + muᵀ Sigma⁻¹ mu, b + (U + mu)ᵀ Sigma⁻¹ (U + mu)); `None` for Gaussian random effects.
pub fn v_u_conditional(params: &ModelParams, u: &DVector<f64>) -> Result<Option<GigParams>> {
    let q = params.q();
    let prior = match params.re.law()? {
        Some(g) if q > 0 => g,
        _ => return Ok(None),
    };
    if u.len() != q {
        return Err(Error::Shape(format!("U has length {}, expected {q}", u.len())));
    }
    let sigma = params.re_cov_spd()?;
    let mu = params.mu_u();
    let shifted = u + &mu;
    conditional(&prior, -0.5 * q as f64, sigma.inv_quad(&mu), sigma.inv_quad(&shifted)).map(Some)
}

pub fn draw_v_u<R: Rng + ?Sized>(params: &ModelParams, u: &DVector<f64>, rng: &mut R) -> Result<f64> {
    Ok(v_u_conditional(params, u)?.map_or(1.0, |g| g.sample(rng)))
}

/// Per-observation GIG(p - 1/2, a, b + e²/sigma²), or one pooled GIG(p - n/2, a, b + Σe²/sigma²)
/// under per-subject scope. `None` for Gaussian noise.
pub fn v_z_conditionals(params: &ModelParams, residuals: &[f64]) -> Result<Option<Vec<GigParams>>> {
    let prior = match params.noise.law()? {
        Some(g) => g,
        None => return Ok(None),
    };
    if residuals.iter().any(|e| !e.is_finite()) {
        return Err(Error::Domain("residuals must be finite".into()));
    }
    let s2 = params.sigma * params.sigma;
    match params.noise_scope {
        NoiseScope::PerObservation => residuals
            .iter()
            .map(|e| conditional(&prior, -0.5, 0.0, e * e / s2))
            .collect::<Result<Vec<_>>>()
            .map(Some),
        NoiseScope::PerSubject => {
            let ss: f64 = residuals.iter().map(|e| e * e).sum();
            Ok(Some(vec![conditional(&prior, -0.5 * residuals.len() as f64, 0.0, ss / s2)?]))
        }
    }
}

pub fn draw_v_z<R: Rng + ?Sized>(params: &ModelParams, residuals: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    let n = residuals.len();
    Ok(match v_z_conditionals(params, residuals)? {
        None => vec![1.0; n],
        Some(laws) if laws.len() == n => laws.iter().map(|g| g.sample(rng)).collect(),
        Some(laws) => vec![laws[0].sample(rng); n],
    })
}

/// Elementwise GIG(p_k - 1/2, a_k + mu_w², b_k + (K W + h mu_w)_k²); `None` for a Gaussian process.
pub fn v_w_conditionals(params: &ModelParams, disc: &Discretization, w: &[f64]) -> Result<Option<Vec<GigParams>>> {
    let pp = params
        .process
        .as_ref()
        .ok_or_else(|| Error::Parameter("model has no process".into()))?;
    let priors = match pp.v_priors(&disc.h)? {
        Some(p) => p,
        None => return Ok(None),
    };
    if w.len() != disc.len() || w.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("W must be a finite vector on the grid".into()));
    }
    let mu = pp.mu();
    let kw = disc.k_matrix.mul_vec(w);
    priors
        .iter()
        .enumerate()
        .map(|(k, prior)| {
            let r = kw[k] + disc.h[k] * mu;
            conditional(prior, -0.5, mu * mu, r * r)
        })
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

pub fn draw_v_w<R: Rng + ?Sized>(params: &ModelParams, disc: &Discretization, w: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    Ok(match v_w_conditionals(params, disc, w)? {
        None => disc.h.clone(),
        Some(laws) => laws.iter().map(|g| g.sample(rng)).collect(),
    })
}

/// `cfg.sweeps_per_step` alternations of (U, W) | V, Y and V | U, W, Y.
pub fn sweep<R: Rng + ?Sized>(
    params: &ModelParams,
    subject: &Subject,
    disc: Option<&Discretization>,
    state: LatentState,
    cfg: &GibbsConfig,
    rng: &mut R,
) -> Result<LatentState> {
    let mut state = state;
    for _ in 0..cfg.sweeps_per_step {
        state = sweep_once(params, subject, disc, state, rng)?;
    }
    Ok(state)
}

pub fn sweep_once<R: Rng + ?Sized>(
    params: &ModelParams,
    subject: &Subject,
    disc: Option<&Discretization>,
    mut state: LatentState,
    rng: &mut R,
) -> Result<LatentState> {
    let (u, w) = draw_gaussian_block(params, subject, disc, &state, rng)?;
    state.u = u;
    state.w = w;
    let e = residuals(params, subject, &state);
    state.v_z = draw_v_z(params, &e, rng)?;
    if params.q() > 0 {
        state.v_u = draw_v_u(params, &state.u, rng)?;
    }
    if let Some(disc) = disc {
        state.v_w = draw_v_w(params, disc, &state.w, rng)?;
    }
    Ok(state)
}
