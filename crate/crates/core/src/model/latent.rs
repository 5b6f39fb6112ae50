use crate::error::{Error, Result};
use crate::kernels::linalg::cholesky;
use crate::model::data::{NoiseScope, Subject};
use crate::model::params::ModelParams;
use crate::operator::Discretization;
use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, PartialEq)]
pub struct LatentState {
    pub u: DVector<f64>,
    pub w: Vec<f64>,
    pub v_z: Vec<f64>,
    pub v_u: f64,
    pub v_w: Vec<f64>,
}

impl LatentState {
    /// U = 0, W = 0 and every variance factor at its prior mean (mode when the mean is unbounded).
    pub fn at_prior_means(params: &ModelParams, subject: &Subject) -> Result<Self> {
        let n = subject.n();
        let v_z = match params.noise.law()? {
            None => 1.0,
            Some(g) => g.mean().unwrap_or_else(|| g.mode()),
        };
        let v_u = match params.re.law()? {
            None => 1.0,
            Some(g) if params.q() > 0 => g.mean().unwrap_or_else(|| g.mode()),
            Some(_) => 1.0,
        };
        let v_w = match (&params.process, &subject.grid) {
            (Some(pp), Some(grid)) => {
                let h = grid.hat_areas();
                match pp.v_priors(&h)? {
                    None => h,
                    Some(priors) => priors
                        .iter()
                        .zip(&h)
                        .map(|(g, hk)| g.mean().unwrap_or(*hk))
                        .collect(),
                }
            }
            _ => Vec::new(),
        };
        Ok(LatentState {
            u: DVector::zeros(params.q()),
            w: vec![0.0; v_w.len()],
            v_z: vec![v_z; n],
            v_u,
            v_w,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !self.v_z.iter().all(|&v| ok(v)) || !ok(self.v_u) || !self.v_w.iter().all(|&v| ok(v)) {
            return Err(Error::Domain("variance components must be positive and finite".into()));
        }
        if self.u.iter().chain(&self.w).any(|v| !v.is_finite()) {
            return Err(Error::Domain("latent effects must be finite".into()));
        }
        Ok(())
    }

    /// One draw of every latent variable from its prior; `disc` must be the
    /// subject's discretization when the model has a process.
    pub fn sample_prior<R: Rng + ?Sized>(
        params: &ModelParams,
        subject: &Subject,
        disc: Option<&Discretization>,
        rng: &mut R,
    ) -> Result<Self> {
        let q = params.q();
        let (u, v_u) = if q > 0 {
            let l = cholesky(&params.re_cov)?;
            let v = match params.re.law()? {
                Some(g) => g.sample(rng),
                None => 1.0,
            };
            let z = DVector::from_fn(q, |_, _| rng.sample::<f64, _>(StandardNormal));
            (params.mu_u() * (v - 1.0) + l * z * v.sqrt(), v)
        } else {
            (DVector::zeros(0), 1.0)
        };
        let (w, v_w) = match (disc, &params.process) {
            (Some(disc), Some(pp)) => {
                let v: Vec<f64> = match pp.v_priors(&disc.h)? {
                    Some(priors) => priors.iter().map(|g| g.sample(rng)).collect(),
                    None => disc.h.clone(),
                };
                let rhs: Vec<f64> = (0..disc.len())
                    .map(|k| pp.mu() * (v[k] - disc.h[k]) + v[k].sqrt() * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                (disc.solve(&rhs)?, v)
            }
            _ => (Vec::new(), Vec::new()),
        };
        let n = subject.n();
        let v_z = match params.noise.law()? {
            None => vec![1.0; n],
            Some(g) => match params.noise_scope {
                NoiseScope::PerSubject => vec![g.sample(rng); n],
                NoiseScope::PerObservation => (0..n).map(|_| g.sample(rng)).collect(),
            },
        };
        Ok(LatentState { u, w, v_z, v_u, v_w })
    }
}
