use crate::error::{Error, Result};
use crate::kernels::SpdMatrix;
use crate::model::data::{NoiseScope, Subject};
use crate::model::latent::LatentState;
use crate::model::params::ModelParams;
use crate::operator::Discretization;
use nalgebra::{DMatrix, DVector};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// The six additive pieces of the complete-data log-likelihood of one subject.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LoglikTerms {
    pub noise: f64,
    pub re: f64,
    pub process: f64,
    pub v_z: f64,
    pub v_u: f64,
    pub v_w: f64,
}

impl LoglikTerms {
    pub fn total(&self) -> f64 {
        self.noise + self.re + self.process + self.v_z + self.v_u + self.v_w
    }
}

/// e = y - x beta - d U - A W.
pub fn residuals(params: &ModelParams, subject: &Subject, latent: &LatentState) -> Vec<f64> {
    let r = &subject.record;
    let mut fit = &r.x * &params.beta;
    if params.q() > 0 {
        fit += &r.d * &latent.u;
    }
    if let Some(obs) = &subject.obs {
        if !latent.w.is_empty() {
            for (f, aw) in fit.iter_mut().zip(obs.mul_vec(&latent.w)) {
                *f += aw;
            }
        }
    }
    r.y.iter().zip(fit.iter()).map(|(y, f)| y - f).collect()
}

fn check_shapes(params: &ModelParams, subject: &Subject, latent: &LatentState, disc: Option<&Discretization>) -> Result<()> {
    let r = &subject.record;
    if r.x.ncols() != params.p() || (params.q() > 0 && r.d.ncols() != params.q()) {
        return Err(Error::Shape(format!(
            "subject {}: design has {}+{} columns, parameters need {}+{}",
            r.id,
            r.x.ncols(),
            r.d.ncols(),
            params.p(),
            params.q()
        )));
    }
    if latent.v_z.len() != r.n() || latent.u.len() != params.q() {
        return Err(Error::Shape(format!("subject {}: latent state does not match the data", r.id)));
    }
    let k = disc.map_or(0, Discretization::len);
    if latent.w.len() != k || latent.v_w.len() != k {
        return Err(Error::Shape(format!(
            "subject {}: process state has {} nodes, grid has {k}",
            r.id,
            latent.w.len()
        )));
    }
    Ok(())
}

/// Complete-data log-likelihood split into its layers. `disc` must be the
/// subject's discretization under `params` (or `None` without a process).
pub fn complete_loglik(
    params: &ModelParams,
    subject: &Subject,
    disc: Option<&Discretization>,
    latent: &LatentState,
) -> Result<LoglikTerms> {
    check_shapes(params, subject, latent, disc)?;
    latent.validate()?;
    let mut t = LoglikTerms::default();
    let s2 = params.sigma * params.sigma;
    let e = residuals(params, subject, latent);
    t.noise = e
        .iter()
        .zip(&latent.v_z)
        .map(|(e, v)| -0.5 * (LN_2PI + (s2 * v).ln()) - 0.5 * e * e / (s2 * v))
        .sum();
    if let Some(g) = params.noise.law()? {
        t.v_z = match params.noise_scope {
            NoiseScope::PerObservation => latent.v_z.iter().map(|&v| g.ln_pdf(v)).sum::<Result<f64>>()?,
            NoiseScope::PerSubject => g.ln_pdf(latent.v_z[0])?,
        };
    }
    let q = params.q();
    if q > 0 {
        let sigma = params.re_cov_spd()?;
        let v = latent.v_u;
        let mu = params.mu_u();
        let r = &latent.u + &mu * (1.0 - v);
        t.re = -0.5 * q as f64 * (LN_2PI + v.ln()) - 0.5 * sigma.log_det() - 0.5 * sigma.inv_quad(&r) / v;
        if let Some(g) = params.re.law()? {
            t.v_u = g.ln_pdf(v)?;
        }
    }
    if let (Some(pp), Some(disc)) = (&params.process, disc) {
        let mu = pp.mu();
        let kw = disc.k_matrix.mul_vec(&latent.w);
        let mut quad = 0.0;
        let mut ln_v = 0.0;
        for k in 0..disc.len() {
            let v = latent.v_w[k];
            let r = kw[k] + disc.h[k] * mu - v * mu;
            quad += r * r / v;
            ln_v += v.ln();
        }
        t.process = -0.5 * disc.len() as f64 * LN_2PI + disc.log_det_k()? - 0.5 * ln_v - 0.5 * quad;
        if let Some(priors) = pp.v_priors(&disc.h)? {
            t.v_w = priors.iter().zip(&latent.v_w).map(|(g, &v)| g.ln_pdf(v)).sum::<Result<f64>>()?;
        }
    }
    Ok(t)
}

/// Mean x beta and covariance d Sigma dᵀ + A K⁻¹ diag(h) K⁻ᵀ Aᵀ + sigma² I of an all-Gaussian model.
pub fn marginal_covariance(params: &ModelParams, subject: &Subject) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if !params.is_gaussian() {
        return Err(Error::Unsupported("marginal likelihood needs Normal noise, random effects and process".into()));
    }
    let r = &subject.record;
    let n = r.n();
    let mean = &r.x * &params.beta;
    let mut cov = DMatrix::identity(n, n) * (params.sigma * params.sigma);
    if params.q() > 0 {
        cov += &r.d * &params.re_cov * r.d.transpose();
    }
    if let Some(disc) = params.discretize(subject)? {
        let obs = subject.obs.as_ref().expect("grid implies observation matrix");
        // columns of K⁻¹ diag(sqrt h), mapped through A
        let k = disc.len();
        let mut f = DMatrix::zeros(n, k);
        for j in 0..k {
            let mut e = vec![0.0; k];
            e[j] = disc.h[j].sqrt();
            let col = obs.mul_vec(&disc.solve(&e)?);
            for i in 0..n {
                f[(i, j)] = col[i];
            }
        }
        cov += &f * f.transpose();
    }
    Ok((mean, cov))
}

/// Exact log-likelihood of one subject when every component is Gaussian.
pub fn marginal_loglik_gaussian(params: &ModelParams, subject: &Subject) -> Result<f64> {
    let (mean, cov) = marginal_covariance(params, subject)?;
    let n = mean.len();
    let spd = SpdMatrix::new(cov)?;
    let y = DVector::from_column_slice(&subject.record.y);
    let r = y - mean;
    Ok(-0.5 * (n as f64 * LN_2PI + spd.log_det() + spd.inv_quad(&r)))
}
