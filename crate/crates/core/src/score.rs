//! Complete-data scores and expected information for each parameter block.
//!
//! Block functions work on natural parameters for one subject and one latent
//! draw. [`ParamLayout`] maps them onto the unconstrained vector used by the
//! optimizer, where sigma, kappa, tau and every nu enter through their logarithms.

use crate::error::{Error, Result};
use crate::kernels::special::{digamma, trigamma};
use crate::kernels::{duplication_matrix, vech};
use crate::mixture::Family;
use crate::model::{residuals, Component, LatentState, ModelParams, NoiseScope, Subject};
use crate::operator::{Discretization, OperatorKind, OperatorParam};
use nalgebra::{DMatrix, DVector};
use std::ops::Range;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockId {
    Beta,
    Sigma,
    ReCov,
    MuU,
    NuZ,
    NuU,
    Operator,
    MuW,
    NuW,
}

/// Gradient of one parameter block and its expected information (the negated
/// expected Hessian), when available.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreBlock {
    pub block: BlockId,
    pub gradient: DVector<f64>,
    pub expected_hessian: Option<DMatrix<f64>>,
}

impl ScoreBlock {
    fn new(block: BlockId, gradient: DVector<f64>, info: Option<DMatrix<f64>>) -> Self {
        ScoreBlock {
            block,
            gradient,
            expected_hessian: info,
        }
    }
}

/// Fixed effects: (1/sigma²) Σ x_j e_j / V_j, information (1/sigma²) E[1/V] Σ x_j x_jᵀ.
pub fn score_beta(params: &ModelParams, subject: &Subject, latent: &LatentState) -> Result<ScoreBlock> {
    let x = &subject.record.x;
    let e = residuals(params, subject, latent);
    let s2 = params.sigma * params.sigma;
    let mut g = DVector::zeros(params.p());
    for j in 0..e.len() {
        g += x.row(j).transpose() * (e[j] / (latent.v_z[j] * s2));
    }
    let inv_mean = params.noise.moment(-1.0)?;
    let info = inv_mean.map(|m| x.transpose() * x * (m / s2));
    Ok(ScoreBlock::new(BlockId::Beta, g, info))
}

/// Noise scale: -n/sigma + Σ e²/(V sigma³), information 2n/sigma².
pub fn score_sigma_noise(params: &ModelParams, subject: &Subject, latent: &LatentState) -> Result<ScoreBlock> {
    let e = residuals(params, subject, latent);
    let s = params.sigma;
    let n = e.len() as f64;
    let ss: f64 = e.iter().zip(&latent.v_z).map(|(e, v)| e * e / v).sum();
    let g = -n / s + ss / (s * s * s);
    Ok(ScoreBlock::new(
        BlockId::Sigma,
        DVector::from_element(1, g),
        Some(DMatrix::from_element(1, 1, 2.0 * n / (s * s))),
    ))
}

/// Random-effect covariance in vech coordinates: ½ Dᵀ vec(Sigma⁻¹ (S - Sigma) Sigma⁻¹) with
/// S = r rᵀ / V and r = U + mu - V mu; information ½ Dᵀ (Sigma⁻¹ ⊗ Sigma⁻¹) D.
pub fn score_sigma_matrix(params: &ModelParams, latent: &LatentState) -> Result<ScoreBlock> {
    let q = params.q();
    let sinv = params.re_cov_spd()?.inverse();
    let v = latent.v_u;
    let r = &latent.u + params.mu_u() * (1.0 - v);
    let s = &r * r.transpose() / v;
    let g = &sinv * (s - &params.re_cov) * &sinv * 0.5;
    let dup = duplication_matrix(q)?;
    let grad = dup.transpose() * DVector::from_column_slice(g.as_slice());
    let info = dup.transpose() * sinv.kronecker(&sinv) * &dup * 0.5;
    Ok(ScoreBlock::new(BlockId::ReCov, grad, Some(info)))
}

/// Random-effect skewness: (V - 1)/V Sigma⁻¹ (U + mu - V mu), information
/// (E[1/V] - 2 + E[V]) Sigma⁻¹, unavailable when a moment is unbounded.
pub fn score_mu_u(params: &ModelParams, latent: &LatentState) -> Result<ScoreBlock> {
    let sinv = params.re_cov_spd()?.inverse();
    let v = latent.v_u;
    let r = &latent.u + params.mu_u() * (1.0 - v);
    let g = &sinv * r * ((v - 1.0) / v);
    let info = match (params.re.moment(-1.0)?, params.re.moment(1.0)?) {
        (Some(inv), Some(m)) => Some(&sinv * (inv - 2.0 + m)),
        _ => None,
    };
    Ok(ScoreBlock::new(BlockId::MuU, g, info))
}

fn process_residual(params: &ModelParams, disc: &Discretization, latent: &LatentState) -> Vec<f64> {
    let mu = params.process.as_ref().map_or(0.0, |p| p.mu());
    let kw = disc.k_matrix.mul_vec(&latent.w);
    (0..disc.len()).map(|k| kw[k] + disc.h[k] * mu - latent.v_w[k] * mu).collect()
}

/// Operator parameters (natural scale, in the order of `disc.params()`):
/// tr(K⁻¹ K_theta) - (K_theta W)ᵀ diag(V)⁻¹ (K W + h mu - V mu). No expected information.
pub fn score_operator(params: &ModelParams, disc: &Discretization, latent: &LatentState) -> Result<ScoreBlock> {
    let r = process_residual(params, disc, latent);
    let ps = disc.params();
    let mut g = DVector::zeros(ps.len());
    for (i, &p) in ps.iter().enumerate() {
        let dk = disc.derivative(p);
        let tr = disc
            .k_matrix
            .trace_inv_mul(&dk)
            .map_err(|_| Error::numerical("singular operator matrix in trace term"))?;
        let dkw = dk.mul_vec(&latent.w);
        let quad: f64 = (0..disc.len()).map(|k| dkw[k] * r[k] / latent.v_w[k]).sum();
        g[i] = tr - quad;
    }
    Ok(ScoreBlock::new(BlockId::Operator, g, None))
}

/// Process skewness: -(h - V)ᵀ diag(V)⁻¹ (K W + h mu - V mu), information Σ_k (h_k² E[1/V_k] - 2 h_k + E[V_k]).
pub fn score_mu_w(params: &ModelParams, disc: &Discretization, latent: &LatentState) -> Result<ScoreBlock> {
    let pp = params
        .process
        .as_ref()
        .ok_or_else(|| Error::Parameter("model has no process".into()))?;
    let r = process_residual(params, disc, latent);
    let g: f64 = (0..disc.len())
        .map(|k| -(disc.h[k] - latent.v_w[k]) * r[k] / latent.v_w[k])
        .sum();
    let info = match pp.v_priors(&disc.h)? {
        None => Some(0.0),
        Some(priors) => {
            let mut total = 0.0;
            let mut ok = true;
            for (prior, &h) in priors.iter().zip(&disc.h) {
                match (prior.moment(-1.0)?.finite(), prior.moment(1.0)?.finite()) {
                    (Some(inv), Some(m)) => total += h * h * inv - 2.0 * h + m,
                    _ => ok = false,
                }
            }
            ok.then_some(total)
        }
    };
    Ok(ScoreBlock::new(
        BlockId::MuW,
        DVector::from_element(1, g),
        info.map(|i| DMatrix::from_element(1, 1, i)),
    ))
}

/// Derivative in nu of log f(v) for one mixing variable with weight h, and its Fisher information.
fn nu_terms(family: Family, nu: f64, h: f64, v: f64) -> Result<(f64, f64)> {
    match family {
        Family::Nig => Ok((
            0.5 / nu - 0.5 * h * h / v - 0.5 * v + h,
            0.5 / (nu * nu),
        )),
        Family::Gal => Ok((
            h * nu.ln() + h - h * digamma(h * nu) + h * v.ln() - v,
            h * h * trigamma(h * nu) - h / nu,
        )),
        Family::StudentT => Ok((
            0.5 * ((0.5 * nu).ln() + 1.0 - digamma(0.5 * nu) - v.ln() - 1.0 / v),
            0.25 * trigamma(0.5 * nu) - 0.5 / nu,
        )),
        other => Err(Error::Unsupported(format!("{other} family has no tail parameter"))),
    }
}

/// Which component a tail-parameter score refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NuTag {
    Noise,
    RandomEffect,
    Process,
}

/// Tail-parameter score from the mixing-law log-densities of the component's variance factors.
pub fn score_nu(
    params: &ModelParams,
    disc: Option<&Discretization>,
    latent: &LatentState,
    tag: NuTag,
) -> Result<ScoreBlock> {
    let (family, nu, terms, block): (Family, f64, Vec<(f64, f64)>, BlockId) = match tag {
        NuTag::Noise => {
            let v = match params.noise_scope {
                NoiseScope::PerObservation => latent.v_z.iter().map(|&v| (1.0, v)).collect(),
                NoiseScope::PerSubject => vec![(1.0, latent.v_z[0])],
            };
            (params.noise.family, params.noise.nu, v, BlockId::NuZ)
        }
        NuTag::RandomEffect => (params.re.family, params.re.nu, vec![(1.0, latent.v_u)], BlockId::NuU),
        NuTag::Process => {
            let pp = params
                .process
                .as_ref()
                .ok_or_else(|| Error::Parameter("model has no process".into()))?;
            let disc = disc.ok_or_else(|| Error::Parameter("process score needs a discretization".into()))?;
            let v = disc.h.iter().copied().zip(latent.v_w.iter().copied()).collect();
            (pp.family, pp.nu, v, BlockId::NuW)
        }
    };
    let (mut g, mut info) = (0.0, 0.0);
    for (h, v) in terms {
        let (gi, ii) = nu_terms(family, nu, h, v)?;
        g += gi;
        info += ii;
    }
    Ok(ScoreBlock::new(
        block,
        DVector::from_element(1, g),
        Some(DMatrix::from_element(1, 1, info)),
    ))
}

/// One scalar of the unconstrained parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamId {
    Beta(usize),
    LogSigma,
    /// Entry of vech(Sigma).
    ReCov(usize),
    MuU(usize),
    LogNuZ,
    LogNuU,
    LogKappa,
    LogTau,
    MuW,
    LogNuW,
}

impl ParamId {
    pub fn is_log(self) -> bool {
        matches!(
            self,
            ParamId::LogSigma | ParamId::LogNuZ | ParamId::LogNuU | ParamId::LogKappa | ParamId::LogTau | ParamId::LogNuW
        )
    }
}

/// Ordering of the free parameters of a model structure.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamLayout {
    ids: Vec<ParamId>,
    blocks: Vec<(BlockId, Range<usize>)>,
    q: usize,
}

fn has_nu(c: &Component) -> bool {
    c.family.has_nu()
}

impl ParamLayout {
    pub fn for_params(params: &ModelParams) -> Self {
        let mut ids = Vec::new();
        let mut blocks = Vec::new();
        let q = params.q();
        let mut push = |block: BlockId, new: Vec<ParamId>, ids: &mut Vec<ParamId>| {
            if !new.is_empty() {
                let start = ids.len();
                ids.extend(new);
                blocks.push((block, start..ids.len()));
            }
        };
        push(BlockId::Beta, (0..params.p()).map(ParamId::Beta).collect(), &mut ids);
        push(BlockId::Sigma, vec![ParamId::LogSigma], &mut ids);
        push(BlockId::ReCov, (0..q * (q + 1) / 2).map(ParamId::ReCov).collect(), &mut ids);
        if params.mu_u.is_some() && q > 0 {
            push(BlockId::MuU, (0..q).map(ParamId::MuU).collect(), &mut ids);
        }
        if has_nu(&params.noise) {
            push(BlockId::NuZ, vec![ParamId::LogNuZ], &mut ids);
        }
        if q > 0 && has_nu(&params.re) {
            push(BlockId::NuU, vec![ParamId::LogNuU], &mut ids);
        }
        if let Some(pp) = &params.process {
            let ops = match pp.operator.kind {
                OperatorKind::Exponential => vec![ParamId::LogKappa, ParamId::LogTau],
                OperatorKind::IntegratedRandomWalk => vec![ParamId::LogTau],
            };
            push(BlockId::Operator, ops, &mut ids);
            if pp.mu.is_some() {
                push(BlockId::MuW, vec![ParamId::MuW], &mut ids);
            }
            if pp.family.has_nu() {
                push(BlockId::NuW, vec![ParamId::LogNuW], &mut ids);
            }
        }
        ParamLayout { ids, blocks, q }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[ParamId] {
        &self.ids
    }

    pub fn blocks(&self) -> &[(BlockId, Range<usize>)] {
        &self.blocks
    }

    pub fn block_range(&self, block: BlockId) -> Option<Range<usize>> {
        self.blocks.iter().find(|(b, _)| *b == block).map(|(_, r)| r.clone())
    }

    pub fn pack(&self, params: &ModelParams) -> DVector<f64> {
        let vs = if self.q > 0 {
            vech(&params.re_cov).expect("square covariance")
        } else {
            DVector::zeros(0)
        };
        let pp = params.process.as_ref();
        DVector::from_iterator(
            self.len(),
            self.ids.iter().map(|id| match *id {
                ParamId::Beta(i) => params.beta[i],
                ParamId::LogSigma => params.sigma.ln(),
                ParamId::ReCov(i) => vs[i],
                ParamId::MuU(i) => params.mu_u.as_ref().map_or(0.0, |m| m[i]),
                ParamId::LogNuZ => params.noise.nu.ln(),
                ParamId::LogNuU => params.re.nu.ln(),
                ParamId::LogKappa => pp.map_or(0.0, |p| p.operator.kappa.ln()),
                ParamId::LogTau => pp.map_or(0.0, |p| p.operator.tau.ln()),
                ParamId::MuW => pp.map_or(0.0, |p| p.mu()),
                ParamId::LogNuW => pp.map_or(0.0, |p| p.nu.ln()),
            }),
        )
    }

    /// Writes `theta` into a copy of `template`. Families are left untouched.
    pub fn unpack(&self, theta: &DVector<f64>, template: &ModelParams) -> Result<ModelParams> {
        if theta.len() != self.len() {
            return Err(Error::Shape(format!("parameter vector has length {}, layout {}", theta.len(), self.len())));
        }
        let mut p = template.clone();
        let mut vs = if self.q > 0 {
            vech(&p.re_cov)?
        } else {
            DVector::zeros(0)
        };
        for (id, &v) in self.ids.iter().zip(theta.iter()) {
            match *id {
                ParamId::Beta(i) => p.beta[i] = v,
                ParamId::LogSigma => p.sigma = v.exp(),
                ParamId::ReCov(i) => vs[i] = v,
                ParamId::MuU(i) => {
                    if let Some(m) = p.mu_u.as_mut() {
                        m[i] = v;
                    }
                }
                ParamId::LogNuZ => p.noise.nu = v.exp(),
                ParamId::LogNuU => p.re.nu = v.exp(),
                ParamId::LogKappa => {
                    if let Some(pp) = p.process.as_mut() {
                        pp.operator.kappa = v.exp();
                    }
                }
                ParamId::LogTau => {
                    if let Some(pp) = p.process.as_mut() {
                        pp.operator.tau = v.exp();
                    }
                }
                ParamId::MuW => {
                    if let Some(pp) = p.process.as_mut() {
                        if pp.mu.is_some() {
                            pp.mu = Some(v);
                        }
                    }
                }
                ParamId::LogNuW => {
                    if let Some(pp) = p.process.as_mut() {
                        pp.nu = v.exp();
                    }
                }
            }
        }
        if self.q > 0 {
            p.re_cov = crate::kernels::linalg::unvech(&vs)?;
        }
        Ok(p)
    }

    /// `false` for coordinates the current families ignore (tail parameters of
    /// switched components, cleared skewness).
    pub fn live_mask(&self, params: &ModelParams) -> Vec<bool> {
        self.ids
            .iter()
            .map(|id| match id {
                ParamId::LogNuZ => nu_live(params.noise.family),
                ParamId::LogNuU => nu_live(params.re.family),
                ParamId::LogNuW => params.process.as_ref().is_some_and(|p| nu_live(p.family)),
                ParamId::MuW => params.process.as_ref().is_some_and(|p| p.mu.is_some()),
                ParamId::MuU(_) => params.mu_u.is_some(),
                _ => true,
            })
            .collect()
    }

    /// Column names of the natural-scale parameters, in layout order.
    pub fn names(&self) -> Vec<String> {
        self.ids
            .iter()
            .map(|id| match *id {
                ParamId::Beta(i) => format!("beta{i}"),
                ParamId::LogSigma => "sigma".into(),
                ParamId::ReCov(i) => {
                    let (r, c) = vech_position(i);
                    format!("Sigma{r}{c}")
                }
                ParamId::MuU(i) => format!("mu_u{i}"),
                ParamId::LogNuZ => "nu_z".into(),
                ParamId::LogNuU => "nu_u".into(),
                ParamId::LogKappa => "kappa".into(),
                ParamId::LogTau => "tau".into(),
                ParamId::MuW => "mu_w".into(),
                ParamId::LogNuW => "nu_w".into(),
            })
            .collect()
    }

    /// Natural-scale values (exponentiating log coordinates).
    pub fn natural(&self, theta: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            theta.len(),
            self.ids.iter().zip(theta.iter()).map(|(id, &v)| if id.is_log() { v.exp() } else { v }),
        )
    }
}

/// (row, column) of vech entry `i`.
pub fn vech_position(i: usize) -> (usize, usize) {
    let mut c = 0;
    while (c + 1) * (c + 2) / 2 <= i {
        c += 1;
    }
    (i - c * (c + 1) / 2, c)
}

/// Whether a component's tail parameter is currently live (its family still uses it).
fn nu_live(family: Family) -> bool {
    family.has_nu()
}

/// Natural-scale value of a log coordinate, used to chain the gradient.
fn log_factor(id: ParamId, params: &ModelParams) -> f64 {
    let pp = params.process.as_ref();
    match id {
        ParamId::LogSigma => params.sigma,
        ParamId::LogNuZ => params.noise.nu,
        ParamId::LogNuU => params.re.nu,
        ParamId::LogKappa => pp.map_or(1.0, |p| p.operator.kappa),
        ParamId::LogTau => pp.map_or(1.0, |p| p.operator.tau),
        ParamId::LogNuW => pp.map_or(1.0, |p| p.nu),
        _ => 1.0,
    }
}

/// All score blocks of one subject and one latent draw.
pub fn score_blocks(
    params: &ModelParams,
    subject: &Subject,
    disc: Option<&Discretization>,
    latent: &LatentState,
) -> Result<Vec<ScoreBlock>> {
    let mut out = vec![score_beta(params, subject, latent)?, score_sigma_noise(params, subject, latent)?];
    if params.q() > 0 {
        out.push(score_sigma_matrix(params, latent)?);
        if params.mu_u.is_some() {
            out.push(score_mu_u(params, latent)?);
        }
        if nu_live(params.re.family) {
            out.push(score_nu(params, disc, latent, NuTag::RandomEffect)?);
        }
    }
    if nu_live(params.noise.family) {
        out.push(score_nu(params, disc, latent, NuTag::Noise)?);
    }
    if let (Some(pp), Some(disc)) = (&params.process, disc) {
        out.push(score_operator(params, disc, latent)?);
        if pp.mu.is_some() {
            out.push(score_mu_w(params, disc, latent)?);
        }
        if nu_live(pp.family) {
            out.push(score_nu(params, Some(disc), latent, NuTag::Process)?);
        }
    }
    Ok(out)
}

/// Expected information of one subject in layout coordinates. Unavailable
/// entries are zero and flagged `false` in the returned mask.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectInfo {
    pub matrix: DMatrix<f64>,
    pub available: Vec<bool>,
}

/// Layout-coordinate gradient of one subject and draw, and its expected information.
pub fn subject_score(
    layout: &ParamLayout,
    params: &ModelParams,
    subject: &Subject,
    disc: Option<&Discretization>,
    latent: &LatentState,
) -> Result<(DVector<f64>, SubjectInfo)> {
    let n = layout.len();
    let mut g = DVector::zeros(n);
    let mut info = DMatrix::zeros(n, n);
    let mut available = vec![false; n];
    for block in score_blocks(params, subject, disc, latent)? {
        let range = match layout.block_range(block.block) {
            Some(r) => r,
            None => continue,
        };
        if range.len() != block.gradient.len() {
            return Err(Error::Shape(format!("{:?} block size changed", block.block)));
        }
        for (k, i) in range.clone().enumerate() {
            g[i] = block.gradient[k] * log_factor(layout.ids[i], params);
        }
        if let Some(h) = &block.expected_hessian {
            for (a, i) in range.clone().enumerate() {
                available[i] = true;
                for (b, j) in range.clone().enumerate() {
                    info[(i, j)] = h[(a, b)] * log_factor(layout.ids[i], params) * log_factor(layout.ids[j], params);
                }
            }
        }
    }
    // parameters whose family no longer uses them carry no information
    for (i, live) in layout.live_mask(params).into_iter().enumerate() {
        if !live {
            g[i] = 0.0;
            info[(i, i)] = 1.0;
            available[i] = true;
        }
    }
    Ok((g, SubjectInfo { matrix: info, available }))
}

/// Derivative of K with respect to each log operator coordinate, for tests and diagnostics.
pub fn operator_log_derivatives(disc: &Discretization) -> Vec<(OperatorParam, crate::kernels::banded::Tridiag)> {
    disc.params()
        .iter()
        .map(|&p| {
            let scale = match p {
                OperatorParam::Kappa => disc.spec.kappa,
                OperatorParam::Tau => disc.spec.tau,
            };
            (p, disc.derivative(p).scaled(scale))
        })
        .collect()
}

/// Weighted Monte-Carlo gradient and block-diagonal preconditioner over sub-sampled subjects.
///
/// `draws[i]` holds the Gibbs draws of subject `subjects[i]`. Blocks without an
/// expected information use `fallback` (layout-sized) or the identity.
pub fn assemble_gradient(
    layout: &ParamLayout,
    params: &ModelParams,
    subjects: &[&Subject],
    draws: &[Vec<LatentState>],
    weights: &[f64],
    fallback: Option<&DMatrix<f64>>,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if subjects.len() != draws.len() || subjects.len() != weights.len() {
        return Err(Error::Shape("subjects, draws and weights must have equal lengths".into()));
    }
    if weights.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::Parameter("sub-sampling weights must be positive".into()));
    }
    let n = layout.len();
    let mut g = DVector::zeros(n);
    let mut info = DMatrix::zeros(n, n);
    let mut available = vec![true; n];
    for ((subject, ds), &w) in subjects.iter().zip(draws).zip(weights) {
        if ds.is_empty() {
            return Err(Error::Config(format!("no Gibbs draws for subject {}", subject.record.id)));
        }
        let disc = params.discretize(subject)?;
        let mut gi = DVector::zeros(n);
        let mut last = None;
        for d in ds {
            let (s, inf) = subject_score(layout, params, subject, disc.as_ref(), d)?;
            gi += s;
            last = Some(inf);
        }
        g += gi * (w / ds.len() as f64);
        let inf = last.expect("at least one draw");
        info += inf.matrix * w;
        for (a, b) in available.iter_mut().zip(inf.available) {
            *a &= b;
        }
    }
    if !available.iter().any(|&a| a) && fallback.is_none() {
        return Err(Error::Config("no parameter block has an expected information".into()));
    }
    fill_unavailable(&mut info, &available, fallback);
    Ok((g, info))
}

/// Replaces the rows and columns of unavailable entries by `fallback` (or the identity).
pub fn fill_unavailable(info: &mut DMatrix<f64>, available: &[bool], fallback: Option<&DMatrix<f64>>) {
    let n = available.len();
    for i in 0..n {
        if available[i] {
            continue;
        }
        for j in 0..n {
            info[(i, j)] = 0.0;
            info[(j, i)] = 0.0;
        }
    }
    for i in 0..n {
        if available[i] {
            continue;
        }
        for j in 0..n {
            if !available[j] {
                info[(i, j)] = match fallback {
                    Some(f) => f[(i, j)],
                    None => {
                        if i == j {
                            1.0
                        } else {
                            0.0
                        }
                    }
                };
            }
        }
    }
}
