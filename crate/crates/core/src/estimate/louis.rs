use crate::error::{Error, Result};
use crate::gibbs::sweep_once;
use crate::model::{subject_rng, LatentState, ModelParams, Subject};
use crate::score::{subject_score, ParamLayout};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LouisConfig {
    /// Gibbs draws per subject.
    pub draws: usize,
    /// Sweeps discarded before the first draw.
    pub burn: usize,
    /// Batches used for the Monte-Carlo error of the standard errors.
    pub batches: usize,
    pub seed: u64,
}

impl Default for LouisConfig {
    fn default() -> Self {
        LouisConfig {
            draws: 200,
            burn: 20,
            batches: 4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LouisResult {
    /// Observed information in layout coordinates.
    pub fim: DMatrix<f64>,
    /// The same estimate from each batch of draws.
    pub batch_fims: Vec<DMatrix<f64>>,
    /// Diagonal of the summed conditional score variance.
    pub variance_diag: DVector<f64>,
}

/// Sums of score, score outer product and Hessian over a run of draws.
struct Moments {
    n: usize,
    g: DVector<f64>,
    gg: DMatrix<f64>,
    h: DMatrix<f64>,
}

impl Moments {
    fn new(d: usize) -> Self {
        Moments {
            n: 0,
            g: DVector::zeros(d),
            gg: DMatrix::zeros(d, d),
            h: DMatrix::zeros(d, d),
        }
    }

    fn add(&mut self, g: &DVector<f64>, h: &DMatrix<f64>) {
        self.n += 1;
        self.g += g;
        self.gg += g * g.transpose();
        self.h += h;
    }

    /// -mean(H) - Cov(g), and the covariance part.
    fn information(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let n = self.n as f64;
        let mean = &self.g / n;
        let denom = (n - 1.0).max(1.0);
        let cov = (&self.gg - &mean * mean.transpose() * n) / denom;
        (-&self.h / n - &cov, cov)
    }
}

/// Layout-coordinate Hessian of the complete-data log-likelihood with the latent state fixed,
/// by central differences of the analytic score.
pub fn complete_hessian(layout: &ParamLayout, params: &ModelParams, subject: &Subject, latent: &LatentState) -> Result<DMatrix<f64>> {
    let theta = layout.pack(params);
    let d = layout.len();
    let live = layout.live_mask(params);
    let mut h = DMatrix::zeros(d, d);
    for i in 0..d {
        if !live[i] {
            continue;
        }
        let step = 1e-5 * theta[i].abs().max(1.0);
        let mut grads = Vec::with_capacity(2);
        for sgn in [1.0, -1.0] {
            let mut t = theta.clone();
            t[i] += sgn * step;
            let p = layout.unpack(&t, params)?;
            let disc = p.discretize(subject)?;
            grads.push(subject_score(layout, &p, subject, disc.as_ref(), latent)?.0);
        }
        let col = (&grads[0] - &grads[1]) / (2.0 * step);
        h.set_column(i, &col);
    }
    Ok((&h + h.transpose()) * 0.5)
}

/// Observed information -E[∇∇L | y] - Var[∇L | y] summed over subjects, each
/// expectation estimated from a Gibbs chain at `params`.
pub fn louis_observed_fim(
    params: &ModelParams,
    layout: &ParamLayout,
    subjects: &[Subject],
    start: Option<&[LatentState]>,
    cfg: &LouisConfig,
) -> Result<LouisResult> {
    if cfg.draws < 2 || cfg.batches == 0 || cfg.draws < 2 * cfg.batches {
        return Err(Error::Config(format!(
            "Louis estimate needs at least two draws per batch (draws {}, batches {})",
            cfg.draws, cfg.batches
        )));
    }
    let d = layout.len();
    let per_subject: Vec<(Vec<Moments>, Moments)> = subjects
        .par_iter()
        .enumerate()
        .map(|(i, subject)| {
            let mut rng = subject_rng(cfg.seed ^ 0x5eed_1f15, i);
            let disc = params.discretize(subject)?;
            let mut state = match start {
                Some(s) => s[i].clone(),
                None => LatentState::at_prior_means(params, subject)?,
            };
            for _ in 0..cfg.burn {
                state = sweep_once(params, subject, disc.as_ref(), state, &mut rng)?;
            }
            let per_batch = cfg.draws / cfg.batches;
            let mut batches: Vec<Moments> = (0..cfg.batches).map(|_| Moments::new(d)).collect();
            let mut all = Moments::new(d);
            for k in 0..per_batch * cfg.batches {
                state = sweep_once(params, subject, disc.as_ref(), state, &mut rng)?;
                let (g, _) = subject_score(layout, params, subject, disc.as_ref(), &state)?;
                let h = complete_hessian(layout, params, subject, &state)?;
                batches[k / per_batch].add(&g, &h);
                all.add(&g, &h);
            }
            Ok((batches, all))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut fim = DMatrix::zeros(d, d);
    let mut var = DMatrix::zeros(d, d);
    let mut batch_fims = vec![DMatrix::zeros(d, d); cfg.batches];
    for (batches, all) in &per_subject {
        let (info, cov) = all.information();
        fim += info;
        var += cov;
        for (b, m) in batch_fims.iter_mut().zip(batches) {
            *b += m.information().0;
        }
    }
    let sym = |m: &DMatrix<f64>| (m + m.transpose()) * 0.5;
    Ok(LouisResult {
        fim: sym(&fim),
        batch_fims: batch_fims.iter().map(sym).collect(),
        variance_diag: var.diagonal(),
    })
}

/// Standard errors sqrt(diag(I⁻¹)) over the live coordinates; NaN elsewhere.
/// Falls back to a pseudo-inverse with a warning when the information is not positive definite.
pub fn standard_errors(fim: &DMatrix<f64>, live: &[bool]) -> DVector<f64> {
    let idx: Vec<usize> = (0..live.len()).filter(|&i| live[i]).collect();
    let k = idx.len();
    let sub = DMatrix::from_fn(k, k, |a, b| fim[(idx[a], idx[b])]);
    let inv = match sub.clone().cholesky() {
        Some(c) => c.inverse(),
        None => {
            log::warn!("observed information is not positive definite; using a pseudo-inverse");
            sub.pseudo_inverse(1e-12).unwrap_or_else(|_| DMatrix::from_element(k, k, f64::NAN))
        }
    };
    let mut se = DVector::from_element(live.len(), f64::NAN);
    for (a, &i) in idx.iter().enumerate() {
        se[i] = inv[(a, a)].max(0.0).sqrt();
    }
    se
}
