#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use ngmix::mixture::Family;
use ngmix::model::{Component, LatentState, ModelParams, NoiseScope, ProcessParams, Subject, SubjectRecord};
use ngmix::operator::{GridConfig, OperatorKind, OperatorSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Intercept + time fixed effects, random intercept (+ slope when q = 2).
pub fn design(id: &str, times: &[f64], q: usize) -> SubjectRecord {
    let n = times.len();
    let x = DMatrix::from_fn(n, 2, |j, c| if c == 0 { 1.0 } else { times[j] });
    let d = DMatrix::from_fn(n, q, |j, c| if c == 0 { 1.0 } else { times[j] });
    SubjectRecord::design(id, times.to_vec(), x, d).unwrap()
}

pub fn gaussian_params(q: usize, process: Option<OperatorKind>) -> ModelParams {
    let re_cov = match q {
        0 => DMatrix::zeros(0, 0),
        1 => DMatrix::from_element(1, 1, 0.8),
        _ => DMatrix::from_row_slice(2, 2, &[0.8, 0.1, 0.1, 0.3]),
    };
    ModelParams {
        beta: DVector::from_vec(vec![1.0, -0.5]),
        sigma: 0.5,
        noise: Component::normal(),
        noise_scope: NoiseScope::PerObservation,
        re_cov,
        re: Component::normal(),
        mu_u: None,
        process: process.map(|kind| ProcessParams {
            family: Family::Normal,
            nu: 1.0,
            mu: None,
            operator: OperatorSpec { kind, kappa: 0.7, tau: 1.2 },
        }),
    }
}

pub fn prepare(rec: SubjectRecord, params: &ModelParams) -> Subject {
    let cfg = params.process.as_ref().map(|_| GridConfig::default());
    Subject::prepare(rec, cfg.as_ref()).unwrap()
}

/// A latent state with random positive variance factors and random effects.
pub fn random_latent<R: Rng>(params: &ModelParams, subject: &Subject, rng: &mut R) -> LatentState {
    let mut s = LatentState::at_prior_means(params, subject).unwrap();
    for v in s.v_z.iter_mut() {
        *v = rng.random_range(0.3..2.5);
    }
    if params.noise_scope == NoiseScope::PerSubject {
        let v0 = s.v_z[0];
        s.v_z.iter_mut().for_each(|v| *v = v0);
    }
    s.v_u = rng.random_range(0.4..2.0);
    for (v, h) in s.v_w.iter_mut().zip(subject.grid.as_ref().map(|g| g.hat_areas()).unwrap_or_default()) {
        *v = h * rng.random_range(0.3..2.5);
    }
    for u in s.u.iter_mut() {
        *u = rng.random_range(-1.0..1.0);
    }
    for w in s.w.iter_mut() {
        *w = rng.random_range(-1.0..1.0);
    }
    // the random-walk operator pins the first node
    if params.process.as_ref().is_some_and(|p| p.operator.kind == OperatorKind::IntegratedRandomWalk) {
        s.w[0] = 0.0;
    }
    s
}

use ngmix::model::{marginal_loglik_gaussian, simulate};
use ngmix::score::ParamLayout;

/// Marginal mean and covariance of y for an all-Gaussian model, built densely from
/// the stationary Ornstein-Uhlenbeck kernel exp(-kappa |s - t|) / (2 kappa tau^2).
pub fn dense_moments(p: &ModelParams, rec: &SubjectRecord) -> (DVector<f64>, DMatrix<f64>) {
    let n = rec.n();
    let mean = &rec.x * &p.beta;
    let mut cov = DMatrix::identity(n, n) * p.sigma.powi(2);
    if p.q() > 0 {
        cov += &rec.d * &p.re_cov * rec.d.transpose();
    }
    if let Some(pp) = &p.process {
        assert_eq!(pp.operator.kind, OperatorKind::Exponential, "dense oracle covers the exponential kernel only");
        let (k, tau) = (pp.operator.kappa, pp.operator.tau);
        cov += DMatrix::from_fn(n, n, |i, j| (-k * (rec.times[i] - rec.times[j]).abs()).exp() / (2.0 * k * tau * tau));
    }
    (mean, cov)
}

pub fn dense_loglik(p: &ModelParams, rec: &SubjectRecord) -> f64 {
    let (mean, cov) = dense_moments(p, rec);
    let Some(chol) = cov.cholesky() else {
        return f64::NEG_INFINITY;
    };
    let r = DVector::from_column_slice(&rec.y) - mean;
    let z = chol.l().solve_lower_triangular(&r).unwrap();
    let logdet: f64 = chol.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
    -0.5 * (z.norm_squared() + logdet + rec.n() as f64 * (2.0 * std::f64::consts::PI).ln())
}

/// Library evaluation of the same likelihood, for cross-checks.
pub fn library_loglik(p: &ModelParams, s: &Subject) -> f64 {
    marginal_loglik_gaussian(p, s).unwrap()
}

pub fn total_marginal(layout: &ParamLayout, template: &ModelParams, theta: &DVector<f64>, subjects: &[Subject]) -> f64 {
    match layout.unpack(theta, template) {
        Ok(p) if p.validate().is_ok() => subjects.iter().map(|s| dense_loglik(&p, &s.record)).sum(),
        _ => f64::NEG_INFINITY,
    }
}

/// Central-difference Hessian of the summed exact Gaussian log-likelihood.
pub fn marginal_hessian(layout: &ParamLayout, template: &ModelParams, theta: &DVector<f64>, subjects: &[Subject]) -> DMatrix<f64> {
    let d = theta.len();
    let f = |t: &DVector<f64>| total_marginal(layout, template, t, subjects);
    let h = 1e-4;
    let mut hess = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let mut pp = theta.clone();
            pp[i] += h;
            pp[j] += h;
            let mut pm = theta.clone();
            pm[i] += h;
            pm[j] -= h;
            let mut mp = theta.clone();
            mp[i] -= h;
            mp[j] += h;
            let mut mm = theta.clone();
            mm[i] -= h;
            mm[j] -= h;
            let v = (f(&pp) - f(&pm) - f(&mp) + f(&mm)) / (4.0 * h * h);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    hess
}

pub fn marginal_gradient(layout: &ParamLayout, template: &ModelParams, theta: &DVector<f64>, subjects: &[Subject]) -> DVector<f64> {
    let h = 1e-6;
    DVector::from_fn(theta.len(), |i, _| {
        let mut up = theta.clone();
        up[i] += h;
        let mut dn = theta.clone();
        dn[i] -= h;
        (total_marginal(layout, template, &up, subjects) - total_marginal(layout, template, &dn, subjects)) / (2.0 * h)
    })
}

/// Maximizer of the exact Gaussian likelihood by damped Newton steps from `start`.
pub fn gaussian_mle(start: &ModelParams, subjects: &[Subject]) -> DVector<f64> {
    let layout = ParamLayout::for_params(start);
    let mut theta = layout.pack(start);
    for _ in 0..50 {
        let g = marginal_gradient(&layout, start, &theta, subjects);
        let h = marginal_hessian(&layout, start, &theta, subjects);
        let step = (-h).cholesky().map(|c| c.solve(&g)).unwrap_or_else(|| g.clone() * 1e-3);
        let f0 = total_marginal(&layout, start, &theta, subjects);
        let mut t = 1.0;
        loop {
            let cand = &theta + &step * t;
            if total_marginal(&layout, start, &cand, subjects) >= f0 - 1e-9 || t < 1e-6 {
                theta = cand;
                break;
            }
            t *= 0.5;
        }
        if step.norm() < 1e-9 {
            break;
        }
    }
    theta
}

/// Simulated subjects with `n` visits at jittered yearly times.
pub fn simulate_cohort(params: &ModelParams, m: usize, n: usize, seed: u64) -> Vec<Subject> {
    let mut r = rng(seed ^ 0xabcdef);
    let q = params.q();
    let designs: Vec<Subject> = (0..m)
        .map(|i| {
            let times: Vec<f64> = (0..n).map(|j| j as f64 + r.random_range(0.0..0.5)).collect();
            prepare(design(&format!("id{i}"), &times, q), params)
        })
        .collect();
    let recs = simulate(params, &designs, seed).unwrap();
    recs.into_iter().zip(designs).map(|(rec, d)| Subject { record: rec, ..d }).collect()
}

use ngmix::model::complete_loglik;
use ngmix::score::subject_score;

fn complete_total(layout: &ParamLayout, template: &ModelParams, theta: &DVector<f64>, subject: &Subject, latent: &LatentState) -> f64 {
    let p = layout.unpack(theta, template).unwrap();
    let disc = p.discretize(subject).unwrap();
    complete_loglik(&p, subject, disc.as_ref(), latent).unwrap().total()
}

/// Largest relative error between the analytic score and central differences of the
/// complete-data log-likelihood, over 5 random parameter points and every coordinate.
/// Returns the worst error and the coordinate where it occurred.
pub fn score_fd_worst(params: &ModelParams, seed: u64) -> (f64, String) {
    let mut rng = rng(seed);
    let mut worst = (0.0, String::new());
    for point in 0..5 {
        let mut p = params.clone();
        p.beta = p.beta.map(|b| b + rng.random_range(-0.5..0.5));
        p.sigma *= rng.random_range(0.7..1.4);
        let times: Vec<f64> = (0..4).map(|j| j as f64 * 0.6 + rng.random_range(0.0..0.3)).collect();
        let subject = prepare(design(&format!("s{point}"), &times, p.q()), &p);
        let mut rec = subject.record.clone();
        rec.y = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
        let subject = Subject { record: rec, ..subject };
        let latent = random_latent(&p, &subject, &mut rng);
        let layout = ParamLayout::for_params(&p);
        let theta = layout.pack(&p);
        let disc = p.discretize(&subject).unwrap();
        let (g, _) = subject_score(&layout, &p, &subject, disc.as_ref(), &latent).unwrap();
        for i in 0..layout.len() {
            let h = 1e-6 * theta[i].abs().max(1.0);
            let mut up = theta.clone();
            up[i] += h;
            let mut dn = theta.clone();
            dn[i] -= h;
            let fd = (complete_total(&layout, &p, &up, &subject, &latent) - complete_total(&layout, &p, &dn, &subject, &latent)) / (2.0 * h);
            let rel = (fd - g[i]).abs() / fd.abs().max(1e-2);
            if rel >= worst.0 {
                worst = (rel, format!("{} at point {point}", layout.names()[i]));
            }
        }
    }
    worst
}

/// Model configurations that between them exercise every score block.
pub fn score_test_models() -> Vec<(&'static str, ModelParams)> {
    let mut out = vec![
        ("gaussian, exponential operator, q=2", gaussian_params(2, Some(OperatorKind::Exponential))),
        ("gaussian, random-walk operator, q=1", gaussian_params(1, Some(OperatorKind::IntegratedRandomWalk))),
        ("gaussian, no process, q=0", gaussian_params(0, None)),
    ];
    let mut p = gaussian_params(2, Some(OperatorKind::Exponential));
    p.noise = Component::new(Family::Nig, 1.3);
    p.re = Component::new(Family::Nig, 2.0);
    p.mu_u = Some(DVector::from_vec(vec![0.4, -0.2]));
    let pp = p.process.as_mut().unwrap();
    pp.family = Family::Nig;
    pp.nu = 0.8;
    pp.mu = Some(0.3);
    out.push(("skewed NIG in every component", p));
    let mut p = gaussian_params(1, Some(OperatorKind::IntegratedRandomWalk));
    p.noise = Component::new(Family::StudentT, 4.5);
    p.noise_scope = NoiseScope::PerSubject;
    let pp = p.process.as_mut().unwrap();
    pp.family = Family::Gal;
    pp.nu = 1.7;
    pp.mu = Some(-0.4);
    out.push(("subject-level t noise, skewed GAL process", p));
    let mut p = gaussian_params(1, Some(OperatorKind::Exponential));
    p.noise = Component::new(Family::StudentT, 3.0);
    p.process.as_mut().unwrap().family = Family::Cauchy;
    out.push(("t noise, Cauchy process", p));
    out
}

/// Unnormalized GIG log-density (p - 1) ln x - (a x + b / x) / 2.
pub fn gig_ln_kernel(p: f64, a: f64, b: f64, x: f64) -> f64 {
    (p - 1.0) * x.ln() - 0.5 * (a * x + b / x)
}

/// CDF of a density on (0, inf) given up to a constant by its log, tabulated by the
/// trapezoid rule on a fine grid in log x.
pub struct LogGridCdf {
    s: Vec<f64>,
    cdf: Vec<f64>,
}

impl LogGridCdf {
    pub fn new(log_density: &dyn Fn(f64) -> f64) -> Self {
        let n = 200_001;
        let (lo, hi) = (-60.0, 60.0);
        let s: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
        let lf: Vec<f64> = s.iter().map(|&v| {
            let l = log_density(v.exp()) + v;
            if l.is_nan() { f64::NEG_INFINITY } else { l }
        }).collect();
        let top = lf.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let f: Vec<f64> = lf.iter().map(|l| (l - top).exp()).collect();
        let mut cdf = vec![0.0; n];
        for i in 1..n {
            cdf[i] = cdf[i - 1] + 0.5 * (f[i] + f[i - 1]) * (s[i] - s[i - 1]);
        }
        let total = cdf[n - 1];
        cdf.iter_mut().for_each(|c| *c /= total);
        LogGridCdf { s, cdf }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return 0.0;
        }
        let v = x.ln();
        let i = self.s.partition_point(|&t| t <= v);
        if i == 0 {
            return 0.0;
        }
        if i >= self.s.len() {
            return 1.0;
        }
        let w = (v - self.s[i - 1]) / (self.s[i] - self.s[i - 1]);
        self.cdf[i - 1] * (1.0 - w) + self.cdf[i] * w
    }
}

pub struct GigTable(LogGridCdf);

impl GigTable {
    pub fn new(p: f64, a: f64, b: f64) -> Self {
        GigTable(LogGridCdf::new(&|x| gig_ln_kernel(p, a, b, x)))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.0.cdf(x)
    }
}
