use crate::error::{Error, Result};
use crate::estimate::louis::{louis_observed_fim, standard_errors, LouisConfig};
use crate::estimate::pvalue::p_bounds;
use crate::estimate::schedule::StepSchedule;
use crate::estimate::subsample::{Strategy, SubsamplePlan};
use crate::gibbs::{sweep_once, GibbsConfig};
use crate::mixture::Family;
use crate::model::{subject_rng, LatentState, ModelParams, Subject};
use crate::score::{fill_unavailable, subject_score, ParamLayout};
use crate::tv::SwitchRule;
use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub schedule: StepSchedule,
    pub gibbs: GibbsConfig,
    pub strategy: Strategy,
    pub switch: SwitchRule,
    pub seed: u64,
    /// Iterations used to calibrate the preconditioner of blocks without an expected information.
    pub warmup_iters: usize,
    /// Largest change of any log-scale coordinate in one step.
    pub max_log_step: f64,
    /// Batches for the batch-means Monte-Carlo standard errors.
    pub batches: usize,
    /// Draws per subject for the observed information; 0 skips it.
    pub louis_draws: usize,
}

impl FitConfig {
    pub fn new(schedule: StepSchedule) -> Self {
        FitConfig {
            schedule,
            gibbs: GibbsConfig::default(),
            strategy: Strategy::Full,
            switch: SwitchRule::default(),
            seed: 1,
            warmup_iters: 20,
            max_log_step: 1.0,
            batches: 20,
            louis_draws: 200,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        GibbsConfig::new(self.gibbs.sweeps_per_step, self.gibbs.warm_start)?;
        if !(self.max_log_step > 0.0) {
            return Err(Error::Config("max_log_step must be positive".into()));
        }
        if self.batches < 2 {
            return Err(Error::Config("need at least 2 batches for Monte-Carlo errors".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: ModelParams,
    pub layout: ParamLayout,
    pub names: Vec<String>,
    /// Polyak average of post-burn-in iterates in layout coordinates.
    pub theta: DVector<f64>,
    /// Natural-scale estimates.
    pub estimates: DVector<f64>,
    /// Louis observed information in layout coordinates (empty when skipped).
    pub observed_fim: DMatrix<f64>,
    pub std_errors: DVector<f64>,
    pub mc_se: DVector<f64>,
    /// Monte-Carlo error of the standard errors.
    pub se_mc_se: DVector<f64>,
    pub p_lower: DVector<f64>,
    pub p_upper: DVector<f64>,
    /// Natural-scale parameters after each iteration.
    pub trace: Vec<Vec<f64>>,
    pub final_states: Vec<LatentState>,
}

/// Applies the switching rule to the current parameters. Noise and random
/// effects switch to Normal above the upper threshold and have nu clamped at
/// the lower one; an NIG process also switches to Cauchy below the lower
/// threshold, rescaling tau so that the increments keep their scale. GAL and
/// t tail parameters are clamped to the threshold interval.
/// Returns true when a family changed.
pub fn apply_switching(params: &mut ModelParams, rule: &SwitchRule) -> bool {
    let (lo, hi) = (rule.to_cauchy_below, rule.to_gaussian_above);
    let mut changed = false;
    let q = params.q();
    let mut component = |c: &mut crate::model::Component, active: bool| match c.family {
        Family::Nig if active => {
            if c.nu > hi {
                c.family = Family::Normal;
                changed = true;
            } else if c.nu < lo {
                c.nu = lo;
            }
        }
        Family::Gal | Family::StudentT => c.nu = c.nu.clamp(lo, hi),
        _ => {}
    };
    component(&mut params.noise, true);
    component(&mut params.re, q > 0);
    if let Some(pp) = params.process.as_mut() {
        match pp.family {
            Family::Nig if pp.nu > hi => {
                pp.family = Family::Normal;
                pp.mu = None;
                changed = true;
            }
            Family::Nig if pp.nu < lo => {
                // GIG(-1/2, nu, h² nu) is close to GIG(-1/2, 0, h² nu); the Cauchy law uses 3h²
                pp.operator.tau *= (3.0 / pp.nu).sqrt();
                pp.family = Family::Cauchy;
                pp.mu = None;
                changed = true;
            }
            Family::Gal => pp.nu = pp.nu.clamp(lo, hi),
            _ => {}
        }
    }
    if changed {
        log::info!(
            "switched families: noise {}, random effect {}, process {}",
            params.noise.family,
            params.re.family,
            params.process.as_ref().map_or("none".to_string(), |p| p.family.to_string())
        );
    }
    changed
}

/// Resets the variance factors of components whose family changed.
fn reset_switched(params: &ModelParams, subject: &Subject, state: &mut LatentState) -> Result<()> {
    let fresh = LatentState::at_prior_means(params, subject)?;
    if params.noise.family == Family::Normal {
        state.v_z = fresh.v_z;
    }
    if params.re.family == Family::Normal {
        state.v_u = fresh.v_u;
    }
    if params.process.as_ref().is_some_and(|p| matches!(p.family, Family::Normal | Family::Cauchy)) {
        state.v_w = fresh.v_w;
    }
    Ok(())
}

/// Batch-means standard error of the mean of each column of `rows`.
pub fn batch_means_se(rows: &[DVector<f64>], batches: usize) -> DVector<f64> {
    let d = rows.first().map_or(0, |r| r.len());
    let b = batches.min(rows.len());
    if b < 2 {
        return DVector::from_element(d, f64::NAN);
    }
    let size = rows.len() / b;
    let means: Vec<DVector<f64>> = (0..b)
        .map(|k| {
            let chunk = &rows[k * size..(k + 1) * size];
            chunk.iter().fold(DVector::zeros(d), |acc, r| acc + r) / size as f64
        })
        .collect();
    let grand = means.iter().fold(DVector::zeros(d), |acc, m| acc + m) / b as f64;
    let var = means
        .iter()
        .fold(DVector::zeros(d), |acc: DVector<f64>, m| acc + (m - &grand).map(|x| x * x))
        / (b as f64 - 1.0);
    var.map(|v| (v / b as f64).sqrt())
}

fn solve_spd(p: &DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    let sym = (p + p.transpose()) * 0.5;
    if let Some(c) = sym.clone().cholesky() {
        return c.solve(g);
    }
    let n = sym.nrows();
    let ridge = sym.trace().abs() / n.max(1) as f64 * 1e-8 + 1e-12;
    let mut m = sym;
    for _ in 0..30 {
        for i in 0..n {
            m[(i, i)] += ridge;
        }
        if let Some(c) = m.clone().cholesky() {
            return c.solve(g);
        }
    }
    g.clone()
}

struct Engine<'a> {
    subjects: &'a [Subject],
    layout: ParamLayout,
    cfg: FitConfig,
    states: Vec<LatentState>,
    rngs: Vec<ChaCha8Rng>,
}

impl Engine<'_> {
    /// Gibbs sweeps for selected subjects; returns each one's score averaged over sweeps.
    fn scores(&mut self, params: &ModelParams, selected: &[Option<f64>]) -> Result<Vec<Option<DVector<f64>>>> {
        let layout = &self.layout;
        let gibbs = self.cfg.gibbs;
        let subjects = self.subjects;
        self.states
            .par_iter_mut()
            .zip(self.rngs.par_iter_mut())
            .enumerate()
            .map(|(i, (state, rng))| {
                if selected[i].is_none() {
                    return Ok(None);
                }
                let subject = &subjects[i];
                let disc = params.discretize(subject)?;
                if !gibbs.warm_start {
                    *state = LatentState::at_prior_means(params, subject)?;
                }
                let mut g = DVector::zeros(layout.len());
                for _ in 0..gibbs.sweeps_per_step {
                    *state = sweep_once(params, subject, disc.as_ref(), state.clone(), rng)?;
                    g += subject_score(layout, params, subject, disc.as_ref(), state)?.0;
                }
                Ok(Some(g / gibbs.sweeps_per_step as f64))
            })
            .collect()
    }

    /// Expected information summed over all subjects, with the availability mask.
    fn expected_info(&self, params: &ModelParams) -> Result<(DMatrix<f64>, Vec<bool>)> {
        let d = self.layout.len();
        let parts = self
            .subjects
            .par_iter()
            .zip(self.states.par_iter())
            .map(|(subject, state)| {
                let disc = params.discretize(subject)?;
                Ok(subject_score(&self.layout, params, subject, disc.as_ref(), state)?.1)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut info = DMatrix::zeros(d, d);
        let mut available = vec![true; d];
        for p in parts {
            info += p.matrix;
            for (a, b) in available.iter_mut().zip(p.available) {
                *a &= b;
            }
        }
        Ok((info, available))
    }
}

/// Stochastic-gradient maximum likelihood with Gibbs-sampled latents.
pub fn fit(subjects: &[Subject], init: &ModelParams, cfg: &FitConfig) -> Result<FitResult> {
    cfg.validate()?;
    init.validate()?;
    if subjects.is_empty() {
        return Err(Error::Domain("no subjects to fit".into()));
    }
    let m = subjects.len();
    let mut params = init.clone();
    apply_switching(&mut params, &cfg.switch);
    let layout = ParamLayout::for_params(&params);
    let names = layout.names();
    let designs: Vec<DMatrix<f64>> = subjects.iter().map(|s| s.record.x.clone()).collect();
    let plan = SubsamplePlan::new(cfg.strategy, &designs)?;
    let mut select_rng = subject_rng(cfg.seed, usize::MAX);
    let states = subjects
        .iter()
        .map(|s| LatentState::at_prior_means(&params, s))
        .collect::<Result<Vec<_>>>()?;
    let rngs = (0..m).map(|i| subject_rng(cfg.seed, i)).collect();
    let mut engine = Engine {
        subjects,
        layout: layout.clone(),
        cfg: *cfg,
        states,
        rngs,
    };
    let mut theta = layout.pack(&params);
    let d = layout.len();
    let mut opg = DMatrix::<f64>::zeros(d, d);
    let mut opg_weight = 0.0;
    let mut trace: Vec<Vec<f64>> = Vec::with_capacity(cfg.schedule.total_iters);
    let mut kept: Vec<DVector<f64>> = Vec::new();

    for iter in 0..cfg.schedule.total_iters {
        let sel = plan.draw(&mut select_rng);
        let mut selected = vec![None; m];
        for (&i, &w) in sel.indices.iter().zip(&sel.weights) {
            selected[i] = Some(w);
        }
        let scores = engine.scores(&params, &selected)?;
        let mut g = DVector::zeros(d);
        let mut batch_opg = DMatrix::zeros(d, d);
        let mut count = 0usize;
        for (s, w) in scores.iter().zip(&selected) {
            if let (Some(s), Some(w)) = (s, w) {
                g += s * *w;
                batch_opg += s * s.transpose();
                count += 1;
            }
        }
        let (mut info, available) = engine.expected_info(&params)?;
        if available.iter().any(|a| !a) && count > 0 {
            // per-subject outer products, scaled to all subjects
            let lambda = if iter < cfg.warmup_iters {
                1.0 / (opg_weight + 1.0)
            } else {
                0.02
            };
            opg = &opg * (1.0 - lambda) + batch_opg * (lambda * m as f64 / count as f64);
            opg_weight += 1.0;
            let ridge = DMatrix::from_diagonal(&opg.diagonal().map(|v| 1e-6 * v + 1e-10));
            fill_unavailable(&mut info, &available, Some(&(&opg + ridge)));
        } else {
            fill_unavailable(&mut info, &available, None);
        }
        if count > 0 {
            let alpha = cfg.schedule.alpha(iter);
            let mut step = solve_spd(&info, &g) * alpha;
            let max_log = layout
                .ids()
                .iter()
                .zip(step.iter())
                .filter(|(id, _)| id.is_log())
                .map(|(_, s)| s.abs())
                .fold(0.0, f64::max);
            if max_log > cfg.max_log_step {
                step *= cfg.max_log_step / max_log;
            }
            let mut accepted = None;
            for _ in 0..50 {
                let cand = &theta + &step;
                if let Ok(p) = layout.unpack(&cand, &params) {
                    if p.validate().is_ok() {
                        accepted = Some(p);
                        break;
                    }
                }
                step *= 0.5;
            }
            if let Some(p) = accepted {
                params = p;
            }
        }
        if apply_switching(&mut params, &cfg.switch) {
            for (s, st) in subjects.iter().zip(engine.states.iter_mut()) {
                reset_switched(&params, s, st)?;
            }
        }
        theta = layout.pack(&params);
        let natural = layout.natural(&theta);
        trace.push(natural.iter().copied().collect());
        if theta.iter().any(|v| !v.is_finite()) || theta.norm() > 1e8 {
            return Err(Error::Diverged {
                iteration: iter,
                message: format!("parameter vector left the finite region (norm {:e})", theta.norm()),
                trace,
            });
        }
        if iter >= cfg.schedule.burn_in {
            kept.push(theta.clone());
        }
        if (iter + 1) % 100 == 0 {
            log::debug!("iteration {}: {:?}", iter + 1, natural.as_slice());
        }
    }

    let theta_hat = kept.iter().fold(DVector::zeros(d), |acc, t| acc + t) / kept.len() as f64;
    let mc_se_theta = batch_means_se(&kept, cfg.batches);
    let final_params = layout.unpack(&theta_hat, &params)?;
    final_params.validate()?;
    let live = layout.live_mask(&final_params);
    let estimates = layout.natural(&theta_hat);
    // delta method for log coordinates
    let jac: Vec<f64> = layout
        .ids()
        .iter()
        .zip(estimates.iter())
        .map(|(id, &v)| if id.is_log() { v } else { 1.0 })
        .collect();
    let mc_se = DVector::from_iterator(d, mc_se_theta.iter().zip(&jac).map(|(s, j)| s * j));

    let (observed_fim, std_errors, se_mc_se) = if cfg.louis_draws > 0 {
        let louis = louis_observed_fim(
            &final_params,
            &layout,
            subjects,
            Some(&engine.states),
            &LouisConfig {
                draws: cfg.louis_draws,
                seed: cfg.seed,
                ..LouisConfig::default()
            },
        )?;
        let se_theta = standard_errors(&louis.fim, &live);
        let batch_se: Vec<DVector<f64>> = louis.batch_fims.iter().map(|f| standard_errors(f, &live)).collect();
        let b = batch_se.len() as f64;
        let se_of_se = DVector::from_fn(d, |i, _| {
            let mean = batch_se.iter().map(|s| s[i]).sum::<f64>() / b;
            let var = batch_se.iter().map(|s| (s[i] - mean).powi(2)).sum::<f64>() / (b - 1.0);
            // each batch uses 1/b of the draws
            (var / b).sqrt()
        });
        let se = DVector::from_iterator(d, se_theta.iter().zip(&jac).map(|(s, j)| s * j));
        let sese = DVector::from_iterator(d, se_of_se.iter().zip(&jac).map(|(s, j)| s * j));
        (louis.fim, se, sese)
    } else {
        (
            DMatrix::zeros(0, 0),
            DVector::from_element(d, f64::NAN),
            DVector::from_element(d, f64::NAN),
        )
    };
    let mut p_lower = DVector::from_element(d, f64::NAN);
    let mut p_upper = DVector::from_element(d, f64::NAN);
    for i in 0..d {
        if std_errors[i].is_finite() && std_errors[i] > 0.0 {
            let mcse = if mc_se[i].is_finite() { mc_se[i] } else { 0.0 };
            let sese = if se_mc_se[i].is_finite() { se_mc_se[i] } else { 0.0 };
            let (lo, hi) = p_bounds(estimates[i], std_errors[i], mcse, sese);
            p_lower[i] = lo;
            p_upper[i] = hi;
        }
    }
    Ok(FitResult {
        params: final_params,
        layout,
        names,
        theta: theta_hat,
        estimates,
        observed_fim,
        std_errors,
        mc_se,
        se_mc_se,
        p_lower,
        p_upper,
        trace,
        final_states: engine.states,
    })
}
