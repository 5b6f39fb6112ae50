//! Subject-level predictive distributions of the noise-free signal
//! Y* = x beta + d U + A W, and the probability that its trailing log-slope
//! meets a decline criterion.

use crate::error::{Error, Result};
use crate::gibbs::sweep_once;
use crate::model::{subject_rng, LatentState, ModelParams, NoiseScope, Subject, SubjectRecord};
use crate::operator::{basis_eval, Grid, GridConfig, ObsMatrix};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::statistics::{Data, Median, OrderStatistics};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictMode {
    /// Condition on observations at or before the prediction time.
    Nowcast,
    /// Condition on every observation.
    Smooth,
    /// Condition on observations at or before min(prediction time, forecast origin).
    Forecast,
}

impl fmt::Display for PredictMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PredictMode::Nowcast => "nowcast",
            PredictMode::Smooth => "smooth",
            PredictMode::Forecast => "forecast",
        })
    }
}

impl FromStr for PredictMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nowcast" | "filter" => Ok(PredictMode::Nowcast),
            "smooth" => Ok(PredictMode::Smooth),
            "forecast" => Ok(PredictMode::Forecast),
            other => Err(Error::Config(format!("unknown prediction mode '{other}'"))),
        }
    }
}

/// Decline rule on the log-outcome scale: the trailing slope over `window`
/// years is at most ln(1 - threshold).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeclineCriterion {
    pub threshold: f64,
    pub window: f64,
}

impl Default for DeclineCriterion {
    fn default() -> Self {
        DeclineCriterion {
            threshold: 0.05,
            window: 1.0,
        }
    }
}

impl DeclineCriterion {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Config(format!("decline threshold must lie in (0, 1), got {}", self.threshold)));
        }
        if !(self.window > 0.0 && self.window.is_finite()) {
            return Err(Error::Config(format!("decline window must be positive, got {}", self.window)));
        }
        Ok(())
    }

    pub fn log_slope(&self) -> f64 {
        (1.0 - self.threshold).ln()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictRequest {
    pub mode: PredictMode,
    pub horizon: Vec<f64>,
    pub criterion: Option<DeclineCriterion>,
    /// Retained Gibbs draws.
    pub draws: usize,
    /// Sweeps discarded before the first retained draw.
    pub burn_in: usize,
    /// Last time whose data a forecast may use; defaults to the last observation.
    pub forecast_origin: Option<f64>,
    /// Add fresh measurement noise to each draw, giving intervals for new observations.
    pub with_noise: bool,
    pub keep_draws: bool,
    pub grid: GridConfig,
    pub seed: u64,
}

impl PredictRequest {
    pub fn new(mode: PredictMode, horizon: Vec<f64>) -> Self {
        PredictRequest {
            mode,
            horizon,
            criterion: None,
            draws: 1000,
            burn_in: 50,
            forecast_origin: None,
            with_noise: false,
            keep_draws: false,
            grid: GridConfig::default(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon.is_empty() || self.horizon.iter().any(|t| !t.is_finite()) {
            return Err(Error::Config("prediction horizon must be a non-empty list of finite times".into()));
        }
        if self.draws < 2 {
            return Err(Error::Config(format!("need at least 2 draws, got {}", self.draws)));
        }
        if let Some(c) = &self.criterion {
            c.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveSummary {
    pub subject_id: String,
    pub mode: PredictMode,
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    /// Batch-means Monte Carlo error of `mean`.
    pub mean_mc_se: Vec<f64>,
    pub median: Vec<f64>,
    pub q05: Vec<f64>,
    pub q95: Vec<f64>,
    /// `None` without a criterion or when the window reaches before the first observation.
    pub excursion: Vec<Option<f64>>,
    /// Draws per time, when requested.
    pub draws: Option<Vec<Vec<f64>>>,
}

/// Fixed- and random-effect design rows at `t`, linearly interpolated (or
/// extrapolated from the two nearest rows) in time.
pub fn design_at(record: &SubjectRecord, t: f64) -> (DVector<f64>, DVector<f64>) {
    let times = &record.times;
    let n = times.len();
    let row = |m: &DMatrix<f64>| -> DVector<f64> {
        if n == 1 {
            return m.row(0).transpose();
        }
        let j = match times.binary_search_by(|s| s.total_cmp(&t)) {
            Ok(j) => return m.row(j).transpose(),
            Err(j) => j.clamp(1, n - 1),
        };
        let (t0, t1) = (times[j - 1], times[j]);
        let f = (t - t0) / (t1 - t0);
        (m.row(j - 1) * (1.0 - f) + m.row(j) * f).transpose()
    };
    (row(&record.x), row(&record.d))
}

fn truncated(record: &SubjectRecord, k: usize) -> SubjectRecord {
    SubjectRecord {
        id: record.id.clone(),
        times: record.times[..k].to_vec(),
        y: record.y[..k].to_vec(),
        x: record.x.rows(0, k).into_owned(),
        d: record.d.rows(0, k).into_owned(),
    }
}

fn conditioning_count(record: &SubjectRecord, mode: PredictMode, origin: f64, t: f64) -> usize {
    let cut = match mode {
        PredictMode::Smooth => f64::INFINITY,
        PredictMode::Nowcast => t,
        PredictMode::Forecast => t.min(origin),
    };
    record.times.partition_point(|&s| s <= cut)
}

struct EvalPoint {
    x: DVector<f64>,
    d: DVector<f64>,
    basis: Option<crate::operator::BasisRow>,
}

impl EvalPoint {
    fn signal(&self, params: &ModelParams, state: &LatentState) -> f64 {
        let mut v = self.x.dot(&params.beta);
        if params.q() > 0 {
            v += self.d.dot(&state.u);
        }
        if let Some(b) = &self.basis {
            v += b.w[0] * state.w[b.k] + b.w[1] * state.w[b.k + 1];
        }
        v
    }
}

fn noise_draw<R: Rng + ?Sized>(params: &ModelParams, state: &LatentState, rng: &mut R) -> Result<f64> {
    let v = match params.noise.law()? {
        None => 1.0,
        Some(g) => match (params.noise_scope, state.v_z.first()) {
            (NoiseScope::PerSubject, Some(&v)) => v,
            _ => g.sample(rng),
        },
    };
    Ok(params.sigma * v.sqrt() * rng.sample::<f64, _>(StandardNormal))
}

/// Predictive summary for one subject with the stream of `request.seed`.
pub fn predict(params: &ModelParams, record: &SubjectRecord, request: &PredictRequest) -> Result<PredictiveSummary> {
    let mut rng = subject_rng(request.seed, 0);
    predict_with_rng(params, record, request, &mut rng)
}

/// Predictions for many subjects in parallel; subject `i` uses stream `i` of its request's seed.
pub fn predict_many(params: &ModelParams, records: &[SubjectRecord], requests: &[PredictRequest]) -> Result<Vec<PredictiveSummary>> {
    if records.len() != requests.len() {
        return Err(Error::Shape(format!("{} records but {} requests", records.len(), requests.len())));
    }
    records
        .par_iter()
        .zip(requests)
        .enumerate()
        .map(|(i, (rec, req))| predict_with_rng(params, rec, req, &mut subject_rng(req.seed, i)))
        .collect()
}

pub fn predict_with_rng<R: Rng + ?Sized>(
    params: &ModelParams,
    record: &SubjectRecord,
    request: &PredictRequest,
    rng: &mut R,
) -> Result<PredictiveSummary> {
    params.validate()?;
    record.validate()?;
    request.validate()?;
    let origin = request.forecast_origin.unwrap_or(record.times[record.n() - 1]);
    let first_obs = record.times[0];
    let horizon = &request.horizon;
    let lag_times: Vec<Option<f64>> = horizon
        .iter()
        .map(|&t| {
            request
                .criterion
                .map(|c| t - c.window)
                .filter(|&s| s >= first_obs - 1e-12)
        })
        .collect();

    let grid = if params.process.is_some() {
        let mut all: Vec<f64> = record.times.clone();
        all.extend(horizon);
        all.extend(lag_times.iter().flatten());
        let (lo, hi) = (first_obs, record.times[record.n() - 1]);
        if horizon.iter().any(|&t| t < lo || t > hi) {
            log::info!("subject {}: extending the process grid to cover the prediction horizon", record.id);
        }
        Some(Grid::for_times(&all, &request.grid)?)
    } else {
        None
    };
    let point = |t: f64| -> Result<EvalPoint> {
        let (x, d) = design_at(record, t);
        let basis = grid.as_ref().map(|g| basis_eval(g, t)).transpose()?;
        Ok(EvalPoint { x, d, basis })
    };

    // horizon indices grouped by how many observations they condition on
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &t) in horizon.iter().enumerate() {
        groups.entry(conditioning_count(record, request.mode, origin, t)).or_default().push(i);
    }

    let nh = horizon.len();
    let mut signal = vec![Vec::with_capacity(request.draws); nh];
    let mut observed = vec![Vec::with_capacity(request.draws); nh];
    let mut exceed: Vec<Option<usize>> = vec![None; nh];
    let slope_bound = request.criterion.map(|c| c.log_slope());

    for (&k, idx) in &groups {
        let subject = if k > 0 {
            Subject::with_grid(truncated(record, k), grid.clone())?
        } else {
            log::warn!(
                "subject {}: no observations in the conditioning window; using the prior predictive",
                record.id
            );
            let empty = SubjectRecord {
                id: record.id.clone(),
                times: Vec::new(),
                y: Vec::new(),
                x: DMatrix::zeros(0, params.p()),
                d: DMatrix::zeros(0, params.q()),
            };
            let obs = grid.as_ref().map(|g| ObsMatrix {
                rows: Vec::new(),
                ncols: g.len(),
            });
            Subject {
                record: empty,
                grid: grid.clone(),
                obs,
            }
        };
        let disc = params.discretize(&subject)?;
        let points: Vec<EvalPoint> = idx.iter().map(|&i| point(horizon[i])).collect::<Result<_>>()?;
        let lags: Vec<Option<EvalPoint>> = idx.iter().map(|&i| lag_times[i].map(point).transpose()).collect::<Result<_>>()?;
        for &i in idx {
            if lag_times[i].is_some() && slope_bound.is_some() {
                exceed[i] = Some(0);
            }
        }
        let mut state = LatentState::at_prior_means(params, &subject)?;
        if k > 0 {
            for _ in 0..request.burn_in {
                state = sweep_once(params, &subject, disc.as_ref(), state, rng)?;
            }
        }
        for _ in 0..request.draws {
            state = if k > 0 {
                sweep_once(params, &subject, disc.as_ref(), state, rng)?
            } else {
                LatentState::sample_prior(params, &subject, disc.as_ref(), rng)?
            };
            for (a, &i) in idx.iter().enumerate() {
                let s = points[a].signal(params, &state);
                signal[i].push(s);
                let o = if request.with_noise { s + noise_draw(params, &state, rng)? } else { s };
                observed[i].push(o);
                if let (Some(lag), Some(bound), Some(count)) = (&lags[a], slope_bound, exceed[i].as_mut()) {
                    let window = horizon[i] - lag_times[i].expect("lag point implies lag time");
                    if (s - lag.signal(params, &state)) / window <= bound {
                        *count += 1;
                    }
                }
            }
        }
    }

    let batches = 20.min(request.draws / 2).max(2);
    let mut out = PredictiveSummary {
        subject_id: record.id.clone(),
        mode: request.mode,
        times: horizon.clone(),
        mean: Vec::with_capacity(nh),
        mean_mc_se: Vec::with_capacity(nh),
        median: Vec::with_capacity(nh),
        q05: Vec::with_capacity(nh),
        q95: Vec::with_capacity(nh),
        excursion: exceed.iter().map(|c| c.map(|c| c as f64 / request.draws as f64)).collect(),
        draws: None,
    };
    for draws in &observed {
        let rows: Vec<DVector<f64>> = draws.iter().map(|&v| DVector::from_element(1, v)).collect();
        out.mean.push(draws.iter().sum::<f64>() / draws.len() as f64);
        out.mean_mc_se.push(crate::estimate::batch_means_se(&rows, batches)[0]);
        let mut data = Data::new(draws.clone());
        out.median.push(data.median());
        out.q05.push(data.quantile(0.05));
        out.q95.push(data.quantile(0.95));
    }
    if request.keep_draws {
        out.draws = Some(observed);
    }
    Ok(out)
}

/// Estimated glomerular filtration rate (mL/min/1.73 m²) from serum creatinine in µmol/L.
pub fn egfr_from_scr(scr: f64, age: f64, female: bool, black: bool) -> Result<f64> {
    if !(scr > 0.0 && scr.is_finite()) || !(age > 0.0 && age.is_finite()) {
        return Err(Error::Domain(format!("creatinine and age must be positive, got scr={scr}, age={age}")));
    }
    let mut e = 175.0 * (scr / 88.4).powf(-1.154) * age.powf(-0.203);
    if female {
        e *= 0.742;
    }
    if black {
        e *= 1.21;
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn egfr_reference() {
        let e = egfr_from_scr(88.4, 50.0, false, false).unwrap();
        assert!((e - 175.0 * 50f64.powf(-0.203)).abs() < 1e-12);
        assert!((e - 79.1).abs() < 0.05);
        assert_eq!(egfr_from_scr(88.4, 50.0, true, false).unwrap(), e * 0.742);
        assert_eq!(egfr_from_scr(88.4, 50.0, false, true).unwrap(), e * 1.21);
        assert!(egfr_from_scr(0.0, 50.0, false, false).is_err());
        assert!(egfr_from_scr(80.0, -1.0, false, false).is_err());
    }

    #[test]
    fn design_interpolation() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 3.0]);
        let rec = SubjectRecord::new("a", vec![0.0, 1.0, 3.0], vec![0.0; 3], x.clone(), x).unwrap();
        let (xr, _) = design_at(&rec, 2.0);
        assert_eq!(xr.as_slice(), &[1.0, 2.0]);
        let (xr, _) = design_at(&rec, 5.0);
        assert_eq!(xr.as_slice(), &[1.0, 5.0]);
        let (xr, _) = design_at(&rec, -1.0);
        assert_eq!(xr.as_slice(), &[1.0, -1.0]);
    }
}
