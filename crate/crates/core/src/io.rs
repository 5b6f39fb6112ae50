//! Run configuration, long-format CSV ingestion and result writers.

use crate::error::{Error, Result};
use crate::estimate::{FitConfig, FitResult, StepSchedule, Strategy};
use crate::gibbs::GibbsConfig;
use crate::mixture::Family;
use crate::model::{Component, ModelParams, NoiseScope, ProcessParams, Subject, SubjectRecord};
use crate::operator::{GridConfig, OperatorSpec};
use crate::predict::{DeclineCriterion, PredictMode, PredictRequest, PredictiveSummary};
use crate::score::ParamId;
use crate::tv::{SwitchRule, TvPoint};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

/// Column name that stands for an intercept in a design list.
pub const INTERCEPT: &str = "1";

fn input_err(context: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Input {
        context: context.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataColumns {
    pub id: String,
    pub time: String,
    pub response: String,
    /// Fixed-effect columns; `"1"` adds an intercept.
    pub fixed: Vec<String>,
    /// Random-effect columns; `"1"` adds an intercept.
    pub random: Vec<String>,
}

impl Default for DataColumns {
    fn default() -> Self {
        DataColumns {
            id: "subject_id".into(),
            time: "time".into(),
            response: "y".into(),
            fixed: vec![INTERCEPT.into(), "time".into()],
            random: vec![INTERCEPT.into()],
        }
    }
}

impl DataColumns {
    /// Covariate columns the data file must provide, in first-use order.
    pub fn covariates(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for c in self.fixed.iter().chain(&self.random) {
            if c != INTERCEPT && *c != self.time && !out.contains(c) {
                out.push(c.clone());
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentConfig {
    pub family: Family,
    /// Starting tail parameter; defaults to 1.
    #[serde(default)]
    pub nu: Option<f64>,
    /// Estimate a skewness parameter (random effects and process only).
    #[serde(default)]
    pub skew: bool,
}

impl ComponentConfig {
    fn normal() -> Self {
        ComponentConfig {
            family: Family::Normal,
            nu: None,
            skew: false,
        }
    }

    fn component(&self) -> Component {
        match self.family {
            Family::Normal => Component::normal(),
            f => Component::new(f, self.nu.unwrap_or(1.0)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessConfig {
    pub family: Family,
    #[serde(default)]
    pub nu: Option<f64>,
    #[serde(default)]
    pub skew: bool,
    pub operator: OperatorSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub noise: ComponentConfig,
    pub noise_scope: NoiseScope,
    pub random_effects: ComponentConfig,
    pub process: Option<ProcessConfig>,
    pub grid: GridConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            noise: ComponentConfig::normal(),
            noise_scope: NoiseScope::default(),
            random_effects: ComponentConfig::normal(),
            process: None,
            grid: GridConfig::default(),
        }
    }
}

/// Starting values (or simulation truth); anything missing is filled from the data.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitConfig {
    pub beta: Option<Vec<f64>>,
    pub sigma: Option<f64>,
    pub re_cov: Option<Vec<Vec<f64>>>,
    pub mu_u: Option<Vec<f64>>,
    pub mu_w: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GibbsSection {
    pub sweeps: usize,
}

impl Default for GibbsSection {
    fn default() -> Self {
        GibbsSection { sweeps: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovariateKind {
    /// Subject-level 0/1 indicator with probability 1/2.
    Binary,
    /// Subject-level standard normal value.
    Normal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub subjects: usize,
    pub visits: usize,
    /// Nominal gap between visits.
    pub spacing: f64,
    /// Each visit is delayed by a uniform draw on [0, jitter).
    pub jitter: f64,
    /// How to generate covariate columns other than the intercept and time.
    pub covariates: BTreeMap<String, CovariateKind>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            subjects: 200,
            visits: 5,
            spacing: 1.0,
            jitter: 0.5,
            covariates: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictConfig {
    pub mode: PredictMode,
    /// Prediction times; empty means each subject's observation times.
    pub horizon: Vec<f64>,
    /// Extra times after each subject's last observation, as offsets.
    pub ahead: Vec<f64>,
    pub threshold: Option<f64>,
    pub window: Option<f64>,
    pub draws: usize,
    pub burn_in: usize,
    pub forecast_origin: Option<f64>,
    pub with_noise: bool,
}

impl Default for PredictConfig {
    fn default() -> Self {
        PredictConfig {
            mode: PredictMode::Nowcast,
            horizon: Vec::new(),
            ahead: Vec::new(),
            threshold: None,
            window: None,
            draws: 1000,
            burn_in: 50,
            forecast_origin: None,
            with_noise: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub data: DataColumns,
    pub model: ModelConfig,
    pub init: InitConfig,
    pub iters: usize,
    pub burn_in: Option<usize>,
    pub alpha0: f64,
    pub gamma: f64,
    pub n0: Option<f64>,
    pub subsample: Strategy,
    pub gibbs: GibbsSection,
    pub switch: SwitchRule,
    pub seed: u64,
    pub louis_draws: usize,
    pub batches: usize,
    pub simulate: SimulateConfig,
    pub predict: PredictConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            data: DataColumns::default(),
            model: ModelConfig::default(),
            init: InitConfig::default(),
            iters: 20_000,
            burn_in: None,
            alpha0: 1.0,
            gamma: 0.6,
            n0: None,
            subsample: Strategy::Full,
            gibbs: GibbsSection::default(),
            switch: SwitchRule::default(),
            seed: 1,
            louis_draws: 200,
            batches: 20,
            simulate: SimulateConfig::default(),
            predict: PredictConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let mut text = String::new();
        File::open(path)
            .and_then(|mut f| f.read_to_string(&mut text))
            .map_err(|e| input_err(path.display().to_string(), e.to_string()))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => input_err(path.display().to_string(), m),
            other => other,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.data.fixed.is_empty() {
            return Err(Error::Config("data.fixed must name at least one column".into()));
        }
        let m = &self.model;
        if !matches!(m.noise.family, Family::Normal | Family::Nig | Family::StudentT) {
            return Err(Error::Config(format!("noise family must be normal, nig or t, got {}", m.noise.family)));
        }
        if !matches!(m.random_effects.family, Family::Normal | Family::Nig) {
            return Err(Error::Config(format!(
                "random-effect family must be normal or nig, got {}",
                m.random_effects.family
            )));
        }
        if let Some(p) = &m.process {
            if !matches!(p.family, Family::Normal | Family::Nig | Family::Gal | Family::Cauchy) {
                return Err(Error::Config(format!(
                    "process family must be normal, nig, gal or cauchy, got {}",
                    p.family
                )));
            }
            p.operator.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        if m.noise.skew {
            return Err(Error::Config("the noise component is symmetric; remove model.noise.skew".into()));
        }
        for nu in [m.noise.nu, m.random_effects.nu, m.process.and_then(|p| p.nu)].into_iter().flatten() {
            if !(nu > 0.0 && nu.is_finite()) {
                return Err(Error::Config(format!("tail parameters must be positive, got {nu}")));
            }
        }
        self.fit_config()?;
        Ok(())
    }

    pub fn schedule(&self) -> Result<StepSchedule> {
        let d = StepSchedule::with_defaults(self.iters.max(2)).map_err(|e| Error::Config(e.to_string()))?;
        StepSchedule::new(
            self.alpha0,
            self.n0.unwrap_or(d.n0),
            self.gamma,
            self.burn_in.unwrap_or(d.burn_in),
            self.iters,
        )
        .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn fit_config(&self) -> Result<FitConfig> {
        let mut cfg = FitConfig::new(self.schedule()?);
        cfg.gibbs = GibbsConfig::new(self.gibbs.sweeps, true)?;
        cfg.strategy = self.subsample;
        cfg.switch = SwitchRule::new(self.switch.to_gaussian_above, self.switch.to_cauchy_below)?;
        cfg.seed = self.seed;
        cfg.louis_draws = self.louis_draws;
        cfg.batches = self.batches;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn grid_config(&self) -> Option<GridConfig> {
        self.model.process.as_ref().map(|_| self.model.grid)
    }

    /// Model parameters from the model section and `init`; values not given
    /// there come from a least-squares fit to `records` when available.
    pub fn initial_params(&self, records: Option<&[SubjectRecord]>) -> Result<ModelParams> {
        let p = self.data.fixed.len();
        let q = self.data.random.len();
        let (ols_beta, resid_var) = match records {
            Some(r) if !r.is_empty() => least_squares(r)?,
            _ => (DVector::zeros(p), 1.0),
        };
        let beta = match &self.init.beta {
            Some(b) if b.len() != p => {
                return Err(Error::Config(format!("init.beta has {} entries for {p} fixed columns", b.len())));
            }
            Some(b) => DVector::from_vec(b.clone()),
            None => ols_beta,
        };
        let sigma = self.init.sigma.unwrap_or((0.5 * resid_var).sqrt().max(1e-3));
        let re_cov = match &self.init.re_cov {
            Some(rows) => {
                if rows.len() != q || rows.iter().any(|r| r.len() != q) {
                    return Err(Error::Config(format!("init.re_cov must be {q} x {q}")));
                }
                DMatrix::from_fn(q, q, |i, j| rows[i][j])
            }
            None => DMatrix::identity(q, q) * (0.5 * resid_var).max(1e-6),
        };
        let m = &self.model;
        let mu_u = if m.random_effects.skew && q > 0 {
            Some(self.init.mu_u.clone().map(DVector::from_vec).unwrap_or_else(|| DVector::zeros(q)))
        } else {
            None
        };
        let process = m.process.as_ref().map(|pc| ProcessParams {
            family: pc.family,
            nu: match pc.family {
                Family::Normal | Family::Cauchy => f64::INFINITY,
                _ => pc.nu.unwrap_or(1.0),
            },
            mu: if pc.skew { Some(self.init.mu_w.unwrap_or(0.0)) } else { None },
            operator: pc.operator,
        });
        let params = ModelParams {
            beta,
            sigma,
            noise: m.noise.component(),
            noise_scope: m.noise_scope,
            re_cov,
            re: m.random_effects.component(),
            mu_u,
            process,
        };
        params.validate().map_err(|e| Error::Config(format!("initial parameters: {e}")))?;
        Ok(params)
    }

    pub fn predict_request(&self, record: &SubjectRecord) -> PredictRequest {
        let pc = &self.predict;
        let mut horizon = if pc.horizon.is_empty() { record.times.clone() } else { pc.horizon.clone() };
        let last = record.times[record.n() - 1];
        horizon.extend(pc.ahead.iter().map(|a| last + a));
        let criterion = match (pc.threshold, pc.window) {
            (None, None) => None,
            (t, w) => {
                let d = DeclineCriterion::default();
                Some(DeclineCriterion {
                    threshold: t.unwrap_or(d.threshold),
                    window: w.unwrap_or(d.window),
                })
            }
        };
        PredictRequest {
            mode: pc.mode,
            horizon,
            criterion,
            draws: pc.draws,
            burn_in: pc.burn_in,
            forecast_origin: pc.forecast_origin,
            with_noise: pc.with_noise,
            keep_draws: false,
            grid: self.model.grid,
            seed: self.seed,
        }
    }
}

/// Pooled least-squares coefficients and residual variance.
fn least_squares(records: &[SubjectRecord]) -> Result<(DVector<f64>, f64)> {
    let p = records[0].x.ncols();
    let mut xtx = DMatrix::zeros(p, p);
    let mut xty = DVector::zeros(p);
    let mut n = 0usize;
    for r in records {
        let y = DVector::from_column_slice(&r.y);
        xtx += r.x.transpose() * &r.x;
        xty += r.x.transpose() * &y;
        n += r.n();
    }
    let beta = xtx
        .clone()
        .pseudo_inverse(1e-10)
        .map_err(|e| Error::numerical(format!("least squares: {e}")))?
        * xty;
    let rss: f64 = records
        .iter()
        .map(|r| (DVector::from_column_slice(&r.y) - &r.x * &beta).norm_squared())
        .sum();
    let dof = n.saturating_sub(p).max(1);
    Ok((beta, rss / dof as f64))
}

/// Reads a long-format table: one row per observation.
pub fn ingest(path: &Path, columns: &DataColumns) -> Result<Vec<SubjectRecord>> {
    let file = File::open(path).map_err(|e| input_err(path.display().to_string(), e.to_string()))?;
    ingest_reader(file, columns, &path.display().to_string())
}

pub fn ingest_reader<R: Read>(reader: R, columns: &DataColumns, source: &str) -> Result<Vec<SubjectRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| input_err(source, e.to_string()))?.clone();
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| input_err(source, format!("missing column '{name}'")))
    };
    let id_col = find(&columns.id)?;
    let time_col = find(&columns.time)?;
    let y_col = find(&columns.response)?;
    let covariates = columns.covariates();
    let cov_cols: Vec<usize> = covariates.iter().map(|c| find(c)).collect::<Result<_>>()?;

    struct Row {
        line: u64,
        time: f64,
        y: f64,
        values: HashMap<String, f64>,
    }
    let mut by_subject: BTreeMap<String, Vec<Row>> = BTreeMap::new();
    let mut n_rows = 0usize;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| input_err(source, e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |col: usize| -> Result<f64> {
            let cell = rec.get(col).unwrap_or("");
            let v: f64 = cell.parse().map_err(|_| {
                input_err(
                    format!("{source}:{line}"),
                    format!("column '{}' has non-numeric value '{cell}'", &headers[col]),
                )
            })?;
            if !v.is_finite() {
                return Err(input_err(
                    format!("{source}:{line}"),
                    format!("column '{}' has non-finite value '{cell}'", &headers[col]),
                ));
            }
            Ok(v)
        };
        let id = rec.get(id_col).unwrap_or("").to_string();
        if id.is_empty() {
            return Err(input_err(format!("{source}:{line}"), "empty subject id"));
        }
        let mut values = HashMap::new();
        for (name, &col) in covariates.iter().zip(&cov_cols) {
            values.insert(name.clone(), num(col)?);
        }
        let time = num(time_col)?;
        values.insert(columns.time.clone(), time);
        by_subject.entry(id).or_default().push(Row {
            line,
            time,
            y: num(y_col)?,
            values,
        });
        n_rows += 1;
    }
    if by_subject.is_empty() {
        return Err(input_err(source, "no data rows"));
    }

    let mut duplicates = Vec::new();
    let mut out = Vec::with_capacity(by_subject.len());
    for (id, mut rows) in by_subject {
        rows.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.line.cmp(&b.line)));
        for w in rows.windows(2) {
            if w[0].time == w[1].time {
                duplicates.push(format!("{id}@{} (lines {} and {})", w[0].time, w[0].line, w[1].line));
            }
        }
        let n = rows.len();
        let design = |cols: &[String]| {
            DMatrix::from_fn(n, cols.len(), |i, j| {
                if cols[j] == INTERCEPT {
                    1.0
                } else {
                    rows[i].values[&cols[j]]
                }
            })
        };
        let x = design(&columns.fixed);
        let d = design(&columns.random);
        let times = rows.iter().map(|r| r.time).collect();
        let y = rows.iter().map(|r| r.y).collect();
        if duplicates.is_empty() {
            out.push(SubjectRecord::new(id, times, y, x, d).map_err(|e| input_err(source, e.to_string()))?);
        }
    }
    if !duplicates.is_empty() {
        return Err(input_err(source, format!("duplicate (subject, time) pairs: {}", duplicates.join(", "))));
    }
    let singles = out.iter().filter(|r| r.n() == 1).count();
    log::info!("{source}: read {n_rows} rows for {} subjects", out.len());
    if singles > 0 {
        log::info!("{source}: {singles} subjects have a single measurement");
    }
    Ok(out)
}

/// Writes records in the long format read by [`ingest`].
pub fn write_dataset(path: &Path, records: &[SubjectRecord], columns: &DataColumns) -> Result<()> {
    let f = File::create(path).map_err(|e| io_err(path, e))?;
    write_dataset_to(f, records, columns).map_err(|e| io_err(path, e))
}

pub fn write_dataset_to<W: Write>(out: W, records: &[SubjectRecord], columns: &DataColumns) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let wr = |e: csv::Error| Error::Io(e.to_string());
    let covariates = columns.covariates();
    let mut header = vec![columns.id.clone(), columns.time.clone(), columns.response.clone()];
    header.extend(covariates.iter().cloned());
    w.write_record(&header).map_err(wr)?;
    for r in records {
        let value = |name: &str, i: usize| -> f64 {
            if let Some(j) = columns.fixed.iter().position(|c| c == name) {
                r.x[(i, j)]
            } else {
                let j = columns.random.iter().position(|c| c == name).expect("covariate comes from a design list");
                r.d[(i, j)]
            }
        };
        for i in 0..r.n() {
            let mut row = vec![r.id.clone(), fmt_f64(r.times[i]), fmt_f64(r.y[i])];
            row.extend(covariates.iter().map(|c| fmt_f64(value(c, i))));
            w.write_record(&row).map_err(wr)?;
        }
    }
    w.flush().map_err(Error::from)
}

/// Subjects with visit times and covariates drawn as described by `cfg.simulate`,
/// `subjects` overriding its subject count. Outcomes are left at zero.
pub fn simulation_designs(cfg: &RunConfig, subjects: Option<usize>, seed: u64) -> Result<Vec<Subject>> {
    let sc = &cfg.simulate;
    let m = subjects.unwrap_or(sc.subjects);
    if m == 0 || sc.visits == 0 {
        return Err(Error::Config("simulation needs at least one subject and one visit".into()));
    }
    if !(sc.spacing > 0.0) || !(sc.jitter >= 0.0) || sc.jitter >= sc.spacing {
        return Err(Error::Config("simulation needs spacing > 0 and 0 <= jitter < spacing".into()));
    }
    let columns = &cfg.data;
    let covariates = columns.covariates();
    for c in &covariates {
        if !sc.covariates.contains_key(c) {
            return Err(Error::Config(format!("simulate.covariates has no rule for column '{c}'")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xd5e1_6a7e);
    let grid = cfg.grid_config();
    (0..m)
        .map(|i| {
            let times: Vec<f64> = (0..sc.visits)
                .map(|j| j as f64 * sc.spacing + if sc.jitter > 0.0 { rng.random_range(0.0..sc.jitter) } else { 0.0 })
                .collect();
            let mut values: HashMap<&str, f64> = HashMap::new();
            for c in &covariates {
                let v = match sc.covariates[c] {
                    CovariateKind::Binary => f64::from(u8::from(rng.random_bool(0.5))),
                    CovariateKind::Normal => rng.sample(StandardNormal),
                };
                values.insert(c, v);
            }
            let n = times.len();
            let design = |cols: &[String]| {
                DMatrix::from_fn(n, cols.len(), |r, j| match cols[j].as_str() {
                    INTERCEPT => 1.0,
                    c if c == columns.time => times[r],
                    c => values[c],
                })
            };
            let (x, d) = (design(&columns.fixed), design(&columns.random));
            let rec = SubjectRecord::design(format!("s{:05}", i + 1), times.clone(), x, d)?;
            Subject::prepare(rec, grid.as_ref())
        })
        .collect()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    let f = File::create(path).map_err(|e| input_err(path.display().to_string(), e.to_string()))?;
    Ok(csv::Writer::from_writer(f))
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    input_err(path.display().to_string(), e.to_string())
}

/// Shortest representation that parses back to the same value; empty for NaN.
fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:?}")
    }
}

fn opt_vec(v: &DVector<f64>) -> Vec<Option<f64>> {
    v.iter().map(|x| x.is_finite().then_some(*x)).collect()
}

/// Contents of `params.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOutput {
    pub schema_version: u32,
    pub params: ModelParams,
    pub fixed_effect_names: Vec<String>,
    pub names: Vec<String>,
    pub estimates: Vec<Option<f64>>,
    pub std_errors: Vec<Option<f64>>,
    pub mc_se: Vec<Option<f64>>,
    pub p_lower: Vec<Option<f64>>,
    pub p_upper: Vec<Option<f64>>,
    /// Observed information in estimation coordinates (log scale for sigma, kappa, tau and nu).
    pub observed_fim: Vec<Vec<f64>>,
}

impl FitOutput {
    pub fn new(fit: &FitResult, fixed_effect_names: &[String]) -> Self {
        let fim = &fit.observed_fim;
        FitOutput {
            schema_version: SCHEMA_VERSION,
            params: fit.params.clone(),
            fixed_effect_names: fixed_effect_names.to_vec(),
            names: fit.names.clone(),
            estimates: opt_vec(&fit.estimates),
            std_errors: opt_vec(&fit.std_errors),
            mc_se: opt_vec(&fit.mc_se),
            p_lower: opt_vec(&fit.p_lower),
            p_upper: opt_vec(&fit.p_upper),
            observed_fim: (0..fim.nrows()).map(|i| fim.row(i).iter().copied().collect()).collect(),
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    let mut f = File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| io_err(path, e))?;
    f.write_all(b"\n").map_err(|e| io_err(path, e))
}

pub fn read_fit_output(path: &Path) -> Result<FitOutput> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let out: FitOutput = serde_json::from_str(&text).map_err(|e| io_err(path, e))?;
    if out.schema_version != SCHEMA_VERSION {
        return Err(input_err(
            path.display().to_string(),
            format!("unsupported schema_version {}", out.schema_version),
        ));
    }
    out.params.validate()?;
    Ok(out)
}

/// Fixed-effect table: term, Estimate, SE, p-lower, p-upper; one row per fixed effect.
pub fn write_fixed_effects(path: &Path, fit: &FitResult, terms: &[String]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["term", "Estimate", "SE", "p-lower", "p-upper"]).map_err(|e| io_err(path, e))?;
    for (i, id) in fit.layout.ids().iter().enumerate() {
        if let ParamId::Beta(j) = id {
            let term = terms.get(*j).cloned().unwrap_or_else(|| fit.names[i].clone());
            w.write_record([
                term,
                fmt_f64(fit.estimates[i]),
                fmt_f64(fit.std_errors[i]),
                fmt_f64(fit.p_lower[i]),
                fmt_f64(fit.p_upper[i]),
            ])
            .map_err(|e| io_err(path, e))?;
        }
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Natural-scale parameter history, one row per iteration.
pub fn write_trace(path: &Path, names: &[String], trace: &[Vec<f64>]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["iteration".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header).map_err(|e| io_err(path, e))?;
    for (it, row) in trace.iter().enumerate() {
        let mut rec = vec![(it + 1).to_string()];
        rec.extend(row.iter().map(|v| fmt_f64(*v)));
        w.write_record(&rec).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_predictions(path: &Path, summaries: &[PredictiveSummary]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["subject_id", "time", "mode", "mean", "median", "q05", "q95", "excursion_prob"])
        .map_err(|e| io_err(path, e))?;
    for s in summaries {
        for i in 0..s.times.len() {
            w.write_record([
                s.subject_id.clone(),
                fmt_f64(s.times[i]),
                s.mode.to_string(),
                fmt_f64(s.mean[i]),
                fmt_f64(s.median[i]),
                fmt_f64(s.q05[i]),
                fmt_f64(s.q95[i]),
                s.excursion[i].map(fmt_f64).unwrap_or_default(),
            ])
            .map_err(|e| io_err(path, e))?;
        }
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_tv_curve(path: &Path, points: &[TvPoint]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["a", "tv_normal", "best_sd", "tv_cauchy", "best_b"]).map_err(|e| io_err(path, e))?;
    for p in points {
        w.write_record([p.a, p.tv_normal, p.best_sd, p.tv_cauchy, p.best_b].map(fmt_f64))
            .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "subject_id,time,y,age\nb,0.5,2.0,40\na,1.0,1.5,30\na,0.0,1.0,30\n";

    fn cols() -> DataColumns {
        DataColumns {
            fixed: vec!["1".into(), "time".into(), "age".into()],
            ..DataColumns::default()
        }
    }

    #[test]
    fn parse_and_sort() {
        let recs = ingest_reader(CSV.as_bytes(), &cols(), "mem").unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].id, "a");
        assert_eq!(recs[0].times, vec![0.0, 1.0]);
        assert_eq!(recs[0].y, vec![1.0, 1.5]);
        assert_eq!(recs[0].x.row(1).iter().copied().collect::<Vec<_>>(), vec![1.0, 1.0, 30.0]);
        assert_eq!(recs[1].n(), 1);
    }

    #[test]
    fn row_errors() {
        let bad = "subject_id,time,y,age\na,0,1,x\n";
        let e = ingest_reader(bad.as_bytes(), &cols(), "f.csv").unwrap_err().to_string();
        assert!(e.starts_with("f.csv:2:"), "{e}");
        let dup = "subject_id,time,y,age\na,0,1,3\na,0,2,3\n";
        let e = ingest_reader(dup.as_bytes(), &cols(), "f.csv").unwrap_err().to_string();
        assert!(e.contains("a@0"), "{e}");
        let missing = "subject_id,time,y\na,0,1\n";
        let e = ingest_reader(missing.as_bytes(), &cols(), "f.csv").unwrap_err().to_string();
        assert!(e.contains("missing column 'age'"), "{e}");
    }

    #[test]
    fn config_defaults_and_rejections() {
        let cfg = RunConfig::from_json(r#"{"schema_version": 1, "iters": 100}"#).unwrap();
        assert_eq!(cfg.fit_config().unwrap().schedule.burn_in, 50);
        assert!(RunConfig::from_json(r#"{"schema_version": 2}"#).is_err());
        assert!(RunConfig::from_json(r#"{"schema_version": 1, "itres": 5}"#).is_err());
        assert!(RunConfig::from_json(r#"{"schema_version": 1, "gamma": 0.4}"#).is_err());
        let e = RunConfig::from_json(r#"{"schema_version": 1, "model": {"random_effects": {"family": "gal"}}}"#);
        assert!(e.is_err());
        let cfg = RunConfig::from_json(
            r#"{"schema_version": 1, "subsample": {"strategy": "grouped", "M": 40, "r": 2}, "gibbs": {"sweeps": 3}}"#,
        )
        .unwrap();
        assert_eq!(cfg.subsample, Strategy::Grouped { m: 40, r: 2 });
        assert_eq!(cfg.fit_config().unwrap().gibbs.sweeps_per_step, 3);
    }
}
