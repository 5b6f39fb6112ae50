use crate::error::{Error, Result};
use crate::operator::{basis_eval, Grid, GridConfig, ObsMatrix};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Whether noise variance factors are drawn per observation or shared within a subject.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseScope {
    #[default]
    PerObservation,
    PerSubject,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectRecord {
    pub id: String,
    pub times: Vec<f64>,
    pub y: Vec<f64>,
    /// n x p fixed-effect design.
    pub x: DMatrix<f64>,
    /// n x q random-effect design.
    pub d: DMatrix<f64>,
}

impl SubjectRecord {
    pub fn new(id: impl Into<String>, times: Vec<f64>, y: Vec<f64>, x: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let r = SubjectRecord {
            id: id.into(),
            times,
            y,
            x,
            d,
        };
        r.validate()?;
        Ok(r)
    }

    /// A record without outcomes, for simulation.
    pub fn design(id: impl Into<String>, times: Vec<f64>, x: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n = times.len();
        Self::new(id, times, vec![0.0; n], x, d)
    }

    pub fn n(&self) -> usize {
        self.times.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.times.len();
        let ctx = |m: String| Error::Shape(format!("subject {}: {m}", self.id));
        if n == 0 {
            return Err(ctx("no observations".into()));
        }
        if self.y.len() != n || self.x.nrows() != n || self.d.nrows() != n {
            return Err(ctx(format!(
                "lengths disagree (times {n}, y {}, x rows {}, d rows {})",
                self.y.len(),
                self.x.nrows(),
                self.d.nrows()
            )));
        }
        let finite = self.times.iter().chain(&self.y).chain(self.x.iter()).chain(self.d.iter()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::Domain(format!("subject {}: non-finite value", self.id)));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain(format!("subject {}: times not strictly increasing", self.id)));
        }
        Ok(())
    }
}

/// A record together with its process grid and observation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Subject {
    pub record: SubjectRecord,
    pub grid: Option<Grid>,
    pub obs: Option<ObsMatrix>,
}

impl Subject {
    /// Prepares a subject; `grid` is `None` for models without a process.
    pub fn prepare(record: SubjectRecord, grid: Option<&GridConfig>) -> Result<Self> {
        record.validate()?;
        let grid = grid.map(|cfg| Grid::for_times(&record.times, cfg)).transpose()?;
        Self::with_grid(record, grid)
    }

    pub fn with_grid(record: SubjectRecord, grid: Option<Grid>) -> Result<Self> {
        let obs = match &grid {
            Some(g) => {
                let rows = record.times.iter().map(|&t| basis_eval(g, t)).collect::<Result<Vec<_>>>()?;
                Some(ObsMatrix { rows, ncols: g.len() })
            }
            None => None,
        };
        Ok(Subject { record, grid, obs })
    }

    pub fn n(&self) -> usize {
        self.record.n()
    }

    pub fn nodes(&self) -> usize {
        self.grid.as_ref().map_or(0, Grid::len)
    }
}
