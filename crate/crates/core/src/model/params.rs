use crate::error::{Error, Result};
use crate::kernels::SpdMatrix;
use crate::mixture::{constrain_unit, Family, GigParams, Moment};
use crate::model::data::{NoiseScope, Subject};
use crate::operator::{assemble, process_v_prior_h, Discretization, OperatorSpec};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Family and tail parameter of a symmetric or skewed mixture component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub family: Family,
    /// Tail parameter; unused by the Normal and Cauchy families.
    #[serde(default = "infinite", with = "serde_nu")]
    pub nu: f64,
}

impl Component {
    pub fn normal() -> Self {
        Component {
            family: Family::Normal,
            nu: f64::INFINITY,
        }
    }

    pub fn new(family: Family, nu: f64) -> Self {
        Component { family, nu }
    }

    /// Unit-constrained mixing law, `None` for the Normal family.
    pub fn law(&self) -> Result<Option<GigParams>> {
        match self.family {
            Family::Normal => Ok(None),
            f => constrain_unit(f, self.nu).map(Some),
        }
    }

    /// E[V^k] under the mixing law (1 for the Normal family), `None` when unbounded.
    pub fn moment(&self, k: f64) -> Result<Option<f64>> {
        match self.law()? {
            None => Ok(Some(1.0)),
            Some(g) => Ok(match g.moment(k)? {
                Moment::Finite(v) => Some(v),
                Moment::Unbounded => None,
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessParams {
    pub family: Family,
    #[serde(default = "infinite", with = "serde_nu")]
    pub nu: f64,
    /// Skewness mu_w; `None` keeps the process symmetric.
    pub mu: Option<f64>,
    pub operator: OperatorSpec,
}

impl ProcessParams {
    pub fn mu(&self) -> f64 {
        self.mu.unwrap_or(0.0)
    }

    /// Per-node mixing laws, `None` for a Gaussian process (V = h).
    pub fn v_priors(&self, h: &[f64]) -> Result<Option<Vec<GigParams>>> {
        match self.family {
            Family::Normal => Ok(None),
            f => process_v_prior_h(h, f, self.nu).map(Some),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    #[serde(with = "serde_vector")]
    pub beta: DVector<f64>,
    pub sigma: f64,
    pub noise: Component,
    #[serde(default)]
    pub noise_scope: NoiseScope,
    /// Random-effect covariance Sigma (q x q, possibly empty).
    #[serde(with = "serde_matrix")]
    pub re_cov: DMatrix<f64>,
    pub re: Component,
    /// Random-effect skewness; `None` keeps the random effects symmetric.
    #[serde(default, with = "serde_opt_vector")]
    pub mu_u: Option<DVector<f64>>,
    #[serde(default)]
    pub process: Option<ProcessParams>,
}

impl ModelParams {
    pub fn p(&self) -> usize {
        self.beta.len()
    }

    pub fn q(&self) -> usize {
        self.re_cov.nrows()
    }

    pub fn mu_u(&self) -> DVector<f64> {
        self.mu_u.clone().unwrap_or_else(|| DVector::zeros(self.q()))
    }

    pub fn re_cov_spd(&self) -> Result<SpdMatrix> {
        SpdMatrix::new(self.re_cov.clone())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Parameter(format!("sigma must be positive, got {}", self.sigma)));
        }
        if self.beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::Parameter("beta has non-finite entries".into()));
        }
        let q = self.q();
        if self.re_cov.ncols() != q {
            return Err(Error::Shape("random-effect covariance must be square".into()));
        }
        if q > 0 {
            self.re_cov_spd()?;
        }
        if let Some(mu) = &self.mu_u {
            if mu.len() != q || mu.iter().any(|m| !m.is_finite()) {
                return Err(Error::Parameter(format!("mu_u must be a finite {q}-vector")));
            }
        }
        self.noise.law()?;
        if q > 0 {
            self.re.law()?;
        }
        if let Some(pp) = &self.process {
            pp.operator.validate()?;
            if pp.family.has_nu() && !(pp.nu > 0.0 && pp.nu.is_finite()) {
                return Err(Error::Parameter(format!("process nu must be positive, got {}", pp.nu)));
            }
            if !pp.mu().is_finite() {
                return Err(Error::Parameter("mu_w must be finite".into()));
            }
            if !matches!(pp.family, Family::Normal | Family::Nig | Family::Gal | Family::Cauchy) {
                return Err(Error::Unsupported(format!("{} process", pp.family)));
            }
        }
        Ok(())
    }

    /// Assembles the process operator on the subject's grid.
    pub fn discretize(&self, subject: &Subject) -> Result<Option<Discretization>> {
        match (&self.process, &subject.grid) {
            (Some(pp), Some(grid)) => assemble(&pp.operator, grid).map(Some),
            (None, _) => Ok(None),
            (Some(_), None) => Err(Error::Shape(format!(
                "subject {} was prepared without a process grid",
                subject.record.id
            ))),
        }
    }

    pub fn is_gaussian(&self) -> bool {
        self.noise.family == Family::Normal
            && (self.q() == 0 || self.re.family == Family::Normal)
            && self.process.as_ref().is_none_or(|p| p.family == Family::Normal)
    }
}

fn infinite() -> f64 {
    f64::INFINITY
}

/// Tail parameters: a missing or null value stands for +infinity.
mod serde_nu {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

mod serde_vector {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
        Ok(DVector::from_vec(Vec::<f64>::deserialize(d)?))
    }
}

mod serde_opt_vector {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<DVector<f64>>, s: S) -> Result<S::Ok, S::Error> {
        v.as_ref().map(|v| v.iter().copied().collect::<Vec<f64>>()).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<DVector<f64>>, D::Error> {
        Ok(Option::<Vec<f64>>::deserialize(d)?.map(DVector::from_vec))
    }
}

mod serde_matrix {
    use nalgebra::DMatrix;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
        s.collect_seq(rows)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let n = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != c) {
            return Err(D::Error::custom("matrix rows have unequal lengths"));
        }
        Ok(DMatrix::from_fn(n, c, |i, j| rows[i][j]))
    }
}
