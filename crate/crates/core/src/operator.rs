//! Piecewise-linear discretization of the driving process on a time grid.
//!
//! Two operators are supported. `Exponential` gives a process with covariance
//! exp(-kappa |t - t'|) / (2 kappa tau^2): row k of K couples W_k with
//! W_{k-1} so that K W = L reproduces the exact Ornstein-Uhlenbeck transition
//! between consecutive nodes when V = h (the first row is the stationary
//! start). `IntegratedRandomWalk` uses the Neumann stiffness matrix of the
//! hat basis with the first node pinned.

use crate::error::{Error, Result};
use crate::kernels::banded::Tridiag;
use crate::mixture::{Family, GigParams};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Precision added to the first diagonal entry of the random-walk stiffness matrix.
pub const PIN_PRECISION: f64 = 1e8;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nodes: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    /// Padding on each side as a fraction of the observed time range.
    pub pad_fraction: f64,
    pub max_nodes: usize,
    /// Optional spacing of a uniform mesh merged with the observation times.
    pub mesh_spacing: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            pad_fraction: 0.05,
            max_nodes: 200,
            mesh_spacing: None,
        }
    }
}

impl Grid {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::Domain(format!("grid needs at least 2 nodes, got {}", nodes.len())));
        }
        if nodes.iter().any(|v| !v.is_finite()) || nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("grid nodes must be finite and strictly increasing".into()));
        }
        Ok(Grid { nodes })
    }

    /// Default grid for a set of times: padded range, nodes at the times, and
    /// optionally a uniform mesh, with at most `max_nodes` nodes.
    pub fn for_times(times: &[f64], cfg: &GridConfig) -> Result<Self> {
        if times.is_empty() || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::Domain("grid needs at least one finite time".into()));
        }
        if cfg.max_nodes < 2 {
            return Err(Error::Config("max_nodes must be at least 2".into()));
        }
        let mut ts = times.to_vec();
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        let (t0, t1) = (ts[0], ts[ts.len() - 1]);
        let range = t1 - t0;
        let pad = if range > 0.0 {
            cfg.pad_fraction * range
        } else {
            cfg.pad_fraction.max(0.05) * t0.abs().max(1.0)
        };
        let (lo, hi) = (t0 - pad, t1 + pad);
        let mut pts: Vec<f64> = Vec::new();
        let fixed = ts.len() + if pad > 0.0 { 2 } else { 0 };
        if fixed > cfg.max_nodes {
            let k = cfg.max_nodes;
            pts.extend((0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64));
        } else {
            pts.extend(&ts);
            if pad > 0.0 {
                pts.push(lo);
                pts.push(hi);
            }
            if let Some(sp) = cfg.mesh_spacing {
                if !(sp > 0.0) {
                    return Err(Error::Config(format!("mesh spacing must be positive, got {sp}")));
                }
                let room = cfg.max_nodes - fixed;
                let wanted = ((hi - lo) / sp).ceil() as usize + 1;
                let m = wanted.min(room);
                if m >= 2 {
                    pts.extend((0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64));
                }
            }
        }
        pts.sort_by(f64::total_cmp);
        let tol = 1e-9 * (hi - lo).max(1.0);
        let mut nodes: Vec<f64> = Vec::with_capacity(pts.len());
        for p in pts {
            match nodes.last() {
                Some(&last) if p - last <= tol => {
                    // keep exact observation times when a mesh point lands on one
                    if ts.binary_search_by(|t| t.total_cmp(&p)).is_ok() {
                        *nodes.last_mut().expect("non-empty") = p;
                    }
                }
                _ => nodes.push(p),
            }
        }
        Grid::new(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.nodes[0]
    }

    pub fn last(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// h_k, the integral of the k-th hat function.
    pub fn hat_areas(&self) -> Vec<f64> {
        let s = &self.nodes;
        let k = s.len();
        (0..k)
            .map(|i| {
                let left = if i > 0 { s[i] - s[i - 1] } else { 0.0 };
                let right = if i + 1 < k { s[i + 1] - s[i] } else { 0.0 };
                0.5 * (left + right)
            })
            .collect()
    }
}

/// Non-zero hat-function values at one time: weight `w[0]` on node `k`, `w[1]` on node `k + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisRow {
    pub k: usize,
    pub w: [f64; 2],
}

pub fn basis_eval(grid: &Grid, t: f64) -> Result<BasisRow> {
    let s = grid.nodes();
    let n = s.len();
    let tol = 1e-12 * (s[n - 1] - s[0]).max(1.0);
    if !(t >= s[0] - tol && t <= s[n - 1] + tol) {
        return Err(Error::Domain(format!("time {t} outside grid [{}, {}]", s[0], s[n - 1])));
    }
    let t = t.clamp(s[0], s[n - 1]);
    // index of the element [s_k, s_{k+1}] containing t
    let k = match s.binary_search_by(|v| v.total_cmp(&t)) {
        Ok(i) => {
            if i + 1 < n {
                return Ok(BasisRow { k: i, w: [1.0, 0.0] });
            }
            return Ok(BasisRow { k: n - 2, w: [0.0, 1.0] });
        }
        Err(i) => i - 1,
    };
    let theta = (t - s[k]) / (s[k + 1] - s[k]);
    Ok(BasisRow {
        k,
        w: [1.0 - theta, theta],
    })
}

/// n x K observation matrix with two-sparse rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ObsMatrix {
    pub rows: Vec<BasisRow>,
    pub ncols: usize,
}

impl ObsMatrix {
    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    /// A w.
    pub fn mul_vec(&self, w: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.w[0] * w[r.k] + r.w[1] * w[r.k + 1]).collect()
    }

    /// Aᵀ r.
    pub fn tr_mul_vec(&self, r: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols];
        for (row, &v) in self.rows.iter().zip(r) {
            out[row.k] += row.w[0] * v;
            out[row.k + 1] += row.w[1] * v;
        }
        out
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.rows.len(), self.ncols);
        for (j, r) in self.rows.iter().enumerate() {
            m[(j, r.k)] += r.w[0];
            m[(j, r.k + 1)] += r.w[1];
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorKind {
    Exponential,
    IntegratedRandomWalk,
}

impl std::str::FromStr for OperatorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exponential" | "ou" => Ok(OperatorKind::Exponential),
            "integrated-random-walk" | "irw" | "rw2" => Ok(OperatorKind::IntegratedRandomWalk),
            other => Err(Error::Config(format!("unknown operator kind '{other}'"))),
        }
    }
}

/// Operator kind with range `kappa` (exponential only) and precision scale `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub kind: OperatorKind,
    pub kappa: f64,
    pub tau: f64,
}

impl OperatorSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Parameter(format!("tau must be positive, got {}", self.tau)));
        }
        if self.kind == OperatorKind::Exponential && !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::Parameter(format!("kappa must be positive, got {}", self.kappa)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorParam {
    Kappa,
    Tau,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Discretization {
    pub grid: Grid,
    pub spec: OperatorSpec,
    pub k_matrix: Tridiag,
    pub h: Vec<f64>,
    /// Consistent mass matrix of the hat basis.
    pub mass: Tridiag,
}

fn mass_matrix(grid: &Grid) -> Tridiag {
    let s = grid.nodes();
    let n = s.len();
    let mut m = Tridiag::zeros(n);
    for e in 0..n - 1 {
        let d = s[e + 1] - s[e];
        m.diag[e] += d / 3.0;
        m.diag[e + 1] += d / 3.0;
        m.lower[e] = d / 6.0;
        m.upper[e] = d / 6.0;
    }
    m
}

fn stiffness_matrix(grid: &Grid) -> Tridiag {
    let s = grid.nodes();
    let n = s.len();
    let mut g = Tridiag::zeros(n);
    for e in 0..n - 1 {
        let inv = 1.0 / (s[e + 1] - s[e]);
        g.diag[e] += inv;
        g.diag[e + 1] += inv;
        g.lower[e] = -inv;
        g.upper[e] = -inv;
    }
    g
}

/// Rows of the exponential operator and their kappa-derivatives, at tau = 1.
fn exponential_rows(grid: &Grid, h: &[f64], kappa: f64) -> (Tridiag, Tridiag) {
    let s = grid.nodes();
    let n = s.len();
    let mut k = Tridiag::zeros(n);
    let mut dk = Tridiag::zeros(n);
    let c0 = (2.0 * kappa * h[0]).sqrt();
    k.diag[0] = c0;
    dk.diag[0] = c0 / (2.0 * kappa);
    for i in 1..n {
        let delta = s[i] - s[i - 1];
        let rho = (-kappa * delta).exp();
        let one_m = -(-2.0 * kappa * delta).exp_m1();
        let c = (2.0 * kappa * h[i] / one_m).sqrt();
        let dc = 0.5 * c * (1.0 / kappa - 2.0 * delta * rho * rho / one_m);
        k.diag[i] = c;
        k.lower[i - 1] = -rho * c;
        dk.diag[i] = dc;
        dk.lower[i - 1] = delta * rho * c - rho * dc;
    }
    (k, dk)
}

pub fn assemble(spec: &OperatorSpec, grid: &Grid) -> Result<Discretization> {
    spec.validate()?;
    if grid.len() < 2 {
        return Err(Error::Domain("operator needs at least 2 nodes".into()));
    }
    let h = grid.hat_areas();
    let k0 = match spec.kind {
        OperatorKind::Exponential => exponential_rows(grid, &h, spec.kappa).0,
        OperatorKind::IntegratedRandomWalk => {
            let mut g = stiffness_matrix(grid);
            g.diag[0] += PIN_PRECISION;
            g
        }
    };
    Ok(Discretization {
        grid: grid.clone(),
        spec: *spec,
        k_matrix: k0.scaled(spec.tau),
        h,
        mass: mass_matrix(grid),
    })
}

impl Discretization {
    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    /// Parameters the operator depends on.
    pub fn params(&self) -> &'static [OperatorParam] {
        match self.spec.kind {
            OperatorKind::Exponential => &[OperatorParam::Kappa, OperatorParam::Tau],
            OperatorKind::IntegratedRandomWalk => &[OperatorParam::Tau],
        }
    }

    /// Derivative of K with respect to one parameter (natural scale).
    pub fn derivative(&self, param: OperatorParam) -> Tridiag {
        match param {
            OperatorParam::Tau => self.k_matrix.scaled(1.0 / self.spec.tau),
            OperatorParam::Kappa => match self.spec.kind {
                OperatorKind::Exponential => exponential_rows(&self.grid, &self.h, self.spec.kappa).1.scaled(self.spec.tau),
                OperatorKind::IntegratedRandomWalk => Tridiag::zeros(self.len()),
            },
        }
    }

    pub fn log_det_k(&self) -> Result<f64> {
        self.k_matrix.log_abs_det().map_err(|_| self.singular())
    }

    pub fn observation_matrix(&self, times: &[f64]) -> Result<ObsMatrix> {
        observation_matrix(self, times)
    }

    fn singular(&self) -> Error {
        Error::numerical(format!("singular {:?} operator matrix", self.spec.kind))
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.k_matrix.solve(b).map_err(|_| self.singular())
    }

    pub fn solve_transpose(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.k_matrix.solve_transpose(b).map_err(|_| self.singular())
    }
}

pub fn observation_matrix(disc: &Discretization, times: &[f64]) -> Result<ObsMatrix> {
    let rows = times.iter().map(|&t| basis_eval(&disc.grid, t)).collect::<Result<Vec<_>>>()?;
    Ok(ObsMatrix {
        rows,
        ncols: disc.len(),
    })
}

/// Mixing law of each V_k: mean h_k for NIG (GIG(-1/2, nu, h_k^2 nu)) and GAL
/// (GIG(h_k nu, 2 nu, 0)); mode-normalised GIG(-1/2, 0, 3 h_k^2) for Cauchy.
pub fn process_v_prior(disc: &Discretization, family: Family, nu: f64) -> Result<Vec<GigParams>> {
    process_v_prior_h(&disc.h, family, nu)
}

pub fn process_v_prior_h(h: &[f64], family: Family, nu: f64) -> Result<Vec<GigParams>> {
    if family != Family::Cauchy && !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::Domain(format!("process tail parameter must be positive, got {nu}")));
    }
    h.iter()
        .map(|&hk| match family {
            Family::Nig => GigParams::new(-0.5, nu, hk * hk * nu),
            Family::Gal => GigParams::new(hk * nu, 2.0 * nu, 0.0),
            Family::Cauchy => GigParams::new(-0.5, 0.0, 3.0 * hk * hk),
            other => Err(Error::Unsupported(format!("{other} process has no mixing law"))),
        })
        .collect()
}

/// Gaussian law of W given V: mean K⁻¹(h delta + V mu), covariance K⁻¹ diag(V) K⁻ᵀ.
#[derive(Debug, Clone)]
pub struct WLaw {
    pub mean: Vec<f64>,
    k: Tridiag,
    sqrt_v: Vec<f64>,
}

impl WLaw {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z: Vec<f64> = self.sqrt_v.iter().map(|s| s * rng.sample::<f64, _>(StandardNormal)).collect();
        let dev = self.k.solve(&z).expect("factorization checked at construction");
        self.mean.iter().zip(dev).map(|(m, d)| m + d).collect()
    }

    /// Applies the covariance factor K⁻¹ diag(sqrt V) to `z`.
    pub fn apply_factor(&self, z: &[f64]) -> Vec<f64> {
        let s: Vec<f64> = self.sqrt_v.iter().zip(z).map(|(a, b)| a * b).collect();
        self.k.solve(&s).expect("factorization checked at construction")
    }

    pub fn covariance_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.mean.len();
        let mut f = nalgebra::DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = self.apply_factor(&e);
            for i in 0..n {
                f[(i, j)] = col[i];
            }
        }
        &f * f.transpose()
    }
}

pub fn conditional_w_law(disc: &Discretization, v: &[f64], mu_w: f64, delta_w: f64) -> Result<WLaw> {
    if v.len() != disc.len() {
        return Err(Error::Shape(format!("V has length {} for {} nodes", v.len(), disc.len())));
    }
    if v.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
        return Err(Error::Domain("variance components must be positive".into()));
    }
    let rhs: Vec<f64> = disc.h.iter().zip(v).map(|(h, vk)| h * delta_w + vk * mu_w).collect();
    let mean = disc.solve(&rhs)?;
    Ok(WLaw {
        mean,
        k: disc.k_matrix.clone(),
        sqrt_v: v.iter().map(|x| x.sqrt()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(n: usize, dx: f64) -> Grid {
        Grid::new((0..n).map(|i| i as f64 * dx).collect()).unwrap()
    }

    #[test]
    fn hat_areas_and_stiffness() {
        let g = uniform(3, 0.5);
        assert_eq!(g.hat_areas(), vec![0.25, 0.5, 0.25]);
        let spec = OperatorSpec {
            kind: OperatorKind::IntegratedRandomWalk,
            kappa: 1.0,
            tau: 1.0,
        };
        let d = assemble(&spec, &uniform(5, 0.25)).unwrap();
        assert_eq!((d.k_matrix.get(2, 1), d.k_matrix.get(2, 2), d.k_matrix.get(2, 3)), (-4.0, 8.0, -4.0));
        assert_eq!(d.k_matrix.get(0, 0), 4.0 + PIN_PRECISION);
        let total: f64 = d.h.iter().sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn basis_rows() {
        let g = uniform(4, 1.0);
        assert_eq!(basis_eval(&g, 2.0).unwrap(), BasisRow { k: 2, w: [1.0, 0.0] });
        assert_eq!(basis_eval(&g, 3.0).unwrap(), BasisRow { k: 2, w: [0.0, 1.0] });
        assert_eq!(basis_eval(&g, 1.5).unwrap(), BasisRow { k: 1, w: [0.5, 0.5] });
        assert!(basis_eval(&g, 3.5).is_err());
    }

    #[test]
    fn grid_for_times() {
        let g = Grid::for_times(&[1.0, 3.0, 2.0], &GridConfig::default()).unwrap();
        assert_eq!(g.nodes(), &[0.9, 1.0, 2.0, 3.0, 3.1]);
        let single = Grid::for_times(&[4.0], &GridConfig::default()).unwrap();
        assert_eq!(single.len(), 3);
        let cfg = GridConfig {
            mesh_spacing: Some(0.01),
            max_nodes: 50,
            ..GridConfig::default()
        };
        let g = Grid::for_times(&[0.0, 0.37, 1.0], &cfg).unwrap();
        assert!(g.len() <= 50);
        assert!(g.nodes().contains(&0.37));
    }

    #[test]
    fn kappa_derivative_matches_finite_difference() {
        let g = Grid::new(vec![0.0, 0.3, 0.5, 1.4, 2.0]).unwrap();
        let spec = OperatorSpec {
            kind: OperatorKind::Exponential,
            kappa: 0.8,
            tau: 1.3,
        };
        let d = assemble(&spec, &g).unwrap();
        let dk = d.derivative(OperatorParam::Kappa);
        let eps = 1e-6;
        let up = assemble(&OperatorSpec { kappa: 0.8 + eps, ..spec }, &g).unwrap();
        let dn = assemble(&OperatorSpec { kappa: 0.8 - eps, ..spec }, &g).unwrap();
        let fd = (up.k_matrix.to_dense() - dn.k_matrix.to_dense()) / (2.0 * eps);
        assert!((fd - dk.to_dense()).norm() < 1e-8);
    }
}
