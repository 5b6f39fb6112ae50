//! Tridiagonal operators and the arrowhead banded Cholesky used for the
//! joint (W, U) Gaussian conditional.

use crate::error::{Error, Result};
use crate::kernels::linalg::cholesky;
use nalgebra::{DMatrix, DVector};

/// A general (not necessarily symmetric) tridiagonal matrix.
///
/// `lower[k]` holds entry (k+1, k), `upper[k]` holds entry (k, k+1).
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiag {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiag {
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 || lower.len() + 1 != n || upper.len() + 1 != n {
            return Err(Error::Shape(format!(
                "tridiagonal bands of lengths {}/{}/{}",
                lower.len(),
                n,
                upper.len()
            )));
        }
        Ok(Tridiag { lower, diag, upper })
    }

    pub fn zeros(n: usize) -> Self {
        Tridiag {
            lower: vec![0.0; n.saturating_sub(1)],
            diag: vec![0.0; n],
            upper: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if i == j + 1 {
            self.lower[j]
        } else if j == i + 1 {
            self.upper[i]
        } else {
            0.0
        }
    }

    pub fn scaled(&self, c: f64) -> Tridiag {
        Tridiag {
            lower: self.lower.iter().map(|v| v * c).collect(),
            diag: self.diag.iter().map(|v| v * c).collect(),
            upper: self.upper.iter().map(|v| v * c).collect(),
        }
    }

    pub fn transpose(&self) -> Tridiag {
        Tridiag {
            lower: self.upper.clone(),
            diag: self.diag.clone(),
            upper: self.lower.clone(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.get(i, j))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|k| {
                let mut s = self.diag[k] * x[k];
                if k > 0 {
                    s += self.lower[k - 1] * x[k - 1];
                }
                if k + 1 < n {
                    s += self.upper[k] * x[k + 1];
                }
                s
            })
            .collect()
    }

    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.transpose().mul_vec(x)
    }

    /// Pivots of the LU factorization without pivoting.
    fn pivots(&self) -> Result<Vec<f64>> {
        let n = self.dim();
        let mut d = vec![0.0; n];
        d[0] = self.diag[0];
        for k in 1..n {
            if d[k - 1] == 0.0 || !d[k - 1].is_finite() {
                return Err(Error::Factorization { pivot: k - 1 });
            }
            d[k] = self.diag[k] - self.lower[k - 1] * self.upper[k - 1] / d[k - 1];
        }
        if d[n - 1] == 0.0 || !d[n - 1].is_finite() {
            return Err(Error::Factorization { pivot: n - 1 });
        }
        Ok(d)
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::Shape(format!("rhs length {} for dimension {n}", b.len())));
        }
        let d = self.pivots()?;
        let mut z = b.to_vec();
        for k in 1..n {
            z[k] -= self.lower[k - 1] / d[k - 1] * z[k - 1];
        }
        let mut x = vec![0.0; n];
        x[n - 1] = z[n - 1] / d[n - 1];
        for k in (0..n - 1).rev() {
            x[k] = (z[k] - self.upper[k] * x[k + 1]) / d[k];
        }
        Ok(x)
    }

    pub fn solve_transpose(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.transpose().solve(b)
    }

    /// log |det|.
    pub fn log_abs_det(&self) -> Result<f64> {
        Ok(self.pivots()?.iter().map(|d| d.abs().ln()).sum())
    }

    /// tr(self⁻¹ · deriv), the derivative of log|det| along `deriv`, in O(n).
    pub fn trace_inv_mul(&self, deriv: &Tridiag) -> Result<f64> {
        let n = self.dim();
        let d = self.pivots()?;
        let mut dd = vec![0.0; n];
        dd[0] = deriv.diag[0];
        let mut tr = dd[0] / d[0];
        for k in 1..n {
            let lu = self.lower[k - 1] * self.upper[k - 1];
            let dlu = deriv.lower[k - 1] * self.upper[k - 1] + self.lower[k - 1] * deriv.upper[k - 1];
            dd[k] = deriv.diag[k] - dlu / d[k - 1] + lu * dd[k - 1] / (d[k - 1] * d[k - 1]);
            tr += dd[k] / d[k];
        }
        Ok(tr)
    }
}

/// Cholesky factor of the symmetric matrix
///
/// ```text
/// [ B   Cᵀ ]
/// [ C   D  ]
/// ```
///
/// where B (n x n) is banded with half-bandwidth `bw`, C is q x n dense and D is
/// q x q dense. Either block may be empty.
#[derive(Debug, Clone)]
pub struct ArrowCholesky {
    n: usize,
    bw: usize,
    /// band[i][j] = L(i, i - j)
    band: Vec<Vec<f64>>,
    /// L_r = C L_bᵀ⁻¹, q x n
    border: DMatrix<f64>,
    corner: DMatrix<f64>,
}

impl ArrowCholesky {
    /// `band[i][j]` must hold B(i, i - j) for j = 0..=bw.
    pub fn factor(band: Vec<Vec<f64>>, bw: usize, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n = band.len();
        let q = d.nrows();
        if c.nrows() != q || (q > 0 && c.ncols() != n) || d.ncols() != q {
            return Err(Error::Shape("arrowhead blocks do not conform".into()));
        }
        let mut l = vec![vec![0.0; bw + 1]; n];
        for i in 0..n {
            if band[i].len() != bw + 1 {
                return Err(Error::Shape("band rows must have bw + 1 entries".into()));
            }
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let mut s = band[i][i - j];
                let k0 = j0.max(j.saturating_sub(bw));
                for k in k0..j {
                    s -= l[i][i - k] * l[j][j - k];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::Factorization { pivot: i });
                    }
                    l[i][0] = s.sqrt();
                } else {
                    l[i][i - j] = s / l[j][0];
                }
            }
        }
        let mut border = DMatrix::zeros(q, n);
        for r in 0..q {
            for i in 0..n {
                let mut s = c[(r, i)];
                for k in i.saturating_sub(bw)..i {
                    s -= border[(r, k)] * l[i][i - k];
                }
                border[(r, i)] = s / l[i][0];
            }
        }
        let schur = if q > 0 { &d - &border * border.transpose() } else { d };
        let corner = if q > 0 {
            cholesky(&schur).map_err(|e| match e {
                Error::Factorization { pivot } => Error::Factorization { pivot: n + pivot },
                other => other,
            })?
        } else {
            DMatrix::zeros(0, 0)
        };
        Ok(ArrowCholesky {
            n,
            bw,
            band: l,
            border,
            corner,
        })
    }

    pub fn dim(&self) -> usize {
        self.n + self.corner.nrows()
    }

    /// Solves L z = b.
    pub fn forward(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let q = self.corner.nrows();
        let mut z = b.to_vec();
        for i in 0..n {
            let mut s = z[i];
            for k in i.saturating_sub(self.bw)..i {
                s -= self.band[i][i - k] * z[k];
            }
            z[i] = s / self.band[i][0];
        }
        for r in 0..q {
            let mut s = z[n + r];
            for i in 0..n {
                s -= self.border[(r, i)] * z[i];
            }
            for k in 0..r {
                s -= self.corner[(r, k)] * z[n + k];
            }
            z[n + r] = s / self.corner[(r, r)];
        }
        z
    }

    /// Solves Lᵀ x = z.
    pub fn backward(&self, z: &[f64]) -> Vec<f64> {
        let n = self.n;
        let q = self.corner.nrows();
        let mut x = z.to_vec();
        for r in (0..q).rev() {
            let mut s = x[n + r];
            for k in r + 1..q {
                s -= self.corner[(k, r)] * x[n + k];
            }
            x[n + r] = s / self.corner[(r, r)];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for r in 0..q {
                s -= self.border[(r, i)] * x[n + r];
            }
            for k in i + 1..(i + self.bw + 1).min(n) {
                s -= self.band[k][k - i] * x[k];
            }
            x[i] = s / self.band[i][0];
        }
        x
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.backward(&self.forward(b))
    }

    pub fn log_det(&self) -> f64 {
        let band: f64 = self.band.iter().map(|r| r[0].ln()).sum();
        let corner: f64 = self.corner.diagonal().iter().map(|v| v.ln()).sum();
        2.0 * (band + corner)
    }

    /// Draw from N(Q⁻¹b, Q⁻¹) given standard normal noise `eps`.
    pub fn sample(&self, b: &[f64], eps: &[f64]) -> Vec<f64> {
        let mut z = self.forward(b);
        for (zi, e) in z.iter_mut().zip(eps) {
            *zi += e;
        }
        self.backward(&z)
    }
}

/// Dense copy of a banded-plus-border matrix, for tests and small problems.
pub fn arrow_to_dense(band: &[Vec<f64>], bw: usize, c: &DMatrix<f64>, d: &DMatrix<f64>) -> DMatrix<f64> {
    let n = band.len();
    let q = d.nrows();
    let mut m = DMatrix::zeros(n + q, n + q);
    for i in 0..n {
        for j in i.saturating_sub(bw)..=i {
            m[(i, j)] = band[i][i - j];
            m[(j, i)] = band[i][i - j];
        }
    }
    for r in 0..q {
        for i in 0..n {
            m[(n + r, i)] = c[(r, i)];
            m[(i, n + r)] = c[(r, i)];
        }
        for s in 0..q {
            m[(n + r, n + s)] = d[(r, s)];
        }
    }
    m
}

/// Solves with a dense SPD matrix; used where sizes are tiny.
pub fn dense_solve(m: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    m.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::numerical("singular dense system"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_tridiag() -> Tridiag {
        Tridiag::new(vec![-0.5, 0.3, -1.2], vec![2.0, 3.0, 2.5, 4.0], vec![0.7, -0.4, 0.9]).unwrap()
    }

    #[test]
    fn solve_and_det_match_dense() {
        let t = sample_tridiag();
        let dense = t.to_dense();
        let b = vec![1.0, -2.0, 0.5, 3.0];
        let x = t.solve(&b).unwrap();
        let r = &dense * DVector::from_vec(x.clone()) - DVector::from_vec(b.clone());
        assert!(r.norm() < 1e-13);
        let xt = t.solve_transpose(&b).unwrap();
        let rt = dense.transpose() * DVector::from_vec(xt) - DVector::from_vec(b.clone());
        assert!(rt.norm() < 1e-13);
        assert!((t.log_abs_det().unwrap() - dense.determinant().abs().ln()).abs() < 1e-13);
        let mv = t.mul_vec(&b);
        let dmv = &dense * DVector::from_vec(b.clone());
        assert!((DVector::from_vec(mv) - dmv).norm() < 1e-14);
    }

    #[test]
    fn arrow_cholesky_matches_dense() {
        let n = 6;
        let bw = 2;
        let band: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut r = vec![6.0 + i as f64, 0.0, 0.0];
                if i >= 1 {
                    r[1] = -1.0 + 0.1 * i as f64;
                }
                if i >= 2 {
                    r[2] = 0.4;
                }
                r
            })
            .collect();
        let c = DMatrix::from_fn(2, n, |r, i| 0.2 * (r as f64 + 1.0) - 0.05 * i as f64);
        let d = DMatrix::from_row_slice(2, 2, &[3.0, 0.5, 0.5, 2.0]);
        let dense = arrow_to_dense(&band, bw, &c, &d);
        let f = ArrowCholesky::factor(band, bw, c, d).unwrap();
        let b: Vec<f64> = (0..n + 2).map(|i| (i as f64).sin()).collect();
        let x = f.solve(&b);
        let r = &dense * DVector::from_vec(x) - DVector::from_vec(b);
        assert!(r.norm() < 1e-12);
        assert!((f.log_det() - dense.determinant().ln()).abs() < 1e-12);
    }
}
