//! Half-vectorization, duplication matrices and a Cholesky factorization
//! that reports the failing pivot.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Relative asymmetry tolerated by [`SpdMatrix::new`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Stacks the upper triangle (diagonal included) column by column.
pub fn vech(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::Shape(format!("vech needs a square matrix, got {}x{}", m.nrows(), m.ncols())));
    }
    let d = m.nrows();
    let mut out = Vec::with_capacity(d * (d + 1) / 2);
    for j in 0..d {
        for i in 0..=j {
            out.push(m[(i, j)]);
        }
    }
    Ok(DVector::from_vec(out))
}

/// Position of entry (i, j) of a symmetric d x d matrix inside `vech`.
pub fn vech_index(i: usize, j: usize) -> usize {
    let (r, c) = if i <= j { (i, j) } else { (j, i) };
    c * (c + 1) / 2 + r
}

/// Inverse of [`vech`]: rebuilds the symmetric matrix.
pub fn unvech(v: &DVector<f64>) -> Result<DMatrix<f64>> {
    let len = v.len();
    let d = (((8 * len + 1) as f64).sqrt() as usize - 1) / 2;
    if d * (d + 1) / 2 != len {
        return Err(Error::Shape(format!("length {len} is not triangular")));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| v[vech_index(i, j)]))
}

/// The d^2 x d(d+1)/2 zero/one matrix D with D vech(A) = vec(A) for symmetric A
/// (vec stacks columns).
pub fn duplication_matrix(d: usize) -> Result<DMatrix<f64>> {
    if d == 0 {
        return Err(Error::Domain("duplication matrix needs d >= 1".into()));
    }
    let mut dm = DMatrix::zeros(d * d, d * (d + 1) / 2);
    for j in 0..d {
        for i in 0..d {
            dm[(j * d + i, vech_index(i, j))] = 1.0;
        }
    }
    Ok(dm)
}

/// A symmetric positive definite matrix, validated at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    m: DMatrix<f64>,
    chol: DMatrix<f64>,
}

impl SpdMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::Shape(format!("SPD matrix must be square and non-empty, got {}x{}", m.nrows(), m.ncols())));
        }
        let scale = m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        let d = m.nrows();
        for i in 0..d {
            for j in 0..i {
                if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::Parameter(format!("matrix not symmetric at ({i},{j})")));
                }
            }
        }
        let sym = DMatrix::from_fn(d, d, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
        let chol = cholesky(&sym)?;
        Ok(SpdMatrix { m: sym, chol })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// Lower-triangular L with L Lᵀ = self.
    pub fn factor(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut inv = DMatrix::identity(d, d);
        chol_solve_in_place(&self.chol, &mut inv);
        inv
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = DMatrix::from_column_slice(b.len(), 1, b.as_slice());
        chol_solve_in_place(&self.chol, &mut x);
        x.column(0).into_owned()
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.chol.diagonal().iter().map(|v| v.ln()).sum::<f64>()
    }

    /// xᵀ self⁻¹ x.
    pub fn inv_quad(&self, x: &DVector<f64>) -> f64 {
        let z = forward_substitute(&self.chol, x);
        z.dot(&z)
    }
}

/// Lower-triangular Cholesky factor of an SPD matrix.
pub fn spd_factor(m: &SpdMatrix) -> DMatrix<f64> {
    m.factor().clone()
}

/// Plain Cholesky; the error carries the (zero-based) pivot that failed.
pub fn cholesky(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = m.nrows();
    let mut l = DMatrix::<f64>::zeros(d, d);
    for j in 0..d {
        let mut s = m[(j, j)];
        for k in 0..j {
            s -= l[(j, k)] * l[(j, k)];
        }
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::Factorization { pivot: j });
        }
        let ljj = s.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..d {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Solves L z = b for lower-triangular L.
pub fn forward_substitute(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let d = l.nrows();
    let mut z = b.clone();
    for i in 0..d {
        let mut s = z[i];
        for k in 0..i {
            s -= l[(i, k)] * z[k];
        }
        z[i] = s / l[(i, i)];
    }
    z
}

/// Solves Lᵀ x = z for lower-triangular L.
pub fn back_substitute_transposed(l: &DMatrix<f64>, z: &DVector<f64>) -> DVector<f64> {
    let d = l.nrows();
    let mut x = z.clone();
    for i in (0..d).rev() {
        let mut s = x[i];
        for k in i + 1..d {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

fn chol_solve_in_place(l: &DMatrix<f64>, b: &mut DMatrix<f64>) {
    for c in 0..b.ncols() {
        let col = b.column(c).into_owned();
        let z = forward_substitute(l, &col);
        let x = back_substitute_transposed(l, &z);
        b.set_column(c, &x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vech_examples() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 3.0]);
        assert_eq!(vech(&m).unwrap().as_slice(), &[1.0, 2.0, 3.0]);
        let i3 = DMatrix::<f64>::identity(3, 3);
        assert_eq!(vech(&i3).unwrap().as_slice(), &[1.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
        assert!(matches!(vech(&DMatrix::zeros(2, 3)), Err(Error::Shape(_))));
        assert_eq!(unvech(&vech(&m).unwrap()).unwrap(), m);
    }

    #[test]
    fn duplication_small() {
        assert_eq!(duplication_matrix(1).unwrap(), DMatrix::from_element(1, 1, 1.0));
        let d2 = duplication_matrix(2).unwrap();
        let expect = DMatrix::from_row_slice(4, 3, &[1., 0., 0., 0., 1., 0., 0., 1., 0., 0., 0., 1.]);
        assert_eq!(d2, expect);
        assert!(duplication_matrix(0).is_err());
    }

    #[test]
    fn cholesky_examples() {
        let s = SpdMatrix::new(DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 5.0])).unwrap();
        assert_eq!(spd_factor(&s), DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 1.0, 2.0]));
        let id = SpdMatrix::new(DMatrix::identity(3, 3)).unwrap();
        assert_eq!(spd_factor(&id), DMatrix::identity(3, 3));
        let bad = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 2.0, 0.0, 2.0, 1.0]);
        assert_eq!(SpdMatrix::new(bad), Err(Error::Factorization { pivot: 2 }));
    }

    #[test]
    fn spd_helpers_agree_with_dense() {
        let a = DMatrix::from_row_slice(3, 3, &[3.0, 1.0, 0.5, 1.0, 2.0, 0.3, 0.5, 0.3, 1.5]);
        let s = SpdMatrix::new(a.clone()).unwrap();
        let inv = s.inverse();
        assert!((&a * &inv - DMatrix::identity(3, 3)).norm() < 1e-13);
        let x = DVector::from_vec(vec![0.3, -1.0, 2.0]);
        assert!((s.inv_quad(&x) - (x.transpose() * &inv * &x)[0]).abs() < 1e-12);
        assert!((s.log_det() - a.determinant().ln()).abs() < 1e-12);
        assert!((&a * s.solve(&x) - &x).norm() < 1e-13);
    }
}
