use faer::{Mat, MatRef, Side};
use num_complex::Complex64 as C64;

use crate::error::{structural, Error, Result};
use crate::state::StateVector;

/// A square complex matrix. Storage is a column-major `faer` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    mat: Mat<C64>,
}

impl DenseOperator {
    pub fn zeros(dim: usize) -> Self {
        Self { mat: Mat::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { mat: Mat::identity(dim, dim) }
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self { mat: Mat::from_fn(dim, dim, f) }
    }

    /// Builds from a row-major entry list of length `dim²`.
    pub fn from_row_major(dim: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(structural(format!(
                "expected {} entries for a {dim}×{dim} matrix, got {}",
                dim * dim,
                entries.len()
            )));
        }
        Ok(Self::from_fn(dim, |i, j| entries[i * dim + j]))
    }

    pub fn from_mat(mat: Mat<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(structural("dense operators must be square"));
        }
        Ok(Self { mat })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.mat[(i, j)] = v;
    }

    pub(crate) fn add_to(&mut self, i: usize, j: usize, v: C64) {
        self.mat[(i, j)] += v;
    }

    pub fn as_mat(&self) -> MatRef<'_, C64> {
        self.mat.as_ref()
    }

    pub fn into_mat(self) -> Mat<C64> {
        self.mat
    }

    pub fn to_row_major(&self) -> Vec<C64> {
        let d = self.dim();
        (0..d * d).map(|k| self.mat[(k / d, k % d)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self { mat: self.mat.adjoint().to_owned() }
    }

    pub fn matmul(&self, other: &DenseOperator) -> Self {
        Self { mat: &self.mat * &other.mat }
    }

    pub fn sub(&self, other: &DenseOperator) -> Self {
        Self { mat: &self.mat - &other.mat }
    }

    pub fn add(&self, other: &DenseOperator) -> Self {
        Self { mat: &self.mat + &other.mat }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { mat: Mat::from_fn(self.dim(), self.dim(), |i, j| self.mat[(i, j)] * s) }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.mat[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.norm_l2()
    }

    /// `‖A − A†‖_F ≤ tol·‖A‖_F`.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol * self.frobenius_norm()
    }

    pub fn hermitian_defect(&self) -> f64 {
        (&self.mat - self.mat.adjoint()).norm_l2()
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &DenseOperator) -> Self {
        Self { mat: &self.mat * &other.mat - &other.mat * &self.mat }
    }

    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        if v.dim() != self.dim() {
            return Err(structural(format!(
                "{}-dimensional operator applied to {}-dimensional vector",
                self.dim(),
                v.dim()
            )));
        }
        let d = self.dim();
        let mut out = vec![C64::new(0.0, 0.0); d];
        for j in 0..d {
            let a = v.amplitudes()[j];
            if a == C64::new(0.0, 0.0) {
                continue;
            }
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.mat[(i, j)] * a;
            }
        }
        Ok(StateVector::from_vec(out))
    }

    /// Eigendecomposition of a Hermitian matrix (lower triangle is read).
    pub fn hermitian_eigen(&self) -> Result<HermitianEigen> {
        HermitianEigen::new(self.mat.as_ref())
    }
}

/// `A = Q diag(λ) Q†` for Hermitian `A`; eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Mat<C64>,
}

impl HermitianEigen {
    pub fn new(a: MatRef<'_, C64>) -> Result<Self> {
        let evd = a
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Decomposition(format!("Hermitian eigendecomposition: {e:?}")))?;
        let values = evd.S().column_vector().iter().map(|v| v.re).collect();
        Ok(Self { values, vectors: evd.U().to_owned() })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Dense `exp(−iθA)`.
    pub fn exp_i(&self, theta: f64) -> Mat<C64> {
        let q = &self.vectors;
        let scaled =
            Mat::from_fn(q.nrows(), q.ncols(), |i, j| q[(i, j)] * C64::from_polar(1.0, -theta * self.values[j]));
        &scaled * q.adjoint()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_roundtrip() {
        let e: Vec<C64> = (0..9).map(|k| C64::new(k as f64, -(k as f64))).collect();
        let m = DenseOperator::from_row_major(3, &e).unwrap();
        assert_eq!(m.get(1, 2), e[5]);
        assert_eq!(m.to_row_major(), e);
        assert!(DenseOperator::from_row_major(3, &e[..8]).is_err());
    }

    #[test]
    fn eigen_reconstructs() {
        let a = DenseOperator::from_fn(4, |i, j| {
            let re = (i + j) as f64;
            let im = if i == j { 0.0 } else { (j as f64 - i as f64) * 0.3 };
            C64::new(re, im)
        });
        assert!(a.is_hermitian(1e-14));
        let eig = a.hermitian_eigen().unwrap();
        let q = &eig.vectors;
        let rebuilt =
            Mat::from_fn(4, 4, |i, j| (0..4).map(|k| q[(i, k)] * eig.values[k] * q[(j, k)].conj()).sum::<C64>());
        let err = (&rebuilt - a.as_mat()).norm_l2();
        assert!(err < 1e-12, "{err}");
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
    }
}
