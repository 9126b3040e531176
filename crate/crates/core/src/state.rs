use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{structural, Error, Result};

/// Tolerance on `‖ψ‖ − 1` for a state to count as normalised.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Complex amplitudes over a computational basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateVector(Vec<C64>);

impl StateVector {
    pub fn from_vec(amplitudes: Vec<C64>) -> Self {
        Self(amplitudes)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![C64::new(0.0, 0.0); dim])
    }

    /// `|k⟩` in a space of dimension `dim`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[k] = C64::new(1.0, 0.0);
        v
    }

    /// `|+⟩^⊗n`.
    pub fn uniform(n: usize) -> Result<Self> {
        let dim = crate::pauli::state_dim(n)?;
        let a = 1.0 / (dim as f64).sqrt();
        Ok(Self(vec![C64::new(a, 0.0); dim]))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.0
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= NORM_TOLERANCE
    }

    pub fn normalized(mut self) -> Result<Self> {
        let norm = self.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NumericalIntegrity("cannot normalise a zero vector".into()));
        }
        self.0.iter_mut().for_each(|a| *a /= norm);
        Ok(self)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(structural(format!("inner product of dimensions {} and {}", self.dim(), other.dim())));
        }
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a.conj() * b).sum())
    }

    /// Euclidean distance `‖self − other‖₂`.
    pub fn distance(&self, other: &StateVector) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(structural("distance between vectors of different dimension"));
        }
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt())
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.0.iter().map(|a| a.norm_sqr()).collect()
    }
}

impl From<Vec<C64>> for StateVector {
    fn from(v: Vec<C64>) -> Self {
        Self(v)
    }
}
