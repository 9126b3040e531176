//! Qubit reduction for QAOA by invariant-subspace encoding.
//!
//! The pipeline: encode a problem into cost and mixer Hamiltonians
//! ([`problem`]), find the smallest subspace that contains the initial state
//! and is closed under both Hamiltonians ([`subspace`]), re-encode it onto
//! `⌈log₂ M⌉` qubits through an isometry, run QAOA in both spaces
//! ([`qaoa`]), and certify that the two runs agree ([`equivalence`]).
//! [`symmetry`] provides the exact commutant computation used to classify
//! small instances.

pub mod dense;
pub mod equivalence;
pub mod error;
pub mod pauli;
pub mod problem;
pub mod qaoa;
pub mod rng;
pub mod state;
pub mod subspace;
pub mod symmetry;

mod optim;

pub use dense::{DenseOperator, HermitianEigen};
pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
pub use pauli::{commutator, pauli_multiply, OperatorSum, Pauli, PauliString, PauliTerm};
pub use state::StateVector;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
