//! Quantitative certificates that a reduced QAOA run reproduces the full
//! one: fidelity, energy gap, total variation distance, intertwining and
//! projector-commutation residuals, and exclusion of unreachable bitstrings.

use std::collections::{BTreeMap, BTreeSet};

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{structural, Result};
use crate::pauli::{CompiledOperator, OperatorSum};
use crate::problem::bitstring;
use crate::qaoa::{EvolutionResult, Evolver, FullEvolver, QaoaParams, ReducedEvolver};
use crate::state::StateVector;
use crate::subspace::{isometry_residuals, InvariantSubspace, Isometry, ReducedSystem};
use crate::{DenseOperator, C64};

/// Threshold every equivalence metric must meet.
pub const CERTIFICATION_TOLERANCE: f64 = 1e-10;
/// Overlap with `𝓗_eff` below which a basis state counts as excluded.
pub const EXCLUSION_OVERLAP: f64 = 1e-10;
/// Probability an excluded basis state may carry.
pub const EXCLUSION_PROBABILITY: f64 = 1e-12;
const DISTRIBUTION_NORM_TOLERANCE: f64 = 1e-8;

/// `|⟨a|b⟩|²`.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(structural(format!("fidelity of states with dimensions {} and {}", a.dim(), b.dim())));
    }
    // Symmetric by construction: |⟨a|b⟩| = |⟨b|a⟩|.
    Ok(a.inner(b)?.norm_sqr())
}

fn check_total(total: f64) -> Result<()> {
    if (total - 1.0).abs() > DISTRIBUTION_NORM_TOLERANCE {
        return Err(structural(format!("distribution sums to {total}, not 1")));
    }
    Ok(())
}

/// `½ Σ_x |p(x) − q(x)|` over the union of supports.
pub fn tvd(p: &BTreeMap<String, f64>, q: &BTreeMap<String, f64>) -> Result<f64> {
    check_total(p.values().sum())?;
    check_total(q.values().sum())?;
    let keys: BTreeSet<&String> = p.keys().chain(q.keys()).collect();
    let sum: f64 =
        keys.into_iter().map(|k| (p.get(k).copied().unwrap_or(0.0) - q.get(k).copied().unwrap_or(0.0)).abs()).sum();
    Ok((0.5 * sum).min(1.0))
}

/// TVD between the measurement distributions of two states, without any
/// cutoff on small probabilities.
pub fn state_tvd(a: &StateVector, b: &StateVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(structural("TVD of states with different dimensions"));
    }
    let (pa, pb) = (a.probabilities(), b.probabilities());
    check_total(pa.iter().sum())?;
    check_total(pb.iter().sum())?;
    Ok((0.5 * pa.iter().zip(&pb).map(|(x, y)| (x - y).abs()).sum::<f64>()).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CertifyOptions {
    /// Also compute the column-wise intertwining residual (costs `M` full
    /// evolutions and one dense reduced circuit).
    pub intertwining: bool,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self { intertwining: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    /// `F − 1`, never positive beyond rounding.
    pub fidelity_offset: f64,
    /// `|⟨H_C⟩_full − ⟨H̃_C⟩_red|` in objective units.
    pub delta_e: f64,
    /// `delta_e / (1 + |E_full|)`.
    pub delta_e_relative: f64,
    pub tvd: f64,
    /// `‖U V − V Ũ‖_F / √M`.
    pub intertwine_residual: Option<f64>,
    /// `max_k ‖U V e_k − V Ũ e_k‖`.
    pub intertwine_max_column: Option<f64>,
    /// `[‖(V†V)_active − I‖_F, ‖VV† − Π_eff‖_F]`.
    pub isometry_residuals: [f64; 2],
    pub n: usize,
    pub m: usize,
    #[serde(rename = "M")]
    pub active_dim: usize,
    pub full_dim: usize,
    pub reduced_dim: usize,
    pub energy_full: f64,
    pub energy_reduced: f64,
    pub params_used: QaoaParams,
    pub wall_time_full: f64,
    pub wall_time_reduced: f64,
}

impl EquivalenceReport {
    /// Largest of the state-level metrics.
    pub fn worst_state_metric(&self) -> f64 {
        self.fidelity_offset.abs().max(self.delta_e_relative).max(self.tvd)
    }

    pub fn passes(&self) -> bool {
        self.worst_state_metric() <= CERTIFICATION_TOLERANCE
            && self.intertwine_max_column.is_none_or(|r| r <= CERTIFICATION_TOLERANCE)
    }
}

/// Runs both sides with the same parameters and compares them.
pub fn certify_pair(
    full: &FullEvolver,
    reduced: &ReducedEvolver<'_>,
    params: &QaoaParams,
    opts: &CertifyOptions,
) -> Result<EquivalenceReport> {
    let iso = reduced.isometry();
    if iso.n() != full.n() {
        return Err(structural("full and reduced evolvers describe different instances"));
    }
    let a: EvolutionResult = full.evolve(params)?;
    let b: EvolutionResult = reduced.evolve(params)?;
    // A corrupted V need not preserve norms; compare directions only.
    let mapped =
        if b.final_state.is_normalized() { b.final_state.clone() } else { b.final_state.clone().normalized()? };
    let fid = fidelity(&a.final_state, &mapped)?;
    let delta_e = (a.energy - b.energy).abs();

    let (intertwine_residual, intertwine_max_column) = if opts.intertwining {
        let (fro, worst) = intertwining_residual(full, reduced, params)?;
        (Some(fro), Some(worst))
    } else {
        (None, None)
    };

    Ok(EquivalenceReport {
        fidelity_offset: fid - 1.0,
        delta_e,
        delta_e_relative: delta_e / (1.0 + a.energy.abs()),
        tvd: state_tvd(&a.final_state, &mapped)?,
        intertwine_residual,
        intertwine_max_column,
        isometry_residuals: [iso.gram_residual(), iso.projector_residual()],
        n: iso.n(),
        m: iso.m(),
        active_dim: iso.active_dim(),
        full_dim: 1 << iso.n(),
        reduced_dim: iso.reduced_dim(),
        energy_full: a.energy,
        energy_reduced: b.energy,
        params_used: params.clone(),
        wall_time_full: a.wall_time,
        wall_time_reduced: b.wall_time,
    })
}

/// `(‖UV − VŨ‖_F / √M, max_k ‖UVe_k − VŨe_k‖)`, with `U` applied to each
/// column of `V` by state-vector evolution.
pub fn intertwining_residual(
    full: &FullEvolver,
    reduced: &ReducedEvolver<'_>,
    params: &QaoaParams,
) -> Result<(f64, f64)> {
    let v = reduced.isometry().active();
    let vu = v * reduced.unitary_dense(params)?;
    let mut total = 0.0;
    let mut worst: f64 = 0.0;
    for k in 0..v.ncols() {
        let col: Vec<C64> = v.col(k).iter().copied().collect();
        let uv = full.evolve_unnormalised(&col, params)?;
        let r2: f64 = uv.iter().zip(vu.col(k).iter()).map(|(x, y)| (x - y).norm_sqr()).sum();
        total += r2;
        worst = worst.max(r2.sqrt());
    }
    Ok(((total / v.ncols() as f64).sqrt(), worst))
}

/// `‖[Π_eff, U(γ, β)]‖_F` on the dense circuit unitary (`n ≤ 12`).
pub fn projector_commutator(full: &FullEvolver, sub: &InvariantSubspace, params: &QaoaParams) -> Result<f64> {
    let u = full.unitary_dense(params)?;
    let pi = sub.projector_dense();
    let c = pi.as_mat() * &u - &u * pi.as_mat();
    Ok(c.norm_l2())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExclusionCertificate {
    pub passed: bool,
    /// Basis states with `‖Π_eff|x⟩‖ ≤ EXCLUSION_OVERLAP`.
    pub excluded_states: usize,
    pub worst_probability: f64,
    pub worst_state: Option<String>,
}

/// Every basis state outside `𝓗_eff` must carry (numerically) zero
/// probability in a full-space result.
pub fn certify_orthogonal_exclusion(sub: &InvariantSubspace, result: &EvolutionResult) -> ExclusionCertificate {
    let basis = sub.basis();
    let amps = result.final_state.amplitudes();
    let mut cert = ExclusionCertificate { passed: true, excluded_states: 0, worst_probability: 0.0, worst_state: None };
    for x in 0..basis.nrows() {
        let overlap = (0..basis.ncols()).map(|k| basis[(x, k)].norm_sqr()).sum::<f64>().sqrt();
        if overlap > EXCLUSION_OVERLAP {
            continue;
        }
        cert.excluded_states += 1;
        let p = amps.get(x).map_or(0.0, |a| a.norm_sqr());
        if cert.worst_state.is_none() || p > cert.worst_probability {
            cert.worst_probability = p;
            cert.worst_state = Some(bitstring(x, sub.n()));
        }
    }
    cert.passed = cert.worst_probability <= EXCLUSION_PROBABILITY;
    cert
}

/// Total probability on bitstrings whose Hamming weight differs from `k`.
pub fn sector_leakage(state: &StateVector, k: usize) -> f64 {
    state.amplitudes().iter().enumerate().filter(|(x, _)| x.count_ones() as usize != k).map(|(_, a)| a.norm_sqr()).sum()
}

/// A deliberately broken reduction for negative controls: column `col` of
/// `V` is perturbed by `eps` and the reduced problem is induced from the
/// perturbed map without any integrity checks.
pub fn corrupted_reduction(
    hc: &OperatorSum,
    hm: &OperatorSum,
    psi0: &StateVector,
    iso: &Isometry,
    sub: &InvariantSubspace,
    corruption: Corruption,
) -> Result<(ReducedSystem, Isometry)> {
    let bad = iso.with_perturbed_column(corruption.column, corruption.eps, corruption.seed, sub)?;
    let v = bad.active();
    let induce = |op: &OperatorSum| -> Result<DenseOperator> {
        let c = CompiledOperator::new(op)?;
        let mut hv = Mat::<C64>::zeros(v.nrows(), v.ncols());
        for k in 0..v.ncols() {
            let col: Vec<C64> = v.col(k).iter().copied().collect();
            c.apply_to(&col, hv.col_as_slice_mut(k));
        }
        let raw = v.adjoint() * &hv;
        DenseOperator::from_mat(Mat::from_fn(raw.nrows(), raw.ncols(), |i, j| 0.5 * (raw[(i, j)] + raw[(j, i)].conj())))
    };
    let x = MatRef::from_column_major_slice(psi0.amplitudes(), psi0.dim(), 1);
    let psi_red = StateVector::from_vec((v.adjoint() * x).col_as_slice(0).to_vec()).normalized()?;
    let red = ReducedSystem {
        n: bad.n(),
        m: bad.m(),
        hc: induce(hc)?,
        hm: induce(hm)?,
        psi0: psi_red,
        asymmetry: [0.0, 0.0],
    };
    debug_assert_eq!(isometry_residuals(v, sub), (bad.gram_residual(), bad.projector_residual()));
    Ok((red, bad))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corruption {
    pub column: usize,
    pub eps: f64,
    pub seed: u64,
}

impl Default for Corruption {
    fn default() -> Self {
        Self { column: 0, eps: 1e-3, seed: 0x5eed }
    }
}
