//! The invariant subspace that confines QAOA dynamics and its isometric
//! re-encoding onto fewer qubits.
//!
//! [`krylov_closure`] grows an orthonormal basis from `|ψ₀⟩` by applying the
//! cost and mixer Hamiltonians until no new direction appears. The span is the
//! smallest subspace containing `|ψ₀⟩` that both Hamiltonians map into
//! itself; because both are Hermitian its orthogonal projector commutes with
//! them, and with every QAOA unitary built from them.
//!
//! When `H_C` is diagonal the closure is spanned by `H_C` eigenvectors, so
//! each vector is split exactly by energy level and only mixer images are
//! orthogonalised, level by level.
//!
//! [`build_isometry`] maps basis vector `k` to the `m`-qubit computational
//! state `|k⟩`, `m = ⌈log₂ M⌉`. Indices `M..2ᵐ` are padding: the reduced
//! Hamiltonians are zero there and reduced evolution never populates them.

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{structural, Error, Result};
use crate::pauli::{state_dim, CompiledOperator, OperatorSum};
use crate::rng::SplitMix64;
use crate::state::{StateVector, NORM_TOLERANCE};
use crate::{DenseOperator, C64};

/// Residual norm, relative to the 1-norm of the Hamiltonian that produced
/// the image, above which an image counts as a new direction.
pub const RANK_TOLERANCE: f64 = 1e-9;

/// Isometry bounds: `‖V†V − I‖_F` and `‖VV† − Π‖_F`.
pub const GRAM_TOLERANCE: f64 = 1e-12;
pub const PROJECTOR_TOLERANCE: f64 = 1e-10;

/// Largest allowed relative asymmetry of `V†HV` before symmetrisation.
pub const ASYMMETRY_TOLERANCE: f64 = 1e-11;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone)]
pub struct ClosureOptions {
    pub rank_tolerance: f64,
    /// Fail instead of growing past this dimension (defaults to `2ⁿ`).
    pub max_dim: Option<usize>,
    /// Images are orthogonalised against the basis in blocks of this many.
    pub block_size: usize,
    /// Try the permutation-symmetric (Dicke) basis first and keep it if it is
    /// closed under both Hamiltonians and contains `|ψ₀⟩`.
    pub symmetric_fast_path: bool,
    /// Split by energy level when the cost Hamiltonian is diagonal.
    pub split_levels: bool,
}

impl Default for ClosureOptions {
    fn default() -> Self {
        Self {
            rank_tolerance: RANK_TOLERANCE,
            max_dim: None,
            block_size: 64,
            symmetric_fast_path: false,
            split_levels: true,
        }
    }
}

/// Record of the rank decisions taken while building a basis.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClosureLog {
    /// Breadth-first levels expanded.
    pub iterations: usize,
    pub images: usize,
    pub admitted: usize,
    pub rejected: usize,
    /// Smallest residual that was admitted as a new direction.
    pub min_admitted_residual: f64,
    /// Largest residual that was rejected as already spanned.
    pub max_rejected_residual: f64,
    pub method: String,
}

/// Orthonormal basis `{|φ_k⟩}` of an invariant subspace of the `2ⁿ`-dim
/// space, stored column-major.
#[derive(Debug, Clone)]
pub struct InvariantSubspace {
    n: usize,
    dim: usize,
    basis: Vec<C64>,
    log: ClosureLog,
}

impl InvariantSubspace {
    /// Wraps externally built vectors, checking orthonormality to 1e−10.
    pub fn from_vectors(n: usize, vectors: &[StateVector], log: ClosureLog) -> Result<Self> {
        let dim = state_dim(n)?;
        let mut basis = Vec::with_capacity(dim * vectors.len());
        for v in vectors {
            if v.dim() != dim {
                return Err(structural("basis vector has the wrong dimension"));
            }
            basis.extend_from_slice(v.amplitudes());
        }
        let sub = Self { n, dim, basis, log };
        let gram = sub.gram_residual();
        if gram > 1e-10 {
            return Err(Error::NumericalIntegrity(format!("basis is not orthonormal: ‖B†B − I‖_F = {gram:.3e}")));
        }
        Ok(sub)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Ambient dimension `2ⁿ`.
    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    /// Subspace dimension `M`.
    pub fn dim(&self) -> usize {
        self.basis.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn log(&self) -> &ClosureLog {
        &self.log
    }

    pub fn vector(&self, k: usize) -> &[C64] {
        &self.basis[k * self.dim..(k + 1) * self.dim]
    }

    /// The `2ⁿ × M` basis matrix `B`.
    pub fn basis(&self) -> MatRef<'_, C64> {
        MatRef::from_column_major_slice(&self.basis, self.dim, self.dim())
    }

    /// `‖B†B − I‖_F`.
    pub fn gram_residual(&self) -> f64 {
        gram_deviation(self.basis())
    }

    /// `Π_eff v = B B† v`.
    pub fn project(&self, v: &StateVector) -> Result<StateVector> {
        if v.dim() != self.dim {
            return Err(structural("projection of a vector with the wrong dimension"));
        }
        let b = self.basis();
        let coeffs = b.adjoint() * col_ref(v.amplitudes());
        let p = b * &coeffs;
        Ok(StateVector::from_vec(p.col_as_slice(0).to_vec()))
    }

    /// `‖v − Π_eff v‖`.
    pub fn projection_residual(&self, v: &StateVector) -> Result<f64> {
        self.project(v)?.distance(v)
    }

    /// `max_k ‖(I − Π_eff) H |φ_k⟩‖`, which vanishes iff the span is
    /// invariant under `H`.
    pub fn closure_residual(&self, op: &OperatorSum) -> Result<f64> {
        let compiled = CompiledOperator::new(op)?;
        let hb = apply_columns(&compiled, self.basis());
        Ok(outside_norms(self.basis(), hb.as_ref()).into_iter().fold(0.0, f64::max))
    }

    /// Dense projector `Π_eff` (only sensible for small `n`).
    pub fn projector_dense(&self) -> DenseOperator {
        let b = self.basis();
        DenseOperator::from_mat(b * b.adjoint()).expect("square")
    }

    /// Serialisable snapshot (basis as interleaved re/im arrays).
    pub fn to_artifact(&self) -> SubspaceArtifact {
        let m_dim = self.dim();
        SubspaceArtifact {
            schema_version: 1,
            n: self.n,
            dim: m_dim,
            qubits: qubit_count(m_dim.max(1)).unwrap_or(0),
            basis: (0..m_dim).map(|k| self.vector(k).iter().flat_map(|a| [a.re, a.im]).collect()).collect(),
            log: self.log.clone(),
        }
    }

    pub fn from_artifact(a: &SubspaceArtifact) -> Result<Self> {
        let dim = state_dim(a.n)?;
        let vectors = a
            .basis
            .iter()
            .map(|v| {
                if v.len() != 2 * dim {
                    return Err(structural("artifact basis vector has the wrong length"));
                }
                Ok(StateVector::from_vec(v.chunks(2).map(|p| C64::new(p[0], p[1])).collect()))
            })
            .collect::<Result<Vec<_>>>()?;
        if vectors.len() != a.dim {
            return Err(structural("artifact dimension disagrees with its basis"));
        }
        Self::from_vectors(a.n, &vectors, a.log.clone())
    }
}

/// JSON form of an [`InvariantSubspace`] for reproducibility audits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceArtifact {
    pub schema_version: u32,
    pub n: usize,
    #[serde(rename = "M")]
    pub dim: usize,
    #[serde(rename = "m")]
    pub qubits: usize,
    /// One array per basis vector: `[re₀, im₀, re₁, im₁, …]`.
    pub basis: Vec<Vec<f64>>,
    pub log: ClosureLog,
}

fn col_ref(v: &[C64]) -> MatRef<'_, C64> {
    MatRef::from_column_major_slice(v, v.len(), 1)
}

/// `H·B` column by column.
fn apply_columns(op: &CompiledOperator, b: MatRef<'_, C64>) -> Mat<C64> {
    let mut out = Mat::<C64>::zeros(b.nrows(), b.ncols());
    let mut src = vec![ZERO; b.nrows()];
    for k in 0..b.ncols() {
        src.iter_mut().zip(b.col(k).iter()).for_each(|(s, &x)| *s = x);
        op.apply_to(&src, out.col_as_slice_mut(k));
    }
    out
}

/// Column norms of `(I − BB†) W`.
fn outside_norms(b: MatRef<'_, C64>, w: MatRef<'_, C64>) -> Vec<f64> {
    let inside = b * (b.adjoint() * w);
    let r = w - &inside;
    (0..r.ncols()).map(|k| r.col(k).norm_l2()).collect()
}

fn gram_deviation(b: MatRef<'_, C64>) -> f64 {
    let g = b.adjoint() * b;
    (&g - Mat::<C64>::identity(g.nrows(), g.ncols())).norm_l2()
}

/// Minimal subspace containing `psi0` and closed under `hc` and `hm`.
pub fn krylov_closure(hc: &OperatorSum, hm: &OperatorSum, psi0: &StateVector) -> Result<InvariantSubspace> {
    krylov_closure_with(hc, hm, psi0, &ClosureOptions::default())
}

pub fn krylov_closure_with(
    hc: &OperatorSum,
    hm: &OperatorSum,
    psi0: &StateVector,
    opts: &ClosureOptions,
) -> Result<InvariantSubspace> {
    let n = hc.n();
    if hm.n() != n {
        return Err(structural("cost and mixer act on different qubit counts"));
    }
    let dim = state_dim(n)?;
    if psi0.dim() != dim {
        return Err(structural(format!("initial state has dimension {}, expected {dim}", psi0.dim())));
    }
    if !psi0.is_normalized() {
        return Err(structural(format!("initial state has norm {}", psi0.norm())));
    }
    if opts.symmetric_fast_path {
        if let Some(sub) = symmetric_subspace(hc, hm, psi0)? {
            return Ok(sub);
        }
    }

    if opts.split_levels && hc.is_diagonal() {
        return level_closure(hc, hm, psi0, opts);
    }

    let ops = [CompiledOperator::new(hc)?, CompiledOperator::new(hm)?];
    let scales = [hc.one_norm().max(1.0), hm.one_norm().max(1.0)];
    let cap = opts.max_dim.unwrap_or(dim).min(dim);
    let block = opts.block_size.max(1);

    let mut basis: Vec<C64> = psi0.amplitudes().to_vec();
    let mut log =
        ClosureLog { min_admitted_residual: f64::INFINITY, method: "krylov_closure".into(), ..ClosureLog::default() };
    let mut frontier = 0..1usize;
    let mut scratch = vec![ZERO; dim];

    'levels: while !frontier.is_empty() {
        log.iterations += 1;
        let next_start = basis.len() / dim;
        // Images in visit order: H_C|φ_k⟩ then H_M|φ_k⟩, FIFO over k.
        let sources: Vec<(usize, usize)> = frontier.clone().flat_map(|k| [(k, 0), (k, 1)]).collect();
        for chunk in sources.chunks(block) {
            let mut w = Mat::<C64>::zeros(dim, chunk.len());
            let mut live = vec![true; chunk.len()];
            for (c, &(k, which)) in chunk.iter().enumerate() {
                ops[which].apply_to(&basis[k * dim..(k + 1) * dim], &mut scratch);
                log.images += 1;
                if scratch.iter().all(|a| *a == ZERO) {
                    live[c] = false;
                    continue;
                }
                w.col_as_slice_mut(c).copy_from_slice(&scratch);
            }
            // Two block Gram–Schmidt passes against the basis so far.
            let m_now = basis.len() / dim;
            for _ in 0..2 {
                let b = MatRef::from_column_major_slice(&basis, dim, m_now);
                let coeffs = b.adjoint() * &w;
                w -= b * &coeffs;
            }
            // Then sequentially within the block, two passes each.
            let first_new = m_now;
            for (c, &(_, which)) in chunk.iter().enumerate() {
                if !live[c] {
                    log.rejected += 1;
                    continue;
                }
                let col = w.col_as_slice_mut(c);
                for _ in 0..2 {
                    for j in first_new..basis.len() / dim {
                        let u = &basis[j * dim..(j + 1) * dim];
                        let proj: C64 = u.iter().zip(col.iter()).map(|(a, b)| a.conj() * b).sum();
                        col.iter_mut().zip(u).for_each(|(x, &a)| *x -= proj * a);
                    }
                }
                // Images of unit vectors, so the residual is compared with ‖H‖.
                let r = col.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt() / scales[which];
                if r > opts.rank_tolerance {
                    if basis.len() / dim >= cap {
                        return Err(Error::Resource(format!("invariant subspace exceeds the configured cap of {cap}")));
                    }
                    let norm = r * scales[which];
                    basis.extend(col.iter().map(|a| a / norm));
                    log.admitted += 1;
                    log.min_admitted_residual = log.min_admitted_residual.min(r);
                } else {
                    log.rejected += 1;
                    log.max_rejected_residual = log.max_rejected_residual.max(r);
                }
            }
            if basis.len() / dim == dim {
                break 'levels;
            }
        }
        frontier = next_start..basis.len() / dim;
    }

    Ok(InvariantSubspace { n, dim, basis, log })
}

/// Closure for a diagonal cost Hamiltonian.
///
/// Every spectral projector of `H_C` is a polynomial in `H_C`, so the minimal
/// invariant subspace is spanned by `H_C` eigenvectors. Each vector is split
/// exactly into its energy-level components by index masking, and only the
/// mixer images need orthogonalising, against the basis of their own level.
/// Distinct levels have disjoint supports, so orthogonality across levels is
/// exact and the powers of `H_C` never enter.
fn level_closure(
    hc: &OperatorSum,
    hm: &OperatorSum,
    psi0: &StateVector,
    opts: &ClosureOptions,
) -> Result<InvariantSubspace> {
    let n = hc.n();
    let dim = state_dim(n)?;
    let cap = opts.max_dim.unwrap_or(dim).min(dim);
    let diag: Vec<f64> = hc.diagonal()?.into_iter().map(|c| c.re).collect();
    let (level_of, members) = energy_levels(&diag);
    let position: Vec<usize> = {
        let mut pos = vec![0; dim];
        for m in &members {
            for (k, &x) in m.iter().enumerate() {
                pos[x] = k;
            }
        }
        pos
    };
    let mixer = CompiledOperator::new(hm)?;
    let scale = hm.one_norm().max(1.0);

    // Basis vectors restricted to their level's support.
    let mut vectors: Vec<(usize, Vec<C64>)> = Vec::new();
    let mut per_level: Vec<Vec<usize>> = vec![Vec::new(); members.len()];
    let mut log = ClosureLog {
        min_admitted_residual: f64::INFINITY,
        method: "level_split_closure".into(),
        ..ClosureLog::default()
    };

    // Splits `w` by level and admits every component not yet spanned.
    let mut absorb =
        |w: &[C64], threshold: f64, vectors: &mut Vec<(usize, Vec<C64>)>, log: &mut ClosureLog| -> Result<()> {
            let mut parts: Vec<Option<Vec<C64>>> = vec![None; members.len()];
            for (x, a) in w.iter().enumerate() {
                if *a != ZERO {
                    let l = level_of[x];
                    parts[l].get_or_insert_with(|| vec![ZERO; members[l].len()])[position[x]] = *a;
                }
            }
            for (l, part) in parts.into_iter().enumerate() {
                let Some(mut part) = part else { continue };
                log.images += 1;
                for _ in 0..2 {
                    for &j in &per_level[l] {
                        let u: &[C64] = &vectors[j].1;
                        let proj: C64 = u.iter().zip(&part).map(|(a, b)| a.conj() * b).sum();
                        part.iter_mut().zip(u).for_each(|(x, &a)| *x -= proj * a);
                    }
                }
                let r = part.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
                if r > threshold {
                    if vectors.len() >= cap {
                        return Err(Error::Resource(format!("invariant subspace exceeds the configured cap of {cap}")));
                    }
                    part.iter_mut().for_each(|a| *a /= r);
                    per_level[l].push(vectors.len());
                    vectors.push((l, part));
                    log.admitted += 1;
                    log.min_admitted_residual = log.min_admitted_residual.min(r / threshold * opts.rank_tolerance);
                } else {
                    log.rejected += 1;
                    log.max_rejected_residual = log.max_rejected_residual.max(r / threshold * opts.rank_tolerance);
                }
            }
            Ok(())
        };

    absorb(psi0.amplitudes(), opts.rank_tolerance, &mut vectors, &mut log)?;
    let mut full = vec![ZERO; dim];
    let mut image = vec![ZERO; dim];
    let mut next = 0;
    while next < vectors.len() && vectors.len() < dim {
        log.iterations += 1;
        let (l, ref v) = vectors[next];
        full.fill(ZERO);
        for (&x, &a) in members[l].iter().zip(v) {
            full[x] = a;
        }
        mixer.apply_to(&full, &mut image);
        absorb(&image, opts.rank_tolerance * scale, &mut vectors, &mut log)?;
        next += 1;
    }

    let mut basis = vec![ZERO; vectors.len() * dim];
    for (k, (l, v)) in vectors.iter().enumerate() {
        let col = &mut basis[k * dim..(k + 1) * dim];
        for (&x, &a) in members[*l].iter().zip(v) {
            col[x] = a;
        }
    }
    Ok(InvariantSubspace { n, dim, basis, log })
}

/// Groups basis indices by diagonal value, merging values closer than
/// `1e-10·max(1, max|d|)`. Returns the level of each index and the members
/// of each level in increasing index order.
fn energy_levels(diag: &[f64]) -> (Vec<usize>, Vec<Vec<usize>>) {
    let tol = 1e-10 * diag.iter().fold(1.0f64, |a, d| a.max(d.abs()));
    let mut order: Vec<usize> = (0..diag.len()).collect();
    order.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]).then(a.cmp(&b)));
    let mut level_of = vec![0; diag.len()];
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for x in order {
        if members.is_empty() || diag[x] - last > tol {
            members.push(Vec::new());
        }
        last = diag[x];
        level_of[x] = members.len() - 1;
        members.last_mut().expect("nonempty").push(x);
    }
    members.iter_mut().for_each(|m| m.sort_unstable());
    (level_of, members)
}

/// Dicke basis `{|D_w⟩ : w = 0..n}` when it contains `psi0` and is closed
/// under both Hamiltonians, e.g. Max-Cut on complete graphs with the
/// transverse-field mixer.
pub fn symmetric_subspace(hc: &OperatorSum, hm: &OperatorSum, psi0: &StateVector) -> Result<Option<InvariantSubspace>> {
    let n = hc.n();
    let vectors = (0..=n).map(|w| crate::problem::dicke_state(n, w)).collect::<Result<Vec<_>>>()?;
    let log = ClosureLog { method: "dicke_basis".into(), admitted: n + 1, ..ClosureLog::default() };
    let sub = InvariantSubspace::from_vectors(n, &vectors, log)?;
    let ok = sub.projection_residual(psi0)? <= 1e-12
        && sub.closure_residual(hc)? <= RANK_TOLERANCE
        && sub.closure_residual(hm)? <= RANK_TOLERANCE;
    Ok(ok.then_some(sub))
}

/// `m = ⌈log₂ M⌉` (with `m = 0` for `M = 1`).
pub fn qubit_count(m_dim: usize) -> Result<usize> {
    if m_dim == 0 {
        return Err(structural("subspace dimension must be at least 1"));
    }
    Ok((usize::BITS - (m_dim - 1).leading_zeros()) as usize)
}

/// Qubit and dimension bookkeeping for one reduction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitAccounting {
    pub n: usize,
    #[serde(rename = "M")]
    pub active_dim: usize,
    pub m: usize,
    /// `n − m`.
    pub savings: usize,
    /// `2ⁿ / M`.
    pub compression_ratio: f64,
}

impl QubitAccounting {
    pub fn new(n: usize, active_dim: usize) -> Result<Self> {
        let m = qubit_count(active_dim)?;
        if m > n {
            return Err(structural(format!("M = {active_dim} does not fit in {n} qubits")));
        }
        Ok(Self { n, active_dim, m, savings: n - m, compression_ratio: (1u128 << n) as f64 / active_dim as f64 })
    }
}

/// Column-orthonormal `V : ℂ^{2ᵐ} → ℂ^{2ⁿ}` with `V|k⟩ = |φ_k⟩` for
/// `k < M`; padding columns `k ≥ M` are zero and not stored.
#[derive(Debug, Clone)]
pub struct Isometry {
    n: usize,
    m: usize,
    columns: Mat<C64>,
    gram_residual: f64,
    projector_residual: f64,
}

impl Isometry {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn active_dim(&self) -> usize {
        self.columns.ncols()
    }

    /// `2ᵐ`.
    pub fn reduced_dim(&self) -> usize {
        1 << self.m
    }

    /// The active `2ⁿ × M` block of `V`.
    pub fn active(&self) -> MatRef<'_, C64> {
        self.columns.as_ref()
    }

    /// `‖(V†V)_active − I_M‖_F` measured at build time.
    pub fn gram_residual(&self) -> f64 {
        self.gram_residual
    }

    /// `‖VV† − Π_eff‖_F` measured at build time.
    pub fn projector_residual(&self) -> f64 {
        self.projector_residual
    }

    /// `V·x` for a reduced state of length `M` or `2ᵐ` (padding must be zero
    /// to the caller's tolerance; it is ignored here).
    pub fn embed(&self, reduced: &StateVector) -> Result<StateVector> {
        let active = self.active_dim();
        if reduced.dim() != active && reduced.dim() != self.reduced_dim() {
            return Err(structural(format!(
                "reduced vector has dimension {}, expected {active} or {}",
                reduced.dim(),
                self.reduced_dim()
            )));
        }
        let v = self.active() * col_ref(&reduced.amplitudes()[..active]);
        Ok(StateVector::from_vec(v.col_as_slice(0).to_vec()))
    }

    /// `V†·v`, restricted to the active indices.
    pub fn pull_back(&self, full: &StateVector) -> Result<StateVector> {
        if full.dim() != self.columns.nrows() {
            return Err(structural("full-space vector has the wrong dimension"));
        }
        let v = self.active().adjoint() * col_ref(full.amplitudes());
        Ok(StateVector::from_vec(v.col_as_slice(0).to_vec()))
    }

    /// Copy with column `col` perturbed by `eps` times a seeded random unit
    /// vector. Used as a negative control: the result is no longer an
    /// isometry onto the invariant subspace.
    pub fn with_perturbed_column(&self, col: usize, eps: f64, seed: u64, sub: &InvariantSubspace) -> Result<Isometry> {
        if col >= self.active_dim() {
            return Err(structural(format!("column {col} outside the active range")));
        }
        let mut g = SplitMix64::new(seed);
        let dir: Vec<C64> =
            (0..self.columns.nrows()).map(|_| C64::new(g.uniform(-1.0, 1.0), g.uniform(-1.0, 1.0))).collect();
        let norm = dir.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let mut columns = self.columns.clone();
        columns.col_as_slice_mut(col).iter_mut().zip(&dir).for_each(|(x, d)| *x += d * (eps / norm));
        let (gram_residual, projector_residual) = isometry_residuals(columns.as_ref(), sub);
        Ok(Isometry { n: self.n, m: self.m, columns, gram_residual, projector_residual })
    }
}

/// `(‖V†V − I‖_F, ‖VV† − BB†‖_F)` where `B` is the subspace basis.
///
/// The second norm is evaluated through `E = V − B`: with
/// `VV† − BB† = EV† + BE†`, its square is
/// `tr(E†E·V†V) + tr(B†B·E†E) + 2 Re tr(E†B·E†V)`, and every factor only
/// involves the columns where `E` is nonzero.
pub fn isometry_residuals(v: MatRef<'_, C64>, sub: &InvariantSubspace) -> (f64, f64) {
    let b = sub.basis();
    let gram = gram_deviation(v);
    let touched: Vec<usize> =
        (0..v.ncols()).filter(|&k| v.col(k).iter().zip(b.col(k).iter()).any(|(x, y)| x != y)).collect();
    if touched.is_empty() {
        return (gram, 0.0);
    }
    let pick = |m: MatRef<'_, C64>| Mat::from_fn(m.nrows(), touched.len(), |i, j| m[(i, touched[j])]);
    let (vs, bs) = (pick(v), pick(b));
    let es = &vs - &bs;
    let ee = es.adjoint() * &es;
    let vv = vs.adjoint() * &vs;
    let bb = bs.adjoint() * &bs;
    let eb = es.adjoint() * &bs;
    let ev = es.adjoint() * &vs;
    let tr = |a: &Mat<C64>, c: &Mat<C64>| -> C64 {
        (0..a.nrows()).flat_map(|i| (0..a.ncols()).map(move |j| (i, j))).map(|(i, j)| a[(i, j)] * c[(j, i)]).sum()
    };
    let sq = tr(&ee, &vv).re + tr(&bb, &ee).re + 2.0 * tr(&eb, &ev).re;
    (gram, sq.max(0.0).sqrt())
}

/// Isometry onto `sub`, with both identities checked.
pub fn build_isometry(sub: &InvariantSubspace) -> Result<Isometry> {
    let active = sub.dim();
    let m = qubit_count(active)?;
    let columns = sub.basis().to_owned();
    let (gram_residual, projector_residual) = isometry_residuals(columns.as_ref(), sub);
    if gram_residual > GRAM_TOLERANCE || projector_residual > PROJECTOR_TOLERANCE {
        return Err(Error::NumericalIntegrity(format!(
            "isometry identities violated: ‖V†V − I‖ = {gram_residual:.3e}, ‖VV† − Π‖ = {projector_residual:.3e}"
        )));
    }
    Ok(Isometry { n: sub.n(), m, columns, gram_residual, projector_residual })
}

/// Induced Hamiltonians `V†H_C V`, `V†H_M V` on the active block, and
/// `V†|ψ₀⟩`.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub n: usize,
    pub m: usize,
    pub hc: DenseOperator,
    pub hm: DenseOperator,
    pub psi0: StateVector,
    /// Asymmetry of `V†H V` before symmetrisation, `[cost, mixer]`.
    pub asymmetry: [f64; 2],
}

impl ReducedSystem {
    pub fn active_dim(&self) -> usize {
        self.hc.dim()
    }

    pub fn reduced_dim(&self) -> usize {
        1 << self.m
    }

    /// Zero-completed `2ᵐ × 2ᵐ` form of an active-block operator.
    pub fn padded(&self, op: &DenseOperator) -> DenseOperator {
        let a = self.active_dim();
        DenseOperator::from_fn(self.reduced_dim(), |i, j| if i < a && j < a { op.get(i, j) } else { ZERO })
    }

    /// `|ψ̃₀⟩` with zero padding up to `2ᵐ`.
    pub fn padded_psi0(&self) -> StateVector {
        let mut v = self.psi0.amplitudes().to_vec();
        v.resize(self.reduced_dim(), ZERO);
        StateVector::from_vec(v)
    }
}

pub fn induce_hamiltonians(
    hc: &OperatorSum,
    hm: &OperatorSum,
    psi0: &StateVector,
    iso: &Isometry,
) -> Result<ReducedSystem> {
    let v = iso.active();
    let mut asymmetry = [0.0; 2];
    let mut reduce = |op: &OperatorSum, slot: usize| -> Result<DenseOperator> {
        if op.n() != iso.n() {
            return Err(structural("operator and isometry act on different qubit counts"));
        }
        let hv = apply_columns(&CompiledOperator::new(op)?, v);
        let raw = v.adjoint() * &hv;
        let defect = (&raw - raw.adjoint()).norm_l2();
        let scale = raw.norm_l2().max(1.0);
        asymmetry[slot] = defect / scale;
        if defect > ASYMMETRY_TOLERANCE * scale {
            return Err(Error::NumericalIntegrity(format!(
                "induced operator asymmetry {defect:.3e} exceeds {ASYMMETRY_TOLERANCE:e}·{scale:.3e}"
            )));
        }
        let sym = Mat::from_fn(raw.nrows(), raw.ncols(), |i, j| 0.5 * (raw[(i, j)] + raw[(j, i)].conj()));
        DenseOperator::from_mat(sym)
    };
    let hc_red = reduce(hc, 0)?;
    let hm_red = reduce(hm, 1)?;

    let psi0_red = iso.pull_back(psi0)?;
    let back = iso.embed(&psi0_red)?;
    let miss = back.distance(psi0)?;
    if miss > 1e-12 {
        return Err(Error::NumericalIntegrity(format!(
            "initial state lies outside the subspace: ‖VV†ψ₀ − ψ₀‖ = {miss:.3e}"
        )));
    }
    if (psi0_red.norm() - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::NumericalIntegrity("reduced initial state is not normalised".into()));
    }
    Ok(ReducedSystem { n: iso.n(), m: iso.m(), hc: hc_red, hm: hm_red, psi0: psi0_red, asymmetry })
}
