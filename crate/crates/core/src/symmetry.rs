//! Exact symmetry analysis for small instances.
//!
//! The commutant of `{H_C, H_M}` is the set of operators `Q` with
//! `[Q, H_C] = [Q, H_M] = 0`. When it is just `ℂ·I` the pair acts
//! irreducibly and no qubit reduction is possible; any further Hermitian
//! element is a conserved quantity whose eigenspaces split the dynamics.
//! These computations live in the `4ⁿ`-dimensional operator space, so they
//! are restricted to a handful of qubits and serve as a cross-check on the
//! constructive closure in [`crate::subspace`].

use std::collections::BTreeMap;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{state_dim, OperatorSum, PauliString, PauliTerm};
use crate::problem::ConstraintSpec;
use crate::state::StateVector;
use crate::subspace::krylov_closure;
use crate::{DenseOperator, C64};

/// Largest `n` accepted by [`commutant_nullspace`].
pub const COMMUTANT_MAX_QUBITS: usize = 6;
/// Largest `n` accepted by [`lie_closure_dim`].
pub const LIE_MAX_QUBITS: usize = 5;
/// Eigenvalues of the normal matrix at or below this fraction of the
/// largest count as zero.
pub const NULLSPACE_TOLERANCE: f64 = 1e-10;
/// Relative tolerance for two diagonal entries of `H_C` to be equal.
const LEVEL_TOLERANCE: f64 = 1e-9;

const COMMUTE_TOLERANCE: f64 = 1e-10;

/// Hermitian generators of the commutant, orthonormal under
/// `⟨A, B⟩ = tr(A†B)`.
#[derive(Debug, Clone)]
pub struct CommutantBasis {
    pub n: usize,
    pub generators: Vec<DenseOperator>,
}

impl CommutantBasis {
    pub fn dimension(&self) -> usize {
        self.generators.len()
    }

    /// `‖A − Σ_g ⟨g, A⟩ g‖_F`, zero iff `A` lies in the span.
    pub fn projection_residual(&self, a: &DenseOperator) -> f64 {
        let mut r = a.clone();
        for g in &self.generators {
            let c = trace_inner(g, a);
            r = r.sub(&g.scale(c));
        }
        r.frobenius_norm()
    }
}

fn trace_inner(a: &DenseOperator, b: &DenseOperator) -> C64 {
    a.adjoint().matmul(b).trace()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evidence {
    TrivialCommutant,
    ConservedQuantity,
    WeightSector,
}

impl Evidence {
    pub fn as_str(self) -> &'static str {
        match self {
            Evidence::TrivialCommutant => "trivial_commutant",
            Evidence::ConservedQuantity => "conserved_quantity",
            Evidence::WeightSector => "weight_sector",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducibilityVerdict {
    pub reducible: bool,
    /// Set when the exact null-space oracle ran.
    pub commutant_dim: Option<usize>,
    /// Set when the verdict came from a closure of the uniform state.
    pub closure_dim: Option<usize>,
    pub evidence: Evidence,
}

/// Exact commutant of `{hc, hm}` for `n ≤ 6`.
///
/// Unknowns are the entries of `Q` in the computational basis. If `hc` is
/// diagonal, `[Q, H_C] = 0` forces `Q_ij = 0` whenever the diagonal entries
/// differ, so only the surviving entries are solved for against
/// `[Q, H_M] = 0`. Otherwise both commutators are stacked.
pub fn commutant_nullspace(hc: &OperatorSum, hm: &OperatorSum) -> Result<CommutantBasis> {
    let n = hc.n();
    if hm.n() != n {
        return Err(crate::error::structural("cost and mixer act on different qubit counts"));
    }
    if n > COMMUTANT_MAX_QUBITS {
        return Err(Error::Resource(format!(
            "commutant oracle is limited to {COMMUTANT_MAX_QUBITS} qubits (got {n}); use krylov_closure instead"
        )));
    }
    let d = 1usize << n;
    let m = hm.to_dense()?;
    let h = hc.to_dense()?;

    // Each unknown is an entry (i, j) of Q; `index` maps (i, j) back to it.
    let diag = if hc.is_diagonal() { Some(hc.diagonal()?) } else { None };
    let scale = diag.as_ref().map_or(1.0, |g| g.iter().map(|c| c.norm()).fold(1.0, f64::max));
    let mut index = vec![usize::MAX; d * d];
    let mut unknowns: Vec<(usize, usize)> = Vec::new();
    for j in 0..d {
        for i in 0..d {
            if diag.as_ref().is_none_or(|g| (g[i] - g[j]).norm() <= LEVEL_TOLERANCE * scale) {
                index[i + d * j] = unknowns.len();
                unknowns.push((i, j));
            }
        }
    }
    let ops: Vec<&DenseOperator> = if diag.is_some() { vec![&m] } else { vec![&h, &m] };

    // Row (a, b) of [Q, H] = Σ_l Q_al H_lb − Σ_k H_ak Q_kb. Each unknown
    // touches few rows, so the system is kept sparse by rows.
    let zero = C64::new(0.0, 0.0);
    let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); ops.len() * d * d];
    for (block, op) in ops.iter().enumerate() {
        let base = block * d * d;
        for (col, &(i, j)) in unknowns.iter().enumerate() {
            for b in 0..d {
                let v = op.get(j, b);
                if v != zero {
                    rows[base + i + d * b].push((col, v));
                }
            }
            for a in 0..d {
                let v = op.get(a, i);
                if v != zero {
                    rows[base + a + d * j].push((col, -v));
                }
            }
        }
    }

    // Null space of the system = null space of its normal matrix A†A.
    let mut normal = Mat::<C64>::zeros(unknowns.len(), unknowns.len());
    for row in &rows {
        for &(c1, v1) in row {
            for &(c2, v2) in row {
                normal[(c1, c2)] += v1.conj() * v2;
            }
        }
    }
    let eig = crate::dense::HermitianEigen::new(normal.as_ref())?;
    let lmax = eig.values.iter().copied().fold(0.0, f64::max);

    // The null space is closed under Q ↦ Q†, so its Hermitian elements form
    // a real space of the same dimension.
    let transpose: Vec<usize> = unknowns.iter().map(|&(i, j)| index[j + d * i]).collect();
    let mut basis: Vec<Vec<C64>> = Vec::new();
    let i_unit = C64::new(0.0, 1.0);
    for (k, &lambda) in eig.values.iter().enumerate() {
        if lambda > NULLSPACE_TOLERANCE * lmax {
            continue;
        }
        let z = eig.vectors.col(k);
        let plus: Vec<C64> = (0..unknowns.len()).map(|c| z[c] + z[transpose[c]].conj()).collect();
        let minus: Vec<C64> = (0..unknowns.len()).map(|c| i_unit * (z[c] - z[transpose[c]].conj())).collect();
        for mut r in [plus, minus] {
            for _ in 0..2 {
                for b in &basis {
                    let c: f64 = b.iter().zip(&r).map(|(x, y)| (x.conj() * y).re).sum();
                    r.iter_mut().zip(b).for_each(|(y, x)| *y -= x * c);
                }
            }
            let norm = r.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-8 {
                let r: Vec<C64> = r.iter().map(|v| v / norm).collect();
                // Exact Hermitian part; removes rounding in the phase.
                basis.push((0..r.len()).map(|c| 0.5 * (r[c] + r[transpose[c]].conj())).collect());
            }
        }
    }
    let generators: Vec<DenseOperator> = basis
        .iter()
        .map(|b| {
            let mut q = DenseOperator::zeros(d);
            for (col, &(i, j)) in unknowns.iter().enumerate() {
                q.set(i, j, b[col]);
            }
            q
        })
        .collect();

    for g in &generators {
        let worst = g.commutator(&h).frobenius_norm().max(g.commutator(&m).frobenius_norm());
        if worst > COMMUTE_TOLERANCE {
            return Err(Error::NumericalIntegrity(format!(
                "commutant generator fails to commute: ‖[G, H]‖_F = {worst:.3e}"
            )));
        }
    }
    Ok(CommutantBasis { n, generators })
}

/// Dimension of the real Lie algebra generated by `{iH_C, iH_M}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LieDimension {
    Exact(usize),
    /// The cap was reached before closure.
    Saturated(usize),
}

type RealPauliVec = BTreeMap<PauliString, f64>;

fn to_real_vec(op: &OperatorSum) -> RealPauliVec {
    op.terms().iter().map(|t| (t.word, t.coeff.re)).collect()
}

fn from_real_vec(n: usize, v: &RealPauliVec) -> OperatorSum {
    OperatorSum::from_terms(n, v.iter().map(|(w, &c)| PauliTerm::new(c, *w))).expect("validated qubit count")
}

fn dot(a: &RealPauliVec, b: &RealPauliVec) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small.iter().filter_map(|(w, x)| large.get(w).map(|y| x * y)).sum()
}

fn axpy(y: &mut RealPauliVec, alpha: f64, x: &RealPauliVec) {
    for (w, v) in x {
        *y.entry(*w).or_default() += alpha * v;
    }
    y.retain(|_, v| v.abs() > 1e-15);
}

/// Nested-commutator closure of `{iH_C, iH_M}` in the Pauli basis.
///
/// Elements are stored as Hermitian `A` (standing for `iA`); the bracket is
/// `i[A, B]`. Right-nested brackets with a generator on the left span the
/// generated algebra, so each new element is bracketed with the two
/// generators only.
pub fn lie_closure_dim(hc: &OperatorSum, hm: &OperatorSum, cap: usize) -> Result<LieDimension> {
    let n = hc.n();
    if hm.n() != n {
        return Err(crate::error::structural("cost and mixer act on different qubit counts"));
    }
    if n > LIE_MAX_QUBITS {
        return Err(Error::Resource(format!("Lie closure is limited to {LIE_MAX_QUBITS} qubits (got {n})")));
    }
    if !hc.is_hermitian() || !hm.is_hermitian() {
        return Err(crate::error::structural("Lie closure needs Hermitian generators"));
    }
    let gens = [hc.clone(), hm.clone()];
    let mut basis: Vec<RealPauliVec> = Vec::new();
    let mut queue: Vec<RealPauliVec> = Vec::new();

    let admit = |v: RealPauliVec, basis: &mut Vec<RealPauliVec>, queue: &mut Vec<RealPauliVec>| -> bool {
        let scale = dot(&v, &v).sqrt();
        if scale <= 1e-12 {
            return false;
        }
        let mut r = v;
        for _ in 0..2 {
            for b in basis.iter() {
                let c = dot(b, &r);
                axpy(&mut r, -c, b);
            }
        }
        let norm = dot(&r, &r).sqrt();
        if norm > 1e-9 * scale {
            r.values_mut().for_each(|x| *x /= norm);
            basis.push(r.clone());
            queue.push(r);
            true
        } else {
            false
        }
    };

    for g in &gens {
        admit(to_real_vec(g), &mut basis, &mut queue);
        if basis.len() >= cap {
            return Ok(LieDimension::Saturated(cap));
        }
    }
    let i_unit = C64::new(0.0, 1.0);
    let mut head = 0;
    while head < queue.len() {
        let e = from_real_vec(n, &queue[head]);
        head += 1;
        for g in &gens {
            let br = g.commutator(&e)?.scale(i_unit);
            admit(to_real_vec(&br), &mut basis, &mut queue);
            if basis.len() >= cap {
                return Ok(LieDimension::Saturated(cap));
            }
        }
    }
    Ok(LieDimension::Exact(basis.len()))
}

/// Reducibility verdict: weight sectors are reducible by construction,
/// small instances use the exact commutant, larger ones compare the closure
/// of the uniform state with `2ⁿ`.
pub fn classify(hc: &OperatorSum, hm: &OperatorSum, constraint: ConstraintSpec) -> Result<ReducibilityVerdict> {
    classify_with(hc, hm, constraint, None)
}

/// As [`classify`], reusing the dimension of an already computed closure of
/// the uniform state when the exact oracle is out of reach.
pub fn classify_with(
    hc: &OperatorSum,
    hm: &OperatorSum,
    constraint: ConstraintSpec,
    uniform_closure_dim: Option<usize>,
) -> Result<ReducibilityVerdict> {
    let n = hc.n();
    if let ConstraintSpec::HammingWeight { .. } = constraint {
        return Ok(ReducibilityVerdict {
            reducible: true,
            commutant_dim: None,
            closure_dim: None,
            evidence: Evidence::WeightSector,
        });
    }
    if n <= COMMUTANT_MAX_QUBITS {
        let dim = commutant_nullspace(hc, hm)?.dimension();
        return Ok(ReducibilityVerdict {
            reducible: dim > 1,
            commutant_dim: Some(dim),
            closure_dim: None,
            evidence: if dim > 1 { Evidence::ConservedQuantity } else { Evidence::TrivialCommutant },
        });
    }
    let dim = match uniform_closure_dim {
        Some(d) => d,
        None => krylov_closure(hc, hm, &StateVector::uniform(n)?)?.dim(),
    };
    let reducible = dim < state_dim(n)?;
    Ok(ReducibilityVerdict {
        reducible,
        commutant_dim: None,
        closure_dim: Some(dim),
        evidence: if reducible { Evidence::ConservedQuantity } else { Evidence::TrivialCommutant },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::*;
    use crate::rng::SplitMix64;
    use crate::subspace::krylov_closure;

    fn maxcut(g: GraphInstance) -> (OperatorSum, OperatorSum) {
        let p = Problem::maxcut(g, ConstraintSpec::None).unwrap();
        (p.cost_hamiltonian(), p.mixer_hamiltonian(XyTopology::Ring).unwrap())
    }

    fn x_mixer(n: usize) -> OperatorSum {
        mixer_hamiltonian(n, ConstraintSpec::None).unwrap()
    }

    /// Permutation matrix exchanging qubits `a` and `b`.
    fn swap(n: usize, a: usize, b: usize) -> DenseOperator {
        let d = 1 << n;
        DenseOperator::from_fn(d, |i, j| {
            let (ba, bb) = ((j >> a) & 1, (j >> b) & 1);
            let image = (j & !(1 << a) & !(1 << b)) | (ba << b) | (bb << a);
            if i == image {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    #[test]
    fn generic_single_qubit_is_irreducible() {
        let hc = OperatorSum::parse(1, &[(0.5, "I"), (-0.5, "Z")]).unwrap();
        let hm = OperatorSum::parse(1, &[(1.0, "X")]).unwrap();
        assert_eq!(commutant_nullspace(&hc, &hm).unwrap().dimension(), 1);
    }

    #[test]
    fn single_edge_contains_swap() {
        let g = GraphInstance::unweighted(2, &[(0, 1)], GraphFamily::Custom).unwrap();
        let (hc, hm) = maxcut(g);
        let basis = commutant_nullspace(&hc, &hm).unwrap();
        assert!(basis.dimension() >= 2);
        assert!(basis.projection_residual(&swap(2, 0, 1)) <= 1e-10);
        assert!(basis.projection_residual(&DenseOperator::identity(4)) <= 1e-12);
    }

    #[test]
    fn non_diagonal_cost_uses_full_system() {
        // Same single-edge pair with the roles swapped: H_C = X⊗I + I⊗X.
        let g = GraphInstance::unweighted(2, &[(0, 1)], GraphFamily::Custom).unwrap();
        let (hc, hm) = maxcut(g);
        let a = commutant_nullspace(&hc, &hm).unwrap();
        let b = commutant_nullspace(&hm, &hc).unwrap();
        assert_eq!(a.dimension(), b.dimension());
        assert!(b.projection_residual(&swap(2, 0, 1)) <= 1e-10);
    }

    #[test]
    fn xy_ring_conserves_total_z() {
        let q = QuboInstance::random(3, 5).unwrap();
        let hc = cost_hamiltonian(&q);
        let hm = mixer_hamiltonian(3, ConstraintSpec::HammingWeight { k: 1 }).unwrap();
        let basis = commutant_nullspace(&hc, &hm).unwrap();
        let total_z = OperatorSum::parse(3, &[(1.0, "ZII"), (1.0, "IZI"), (1.0, "IIZ")]).unwrap();
        assert!(basis.projection_residual(&total_z.to_dense().unwrap()) <= 1e-10);
    }

    #[test]
    fn generators_commute_and_are_orthonormal() {
        let g = graph_family(GraphFamily::Cycle, 4, 0).unwrap();
        let (hc, hm) = maxcut(g);
        let basis = commutant_nullspace(&hc, &hm).unwrap();
        let (h, m) = (hc.to_dense().unwrap(), hm.to_dense().unwrap());
        for (a, ga) in basis.generators.iter().enumerate() {
            assert!(ga.is_hermitian(1e-12));
            assert!(ga.commutator(&h).frobenius_norm() <= 1e-10);
            assert!(ga.commutator(&m).frobenius_norm() <= 1e-10);
            for (b, gb) in basis.generators.iter().enumerate() {
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((trace_inner(ga, gb) - C64::new(expected, 0.0)).norm() < 1e-10);
            }
        }
        assert!(basis.projection_residual(&DenseOperator::identity(16)) <= 1e-12);
    }

    #[test]
    fn complete_graph_transpositions_lie_in_commutant() {
        let n = 4;
        let (hc, hm) = maxcut(graph_family(GraphFamily::Complete, n, 0).unwrap());
        let basis = commutant_nullspace(&hc, &hm).unwrap();
        for a in 0..n {
            for b in a + 1..n {
                assert!(basis.projection_residual(&swap(n, a, b)) <= 1e-10, "({a} {b})");
            }
        }
        let v = classify(&hc, &hm, ConstraintSpec::None).unwrap();
        assert!(v.reducible);
        assert_eq!(v.evidence, Evidence::ConservedQuantity);
    }

    #[test]
    fn random_qubo_is_irreducible() {
        let q = QuboInstance::random(4, 11).unwrap();
        let v = classify(&cost_hamiltonian(&q), &x_mixer(4), ConstraintSpec::None).unwrap();
        assert!(!v.reducible);
        assert_eq!(v.commutant_dim, Some(1));
        assert_eq!(v.evidence, Evidence::TrivialCommutant);
    }

    #[test]
    fn weight_constraint_is_reducible_without_numerics() {
        let q = QuboInstance::random(8, 1).unwrap();
        let hm = mixer_hamiltonian(8, ConstraintSpec::HammingWeight { k: 3 }).unwrap();
        let v = classify(&cost_hamiltonian(&q), &hm, ConstraintSpec::HammingWeight { k: 3 }).unwrap();
        assert!(v.reducible);
        assert_eq!(v.evidence, Evidence::WeightSector);
        assert_eq!(v.commutant_dim, None);
    }

    #[test]
    fn large_instances_fall_back_to_closure() {
        let (hc, hm) = maxcut(graph_family(GraphFamily::Complete, 8, 0).unwrap());
        assert!(matches!(commutant_nullspace(&hc, &hm), Err(Error::Resource(_))));
        let v = classify(&hc, &hm, ConstraintSpec::None).unwrap();
        assert!(v.reducible);
        assert_eq!(v.closure_dim, Some(5));
    }

    #[test]
    fn commutant_agrees_with_closure_of_generic_state() {
        for seed in 0..4 {
            let n = 2 + (seed as usize % 3);
            let q = QuboInstance::random(n, seed).unwrap();
            let (hc, hm) = (cost_hamiltonian(&q), x_mixer(n));
            let dim = commutant_nullspace(&hc, &hm).unwrap().dimension();
            let mut g = SplitMix64::new(seed + 100);
            let psi = StateVector::from_vec(
                (0..1 << n).map(|_| C64::new(g.uniform(-1.0, 1.0), g.uniform(-1.0, 1.0))).collect(),
            )
            .normalized()
            .unwrap();
            let full = krylov_closure(&hc, &hm, &psi).unwrap().dim() == 1 << n;
            assert_eq!(dim == 1, full, "seed {seed}");
        }
        let (hc, hm) = maxcut(graph_family(GraphFamily::Cycle, 4, 0).unwrap());
        let dim = commutant_nullspace(&hc, &hm).unwrap().dimension();
        let mut g = SplitMix64::new(7);
        let psi =
            StateVector::from_vec((0..16).map(|_| C64::new(g.uniform(-1.0, 1.0), 0.0)).collect()).normalized().unwrap();
        assert!(dim > 1);
        assert!(krylov_closure(&hc, &hm, &psi).unwrap().dim() < 16);
    }

    #[test]
    fn lie_closure_examples() {
        let hc = OperatorSum::parse(1, &[(1.0, "Z")]).unwrap();
        let hm = OperatorSum::parse(1, &[(1.0, "X")]).unwrap();
        assert_eq!(lie_closure_dim(&hc, &hm, 64).unwrap(), LieDimension::Exact(3));

        let hc = OperatorSum::parse(1, &[(0.5, "I"), (-0.5, "Z")]).unwrap();
        assert_eq!(lie_closure_dim(&hc, &hm, 64).unwrap(), LieDimension::Exact(4));

        let a = OperatorSum::parse(2, &[(1.0, "ZI"), (0.3, "ZZ")]).unwrap();
        let b = OperatorSum::parse(2, &[(1.0, "IZ")]).unwrap();
        match lie_closure_dim(&a, &b, 64).unwrap() {
            LieDimension::Exact(d) => assert!(d <= 2),
            other => panic!("{other:?}"),
        }

        let g = GraphInstance::unweighted(2, &[(0, 1)], GraphFamily::Custom).unwrap();
        let (hc, hm) = maxcut(g);
        match lie_closure_dim(&hc, &hm, 64).unwrap() {
            LieDimension::Exact(d) => assert!(d < 16),
            other => panic!("{other:?}"),
        }

        let q = QuboInstance::random(3, 2).unwrap();
        assert_eq!(lie_closure_dim(&cost_hamiltonian(&q), &x_mixer(3), 10).unwrap(), LieDimension::Saturated(10));
        let big = x_mixer(6);
        assert!(matches!(lie_closure_dim(&big, &big, 10), Err(Error::Resource(_))));
    }
}
