//! Problem encodings: QUBO instances, Max-Cut on graph families, Hamming
//! weight constraints, and the cost/mixer Hamiltonians and initial states
//! QAOA runs on.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{structural, Error, Result};
use crate::pauli::{state_dim, OperatorSum, Pauli, PauliString, PauliTerm, DEFAULT_DENSE_LIMIT};
use crate::rng::SplitMix64;
use crate::state::StateVector;
use crate::C64;

/// Edge probability used for Erdős–Rényi instances.
pub const ER_EDGE_PROBABILITY: f64 = 0.5;

/// A quadratic form `xᵀWx + cᵀx + c0` over binary variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticForm {
    #[serde(rename = "W")]
    pub w: Vec<Vec<f64>>,
    pub c: Vec<f64>,
    #[serde(default)]
    pub c0: f64,
}

impl QuadraticForm {
    /// Validates shapes and symmetrises `W ← (W + Wᵀ)/2`.
    pub fn new(w: Vec<Vec<f64>>, c: Vec<f64>, c0: f64) -> Result<Self> {
        let n = c.len();
        if w.len() != n || w.iter().any(|row| row.len() != n) {
            return Err(structural(format!("W must be {n}×{n} to match c")));
        }
        let mut sym = w.clone();
        for i in 0..n {
            for j in 0..n {
                sym[i][j] = 0.5 * (w[i][j] + w[j][i]);
            }
        }
        Ok(Self { w: sym, c, c0 })
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    /// Value at the assignment encoded in the low `n` bits of `x`.
    pub fn value(&self, x: u64) -> f64 {
        let n = self.n();
        let bit = |i: usize| (x >> i & 1) as f64;
        let mut v = self.c0;
        for i in 0..n {
            let xi = bit(i);
            if xi == 0.0 {
                continue;
            }
            v += self.c[i] + self.w[i][i];
            for j in i + 1..n {
                v += 2.0 * self.w[i][j] * bit(j);
            }
        }
        v
    }

    /// Pauli expansion under `x_i ↦ (I − Z_i)/2`.
    fn to_operator(&self) -> Result<OperatorSum> {
        let n = self.n();
        let id = PauliString::identity(n)?;
        let z = |i: usize| PauliString::single(n, i, Pauli::Z);
        let zz = |i: usize, j: usize| PauliString::from_sparse(n, &[(i, Pauli::Z), (j, Pauli::Z)]);

        let mut terms = vec![PauliTerm::new(self.c0, id)];
        for i in 0..n {
            // Linear and diagonal-quadratic parts: (c_i + W_ii) x_i.
            let a = self.c[i] + self.w[i][i];
            terms.push(PauliTerm::new(0.5 * a, id));
            terms.push(PauliTerm::new(-0.5 * a, z(i)?));
            for j in i + 1..n {
                // 2 W_ij x_i x_j with x_i x_j = (I − Z_i − Z_j + Z_i Z_j)/4.
                let b = 0.5 * self.w[i][j];
                if b == 0.0 {
                    continue;
                }
                terms.push(PauliTerm::new(b, id));
                terms.push(PauliTerm::new(-b, z(i)?));
                terms.push(PauliTerm::new(-b, z(j)?));
                terms.push(PauliTerm::new(b, zz(i, j)?));
            }
        }
        OperatorSum::from_terms(n, terms)
    }
}

/// A weighted quadratic penalty `λ·g(x)` added to the objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Penalty {
    pub lambda: f64,
    pub form: QuadraticForm,
}

/// `f(x) = xᵀWx + cᵀx + c0 + Σ_k λ_k g_k(x)` over `x ∈ {0,1}ⁿ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuboInstance {
    #[serde(flatten)]
    pub objective: QuadraticForm,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub penalties: Vec<Penalty>,
}

impl QuboInstance {
    pub fn new(w: Vec<Vec<f64>>, c: Vec<f64>, c0: f64) -> Result<Self> {
        Ok(Self { objective: QuadraticForm::new(w, c, c0)?, penalties: Vec::new() })
    }

    pub fn with_penalty(mut self, lambda: f64, form: QuadraticForm) -> Result<Self> {
        if form.n() != self.n() {
            return Err(structural("penalty form has a different variable count"));
        }
        self.penalties.push(Penalty { lambda, form });
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.objective.n()
    }

    pub fn objective_value(&self, x: u64) -> f64 {
        self.objective.value(x) + self.penalties.iter().map(|p| p.lambda * p.form.value(x)).sum::<f64>()
    }

    /// Exhaustive `(argmin, min)` over all `2ⁿ` assignments.
    pub fn brute_force_minimum(&self) -> Result<(u64, f64)> {
        let dim = state_dim(self.n())? as u64;
        Ok((0..dim).map(|x| (x, self.objective_value(x))).fold((0, f64::INFINITY), |best, cur| {
            if cur.1 < best.1 {
                cur
            } else {
                best
            }
        }))
    }

    /// Seeded QUBO with independent coefficients drawn uniformly from
    /// `[-1, 1)` (upper triangle of `W`, then `c`).
    #[allow(clippy::needless_range_loop)]
    pub fn random(n: usize, seed: u64) -> Result<Self> {
        let mut g = SplitMix64::new(seed);
        let mut w = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let v = g.uniform(-1.0, 1.0);
                w[i][j] = v;
                w[j][i] = v;
            }
        }
        let c = (0..n).map(|_| g.uniform(-1.0, 1.0)).collect();
        Self::new(w, c, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphFamily {
    Cycle,
    Complete,
    ErdosRenyi,
    Custom,
}

impl GraphFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            GraphFamily::Cycle => "cycle",
            GraphFamily::Complete => "complete",
            GraphFamily::ErdosRenyi => "erdos_renyi",
            GraphFamily::Custom => "custom",
        }
    }
}

impl fmt::Display for GraphFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GraphFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cycle" => Ok(GraphFamily::Cycle),
            "complete" => Ok(GraphFamily::Complete),
            "erdos_renyi" | "er" => Ok(GraphFamily::ErdosRenyi),
            "custom" => Ok(GraphFamily::Custom),
            other => Err(structural(format!("unknown graph family {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

/// An undirected weighted graph without self-loops or duplicate edges.
/// Edges are stored with `i < j`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphInstance {
    n: usize,
    edges: Vec<Edge>,
    family: GraphFamily,
}

impl GraphInstance {
    pub fn new(n: usize, edges: impl IntoIterator<Item = Edge>, family: GraphFamily) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for e in edges {
            let (i, j) = (e.i.min(e.j), e.i.max(e.j));
            if i == j {
                return Err(structural(format!("self-loop on vertex {i}")));
            }
            if j >= n {
                return Err(structural(format!("edge ({i}, {j}) out of range for n = {n}")));
            }
            if !e.weight.is_finite() {
                return Err(structural(format!("edge ({i}, {j}) has non-finite weight")));
            }
            if !seen.insert((i, j)) {
                return Err(structural(format!("duplicate edge ({i}, {j})")));
            }
            out.push(Edge { i, j, weight: e.weight });
        }
        Ok(Self { n, edges: out, family })
    }

    pub fn unweighted(n: usize, pairs: &[(usize, usize)], family: GraphFamily) -> Result<Self> {
        Self::new(n, pairs.iter().map(|&(i, j)| Edge { i, j, weight: 1.0 }), family)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn family(&self) -> GraphFamily {
        self.family
    }

    pub fn cut_value(&self, x: u64) -> f64 {
        self.edges.iter().filter(|e| (x >> e.i & 1) != (x >> e.j & 1)).map(|e| e.weight).sum()
    }
}

/// Deterministic graph for `(family, n, seed)`; the seed only matters for
/// Erdős–Rényi graphs, which keep each pair `i < j` (visited in
/// lexicographic order) when the next uniform draw is below 0.5.
pub fn graph_family(family: GraphFamily, n: usize, seed: u64) -> Result<GraphInstance> {
    if n < 2 {
        return Err(structural(format!("graph families need n ≥ 2, got {n}")));
    }
    let pairs: Vec<(usize, usize)> = match family {
        GraphFamily::Cycle => {
            let mut p: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
            if n > 2 {
                p.push((0, n - 1));
            }
            p
        }
        GraphFamily::Complete => (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect(),
        GraphFamily::ErdosRenyi => {
            let mut g = SplitMix64::new(seed);
            let mut p = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if g.next_f64() < ER_EDGE_PROBABILITY {
                        p.push((i, j));
                    }
                }
            }
            p
        }
        GraphFamily::Custom => return Err(structural("custom graphs are loaded from files, not generated")),
    };
    GraphInstance::unweighted(n, &pairs, family)
}

/// Max-Cut as minimisation: `f(x) = −Σ_{(i,j)∈E} w_ij (x_i + x_j − 2 x_i x_j)`.
pub fn maxcut_to_qubo(g: &GraphInstance) -> QuboInstance {
    let n = g.n();
    let mut w = vec![vec![0.0; n]; n];
    let mut c = vec![0.0; n];
    for e in g.edges() {
        c[e.i] -= e.weight;
        c[e.j] -= e.weight;
        w[e.i][e.j] += e.weight;
        w[e.j][e.i] += e.weight;
    }
    QuboInstance::new(w, c, 0.0).expect("shapes are consistent by construction")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintSpec {
    #[default]
    None,
    HammingWeight {
        k: usize,
    },
}

impl ConstraintSpec {
    pub fn validate(&self, n: usize) -> Result<()> {
        match *self {
            ConstraintSpec::HammingWeight { k } if k > n => {
                Err(Error::Constraint(format!("Hamming weight k = {k} is infeasible for n = {n}")))
            }
            _ => Ok(()),
        }
    }

    pub fn weight(&self) -> Option<usize> {
        match *self {
            ConstraintSpec::None => None,
            ConstraintSpec::HammingWeight { k } => Some(k),
        }
    }
}

/// Coupling graph of the weight-preserving XY mixer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XyTopology {
    #[default]
    Ring,
    Complete,
}

/// Cost Hamiltonian of a QUBO: a diagonal Pauli sum with `H_C|x⟩ = f(x)|x⟩`.
///
/// For `n ≤ 14` the diagonal is checked against a classical evaluation of
/// `f` on every basis state before returning.
pub fn cost_hamiltonian(q: &QuboInstance) -> OperatorSum {
    let mut op = q.objective.to_operator().expect("qubit count within Pauli limits");
    for p in &q.penalties {
        let pen = p.form.to_operator().expect("validated").scale(p.lambda);
        op = op.add(&pen).expect("same qubit count");
    }
    debug_assert!(op.is_diagonal());
    if q.n() <= DEFAULT_DENSE_LIMIT {
        let residual = spectral_residual(q, &op).expect("n within dense limit");
        assert!(residual <= 1e-10, "cost Hamiltonian diagonal deviates from f by {residual}");
    }
    op
}

/// `max_x |⟨x|H_C|x⟩ − f(x)|` plus the largest off-diagonal or imaginary part.
pub fn spectral_residual(q: &QuboInstance, hc: &OperatorSum) -> Result<f64> {
    let offdiag: f64 = hc.terms().iter().filter(|t| !t.word.is_diagonal()).map(|t| t.coeff.norm()).sum();
    let diag = hc.diagonal()?;
    Ok(diag
        .iter()
        .enumerate()
        .map(|(x, d)| (d.re - q.objective_value(x as u64)).abs().max(d.im.abs()))
        .fold(offdiag, f64::max))
}

/// Transverse-field mixer `Σ X_i`, or for Hamming-weight constraints the XY
/// mixer `Σ_{(i,j)} (X_i X_j + Y_i Y_j)/2` on a ring.
pub fn mixer_hamiltonian(n: usize, constraint: ConstraintSpec) -> Result<OperatorSum> {
    mixer_hamiltonian_with(n, constraint, XyTopology::Ring)
}

pub fn mixer_hamiltonian_with(n: usize, constraint: ConstraintSpec, topology: XyTopology) -> Result<OperatorSum> {
    constraint.validate(n)?;
    match constraint {
        ConstraintSpec::None => {
            let terms = (0..n)
                .map(|q| Ok(PauliTerm::new(1.0, PauliString::single(n, q, Pauli::X)?)))
                .collect::<Result<Vec<_>>>()?;
            OperatorSum::from_terms(n, terms)
        }
        ConstraintSpec::HammingWeight { .. } => {
            let pairs: BTreeSet<(usize, usize)> = match topology {
                XyTopology::Ring if n >= 2 => (0..n).map(|i| (i.min((i + 1) % n), i.max((i + 1) % n))).collect(),
                XyTopology::Ring => BTreeSet::new(),
                XyTopology::Complete => (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect(),
            };
            let mut terms = Vec::with_capacity(2 * pairs.len());
            for (i, j) in pairs {
                for p in [Pauli::X, Pauli::Y] {
                    terms.push(PauliTerm::new(0.5, PauliString::from_sparse(n, &[(i, p), (j, p)])?));
                }
            }
            OperatorSum::from_terms(n, terms)
        }
    }
}

/// `|+⟩^⊗n`, or the Dicke state of weight `k` for Hamming-weight constraints.
pub fn initial_state(n: usize, constraint: ConstraintSpec) -> Result<StateVector> {
    constraint.validate(n)?;
    match constraint {
        ConstraintSpec::None => StateVector::uniform(n),
        ConstraintSpec::HammingWeight { k } => dicke_state(n, k),
    }
}

/// Equal superposition of the `C(n, k)` basis states of Hamming weight `k`.
pub fn dicke_state(n: usize, k: usize) -> Result<StateVector> {
    if k > n {
        return Err(Error::Constraint(format!("Dicke state with k = {k} > n = {n}")));
    }
    let dim = state_dim(n)?;
    let count = binomial(n, k) as f64;
    let a = C64::new(1.0 / count.sqrt(), 0.0);
    let amps = (0..dim).map(|x| if (x as u64).count_ones() as usize == k { a } else { C64::new(0.0, 0.0) }).collect();
    Ok(StateVector::from_vec(amps))
}

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// Renders basis index `x` as a bitstring with qubit 0 first.
pub fn bitstring(x: usize, n: usize) -> String {
    (0..n).map(|q| if x >> q & 1 == 1 { '1' } else { '0' }).collect()
}

// ---------------------------------------------------------------------------
// Instance files
// ---------------------------------------------------------------------------

/// On-disk instance: either a graph (`{"n", "edges": [[i, j, w]], "family"}`)
/// or a QUBO (`{"n", "W", "c", "c0"}`), each with an optional constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InstanceFile {
    Graph {
        n: usize,
        edges: Vec<(usize, usize, f64)>,
        #[serde(default = "custom_family")]
        family: GraphFamily,
        #[serde(default)]
        constraint: ConstraintSpec,
    },
    Qubo {
        n: usize,
        #[serde(rename = "W")]
        w: Vec<Vec<f64>>,
        c: Vec<f64>,
        #[serde(default)]
        c0: f64,
        #[serde(default)]
        constraint: ConstraintSpec,
    },
}

fn custom_family() -> GraphFamily {
    GraphFamily::Custom
}

/// A fully resolved problem: objective, constraint and optional graph.
#[derive(Debug, Clone)]
pub struct Problem {
    pub qubo: QuboInstance,
    pub constraint: ConstraintSpec,
    pub graph: Option<GraphInstance>,
}

impl Problem {
    pub fn maxcut(graph: GraphInstance, constraint: ConstraintSpec) -> Result<Self> {
        constraint.validate(graph.n())?;
        Ok(Self { qubo: maxcut_to_qubo(&graph), constraint, graph: Some(graph) })
    }

    pub fn n(&self) -> usize {
        self.qubo.n()
    }

    pub fn cost_hamiltonian(&self) -> OperatorSum {
        cost_hamiltonian(&self.qubo)
    }

    pub fn mixer_hamiltonian(&self, topology: XyTopology) -> Result<OperatorSum> {
        mixer_hamiltonian_with(self.n(), self.constraint, topology)
    }

    pub fn initial_state(&self) -> Result<StateVector> {
        initial_state(self.n(), self.constraint)
    }

    /// Minimum of `f` over the feasible assignments (weight `k` when constrained).
    pub fn feasible_minimum(&self) -> Result<f64> {
        let dim = state_dim(self.n())? as u64;
        Ok((0..dim)
            .filter(|x| self.constraint.weight().is_none_or(|k| x.count_ones() as usize == k))
            .map(|x| self.qubo.objective_value(x))
            .fold(f64::INFINITY, f64::min))
    }

    pub fn to_file(&self) -> InstanceFile {
        match &self.graph {
            Some(g) => InstanceFile::Graph {
                n: g.n(),
                edges: g.edges().iter().map(|e| (e.i, e.j, e.weight)).collect(),
                family: g.family(),
                constraint: self.constraint,
            },
            None => InstanceFile::Qubo {
                n: self.n(),
                w: self.qubo.objective.w.clone(),
                c: self.qubo.objective.c.clone(),
                c0: self.qubo.objective.c0,
                constraint: self.constraint,
            },
        }
    }
}

impl InstanceFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn into_problem(self) -> Result<Problem> {
        match self {
            InstanceFile::Graph { n, edges, family, constraint } => {
                let g = GraphInstance::new(n, edges.into_iter().map(|(i, j, weight)| Edge { i, j, weight }), family)?;
                Problem::maxcut(g, constraint)
            }
            InstanceFile::Qubo { n, w, c, c0, constraint } => {
                if c.len() != n {
                    return Err(structural(format!("c has {} entries, n = {n}", c.len())));
                }
                constraint.validate(n)?;
                Ok(Problem { qubo: QuboInstance::new(w, c, c0)?, constraint, graph: None })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::StateVector;

    fn brute(q: &QuboInstance) -> Vec<f64> {
        (0..1u64 << q.n()).map(|x| q.objective_value(x)).collect()
    }

    #[test]
    fn single_edge_objective() {
        let g = GraphInstance::unweighted(2, &[(0, 1)], GraphFamily::Custom).unwrap();
        let q = maxcut_to_qubo(&g);
        // Index order: x = 00, 10, 01, 11 (qubit 0 is the low bit).
        assert_eq!(brute(&q), vec![0.0, -1.0, -1.0, 0.0]);
    }

    #[test]
    fn triangle_and_k4_minima() {
        let k3 = maxcut_to_qubo(&graph_family(GraphFamily::Complete, 3, 0).unwrap());
        let vals = brute(&k3);
        assert_eq!(vals, vec![0.0, -2.0, -2.0, -2.0, -2.0, -2.0, -2.0, 0.0]);
        assert_eq!(vals.iter().filter(|&&v| v == -2.0).count(), 6);

        let k4 = maxcut_to_qubo(&graph_family(GraphFamily::Complete, 4, 0).unwrap());
        assert_eq!(k4.brute_force_minimum().unwrap().1, -4.0);
    }

    #[test]
    fn cost_hamiltonian_examples() {
        let g = GraphInstance::unweighted(2, &[(0, 1)], GraphFamily::Custom).unwrap();
        let hc = cost_hamiltonian(&maxcut_to_qubo(&g));
        let expected = OperatorSum::parse(2, &[(-0.5, "II"), (0.5, "ZZ")]).unwrap();
        assert_eq!(hc, expected);
        let diag: Vec<f64> = hc.to_dense().unwrap().as_mat().diagonal().column_vector().iter().map(|v| v.re).collect();
        assert_eq!(diag, vec![0.0, -1.0, -1.0, 0.0]);

        let q = QuboInstance::new(vec![vec![0.0]], vec![1.0], 0.0).unwrap();
        let hc = cost_hamiltonian(&q);
        assert_eq!(hc, OperatorSum::parse(1, &[(0.5, "I"), (-0.5, "Z")]).unwrap());

        let k3 = maxcut_to_qubo(&graph_family(GraphFamily::Complete, 3, 0).unwrap());
        let d: Vec<f64> = cost_hamiltonian(&k3).diagonal().unwrap().iter().map(|v| v.re).collect();
        assert_eq!(d, vec![0.0, -2.0, -2.0, -2.0, -2.0, -2.0, -2.0, 0.0]);
    }

    #[test]
    fn penalties_enter_objective_and_hamiltonian() {
        // (Σx − 1)² as a quadratic form: W = 1 everywhere, c = −2, c0 = 1.
        let n = 3;
        let pen = QuadraticForm::new(vec![vec![1.0; n]; n], vec![-2.0; n], 1.0).unwrap();
        let q = maxcut_to_qubo(&graph_family(GraphFamily::Complete, n, 0).unwrap()).with_penalty(3.0, pen).unwrap();
        for x in 0..8u64 {
            let w = x.count_ones() as f64;
            let base = -(w * (3.0 - w));
            assert!((q.objective_value(x) - (base + 3.0 * (w - 1.0).powi(2))).abs() < 1e-12);
        }
        let hc = cost_hamiltonian(&q);
        assert!(spectral_residual(&q, &hc).unwrap() <= 1e-10);
    }

    #[test]
    fn qubo_is_symmetrised() {
        let q = QuboInstance::new(vec![vec![0.0, 2.0], vec![0.0, 0.0]], vec![0.0, 0.0], 0.0).unwrap();
        assert_eq!(q.objective.w[0][1], 1.0);
        assert_eq!(q.objective.w[1][0], 1.0);
        assert_eq!(q.objective_value(0b11), 2.0);
    }

    #[test]
    fn mixers() {
        let x = mixer_hamiltonian(2, ConstraintSpec::None).unwrap();
        assert_eq!(x, OperatorSum::parse(2, &[(1.0, "XI"), (1.0, "IX")]).unwrap());

        let xy = mixer_hamiltonian(3, ConstraintSpec::HammingWeight { k: 1 }).unwrap();
        let expected = OperatorSum::parse(
            3,
            &[(0.5, "XXI"), (0.5, "YYI"), (0.5, "IXX"), (0.5, "IYY"), (0.5, "XIX"), (0.5, "YIY")],
        )
        .unwrap();
        assert_eq!(xy, expected);
        assert!(xy.is_hermitian());

        let zsum = OperatorSum::parse(3, &[(1.0, "ZII"), (1.0, "IZI"), (1.0, "IIZ")]).unwrap();
        assert!(xy.commutator(&zsum).unwrap().is_empty());

        // Two qubits: one ring edge, not two.
        let xy2 = mixer_hamiltonian(2, ConstraintSpec::HammingWeight { k: 1 }).unwrap();
        assert_eq!(xy2.len(), 2);

        assert!(matches!(mixer_hamiltonian(3, ConstraintSpec::HammingWeight { k: 4 }), Err(Error::Constraint(_))));
    }

    #[test]
    fn xy_mixer_preserves_weight() {
        let n = 6;
        let xy = mixer_hamiltonian(n, ConstraintSpec::HammingWeight { k: 2 }).unwrap();
        for x in 0..1usize << n {
            let out = xy.apply(&StateVector::basis(1 << n, x)).unwrap();
            for (y, a) in out.amplitudes().iter().enumerate() {
                if a.norm() > 0.0 {
                    assert_eq!(y.count_ones(), x.count_ones());
                }
            }
        }
    }

    #[test]
    fn initial_states() {
        let s = initial_state(2, ConstraintSpec::None).unwrap();
        assert!(s.amplitudes().iter().all(|a| (a.re - 0.5).abs() < 1e-15 && a.im == 0.0));

        let d = initial_state(3, ConstraintSpec::HammingWeight { k: 1 }).unwrap();
        let a = 1.0 / 3f64.sqrt();
        for (x, amp) in d.amplitudes().iter().enumerate() {
            let expected = if [1, 2, 4].contains(&x) { a } else { 0.0 };
            assert!((amp.re - expected).abs() < 1e-15);
        }

        let d = initial_state(12, ConstraintSpec::HammingWeight { k: 6 }).unwrap();
        assert_eq!(d.amplitudes().iter().filter(|a| a.norm() > 0.0).count(), 924);
        assert!(d.is_normalized());
        assert_eq!(binomial(12, 6), 924);

        assert!(matches!(initial_state(3, ConstraintSpec::HammingWeight { k: 5 }), Err(Error::Constraint(_))));
    }

    #[test]
    fn graph_families() {
        let c4 = graph_family(GraphFamily::Cycle, 4, 0).unwrap();
        let pairs: BTreeSet<(usize, usize)> = c4.edges().iter().map(|e| (e.i, e.j)).collect();
        assert_eq!(pairs, BTreeSet::from([(0, 1), (1, 2), (2, 3), (0, 3)]));
        assert_eq!(graph_family(GraphFamily::Complete, 4, 0).unwrap().edges().len(), 6);

        let a = graph_family(GraphFamily::ErdosRenyi, 6, 42).unwrap();
        let b = graph_family(GraphFamily::ErdosRenyi, 6, 42).unwrap();
        assert_eq!(a, b);
        assert!(graph_family(GraphFamily::Custom, 4, 0).is_err());
        assert!("petersen".parse::<GraphFamily>().is_err());
        assert!(graph_family(GraphFamily::Cycle, 1, 0).is_err());
    }

    #[test]
    fn graph_validation() {
        let e = |i, j| Edge { i, j, weight: 1.0 };
        assert!(GraphInstance::new(3, [e(1, 1)], GraphFamily::Custom).is_err());
        assert!(GraphInstance::new(3, [e(0, 3)], GraphFamily::Custom).is_err());
        assert!(GraphInstance::new(3, [e(0, 1), e(1, 0)], GraphFamily::Custom).is_err());
        let g = GraphInstance::new(3, [e(2, 0)], GraphFamily::Custom).unwrap();
        assert_eq!((g.edges()[0].i, g.edges()[0].j), (0, 2));
    }

    #[test]
    fn instance_files() {
        let g: InstanceFile = InstanceFile::from_json(
            r#"{"n": 3, "edges": [[0, 1, 1.0], [1, 2, 2.5]], "family": "custom", "constraint": {"kind": "hamming_weight", "k": 1}}"#,
        )
        .unwrap();
        let p = g.into_problem().unwrap();
        assert_eq!(p.constraint, ConstraintSpec::HammingWeight { k: 1 });
        assert_eq!(p.graph.as_ref().unwrap().edges()[1].weight, 2.5);
        assert_eq!(p.feasible_minimum().unwrap(), -3.5);

        let q = InstanceFile::from_json(r#"{"n": 2, "W": [[0, 1], [1, 0]], "c": [-1, -1], "c0": 0.5}"#).unwrap();
        let p = q.into_problem().unwrap();
        assert_eq!(p.constraint, ConstraintSpec::None);
        assert_eq!(p.qubo.objective_value(0b01), -0.5);

        let round = serde_json::to_string(&p.to_file()).unwrap();
        let again = InstanceFile::from_json(&round).unwrap().into_problem().unwrap();
        assert_eq!(again.qubo, p.qubo);
    }
}
