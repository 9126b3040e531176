//! Layered QAOA evolution in the full and the reduced space, measurement
//! distributions, and seeded Nelder–Mead optimisation of `(γ, β)`.
//!
//! Each layer applies `exp(−iγ_p H_C)` and then `exp(−iβ_p H_M)`. No
//! exponential is approximated: diagonal operators become element-wise
//! phases, sums of commuting Pauli words become exact products of
//! `cos θ·I − i sin θ·P` factors, and anything else is diagonalised once per
//! connected block of the computational basis.

use std::collections::BTreeMap;
use web_time::Instant;

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{structural, Error, Result};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::pauli::{state_dim, CompiledOperator, OperatorSum, PauliString};
use crate::problem::bitstring;
use crate::rng::{derive_seed, SplitMix64};
use crate::state::StateVector;
use crate::subspace::{Isometry, ReducedSystem};
use crate::{HermitianEigen, C64};

/// Largest `n` for full-space state-vector evolution.
pub const MAX_EVOLUTION_QUBITS: usize = 20;
/// Largest block that is diagonalised densely.
pub const MAX_BLOCK_DIM: usize = 1 << 14;
/// Probabilities below this are left out of reported distributions.
pub const DISTRIBUTION_CUTOFF: f64 = 1e-15;

const NORM_DRIFT_ERROR: f64 = 1e-8;
const PADDING_TOLERANCE: f64 = 1e-10;
const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaoaParams {
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl QaoaParams {
    pub fn new(gammas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        let p = Self { gammas, betas };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.gammas.is_empty() || self.gammas.len() != self.betas.len() {
            return Err(structural(format!(
                "need P ≥ 1 angles of each kind, got {} gammas and {} betas",
                self.gammas.len(),
                self.betas.len()
            )));
        }
        if self.gammas.iter().chain(&self.betas).any(|v| !v.is_finite()) {
            return Err(structural("QAOA angles must be finite"));
        }
        Ok(())
    }

    pub fn zeros(layers: usize) -> Result<Self> {
        Self::new(vec![0.0; layers], vec![0.0; layers])
    }

    pub fn layers(&self) -> usize {
        self.gammas.len()
    }

    /// `[γ₁ … γ_P, β₁ … β_P]`.
    pub fn to_flat(&self) -> Vec<f64> {
        self.gammas.iter().chain(&self.betas).copied().collect()
    }

    pub fn from_flat(x: &[f64]) -> Result<Self> {
        if !x.len().is_multiple_of(2) {
            return Err(structural("flat parameter vector must have even length"));
        }
        let p = x.len() / 2;
        Self::new(x[..p].to_vec(), x[p..].to_vec())
    }

    /// `P` layers drawn uniformly from `[0, π)`, gammas first.
    pub fn random(layers: usize, rng: &mut SplitMix64) -> Result<Self> {
        let x: Vec<f64> = (0..2 * layers).map(|_| rng.uniform(0.0, std::f64::consts::PI)).collect();
        Self::from_flat(&x)
    }
}

/// Outcome of one evolution.
#[derive(Debug, Clone)]
pub struct EvolutionResult {
    /// Full-space state (for reduced runs: `V·ψ̃`).
    pub final_state: StateVector,
    pub energy: f64,
    /// Over full-space bitstrings, qubit 0 first.
    pub distribution: BTreeMap<String, f64>,
    /// Over reduced indices, for reduced runs only.
    pub reduced_distribution: Option<BTreeMap<String, f64>>,
    /// `|‖ψ‖ − 1|` before the defensive renormalisation.
    pub norm_drift: f64,
    pub wall_time: f64,
}

/// `|amplitude|²` per basis index keyed by bitstring, small entries omitted.
pub fn measure_distribution(state: &StateVector, n: usize) -> BTreeMap<String, f64> {
    state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(x, a)| (x, a.norm_sqr()))
        .filter(|&(_, p)| p >= DISTRIBUTION_CUTOFF)
        .map(|(x, p)| (bitstring(x, n), p))
        .collect()
}

fn renormalise(v: &mut [C64]) -> Result<f64> {
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let drift = (norm - 1.0).abs();
    if drift > NORM_DRIFT_ERROR {
        return Err(Error::NumericalIntegrity(format!("state norm drifted by {drift:.3e}")));
    }
    v.iter_mut().for_each(|a| *a /= norm);
    Ok(drift)
}

/// A dense block of the computational basis closed under the operator.
#[derive(Debug, Clone)]
struct Block {
    indices: Vec<usize>,
    eig: HermitianEigen,
}

/// Exact `exp(−iθH)` for a fixed Hermitian `H`.
#[derive(Debug, Clone)]
enum Propagator {
    Diagonal(Vec<f64>),
    CommutingPauli(Vec<(PauliString, f64)>),
    Blocks(Vec<Block>),
}

impl Propagator {
    fn new(op: &OperatorSum) -> Result<Self> {
        if !op.is_hermitian() {
            return Err(structural("evolution needs a Hermitian operator"));
        }
        let dim = state_dim(op.n())?;
        if op.is_diagonal() {
            return Ok(Propagator::Diagonal(op.diagonal()?.into_iter().map(|c| c.re).collect()));
        }
        if op.terms_commute() {
            return Ok(Propagator::CommutingPauli(op.terms().iter().map(|t| (t.word, t.coeff.re)).collect()));
        }

        // Column b of H: each term sends |b⟩ to phase(b)·|b ⊕ x⟩.
        let column = |b: usize| -> BTreeMap<usize, C64> {
            let mut col = BTreeMap::new();
            for t in op.terms() {
                *col.entry(b ^ t.word.x_mask() as usize).or_insert(ZERO) += t.coeff * t.word.phase_on(b);
            }
            col.retain(|_, v| v.norm() > 0.0);
            col
        };

        // Connected components of the coupling graph.
        let mut parent: Vec<usize> = (0..dim).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for b in 0..dim {
            for &c in column(b).keys() {
                let (ra, rb) = (find(&mut parent, b), find(&mut parent, c));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for b in 0..dim {
            let r = find(&mut parent, b);
            groups.entry(r).or_default().push(b);
        }
        let mut pos = vec![0usize; dim];
        let mut blocks = Vec::with_capacity(groups.len());
        for (_, indices) in groups {
            if indices.len() > MAX_BLOCK_DIM {
                return Err(Error::Resource(format!(
                    "mixer block of dimension {} exceeds the dense limit {MAX_BLOCK_DIM}",
                    indices.len()
                )));
            }
            for (k, &b) in indices.iter().enumerate() {
                pos[b] = k;
            }
            let mut a = Mat::<C64>::zeros(indices.len(), indices.len());
            for (col, &b) in indices.iter().enumerate() {
                for (row_b, v) in column(b) {
                    a[(pos[row_b], col)] = v;
                }
            }
            blocks.push(Block { eig: HermitianEigen::new(a.as_ref())?, indices });
        }
        Ok(Propagator::Blocks(blocks))
    }

    fn cost(&self, dim: usize) -> f64 {
        match self {
            Propagator::Diagonal(_) => dim as f64,
            Propagator::CommutingPauli(t) => (t.len() * dim) as f64,
            Propagator::Blocks(bs) => bs.iter().map(|b| 2.0 * (b.indices.len() * b.indices.len()) as f64).sum(),
        }
    }

    fn apply(&self, theta: f64, v: &mut [C64], scratch: &mut Vec<C64>) {
        match self {
            Propagator::Diagonal(d) => {
                v.iter_mut().zip(d).for_each(|(a, &e)| *a *= C64::from_polar(1.0, -theta * e));
            }
            Propagator::CommutingPauli(terms) => {
                scratch.resize(v.len(), ZERO);
                for (word, c) in terms {
                    let (cos, sin) = ((theta * c).cos(), (theta * c).sin());
                    if word.is_identity() {
                        let phase = C64::new(cos, -sin);
                        v.iter_mut().for_each(|a| *a *= phase);
                        continue;
                    }
                    let x = word.x_mask() as usize;
                    let minus_i_sin = C64::new(0.0, -sin);
                    scratch.copy_from_slice(v);
                    for (b, a) in v.iter_mut().enumerate() {
                        // (P v)_b = phase(b ⊕ x) · v_{b ⊕ x}
                        let src = b ^ x;
                        *a = *a * cos + minus_i_sin * word.phase_on(src) * scratch[src];
                    }
                }
            }
            Propagator::Blocks(blocks) => {
                for blk in blocks {
                    let sub: Vec<C64> = blk.indices.iter().map(|&b| v[b]).collect();
                    if sub.iter().all(|a| *a == ZERO) {
                        continue;
                    }
                    let out = apply_eigen_exp(&blk.eig, theta, &sub);
                    for (&b, o) in blk.indices.iter().zip(out) {
                        v[b] = o;
                    }
                }
            }
        }
    }
}

/// `Q diag(e^{−iθλ}) Q† x`.
fn apply_eigen_exp(eig: &HermitianEigen, theta: f64, x: &[C64]) -> Vec<C64> {
    let q = eig.vectors.as_ref();
    let xr = MatRef::from_column_major_slice(x, x.len(), 1);
    let mut c = q.adjoint() * xr;
    for (k, lam) in eig.values.iter().enumerate() {
        c[(k, 0)] *= C64::from_polar(1.0, -theta * lam);
    }
    let y = q * &c;
    y.col_as_slice(0).to_vec()
}

/// Anything that can evaluate the QAOA energy for a parameter set.
pub trait Evolver {
    fn energy(&self, params: &QaoaParams) -> Result<f64>;
    fn evolve(&self, params: &QaoaParams) -> Result<EvolutionResult>;
    /// Rough per-evaluation cost used to pick a driver.
    fn cost_estimate(&self, layers: usize) -> f64;
    fn label(&self) -> &'static str;
}

/// State-vector QAOA on all `n` qubits.
#[derive(Debug, Clone)]
pub struct FullEvolver {
    n: usize,
    cost_diag: Option<Vec<f64>>,
    cost_op: CompiledOperator,
    cost_prop: Propagator,
    mixer_prop: Propagator,
    psi0: StateVector,
}

impl FullEvolver {
    pub fn new(hc: &OperatorSum, hm: &OperatorSum, psi0: &StateVector) -> Result<Self> {
        let n = hc.n();
        if hm.n() != n {
            return Err(structural("cost and mixer act on different qubit counts"));
        }
        if n > MAX_EVOLUTION_QUBITS {
            return Err(Error::Resource(format!(
                "full evolution is limited to {MAX_EVOLUTION_QUBITS} qubits (got {n})"
            )));
        }
        if psi0.dim() != state_dim(n)? || !psi0.is_normalized() {
            return Err(structural("initial state must be a normalised 2ⁿ vector"));
        }
        let cost_op = CompiledOperator::new(hc)?;
        Ok(Self {
            n,
            cost_diag: cost_op.as_diagonal().map(|d| d.into_iter().map(|c| c.re).collect()),
            cost_op,
            cost_prop: Propagator::new(hc)?,
            mixer_prop: Propagator::new(hm)?,
            psi0: psi0.clone(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Final state vector before any reporting.
    pub fn state(&self, params: &QaoaParams) -> Result<(StateVector, f64)> {
        self.state_from(self.psi0.amplitudes(), params)
    }

    /// Evolves an arbitrary start vector (used for column-wise checks).
    pub fn state_from(&self, start: &[C64], params: &QaoaParams) -> Result<(StateVector, f64)> {
        let mut v = self.evolve_unnormalised(start, params)?;
        let drift = renormalise(&mut v)?;
        Ok((StateVector::from_vec(v), drift))
    }

    /// `U(γ, β)·v` for any vector, with no normalisation or drift check.
    pub fn evolve_unnormalised(&self, start: &[C64], params: &QaoaParams) -> Result<Vec<C64>> {
        params.validate()?;
        if start.len() != 1 << self.n {
            return Err(structural("start vector has the wrong dimension"));
        }
        let mut v = start.to_vec();
        let mut scratch = Vec::new();
        for (&g, &b) in params.gammas.iter().zip(&params.betas) {
            self.cost_prop.apply(g, &mut v, &mut scratch);
            self.mixer_prop.apply(b, &mut v, &mut scratch);
        }
        Ok(v)
    }

    pub fn expectation(&self, state: &StateVector) -> f64 {
        match &self.cost_diag {
            Some(d) => state.amplitudes().iter().zip(d).map(|(a, e)| a.norm_sqr() * e).sum(),
            None => {
                let hv = self.cost_op.apply(state).expect("dimension checked");
                state.inner(&hv).expect("dimension checked").re
            }
        }
    }

    /// Dense `U(γ, β)` assembled column by column.
    pub fn unitary_dense(&self, params: &QaoaParams) -> Result<Mat<C64>> {
        if self.n > 12 {
            return Err(Error::Resource("dense unitaries are limited to 12 qubits".into()));
        }
        let d = 1 << self.n;
        let mut u = Mat::<C64>::zeros(d, d);
        let mut e = vec![ZERO; d];
        let mut scratch = Vec::new();
        for k in 0..d {
            e.fill(ZERO);
            e[k] = C64::new(1.0, 0.0);
            for (&g, &b) in params.gammas.iter().zip(&params.betas) {
                self.cost_prop.apply(g, &mut e, &mut scratch);
                self.mixer_prop.apply(b, &mut e, &mut scratch);
            }
            u.col_as_slice_mut(k).copy_from_slice(&e);
        }
        Ok(u)
    }
}

impl Evolver for FullEvolver {
    fn energy(&self, params: &QaoaParams) -> Result<f64> {
        let (s, _) = self.state(params)?;
        Ok(self.expectation(&s))
    }

    fn evolve(&self, params: &QaoaParams) -> Result<EvolutionResult> {
        let start = Instant::now();
        let (s, drift) = self.state(params)?;
        let energy = self.expectation(&s);
        Ok(EvolutionResult {
            distribution: measure_distribution(&s, self.n),
            final_state: s,
            energy,
            reduced_distribution: None,
            norm_drift: drift,
            wall_time: start.elapsed().as_secs_f64(),
        })
    }

    fn cost_estimate(&self, layers: usize) -> f64 {
        let d = 1usize << self.n;
        layers as f64 * (self.cost_prop.cost(d) + self.mixer_prop.cost(d))
    }

    fn label(&self) -> &'static str {
        "full"
    }
}

/// QAOA on the active `M`-dimensional block of the reduced space.
///
/// With `H̃_C = Q_C Λ_C Q_C†` and `H̃_M = Q_M Λ_M Q_M†`, the state is kept in
/// the cost eigenbasis and moved across with `W = Q_M† Q_C`, so each layer
/// costs two `M × M` products.
#[derive(Debug, Clone)]
pub struct ReducedEvolver<'a> {
    iso: &'a Isometry,
    m: usize,
    cost_eig: HermitianEigen,
    mixer_values: Vec<f64>,
    w: Mat<C64>,
    /// `Q_C† ψ̃₀`.
    start: Vec<C64>,
}

impl<'a> ReducedEvolver<'a> {
    pub fn new(red: &ReducedSystem, iso: &'a Isometry) -> Result<Self> {
        if red.active_dim() != iso.active_dim() {
            return Err(structural("reduced system and isometry disagree on M"));
        }
        let cost_eig = red.hc.hermitian_eigen()?;
        let mixer_eig = red.hm.hermitian_eigen()?;
        let w = mixer_eig.vectors.adjoint() * &cost_eig.vectors;
        let psi = MatRef::from_column_major_slice(red.psi0.amplitudes(), red.active_dim(), 1);
        let start = (cost_eig.vectors.adjoint() * psi).col_as_slice(0).to_vec();
        Ok(Self { iso, m: red.m, cost_eig, mixer_values: mixer_eig.values, w, start })
    }

    pub fn active_dim(&self) -> usize {
        self.start.len()
    }

    pub fn isometry(&self) -> &'a Isometry {
        self.iso
    }

    /// Cost-eigenbasis coefficients after the circuit.
    fn coefficients(&self, params: &QaoaParams) -> Result<Vec<C64>> {
        params.validate()?;
        let m_dim = self.active_dim();
        let mut a = self.start.clone();
        for (&g, &b) in params.gammas.iter().zip(&params.betas) {
            for (x, lam) in a.iter_mut().zip(&self.cost_eig.values) {
                *x *= C64::from_polar(1.0, -g * lam);
            }
            let av = MatRef::from_column_major_slice(&a, m_dim, 1);
            let mut bv = &self.w * av;
            for (k, lam) in self.mixer_values.iter().enumerate() {
                bv[(k, 0)] *= C64::from_polar(1.0, -b * lam);
            }
            a = (self.w.adjoint() * &bv).col_as_slice(0).to_vec();
        }
        Ok(a)
    }

    /// `ψ̃` on the active block, in the reduced computational basis.
    pub fn state(&self, params: &QaoaParams) -> Result<(StateVector, f64)> {
        let mut a = self.coefficients(params)?;
        let drift = renormalise(&mut a)?;
        let av = MatRef::from_column_major_slice(&a, a.len(), 1);
        let psi = (&self.cost_eig.vectors * av).col_as_slice(0).to_vec();
        Ok((StateVector::from_vec(psi), drift))
    }

    /// Zero-padded `2ᵐ` state with the padding amplitude checked.
    pub fn padded_state(&self, params: &QaoaParams) -> Result<StateVector> {
        let (s, _) = self.state(params)?;
        let mut v = s.into_vec();
        v.resize(1 << self.m, ZERO);
        let leak = v[self.active_dim()..].iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if leak > PADDING_TOLERANCE {
            return Err(Error::NumericalIntegrity(format!("padding amplitude {leak:.3e}")));
        }
        Ok(StateVector::from_vec(v))
    }

    /// Dense reduced circuit `Ũ` on the active block, built from the
    /// eigenbases (`M × M`).
    pub fn unitary_dense(&self, params: &QaoaParams) -> Result<Mat<C64>> {
        params.validate()?;
        let m_dim = self.active_dim();
        let qc = &self.cost_eig.vectors;
        // Work in the cost eigenbasis: T = Π_p W† D_M(β_p) W D_C(γ_p).
        let mut t = Mat::<C64>::identity(m_dim, m_dim);
        for (&g, &b) in params.gammas.iter().zip(&params.betas) {
            let dc: Vec<C64> = self.cost_eig.values.iter().map(|l| C64::from_polar(1.0, -g * l)).collect();
            let dm: Vec<C64> = self.mixer_values.iter().map(|l| C64::from_polar(1.0, -b * l)).collect();
            let scaled = Mat::from_fn(m_dim, m_dim, |i, j| dc[i] * t[(i, j)]);
            let mut x = &self.w * &scaled;
            for j in 0..m_dim {
                for (i, d) in dm.iter().enumerate() {
                    x[(i, j)] *= d;
                }
            }
            t = self.w.adjoint() * &x;
        }
        Ok(qc * (&t * qc.adjoint()))
    }
}

impl Evolver for ReducedEvolver<'_> {
    fn energy(&self, params: &QaoaParams) -> Result<f64> {
        let a = self.coefficients(params)?;
        let norm2: f64 = a.iter().map(|x| x.norm_sqr()).sum();
        Ok(a.iter().zip(&self.cost_eig.values).map(|(x, l)| x.norm_sqr() * l).sum::<f64>() / norm2)
    }

    fn evolve(&self, params: &QaoaParams) -> Result<EvolutionResult> {
        let start = Instant::now();
        let a = {
            let mut a = self.coefficients(params)?;
            let drift = renormalise(&mut a)?;
            (a, drift)
        };
        let (coeffs, drift) = a;
        let energy = coeffs.iter().zip(&self.cost_eig.values).map(|(x, l)| x.norm_sqr() * l).sum();
        let av = MatRef::from_column_major_slice(&coeffs, coeffs.len(), 1);
        let psi = StateVector::from_vec((&self.cost_eig.vectors * av).col_as_slice(0).to_vec());
        let mut padded = psi.amplitudes().to_vec();
        padded.resize(1 << self.m, ZERO);
        let full = self.iso.embed(&psi)?;
        Ok(EvolutionResult {
            distribution: measure_distribution(&full, self.iso.n()),
            reduced_distribution: Some(measure_distribution(&StateVector::from_vec(padded), self.m)),
            final_state: full,
            energy,
            norm_drift: drift,
            wall_time: start.elapsed().as_secs_f64(),
        })
    }

    fn cost_estimate(&self, layers: usize) -> f64 {
        let m = self.active_dim() as f64;
        layers as f64 * 2.0 * m * m
    }

    fn label(&self) -> &'static str {
        "reduced"
    }
}

#[derive(Debug, Clone)]
pub struct OptimizeOptions {
    pub layers: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Evaluations per restart per layer.
    pub evals_per_layer: usize,
    pub ftol: f64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self { layers: 2, restarts: 5, seed: 0, evals_per_layer: 200, ftol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartRecord {
    pub index: usize,
    pub initial: QaoaParams,
    pub params: QaoaParams,
    pub energy: f64,
    pub evaluations: usize,
    pub converged: bool,
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationRun {
    pub seed: u64,
    pub layers: usize,
    pub driver: String,
    pub restarts: Vec<RestartRecord>,
    pub best_index: usize,
    pub best_params: QaoaParams,
    pub best_energy: f64,
}

/// Initial parameters of restart `r`; identical for every evolver.
pub fn initial_params(seed: u64, restart: usize, layers: usize) -> Result<QaoaParams> {
    let mut rng = SplitMix64::new(derive_seed(seed, restart as u64));
    QaoaParams::random(layers, &mut rng)
}

pub fn optimize(evolver: &dyn Evolver, opts: &OptimizeOptions) -> Result<OptimizationRun> {
    if opts.restarts == 0 || opts.layers == 0 {
        return Err(structural("optimisation needs at least one restart and one layer"));
    }
    let nm = NelderMeadOptions { max_evals: opts.evals_per_layer * opts.layers, ftol: opts.ftol, step: 0.25 };
    let mut restarts = Vec::with_capacity(opts.restarts);
    for r in 0..opts.restarts {
        let initial = initial_params(opts.seed, r, opts.layers)?;
        let res = nelder_mead(|x| evolver.energy(&QaoaParams::from_flat(x)?), &initial.to_flat(), &nm)?;
        restarts.push(RestartRecord {
            index: r,
            initial,
            params: QaoaParams::from_flat(&res.x)?,
            energy: res.f,
            evaluations: res.evals,
            converged: res.converged,
            trace: res.trace,
        });
    }
    let best = restarts.iter().min_by(|a, b| a.energy.total_cmp(&b.energy)).expect("at least one restart");
    Ok(OptimizationRun {
        seed: opts.seed,
        layers: opts.layers,
        driver: evolver.label().to_string(),
        best_index: best.index,
        best_params: best.params.clone(),
        best_energy: best.energy,
        restarts,
    })
}

/// Optimises with whichever evolver is cheaper per evaluation.
pub fn optimize_auto(
    full: &FullEvolver,
    reduced: &ReducedEvolver<'_>,
    opts: &OptimizeOptions,
) -> Result<OptimizationRun> {
    if reduced.cost_estimate(opts.layers) < full.cost_estimate(opts.layers) {
        optimize(reduced, opts)
    } else {
        optimize(full, opts)
    }
}
