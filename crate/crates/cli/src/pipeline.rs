use std::path::Path;
use std::time::Instant;

use qaoa_reduce::equivalence::{
    certify_orthogonal_exclusion, certify_pair, corrupted_reduction, projector_commutator, sector_leakage,
    CertifyOptions, Corruption, EquivalenceReport, ExclusionCertificate,
};
use qaoa_reduce::problem::{graph_family, ConstraintSpec, GraphFamily, Problem, QuboInstance};
use qaoa_reduce::qaoa::{optimize_auto, FullEvolver, OptimizationRun, OptimizeOptions, QaoaParams, ReducedEvolver};
use qaoa_reduce::rng::SplitMix64;
use qaoa_reduce::subspace::{
    build_isometry, induce_hamiltonians, krylov_closure, krylov_closure_with, ClosureLog, ClosureOptions,
    InvariantSubspace, QubitAccounting,
};
use qaoa_reduce::symmetry::{classify_with, commutant_nullspace, ReducibilityVerdict};
use qaoa_reduce::{OperatorSum, StateVector};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, InstanceSpec};
use crate::report::{memory_report, MemoryRecord};

/// Dicke fast path for permutation-symmetric, unconstrained instances.
pub fn closure_options(family: Option<GraphFamily>, constraint: ConstraintSpec) -> ClosureOptions {
    ClosureOptions {
        symmetric_fast_path: family == Some(GraphFamily::Complete) && constraint == ConstraintSpec::None,
        ..ClosureOptions::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    /// `max_x |⟨x|H_C|x⟩ − f(x)|`.
    pub diagonal_residual: f64,
    /// Minimum of `f` over feasible assignments.
    pub brute_force_min: f64,
    pub best_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub closure: f64,
    pub isometry: f64,
    pub optimize: f64,
    pub certify: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceReport {
    pub id: String,
    pub family: GraphFamily,
    pub n: usize,
    pub k: Option<usize>,
    pub graph_seed: u64,
    pub trial_seed: u64,
    pub edges: Vec<(usize, usize, f64)>,
    pub accounting: QubitAccounting,
    pub closure: ClosureLog,
    /// `M` of the minimal closure when the Dicke basis was used instead.
    pub minimal_dim: Option<usize>,
    pub verdict: ReducibilityVerdict,
    pub oracle: OracleCheck,
    pub optimization: OptimizationRun,
    pub certificates: Vec<EquivalenceReport>,
    pub exclusion: Vec<ExclusionCertificate>,
    /// Worst probability outside the weight sector over all certified runs.
    pub sector_leakage: Option<f64>,
    /// `max ‖[Π_eff, U]‖_F` over the random draws, for `n ≤ dense_limit`.
    pub projector_commutator: Option<f64>,
    pub projector_draws: usize,
    pub memory: MemoryRecord,
    pub corrupted: bool,
    pub artifact: Option<String>,
    pub timings: Timings,
}

pub fn build_problem(cfg: &ExperimentConfig, spec: &InstanceSpec) -> qaoa_reduce::Result<Problem> {
    let graph = graph_family(spec.family, spec.n, cfg.graph_seed(spec.family, spec.n))?;
    Problem::maxcut(graph, spec.constraint())
}

pub struct Hamiltonians {
    pub hc: OperatorSum,
    pub hm: OperatorSum,
    pub psi0: StateVector,
}

pub fn hamiltonians(cfg: &ExperimentConfig, problem: &Problem) -> qaoa_reduce::Result<Hamiltonians> {
    Ok(Hamiltonians {
        hc: problem.cost_hamiltonian(),
        hm: problem.mixer_hamiltonian(cfg.topology)?,
        psi0: problem.initial_state()?,
    })
}

pub fn oracle_residual(problem: &Problem, hc: &OperatorSum) -> qaoa_reduce::Result<f64> {
    let diag = hc.diagonal()?;
    Ok(diag
        .iter()
        .enumerate()
        .map(|(x, d)| (d.re - problem.qubo.objective_value(x as u64)).abs().max(d.im.abs()))
        .fold(0.0, f64::max))
}

/// Everything the experiment reports about one grid cell.
pub fn run_instance(cfg: &ExperimentConfig, spec: &InstanceSpec, artifact_dir: &Path) -> crate::Result<InstanceReport> {
    let problem = build_problem(cfg, spec)?;
    let Hamiltonians { hc, hm, psi0 } = hamiltonians(cfg, &problem)?;
    let constraint = spec.constraint();

    let clock = Instant::now();
    let opts = closure_options(Some(spec.family), constraint);
    let sub = krylov_closure_with(&hc, &hm, &psi0, &opts)?;
    let minimal_dim =
        if sub.log().method == "dicke_basis" { Some(krylov_closure(&hc, &hm, &psi0)?.dim()) } else { None };
    // Unconstrained runs start from |+⟩ⁿ, so the closure doubles as evidence.
    let uniform_closure = (constraint == ConstraintSpec::None && minimal_dim.is_none()).then_some(sub.dim());
    let verdict = classify_with(&hc, &hm, constraint, uniform_closure)?;
    let t_closure = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let iso = build_isometry(&sub)?;
    let (red, iso) = match cfg.corrupt_isometry {
        Some(eps) => corrupted_reduction(&hc, &hm, &psi0, &iso, &sub, Corruption { eps, ..Corruption::default() })?,
        None => (induce_hamiltonians(&hc, &hm, &psi0, &iso)?, iso),
    };
    let full = FullEvolver::new(&hc, &hm, &psi0)?;
    let reduced = ReducedEvolver::new(&red, &iso)?;
    let t_iso = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let trial_seed = cfg.trial_seed(spec);
    let run = optimize_auto(
        &full,
        &reduced,
        &OptimizeOptions { layers: cfg.layers, restarts: cfg.restarts, seed: trial_seed, ..OptimizeOptions::default() },
    )?;
    let t_opt = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let mut certificates = Vec::with_capacity(run.restarts.len());
    let mut exclusion = Vec::with_capacity(run.restarts.len());
    let mut leakage: Option<f64> = None;
    for record in &run.restarts {
        certificates.push(certify_pair(&full, &reduced, &record.params, &CertifyOptions { intertwining: true })?);
        let result = qaoa_reduce::qaoa::Evolver::evolve(&full, &record.params)?;
        exclusion.push(certify_orthogonal_exclusion(&sub, &result));
        if let Some(k) = spec.k {
            let leak = sector_leakage(&result.final_state, k);
            leakage = Some(leakage.map_or(leak, |l: f64| l.max(leak)));
        }
    }
    let (projector, draws) = if spec.n <= cfg.dense_limit {
        let mut g = SplitMix64::new(qaoa_reduce::rng::derive_seed(trial_seed, 77));
        let mut worst: f64 = 0.0;
        for _ in 0..cfg.commutator_draws {
            let params = QaoaParams::random(cfg.layers, &mut g)?;
            worst = worst.max(projector_commutator(&full, &sub, &params)?);
        }
        (Some(worst), cfg.commutator_draws)
    } else {
        (None, 0)
    };
    let t_cert = clock.elapsed().as_secs_f64();

    let artifact = if sub.dim() << spec.n <= cfg.artifact_limit {
        let name = format!("subspaces/{}.json", spec.id());
        let path = artifact_dir.join(&name);
        std::fs::create_dir_all(path.parent().expect("has parent"))?;
        std::fs::write(&path, serde_json::to_vec(&sub.to_artifact())?)?;
        Some(name)
    } else {
        None
    };

    let accounting = QubitAccounting::new(spec.n, sub.dim())?;
    Ok(InstanceReport {
        id: spec.id(),
        family: spec.family,
        n: spec.n,
        k: spec.k,
        graph_seed: cfg.graph_seed(spec.family, spec.n),
        trial_seed,
        edges: problem
            .graph
            .as_ref()
            .map_or_else(Vec::new, |g| g.edges().iter().map(|e| (e.i, e.j, e.weight)).collect()),
        memory: memory_report(spec.n, accounting.m, sub.dim()),
        accounting,
        closure: sub.log().clone(),
        minimal_dim,
        verdict,
        oracle: OracleCheck {
            diagonal_residual: oracle_residual(&problem, &hc)?,
            brute_force_min: problem.feasible_minimum()?,
            best_energy: run.best_energy,
        },
        optimization: run,
        certificates,
        exclusion,
        sector_leakage: leakage,
        projector_commutator: projector,
        projector_draws: draws,
        corrupted: cfg.corrupt_isometry.is_some(),
        artifact,
        timings: Timings { closure: t_closure, isometry: t_iso, optimize: t_opt, certify: t_cert },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrreducibilityCheck {
    pub seed: u64,
    pub n: usize,
    pub commutant_dim: usize,
    #[serde(rename = "M")]
    pub closure_dim: usize,
}

/// Generic random QUBOs with the transverse-field mixer, checked by both the
/// commutant null space and the closure of `|+⟩ⁿ`.
pub fn irreducibility_checks(cfg: &ExperimentConfig, count: usize) -> qaoa_reduce::Result<Vec<IrreducibilityCheck>> {
    (0..count)
        .map(|i| {
            let n = 3 + i % 3;
            let seed = cfg.control_seed(i as u64);
            let q = QuboInstance::random(n, seed)?;
            let hc = qaoa_reduce::problem::cost_hamiltonian(&q);
            let hm = qaoa_reduce::problem::mixer_hamiltonian(n, ConstraintSpec::None)?;
            let commutant_dim = commutant_nullspace(&hc, &hm)?.dimension();
            let closure_dim = krylov_closure(&hc, &hm, &StateVector::uniform(n)?)?.dim();
            Ok(IrreducibilityCheck { seed, n, commutant_dim, closure_dim })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativeControl {
    pub instance: String,
    pub eps: f64,
    pub column: usize,
    pub reports: Vec<EquivalenceReport>,
}

/// Re-runs the certification of `spec` with one isometry column perturbed.
pub fn negative_control(
    cfg: &ExperimentConfig,
    spec: &InstanceSpec,
    params: &[QaoaParams],
) -> qaoa_reduce::Result<NegativeControl> {
    let problem = build_problem(cfg, spec)?;
    let Hamiltonians { hc, hm, psi0 } = hamiltonians(cfg, &problem)?;
    let sub: InvariantSubspace =
        krylov_closure_with(&hc, &hm, &psi0, &closure_options(Some(spec.family), spec.constraint()))?;
    let iso = build_isometry(&sub)?;
    let corruption = Corruption::default();
    let (red, bad) = corrupted_reduction(&hc, &hm, &psi0, &iso, &sub, corruption)?;
    let full = FullEvolver::new(&hc, &hm, &psi0)?;
    let reduced = ReducedEvolver::new(&red, &bad)?;
    let reports = params
        .iter()
        .map(|p| certify_pair(&full, &reduced, p, &CertifyOptions::default()))
        .collect::<qaoa_reduce::Result<Vec<_>>>()?;
    Ok(NegativeControl { instance: spec.id(), eps: corruption.eps, column: corruption.column, reports })
}
