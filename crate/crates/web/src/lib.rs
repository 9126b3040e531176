//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every call rebuilds the instance from `(family, n, k, seed)`; the demo
//! stays at `n ≤ 10` so this is cheap.

use qaoa_reduce::equivalence::{certify_pair, CertifyOptions};
use qaoa_reduce::problem::{graph_family, ConstraintSpec, GraphFamily, Problem, XyTopology};
use qaoa_reduce::qaoa::{Evolver, FullEvolver, QaoaParams, ReducedEvolver};
use qaoa_reduce::subspace::{
    build_isometry, induce_hamiltonians, krylov_closure_with, qubit_count, ClosureOptions, Isometry, ReducedSystem,
};
use qaoa_reduce::symmetry::classify;
use qaoa_reduce::{OperatorSum, StateVector};
use serde::Serialize;
use wasm_bindgen::prelude::*;

pub const MAX_DEMO_QUBITS: usize = 10;

struct Setup {
    problem: Problem,
    hc: OperatorSum,
    hm: OperatorSum,
    psi0: StateVector,
    method: String,
    iso: Isometry,
    red: ReducedSystem,
}

fn err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn setup(family: &str, n: usize, k: i32, seed: u32) -> Result<Setup, JsError> {
    if n > MAX_DEMO_QUBITS {
        return Err(err(format!("the demo is limited to {MAX_DEMO_QUBITS} qubits")));
    }
    let family: GraphFamily = family.parse().map_err(err)?;
    let constraint = if k < 0 { ConstraintSpec::None } else { ConstraintSpec::HammingWeight { k: k as usize } };
    let problem = Problem::maxcut(graph_family(family, n, seed as u64).map_err(err)?, constraint).map_err(err)?;
    let hc = problem.cost_hamiltonian();
    let hm = problem.mixer_hamiltonian(XyTopology::Ring).map_err(err)?;
    let psi0 = problem.initial_state().map_err(err)?;
    let opts = ClosureOptions {
        symmetric_fast_path: family == GraphFamily::Complete && constraint == ConstraintSpec::None,
        ..ClosureOptions::default()
    };
    let sub = krylov_closure_with(&hc, &hm, &psi0, &opts).map_err(err)?;
    let iso = build_isometry(&sub).map_err(err)?;
    let red = induce_hamiltonians(&hc, &hm, &psi0, &iso).map_err(err)?;
    Ok(Setup { problem, hc, hm, psi0, method: sub.log().method.clone(), iso, red })
}

#[derive(Serialize)]
struct ReduceSummary {
    n: usize,
    #[serde(rename = "M")]
    active_dim: usize,
    m: usize,
    reducible: bool,
    evidence: String,
    method: String,
    edges: usize,
    optimum: f64,
}

/// Subspace dimension, qubit count and reducibility verdict as JSON.
#[wasm_bindgen]
pub fn reduce(family: &str, n: usize, k: i32, seed: u32) -> Result<String, JsError> {
    let s = setup(family, n, k, seed)?;
    let verdict = classify(&s.hc, &s.hm, s.problem.constraint).map_err(err)?;
    let summary = ReduceSummary {
        n,
        active_dim: s.iso.active_dim(),
        m: qubit_count(s.iso.active_dim()).map_err(err)?,
        reducible: verdict.reducible,
        evidence: verdict.evidence.as_str().into(),
        method: s.method,
        edges: s.problem.graph.as_ref().map_or(0, |g| g.edges().len()),
        optimum: s.problem.feasible_minimum().map_err(err)?,
    };
    serde_json::to_string(&summary).map_err(err)
}

#[derive(Serialize)]
struct EvolveSummary {
    energy_full: f64,
    energy_reduced: f64,
    fidelity_offset: f64,
    tvd: f64,
    /// Most likely bitstrings (qubit 0 first).
    top: Vec<(String, f64)>,
}

/// Runs both circuits at the given angles and compares them.
#[wasm_bindgen]
pub fn evolve(family: &str, n: usize, k: i32, seed: u32, gammas: Vec<f64>, betas: Vec<f64>) -> Result<String, JsError> {
    let s = setup(family, n, k, seed)?;
    let params = QaoaParams::new(gammas, betas).map_err(err)?;
    let full = FullEvolver::new(&s.hc, &s.hm, &s.psi0).map_err(err)?;
    let reduced = ReducedEvolver::new(&s.red, &s.iso).map_err(err)?;
    let report = certify_pair(&full, &reduced, &params, &CertifyOptions { intertwining: false }).map_err(err)?;
    let result = reduced.evolve(&params).map_err(err)?;
    let mut top: Vec<(String, f64)> = result.distribution.into_iter().collect();
    top.sort_by(|a, b| b.1.total_cmp(&a.1));
    top.truncate(8);
    serde_json::to_string(&EvolveSummary {
        energy_full: report.energy_full,
        energy_reduced: report.energy_reduced,
        fidelity_offset: report.fidelity_offset,
        tvd: report.tvd,
        top,
    })
    .map_err(err)
}

/// Single-layer energies on a `steps × steps` grid, `γ ∈ [0, π)` by rows
/// and `β ∈ [0, π/2)` by columns, computed in the reduced space.
#[wasm_bindgen]
pub fn landscape(family: &str, n: usize, k: i32, seed: u32, steps: usize) -> Result<Vec<f64>, JsError> {
    let s = setup(family, n, k, seed)?;
    let reduced = ReducedEvolver::new(&s.red, &s.iso).map_err(err)?;
    let mut out = Vec::with_capacity(steps * steps);
    for i in 0..steps {
        for j in 0..steps {
            let gamma = std::f64::consts::PI * i as f64 / steps as f64;
            let beta = std::f64::consts::FRAC_PI_2 * j as f64 / steps as f64;
            let params = QaoaParams::new(vec![gamma], vec![beta]).map_err(err)?;
            out.push(reduced.energy(&params).map_err(err)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_graph_summary() {
        let json: serde_json::Value = serde_json::from_str(&reduce("complete", 6, -1, 0).unwrap()).unwrap();
        assert_eq!(json["M"], 7);
        assert_eq!(json["m"], 3);
    }

    #[test]
    fn circuits_agree() {
        let json: serde_json::Value =
            serde_json::from_str(&evolve("cycle", 6, -1, 0, vec![0.4], vec![0.3]).unwrap()).unwrap();
        assert!(json["fidelity_offset"].as_f64().unwrap().abs() < 1e-10);
        assert!(json["tvd"].as_f64().unwrap() < 1e-10);
    }

    #[test]
    fn landscape_has_grid_shape() {
        let grid = landscape("cycle", 4, -1, 0, 5).unwrap();
        assert_eq!(grid.len(), 25);
        assert!(grid[0].abs() > 0.0);
    }
}
