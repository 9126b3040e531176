//! Acceptance gate: one default run, re-audited from disk, plus independent
//! recomputation of what can be checked without the pipeline.

use std::collections::BTreeMap;
use std::time::Instant;

use qaoa_reduce::problem::{
    cost_hamiltonian, graph_family, mixer_hamiltonian, ConstraintSpec, GraphFamily, Problem, QuboInstance, XyTopology,
};
use qaoa_reduce::subspace::{krylov_closure, krylov_closure_with, ClosureOptions};
use qaoa_reduce::symmetry::commutant_nullspace;
use qaoa_reduce::StateVector;
use qaoa_reduce_cli::audit::{audit, Status};
use qaoa_reduce_cli::config::ExperimentConfig;
use qaoa_reduce_cli::pipeline::InstanceReport;
use qaoa_reduce_cli::run_experiment;

fn ceil_log2(x: usize) -> usize {
    (usize::BITS - (x - 1).leading_zeros()) as usize
}

fn choose(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Minimum of `−cut(x)` over assignments of the right weight.
fn brute_force_min(inst: &InstanceReport) -> f64 {
    (0u64..1 << inst.n)
        .filter(|x| inst.k.is_none_or(|k| x.count_ones() as usize == k))
        .map(|x| -inst.edges.iter().filter(|(i, j, _)| (x >> i & 1) != (x >> j & 1)).map(|(_, _, w)| w).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

struct Gate {
    lines: Vec<String>,
    failures: usize,
}

impl Gate {
    fn record(&mut self, id: u8, name: &str, checks: &[(bool, String)]) {
        let bad: Vec<&str> = checks.iter().filter(|(ok, _)| !ok).map(|(_, d)| d.as_str()).collect();
        let line = if bad.is_empty() && !checks.is_empty() {
            format!("PASS [{id:>2}] {name}")
        } else {
            self.failures += 1;
            let why = if checks.is_empty() { "no checks ran".to_string() } else { bad.join("; ") };
            format!("FAIL [{id:>2}] {name}: {why}")
        };
        println!("{line}");
        self.lines.push(line);
    }
}

fn main() {
    let out = tempfile::tempdir().unwrap();
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let cfg = ExperimentConfig { out: out.path().to_path_buf(), workers, ..ExperimentConfig::default() };
    let run = run_experiment(&cfg).expect("default run completes");
    let report = audit(&run.manifest_path).expect("audit reads the run back");
    assert!(report.integrity.is_empty(), "{:?}", report.integrity);
    assert!(report.failures.is_empty(), "{:?}", report.failures);
    let audited: BTreeMap<u8, (Status, String)> =
        report.criteria.iter().map(|c| (c.id, (c.status, c.detail.clone()))).collect();
    let audit_check = |id: u8| {
        let (status, detail) = &audited[&id];
        (*status == Status::Pass, format!("audit: {status:?} {detail}"))
    };
    let insts = &run.summary.instances;
    let find = |family: GraphFamily, n: usize, k: Option<usize>| {
        insts.iter().find(|i| i.family == family && i.n == n && i.k == k)
    };
    let mut gate = Gate { lines: Vec::new(), failures: 0 };

    // 1. Complete graphs, recomputed and timed outside the pipeline.
    let mut checks = vec![audit_check(1)];
    let clock = Instant::now();
    for (n, want_m) in [(6, 3), (8, 4), (10, 4), (12, 4)] {
        let p = Problem::maxcut(graph_family(GraphFamily::Complete, n, 0).unwrap(), ConstraintSpec::None).unwrap();
        let (hc, hm, psi0) =
            (p.cost_hamiltonian(), p.mixer_hamiltonian(XyTopology::Ring).unwrap(), p.initial_state().unwrap());
        let opts = ClosureOptions { symmetric_fast_path: true, ..ClosureOptions::default() };
        let big_m = krylov_closure_with(&hc, &hm, &psi0, &opts).unwrap().dim();
        checks.push((big_m == n + 1 && ceil_log2(big_m) == want_m, format!("K{n}: M={big_m}")));
        let stored = find(GraphFamily::Complete, n, None).map(|i| (i.accounting.active_dim, i.accounting.m));
        checks.push((stored == Some((n + 1, want_m)), format!("K{n} stored {stored:?}")));
    }
    let secs = clock.elapsed().as_secs_f64();
    checks.push((secs < 60.0, format!("runtime {secs:.1}s")));
    gate.record(1, "complete-graph reduction", &checks);

    // 2. Random graphs.
    let mut checks = vec![audit_check(2)];
    for n in [6, 8, 10, 12] {
        match find(GraphFamily::ErdosRenyi, n, None) {
            Some(i) => {
                let (big_m, m) = (i.accounting.active_dim, i.accounting.m);
                checks.push((big_m >= 1 << (n - 1) && (m == n || m == n - 1), format!("{}: M={big_m} m={m}", i.id)));
            }
            None => checks.push((false, format!("erdos_renyi n={n} missing"))),
        }
    }
    gate.record(2, "random-graph reduction", &checks);

    // 3. Constraint sweep, with closures recomputed and timed.
    let mut checks = vec![audit_check(3)];
    let clock = Instant::now();
    let mut ms = Vec::new();
    for k in [1, 2, 3, 4, 6] {
        let Some(i) = find(cfg.constraint_family, 12, Some(k)) else {
            checks.push((false, format!("k={k} missing")));
            continue;
        };
        let p = Problem::maxcut(graph_family(i.family, 12, i.graph_seed).unwrap(), ConstraintSpec::HammingWeight { k })
            .unwrap();
        let (hc, hm, psi0) =
            (p.cost_hamiltonian(), p.mixer_hamiltonian(XyTopology::Ring).unwrap(), p.initial_state().unwrap());
        let big_m = krylov_closure(&hc, &hm, &psi0).unwrap().dim();
        let m = ceil_log2(big_m);
        checks.push((
            big_m == i.accounting.active_dim,
            format!("k={k}: recomputed M={big_m}, stored {}", i.accounting.active_dim),
        ));
        checks.push((big_m as u64 <= choose(12, k as u64), format!("k={k}: M={big_m}")));
        ms.push((k, m));
    }
    let secs = clock.elapsed().as_secs_f64();
    checks.push((ms.windows(2).all(|w| w[0].1 <= w[1].1), format!("m by k: {ms:?}")));
    checks.push((ms.iter().any(|&(k, m)| k == 1 && m == 4), "m(k=1) = 4".into()));
    checks.push((ms.iter().any(|&(k, m)| k == 6 && m <= 10), "m(k=6) ≤ 10".into()));
    checks.push((secs < 600.0, format!("runtime {secs:.1}s")));
    gate.record(3, "constraint sweep", &checks);

    // 4. Every instance and restart carries a certificate within tolerance.
    let mut checks = vec![audit_check(4)];
    let expected = cfg.families.len() * cfg.sizes.len() + cfg.k_grid.len();
    checks.push((insts.len() == expected, format!("{} of {expected} instances", insts.len())));
    for i in insts {
        checks.push((i.certificates.len() == cfg.restarts, format!("{}: {} certificates", i.id, i.certificates.len())));
        for c in &i.certificates {
            let ok = (c.fidelity_offset).abs() <= 1e-10
                && c.delta_e <= 1e-10 * (1.0 + c.energy_full.abs())
                && c.tvd <= 1e-10;
            checks
                .push((ok, format!("{}: F-1={:.1e} dE={:.1e} TVD={:.1e}", i.id, c.fidelity_offset, c.delta_e, c.tvd)));
        }
    }
    gate.record(4, "state equivalence", &checks);

    // 5. Intertwining.
    let mut checks = vec![audit_check(5)];
    for i in insts.iter().filter(|i| i.n <= 12) {
        for c in &i.certificates {
            checks.push((
                c.intertwine_max_column.is_some_and(|r| r <= 1e-10),
                format!("{}: {:?}", i.id, c.intertwine_max_column),
            ));
        }
    }
    gate.record(5, "intertwining", &checks);

    // 6. Isometry identities.
    let mut checks = vec![audit_check(6)];
    for i in insts {
        let [g, p] = i.certificates[0].isometry_residuals;
        checks.push((g <= 1e-12 && p <= 1e-10, format!("{}: {g:.1e} {p:.1e}", i.id)));
    }
    gate.record(6, "isometry identities", &checks);

    // 7. Projector commutator.
    let mut checks = vec![audit_check(7)];
    for i in insts.iter().filter(|i| i.n <= 10) {
        let ok = i.projector_commutator.is_some_and(|r| r <= 1e-9) && i.projector_draws >= 20;
        checks.push((ok, format!("{}: {:?} over {}", i.id, i.projector_commutator, i.projector_draws)));
    }
    gate.record(7, "projector commutes with the circuit", &checks);

    // 8. Irreducibility, recomputed from the recorded seeds by both methods.
    let mut checks = vec![audit_check(8)];
    let irr = &run.summary.controls.irreducibility;
    checks.push((irr.len() >= 10, format!("{} instances", irr.len())));
    for c in irr {
        let q = QuboInstance::random(c.n, c.seed).unwrap();
        let hc = cost_hamiltonian(&q);
        let hm = mixer_hamiltonian(c.n, ConstraintSpec::None).unwrap();
        let dim = commutant_nullspace(&hc, &hm).unwrap().dimension();
        let big_m = krylov_closure(&hc, &hm, &StateVector::uniform(c.n).unwrap()).unwrap().dim();
        checks
            .push((c.n <= 5 && dim == 1 && big_m == 1 << c.n, format!("seed {}: commutant {dim}, M={big_m}", c.seed)));
    }
    gate.record(8, "irreducibility detection", &checks);

    // 9. Brute force from the stored edge list.
    let mut checks = vec![audit_check(9)];
    for i in insts.iter().filter(|i| i.n <= 12) {
        let min = brute_force_min(i);
        checks.push(((min - i.oracle.brute_force_min).abs() <= 1e-10, format!("{}: min {min}", i.id)));
        checks
            .push((i.oracle.diagonal_residual <= 1e-10, format!("{}: diag {:.1e}", i.id, i.oracle.diagonal_residual)));
        checks.push((i.oracle.best_energy >= min - 1e-9, format!("{}: best {}", i.id, i.oracle.best_energy)));
    }
    gate.record(9, "brute-force oracle", &checks);

    // 10. Orthogonal exclusion.
    let mut checks = vec![audit_check(10)];
    for i in insts.iter().filter(|i| i.k.is_some()) {
        checks.push((i.sector_leakage.is_some_and(|l| l <= 1e-12), format!("{}: {:?}", i.id, i.sector_leakage)));
    }
    gate.record(10, "orthogonal exclusion", &checks);

    // 11. A corrupted run must fail the equivalence criterion.
    let mut checks = vec![audit_check(11)];
    let bad_out = tempfile::tempdir().unwrap();
    let bad_cfg = ExperimentConfig {
        families: vec![GraphFamily::Complete],
        sizes: vec![6],
        k_grid: vec![2],
        constraint_size: 6,
        corrupt_isometry: Some(1e-3),
        out: bad_out.path().to_path_buf(),
        ..ExperimentConfig::default()
    };
    let bad = run_experiment(&bad_cfg).expect("corrupted run completes");
    let bad_report = audit(&bad.manifest_path).unwrap();
    let c4 = bad_report.criteria.iter().find(|c| c.id == 4).unwrap();
    checks.push((c4.status == Status::Fail, format!("corrupted run criterion 4: {:?}", c4.status)));
    checks.push((!bad_report.passed(), "corrupted run audit fails".into()));
    let worst = bad
        .summary
        .instances
        .iter()
        .flat_map(|i| &i.certificates)
        .map(|c| c.worst_state_metric())
        .fold(f64::INFINITY, f64::min);
    checks.push((worst >= 1e-6, format!("smallest worst-metric {worst:.1e}")));
    gate.record(11, "negative control", &checks);

    // 12. Memory arithmetic.
    let mut checks = vec![audit_check(12)];
    let (full, big_m, m) = (1u64 << 12, 13u64, 4u32);
    let g = gcd(full, big_m);
    match find(GraphFamily::Complete, 12, None) {
        Some(i) => {
            checks.push((
                i.memory.dim_ratio == full >> m && full >> m == 256,
                format!("dim ratio {}", i.memory.dim_ratio),
            ));
            checks.push((
                i.memory.effective_ratio == (full / g, big_m / g),
                format!("effective {:?}", i.memory.effective_ratio),
            ));
            checks.push((i.memory.effective_ratio == (4096, 13), "4096/13".into()));
        }
        None => checks.push((false, "K12 missing".into())),
    }
    gate.record(12, "memory accounting", &checks);

    println!("{} of {} criteria passed", gate.lines.len() - gate.failures, gate.lines.len());
    if gate.failures > 0 {
        std::process::exit(1);
    }
}
