//! Re-checks the acceptance criteria against the files of a finished run.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use qaoa_reduce::problem::{binomial, GraphFamily};
use qaoa_reduce::subspace::qubit_count;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::manifest::{sha256_file, RunManifest, RESULTS_FILE, SUMMARY_FILE};
use crate::report::{read_csv, ResultRow, Summary};
use crate::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
    /// The run did not cover this criterion.
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: String,
    pub status: Status,
    pub detail: String,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        };
        write!(f, "{status} [{:>2}] {}: {}", self.id, self.name, self.detail)
    }
}

fn outcome(id: u8, name: &str, checks: Vec<(bool, String)>) -> CriterionOutcome {
    if checks.is_empty() {
        return CriterionOutcome {
            id,
            name: name.into(),
            status: Status::Skip,
            detail: "not covered by this run".into(),
        };
    }
    let failed: Vec<&String> = checks.iter().filter(|(ok, _)| !ok).map(|(_, d)| d).collect();
    let (status, detail) = if failed.is_empty() {
        (Status::Pass, format!("{} checks", checks.len()))
    } else {
        let shown: Vec<&str> = failed.iter().take(3).map(|s| s.as_str()).collect();
        (Status::Fail, format!("{} of {} checks failed: {}", failed.len(), checks.len(), shown.join("; ")))
    };
    CriterionOutcome { id, name: name.into(), status, detail }
}

/// Evaluates criteria 1–12 from a summary and its CSV rows.
pub fn evaluate(cfg: &ExperimentConfig, summary: &Summary, rows: &[ResultRow]) -> Vec<CriterionOutcome> {
    let tol = &cfg.tolerances;
    let insts = &summary.instances;
    let mut out = Vec::with_capacity(12);

    let complete: Vec<_> = insts.iter().filter(|i| i.family == GraphFamily::Complete && i.k.is_none()).collect();
    out.push(outcome(
        1,
        "complete-graph reduction",
        complete
            .iter()
            .map(|i| {
                let want_m = qubit_count(i.n + 1).unwrap_or(usize::MAX);
                let (big_m, m) = (i.accounting.active_dim, i.accounting.m);
                (big_m == i.n + 1 && m == want_m, format!("{}: M={big_m} m={m} (want {}, {want_m})", i.id, i.n + 1))
            })
            .collect(),
    ));

    out.push(outcome(
        2,
        "random-graph reduction",
        insts
            .iter()
            .filter(|i| i.family == GraphFamily::ErdosRenyi && i.k.is_none())
            .map(|i| {
                let (big_m, m) = (i.accounting.active_dim, i.accounting.m);
                let ok = big_m >= 1 << (i.n - 1) && (m == i.n || m + 1 == i.n);
                (ok, format!("{}: M={big_m} m={m}", i.id))
            })
            .collect(),
    ));

    let mut sweep: Vec<_> = insts
        .iter()
        .filter(|i| i.k.is_some() && i.family == cfg.constraint_family && i.n == cfg.constraint_size)
        .collect();
    sweep.sort_by_key(|i| i.k);
    let mut checks: Vec<(bool, String)> = sweep
        .iter()
        .map(|i| {
            let k = i.k.expect("constrained");
            let bound = binomial(i.n, k) as usize;
            (
                i.accounting.active_dim <= bound,
                format!("{}: M={} ≤ C({},{k})={bound}", i.id, i.accounting.active_dim, i.n),
            )
        })
        .collect();
    for w in sweep.windows(2) {
        checks.push((w[0].accounting.m <= w[1].accounting.m, format!("m({}) ≤ m({})", w[0].id, w[1].id)));
    }
    for i in &sweep {
        match (i.n, i.k) {
            (12, Some(1)) => checks.push((i.accounting.m == 4, format!("{}: m={} (want 4)", i.id, i.accounting.m))),
            (12, Some(6)) => checks.push((i.accounting.m <= 10, format!("{}: m={} (want ≤ 10)", i.id, i.accounting.m))),
            _ => {}
        }
    }
    out.push(outcome(3, "constraint sweep", checks));

    out.push(outcome(
        4,
        "state equivalence",
        rows.iter()
            .filter(|r| r.side == "reduced")
            .map(|r| {
                let ok = r.fidelity_offset.abs() <= tol.certification
                    && r.delta_e <= tol.certification * (1.0 + r.energy.abs())
                    && r.tvd <= tol.certification;
                (
                    ok,
                    format!(
                        "{} restart {}: |F-1|={:.1e} |dE|={:.1e} TVD={:.1e}",
                        r.instance,
                        r.restart,
                        r.fidelity_offset.abs(),
                        r.delta_e,
                        r.tvd
                    ),
                )
            })
            .collect(),
    ));

    out.push(outcome(
        5,
        "intertwining",
        insts
            .iter()
            .filter(|i| i.n <= 12)
            .flat_map(|i| {
                i.certificates.iter().map(move |c| match c.intertwine_max_column {
                    Some(r) => (r <= tol.certification, format!("{}: {r:.1e}", i.id)),
                    None => (false, format!("{}: not computed", i.id)),
                })
            })
            .collect(),
    ));

    out.push(outcome(
        6,
        "isometry identities",
        insts
            .iter()
            .flat_map(|i| {
                i.certificates.iter().take(1).map(move |c| {
                    let [g, p] = c.isometry_residuals;
                    (g <= tol.gram && p <= tol.projector, format!("{}: gram {g:.1e}, projector {p:.1e}", i.id))
                })
            })
            .collect(),
    ));

    out.push(outcome(
        7,
        "projector commutes with the circuit",
        insts
            .iter()
            .filter(|i| i.n <= 10)
            .map(|i| match i.projector_commutator {
                Some(r) => (
                    r <= tol.projector_commutator && i.projector_draws >= 20,
                    format!("{}: {r:.1e} over {} draws", i.id, i.projector_draws),
                ),
                None => (false, format!("{}: not computed", i.id)),
            })
            .collect(),
    ));

    let irr = &summary.controls.irreducibility;
    let mut checks: Vec<(bool, String)> = irr
        .iter()
        .map(|c| {
            (
                c.commutant_dim == 1 && c.closure_dim == 1 << c.n,
                format!("seed {}: commutant {} M={} (n={})", c.seed, c.commutant_dim, c.closure_dim, c.n),
            )
        })
        .collect();
    if !irr.is_empty() {
        checks.push((irr.len() >= 10 && irr.iter().all(|c| c.n <= 5), format!("{} instances with n ≤ 5", irr.len())));
    }
    out.push(outcome(8, "irreducibility detection", checks));

    out.push(outcome(
        9,
        "brute-force oracle",
        insts
            .iter()
            .filter(|i| i.n <= 12)
            .map(|i| {
                let o = &i.oracle;
                (
                    o.diagonal_residual <= tol.oracle && o.best_energy >= o.brute_force_min - tol.lower_bound,
                    format!(
                        "{}: diag {:.1e}, best {} vs min {}",
                        i.id, o.diagonal_residual, o.best_energy, o.brute_force_min
                    ),
                )
            })
            .collect(),
    ));

    out.push(outcome(
        10,
        "orthogonal exclusion",
        insts
            .iter()
            .filter(|i| i.k.is_some())
            .map(|i| match i.sector_leakage {
                Some(l) => {
                    (l <= tol.leakage && i.exclusion.iter().all(|e| e.passed), format!("{}: leakage {l:.1e}", i.id))
                }
                None => (false, format!("{}: not computed", i.id)),
            })
            .collect(),
    ));

    out.push(outcome(
        11,
        "negative control",
        summary
            .controls
            .negative_control
            .iter()
            .flat_map(|nc| {
                nc.reports.iter().map(move |r| {
                    let worst = r.worst_state_metric();
                    (
                        worst >= tol.negative_control && !r.passes(),
                        format!("{} eps {:.0e}: worst metric {worst:.1e}", nc.instance, nc.eps),
                    )
                })
            })
            .collect(),
    ));

    out.push(outcome(
        12,
        "memory accounting",
        insts
            .iter()
            .filter(|i| i.family == GraphFamily::Complete && i.k.is_none() && i.n == 12)
            .map(|i| {
                let mem = &i.memory;
                (
                    mem.dim_ratio == 256 && mem.effective_ratio == (4096, 13),
                    format!(
                        "{}: 2^n/2^m = {}, 2^n/M = {}/{}",
                        i.id, mem.dim_ratio, mem.effective_ratio.0, mem.effective_ratio.1
                    ),
                )
            })
            .collect(),
    ));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    /// Files whose checksum no longer matches, with the reason.
    pub integrity: Vec<(String, String)>,
    pub failures: Vec<String>,
    pub criteria: Vec<CriterionOutcome>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.integrity.is_empty() && self.failures.is_empty() && self.criteria.iter().all(|c| c.status != Status::Fail)
    }

    pub fn lines(&self) -> Vec<String> {
        let mut lines: Vec<String> =
            self.integrity.iter().map(|(file, why)| format!("FAIL [--] artifact integrity: {file}: {why}")).collect();
        lines.extend(self.failures.iter().map(|f| format!("FAIL [--] instance failed: {f}")));
        lines.extend(self.criteria.iter().map(ToString::to_string));
        lines
    }
}

pub fn audit(manifest_path: &Path) -> Result<AuditReport> {
    let (manifest, dir) = RunManifest::load(manifest_path)?;
    let mut integrity = Vec::new();
    let mut failures: Vec<String> = manifest
        .instances
        .iter()
        .filter(|i| i.status != "ok")
        .map(|i| format!("{}: {}", i.id, i.error.as_deref().unwrap_or("unknown error")))
        .collect();
    for (file, expected) in &manifest.files {
        let path = dir.join(file);
        if !path.exists() {
            return Err(CliError::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("artifact {file} listed in the manifest is missing"),
            )));
        }
        let actual = sha256_file(&path)?;
        if &actual != expected {
            integrity.push((file.clone(), "checksum mismatch".into()));
        }
    }
    for required in [RESULTS_FILE, SUMMARY_FILE] {
        if !manifest.files.contains_key(required) {
            integrity.push((required.into(), "not listed in the manifest".into()));
        }
    }
    let summary: Summary = serde_json::from_slice(&std::fs::read(dir.join(SUMMARY_FILE))?)?;
    let rows = read_csv(&std::fs::read(dir.join(RESULTS_FILE))?)?;
    if summary.config_hash != manifest.config_hash || manifest.config.hash() != manifest.config_hash {
        integrity.push((SUMMARY_FILE.into(), "configuration hash mismatch".into()));
    }
    failures.extend(summary.failures.iter().map(|f| format!("{}: {}", f.instance, f.error)));
    failures.sort();
    failures.dedup();

    // Rows must agree with the summary they were derived from.
    let by_id: BTreeMap<&str, usize> =
        summary.instances.iter().map(|i| (i.id.as_str(), i.accounting.active_dim)).collect();
    for r in &rows {
        if by_id.get(r.instance.as_str()) != Some(&r.active_dim) || qubit_count(r.active_dim).ok() != Some(r.m) {
            integrity.push((RESULTS_FILE.into(), format!("row for {} disagrees with the summary", r.instance)));
            break;
        }
    }
    Ok(AuditReport { integrity, failures, criteria: evaluate(&manifest.config, &summary, &rows) })
}
