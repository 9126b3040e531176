use std::path::Path;

use qaoa_reduce::problem::GraphFamily;
use qaoa_reduce_cli::audit::{audit, Status};
use qaoa_reduce_cli::config::ExperimentConfig;
use qaoa_reduce_cli::manifest::RESULTS_FILE;
use qaoa_reduce_cli::report::{read_csv, CSV_COLUMNS};
use qaoa_reduce_cli::{run_experiment, CliError};

fn small(out: &Path) -> ExperimentConfig {
    ExperimentConfig {
        families: vec![GraphFamily::Cycle, GraphFamily::Complete],
        sizes: vec![4, 6],
        k_grid: vec![1, 2],
        constraint_size: 6,
        restarts: 2,
        out: out.to_path_buf(),
        ..ExperimentConfig::default()
    }
}

#[test]
fn fresh_run_audits_clean() {
    let dir = tempfile::tempdir().unwrap();
    let run = run_experiment(&small(dir.path())).unwrap();
    let report = audit(&run.manifest_path).unwrap();
    assert!(report.passed(), "{:#?}", report.lines());
    // This grid has neither random graphs nor K12; the sweep runs at n = 6.
    let skipped: Vec<u8> = report.criteria.iter().filter(|c| c.status == Status::Skip).map(|c| c.id).collect();
    assert_eq!(skipped, vec![2, 12]);

    let rows = read_csv(&std::fs::read(run.manifest_path.with_file_name(RESULTS_FILE)).unwrap()).unwrap();
    assert_eq!(rows.len(), 2 * 2 * run.summary.instances.len());
    for r in &rows {
        assert!(r.active_dim <= 1 << r.n);
        assert_eq!(r.m, (usize::BITS - (r.active_dim - 1).leading_zeros()) as usize);
    }
    for pair in rows.chunks(2) {
        assert_eq!((pair[0].side.as_str(), pair[1].side.as_str()), ("full", "reduced"));
        assert_eq!((&pair[0].gammas, &pair[0].betas), (&pair[1].gammas, &pair[1].betas));
    }
}

#[test]
fn tampered_csv_is_detected() {
    let dir = tempfile::tempdir().unwrap();
    let run = run_experiment(&small(dir.path())).unwrap();
    let csv_path = run.manifest_path.with_file_name(RESULTS_FILE);
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let col = CSV_COLUMNS.iter().position(|c| *c == "tvd").unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut cells: Vec<String> = lines[2].split(',').map(String::from).collect();
    cells[col] = "0.5".into();
    lines[2] = cells.join(",");
    std::fs::write(&csv_path, lines.join("\n") + "\n").unwrap();

    let report = audit(&run.manifest_path).unwrap();
    assert!(!report.passed());
    assert!(report.integrity.iter().any(|(f, _)| f == RESULTS_FILE));
    let c4 = report.criteria.iter().find(|c| c.id == 4).unwrap();
    assert_eq!(c4.status, Status::Fail);
    assert!(report.lines().iter().any(|l| l.starts_with("FAIL [ 4] state equivalence")));
}

#[test]
fn missing_artifact_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let run = run_experiment(&small(dir.path())).unwrap();
    std::fs::remove_file(run.manifest_path.with_file_name(RESULTS_FILE)).unwrap();
    assert!(matches!(audit(&run.manifest_path), Err(CliError::Io(_))));
}

#[test]
fn corrupted_isometry_fails_equivalence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig { corrupt_isometry: Some(1e-3), ..small(dir.path()) };
    let run = run_experiment(&cfg).unwrap();
    let report = audit(&run.manifest_path).unwrap();
    assert!(report.integrity.is_empty());
    assert_eq!(report.criteria.iter().find(|c| c.id == 4).unwrap().status, Status::Fail);
    assert!(!report.passed());
}

#[test]
fn identical_configs_reproduce_numbers() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = run_experiment(&small(a.path())).unwrap();
    let rb = run_experiment(&ExperimentConfig { workers: 3, ..small(b.path()) }).unwrap();
    let read = |p: &Path| read_csv(&std::fs::read(p.with_file_name(RESULTS_FILE)).unwrap()).unwrap();
    let (xa, xb) = (read(&ra.manifest_path), read(&rb.manifest_path));
    assert_eq!(xa.len(), xb.len());
    for (x, y) in xa.iter().zip(&xb) {
        assert_eq!(
            (&x.instance, x.restart, &x.side, &x.gammas, &x.betas),
            (&y.instance, y.restart, &y.side, &y.gammas, &y.betas)
        );
        assert_eq!((x.active_dim, x.m), (y.active_dim, y.m));
        for (u, v) in
            [(x.energy, y.energy), (x.fidelity_offset, y.fidelity_offset), (x.tvd, y.tvd), (x.delta_e, y.delta_e)]
        {
            assert!((u - v).abs() <= 1e-10, "{u} vs {v}");
        }
    }
}
