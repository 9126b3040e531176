//! Experiment driver for `qaoa-reduce`: builds the instance grid, reduces,
//! optimises and certifies every instance, and writes versioned reports, plot
//! data and a checksummed manifest that [`audit::audit`] can re-check.

pub mod audit;
pub mod config;
pub mod manifest;
pub mod pipeline;
pub mod report;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use config::{ExperimentConfig, InstanceSpec};
use manifest::{
    sha256_file, unix_now, ManifestInstance, RunManifest, MANIFEST_SCHEMA_VERSION, RESULTS_FILE, SUMMARY_FILE,
};
use pipeline::{irreducibility_checks, negative_control, run_instance, InstanceReport};
use report::{plots, rows_for, write_csv, Controls, Failure, Summary, SUMMARY_SCHEMA_VERSION};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] qaoa_reduce::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Number of generic QUBOs in the irreducibility control.
pub const IRREDUCIBILITY_SAMPLES: usize = 10;

pub struct RunOutput {
    pub manifest_path: PathBuf,
    pub manifest: RunManifest,
    pub summary: Summary,
}

/// Runs the whole grid into `<cfg.out>/run-<hash prefix>`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate().map_err(CliError::Config)?;
    let started = unix_now();
    let hash = cfg.hash();
    let dir = cfg.out.join(format!("run-{}", &hash[..12]));
    std::fs::create_dir_all(&dir)?;

    let grid = cfg.grid();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let results: Vec<(InstanceSpec, Result<InstanceReport>)> =
        pool.install(|| grid.par_iter().map(|spec| (*spec, run_instance(cfg, spec, &dir))).collect());

    let mut instances = Vec::new();
    let mut failures = Vec::new();
    let mut entries = Vec::new();
    for (spec, res) in results {
        let mut entry = ManifestInstance {
            id: spec.id(),
            graph_seed: cfg.graph_seed(spec.family, spec.n),
            trial_seed: cfg.trial_seed(&spec),
            status: "ok".into(),
            error: None,
            artifact: None,
        };
        match res {
            Ok(r) => {
                entry.artifact = r.artifact.clone();
                instances.push(r);
            }
            Err(e) => {
                entry.status = "failed".into();
                entry.error = Some(e.to_string());
                failures.push(Failure { instance: spec.id(), error: e.to_string() });
            }
        }
        entries.push(entry);
    }

    let irreducibility = irreducibility_checks(cfg, IRREDUCIBILITY_SAMPLES)?;
    // The negative control reuses the optimised parameters of the first
    // complete-graph instance (or of the first instance).
    let target = instances
        .iter()
        .find(|i| i.family == qaoa_reduce::problem::GraphFamily::Complete && i.k.is_none())
        .or(instances.first());
    let negative = match target {
        Some(t) => {
            let spec = InstanceSpec { family: t.family, n: t.n, k: t.k };
            let params: Vec<_> = t.optimization.restarts.iter().map(|r| r.params.clone()).collect();
            Some(negative_control(cfg, &spec, &params)?)
        }
        None => None,
    };

    let summary = Summary {
        schema_version: SUMMARY_SCHEMA_VERSION,
        config_hash: hash.clone(),
        instances,
        failures,
        controls: Controls { irreducibility, negative_control: negative },
    };

    let rows: Vec<_> = summary.instances.iter().flat_map(rows_for).collect();
    std::fs::write(dir.join(RESULTS_FILE), write_csv(&rows)?)?;
    std::fs::write(dir.join(SUMMARY_FILE), serde_json::to_vec_pretty(&summary)?)?;
    let mut written = vec![RESULTS_FILE.to_string(), SUMMARY_FILE.to_string()];
    std::fs::create_dir_all(dir.join("plots"))?;
    for (name, data) in plots(&summary) {
        let rel = format!("plots/{name}.json");
        std::fs::write(dir.join(&rel), serde_json::to_vec_pretty(&data)?)?;
        written.push(rel);
    }
    written.extend(entries.iter().filter_map(|e| e.artifact.clone()));

    let mut files = BTreeMap::new();
    for rel in written {
        files.insert(rel.clone(), sha256_file(&dir.join(&rel))?);
    }
    let manifest = RunManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        config: cfg.clone(),
        config_hash: hash,
        library_version: qaoa_reduce::VERSION.into(),
        cli_version: env!("CARGO_PKG_VERSION").into(),
        started_unix: started,
        finished_unix: unix_now(),
        instances: entries,
        files,
    };
    let manifest_path = manifest.save(&dir)?;
    Ok(RunOutput { manifest_path, manifest, summary })
}

/// Reads an instance file (see [`qaoa_reduce::problem::InstanceFile`]).
pub fn load_instance(path: &Path) -> Result<qaoa_reduce::problem::Problem> {
    let text = std::fs::read_to_string(path)?;
    Ok(qaoa_reduce::problem::InstanceFile::from_json(&text)?.into_problem()?)
}
