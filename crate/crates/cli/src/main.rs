use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qaoa_reduce::equivalence::{certify_pair, CertifyOptions};
use qaoa_reduce::problem::{GraphFamily, XyTopology};
use qaoa_reduce::qaoa::{FullEvolver, QaoaParams, ReducedEvolver};
use qaoa_reduce::subspace::{build_isometry, induce_hamiltonians, krylov_closure_with};
use qaoa_reduce::symmetry::classify;
use qaoa_reduce_cli::config::{ExperimentConfig, OUT_ENV};
use qaoa_reduce_cli::pipeline::closure_options;
use qaoa_reduce_cli::{audit, load_instance, run_experiment, Result};

#[derive(Parser)]
#[command(name = "qaoa-reduce", version, about = "Invariant-subspace qubit reduction for QAOA")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment grid and write reports.
    Run(RunArgs),
    /// Re-check a finished run against the acceptance criteria.
    Audit {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Print n, M, m and the reducibility verdict of one instance.
    Reduce {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "ring")]
        topology: Topology,
        /// Also write the subspace basis as JSON.
        #[arg(long)]
        artifact: Option<PathBuf>,
    },
    /// Certify full/reduced equivalence for one instance and parameter set.
    Certify {
        #[arg(long)]
        instance: PathBuf,
        /// JSON file with `gammas` and `betas`.
        #[arg(long)]
        params: PathBuf,
        #[arg(long, value_enum, default_value = "ring")]
        topology: Topology,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Topology {
    Ring,
    Complete,
}

impl From<Topology> for XyTopology {
    fn from(t: Topology) -> Self {
        match t {
            Topology::Ring => XyTopology::Ring,
            Topology::Complete => XyTopology::Complete,
        }
    }
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long, value_delimiter = ',', default_value = "cycle,complete,erdos_renyi")]
    families: Vec<GraphFamily>,
    #[arg(long, value_delimiter = ',', default_value = "6,8,10,12")]
    sizes: Vec<usize>,
    #[arg(long = "k-grid", value_delimiter = ',', default_value = "1,2,3,4,6")]
    k_grid: Vec<usize>,
    #[arg(long, default_value_t = 2)]
    layers: usize,
    #[arg(long, default_value_t = 5)]
    restarts: usize,
    #[arg(long, default_value_t = qaoa_reduce_cli::config::DEFAULT_SEED)]
    seed: u64,
    /// Output root; each run gets its own subdirectory.
    #[arg(long, env = OUT_ENV, default_value = qaoa_reduce_cli::config::DEFAULT_OUT)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Largest n for checks on dense 2^n x 2^n unitaries.
    #[arg(long = "dense-limit", default_value_t = 10)]
    dense_limit: usize,
    /// Perturb one isometry column by this amount (negative control).
    #[arg(long = "corrupt-isometry", hide = true)]
    corrupt_isometry: Option<f64>,
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let cfg = ExperimentConfig {
        families: args.families,
        sizes: args.sizes,
        k_grid: args.k_grid,
        layers: args.layers,
        restarts: args.restarts,
        seed: args.seed,
        out: args.out,
        workers: args.workers,
        dense_limit: args.dense_limit,
        corrupt_isometry: args.corrupt_isometry,
        ..ExperimentConfig::default()
    };
    let out = run_experiment(&cfg)?;
    for i in &out.summary.instances {
        println!(
            "{:<22} n={:<2} M={:<5} m={:<2} best={:.6} worst|F-1|={:.1e}",
            i.id,
            i.n,
            i.accounting.active_dim,
            i.accounting.m,
            i.oracle.best_energy,
            i.certificates.iter().map(|c| c.fidelity_offset.abs()).fold(0.0, f64::max)
        );
    }
    for f in &out.summary.failures {
        eprintln!("failed: {}: {}", f.instance, f.error);
    }
    println!("manifest: {}", out.manifest_path.display());
    Ok(if out.summary.failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Audit { manifest } => audit::audit(&manifest).map(|report| {
            for line in report.lines() {
                println!("{line}");
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }),
        Command::Reduce { instance, topology, artifact } => reduce(&instance, topology.into(), artifact),
        Command::Certify { instance, params, topology } => certify(&instance, &params, topology.into()),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}

fn reduce(path: &std::path::Path, topology: XyTopology, artifact: Option<PathBuf>) -> Result<ExitCode> {
    let problem = load_instance(path)?;
    let (hc, hm, psi0) = (problem.cost_hamiltonian(), problem.mixer_hamiltonian(topology)?, problem.initial_state()?);
    let opts = closure_options(problem.graph.as_ref().map(|g| g.family()), problem.constraint);
    let sub = krylov_closure_with(&hc, &hm, &psi0, &opts)?;
    let verdict = classify(&hc, &hm, problem.constraint)?;
    let m = qaoa_reduce::subspace::qubit_count(sub.dim())?;
    println!("n = {}", problem.n());
    println!("M = {}", sub.dim());
    println!("m = {m}");
    println!(
        "verdict = {} ({})",
        if verdict.reducible { "reducible" } else { "irreducible" },
        verdict.evidence.as_str()
    );
    if let Some(path) = artifact {
        std::fs::write(path, serde_json::to_vec(&sub.to_artifact())?)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn certify(instance: &std::path::Path, params: &std::path::Path, topology: XyTopology) -> Result<ExitCode> {
    let problem = load_instance(instance)?;
    let params: QaoaParams = serde_json::from_slice(&std::fs::read(params)?)?;
    params.validate()?;
    let (hc, hm, psi0) = (problem.cost_hamiltonian(), problem.mixer_hamiltonian(topology)?, problem.initial_state()?);
    let opts = closure_options(problem.graph.as_ref().map(|g| g.family()), problem.constraint);
    let sub = krylov_closure_with(&hc, &hm, &psi0, &opts)?;
    let iso = build_isometry(&sub)?;
    let red = induce_hamiltonians(&hc, &hm, &psi0, &iso)?;
    let full = FullEvolver::new(&hc, &hm, &psi0)?;
    let reduced = ReducedEvolver::new(&red, &iso)?;
    let report = certify_pair(&full, &reduced, &params, &CertifyOptions::default())?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    let ok = report.passes();
    println!("{}", if ok { "PASS" } else { "FAIL" });
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
