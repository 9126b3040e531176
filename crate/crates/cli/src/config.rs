use std::path::PathBuf;

use qaoa_reduce::problem::{ConstraintSpec, GraphFamily, XyTopology};
use qaoa_reduce::rng::derive_seed;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "QAOA_REDUCE_OUT";
pub const DEFAULT_OUT: &str = "qaoa-reduce-runs";

/// First master seed whose Erdős–Rényi instances at n = 6, 8, 10 have no
/// graph automorphisms; see the README.
pub const DEFAULT_SEED: u64 = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Fidelity offset, relative energy gap, TVD and intertwining residual.
    pub certification: f64,
    /// Probability allowed outside the weight sector.
    pub leakage: f64,
    /// `‖[Π_eff, U]‖_F` on dense unitaries.
    pub projector_commutator: f64,
    /// Diagonal of `H_C` against brute-force enumeration.
    pub oracle: f64,
    /// Slack when comparing optimised energies with the brute-force minimum.
    pub lower_bound: f64,
    pub gram: f64,
    pub projector: f64,
    /// A corrupted reduction must push some metric at least this high.
    pub negative_control: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            certification: 1e-10,
            leakage: 1e-12,
            projector_commutator: 1e-9,
            oracle: 1e-10,
            lower_bound: 1e-9,
            gram: 1e-12,
            projector: 1e-10,
            negative_control: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Unconstrained families, each run at every size.
    pub families: Vec<GraphFamily>,
    pub sizes: Vec<usize>,
    /// Hamming weights for the constraint sweep.
    pub k_grid: Vec<usize>,
    pub constraint_family: GraphFamily,
    pub constraint_size: usize,
    pub layers: usize,
    pub restarts: usize,
    pub seed: u64,
    pub workers: usize,
    /// Largest `n` for checks on dense `2ⁿ × 2ⁿ` unitaries.
    pub dense_limit: usize,
    /// Random parameter draws per instance for the dense projector check.
    pub commutator_draws: usize,
    /// Subspace artifacts are written when `M·2ⁿ` is at most this.
    pub artifact_limit: usize,
    pub topology: XyTopology,
    pub tolerances: Tolerances,
    /// Perturb one isometry column by this much (negative-control runs).
    pub corrupt_isometry: Option<f64>,
    #[serde(skip)]
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            families: vec![GraphFamily::Cycle, GraphFamily::Complete, GraphFamily::ErdosRenyi],
            sizes: vec![6, 8, 10, 12],
            k_grid: vec![1, 2, 3, 4, 6],
            constraint_family: GraphFamily::ErdosRenyi,
            constraint_size: 12,
            layers: 2,
            restarts: 5,
            seed: DEFAULT_SEED,
            workers: 1,
            dense_limit: 10,
            commutator_draws: 20,
            artifact_limit: 1 << 17,
            topology: XyTopology::Ring,
            tolerances: Tolerances::default(),
            corrupt_isometry: None,
            out: default_out_root(),
        }
    }
}

pub fn default_out_root() -> PathBuf {
    std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

/// One cell of the experiment grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub family: GraphFamily,
    pub n: usize,
    pub k: Option<usize>,
}

impl InstanceSpec {
    pub fn id(&self) -> String {
        match self.k {
            Some(k) => format!("{}_n{}_k{k}", self.family, self.n),
            None => format!("{}_n{}", self.family, self.n),
        }
    }

    pub fn constraint(&self) -> ConstraintSpec {
        self.k.map_or(ConstraintSpec::None, |k| ConstraintSpec::HammingWeight { k })
    }
}

fn family_code(f: GraphFamily) -> u64 {
    match f {
        GraphFamily::Cycle => 0,
        GraphFamily::Complete => 1,
        GraphFamily::ErdosRenyi => 2,
        GraphFamily::Custom => 3,
    }
}

impl ExperimentConfig {
    pub fn grid(&self) -> Vec<InstanceSpec> {
        let mut grid: Vec<InstanceSpec> = self
            .families
            .iter()
            .flat_map(|&family| self.sizes.iter().map(move |&n| InstanceSpec { family, n, k: None }))
            .collect();
        grid.extend(self.k_grid.iter().map(|&k| InstanceSpec {
            family: self.constraint_family,
            n: self.constraint_size,
            k: Some(k),
        }));
        grid
    }

    /// The graph depends only on `(family, n)`, so constrained and
    /// unconstrained runs at the same size share it.
    pub fn graph_seed(&self, family: GraphFamily, n: usize) -> u64 {
        derive_seed(self.seed, family_code(family) * 1000 + n as u64)
    }

    pub fn trial_seed(&self, spec: &InstanceSpec) -> u64 {
        let k = spec.k.map_or(0, |k| k as u64 + 1);
        derive_seed(self.seed, 1_000_000 + family_code(spec.family) * 10_000 + spec.n as u64 * 100 + k)
    }

    pub fn control_seed(&self, stream: u64) -> u64 {
        derive_seed(self.seed, 2_000_000 + stream)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.layers == 0 || self.restarts == 0 {
            return Err("layers and restarts must be positive".into());
        }
        if self.workers == 0 {
            return Err("need at least one worker".into());
        }
        if let Some(&k) = self.k_grid.iter().find(|&&k| k > self.constraint_size) {
            return Err(format!("k = {k} exceeds the constraint size {}", self.constraint_size));
        }
        if self.sizes.iter().chain([&self.constraint_size]).any(|n| !(2..=20).contains(n)) {
            return Err("sizes must lie in 2..=20".into());
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form (the output directory excluded).
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serialises");
        hex(&Sha256::digest(json))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
