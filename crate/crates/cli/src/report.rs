//! Report schemas. Both are versioned; the CSV column order is fixed by the
//! field order of [`ResultRow`] and listed in [`CSV_COLUMNS`].

use std::collections::BTreeMap;

use qaoa_reduce::problem::GraphFamily;
use serde::{Deserialize, Serialize};

use crate::pipeline::{InstanceReport, IrreducibilityCheck, NegativeControl};

pub const CSV_SCHEMA_VERSION: u32 = 1;
pub const SUMMARY_SCHEMA_VERSION: u32 = 1;
pub const BYTES_PER_AMPLITUDE: u64 = 16;

pub const CSV_COLUMNS: [&str; 31] = [
    "schema_version",
    "instance",
    "family",
    "n",
    "k",
    "restart",
    "side",
    "M",
    "m",
    "full_dim",
    "reduced_dim",
    "closure_method",
    "reducible",
    "evidence",
    "gammas",
    "betas",
    "energy",
    "optimizer_energy",
    "brute_force_min",
    "fidelity_offset",
    "delta_e",
    "delta_e_relative",
    "tvd",
    "intertwine_residual",
    "intertwine_max_column",
    "gram_residual",
    "projector_residual",
    "sector_leakage",
    "exclusion_passed",
    "driver",
    "wall_time",
];

/// State-space sizes of the full and reduced simulations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryRecord {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "M")]
    pub active_dim: usize,
    pub full_dim: u64,
    pub reduced_dim: u64,
    pub full_bytes: u64,
    pub reduced_bytes: u64,
    /// `2ⁿ / 2ᵐ`, exact.
    pub dim_ratio: u64,
    /// `2ⁿ / M` as a reduced fraction.
    pub effective_ratio: (u64, u64),
    pub log2_full_dim: f64,
    pub log2_reduced_dim: f64,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn memory_report(n: usize, m: usize, active_dim: usize) -> MemoryRecord {
    let full_dim = 1u64 << n;
    let reduced_dim = 1u64 << m;
    let g = gcd(full_dim, active_dim as u64);
    MemoryRecord {
        n,
        m,
        active_dim,
        full_dim,
        reduced_dim,
        full_bytes: full_dim * BYTES_PER_AMPLITUDE,
        reduced_bytes: reduced_dim * BYTES_PER_AMPLITUDE,
        dim_ratio: full_dim / reduced_dim,
        effective_ratio: (full_dim / g, active_dim as u64 / g),
        log2_full_dim: n as f64,
        log2_reduced_dim: m as f64,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub schema_version: u32,
    pub instance: String,
    pub family: GraphFamily,
    pub n: usize,
    pub k: Option<usize>,
    pub restart: usize,
    pub side: String,
    #[serde(rename = "M")]
    pub active_dim: usize,
    pub m: usize,
    pub full_dim: u64,
    pub reduced_dim: u64,
    pub closure_method: String,
    pub reducible: bool,
    pub evidence: String,
    /// `;`-separated.
    pub gammas: String,
    pub betas: String,
    /// `⟨H_C⟩` on this side at the certified parameters.
    pub energy: f64,
    pub optimizer_energy: f64,
    pub brute_force_min: f64,
    pub fidelity_offset: f64,
    pub delta_e: f64,
    pub delta_e_relative: f64,
    pub tvd: f64,
    pub intertwine_residual: Option<f64>,
    pub intertwine_max_column: Option<f64>,
    pub gram_residual: f64,
    pub projector_residual: f64,
    pub sector_leakage: Option<f64>,
    pub exclusion_passed: bool,
    pub driver: String,
    pub wall_time: f64,
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

pub fn parse_angles(s: &str) -> Result<Vec<f64>, std::num::ParseFloatError> {
    s.split(';').map(str::parse).collect()
}

/// Two rows (full, reduced) per restart.
pub fn rows_for(inst: &InstanceReport) -> Vec<ResultRow> {
    let mut rows = Vec::new();
    for ((record, cert), excl) in inst.optimization.restarts.iter().zip(&inst.certificates).zip(&inst.exclusion) {
        for side in ["full", "reduced"] {
            let (energy, wall_time) = if side == "full" {
                (cert.energy_full, cert.wall_time_full)
            } else {
                (cert.energy_reduced, cert.wall_time_reduced)
            };
            rows.push(ResultRow {
                schema_version: CSV_SCHEMA_VERSION,
                instance: inst.id.clone(),
                family: inst.family,
                n: inst.n,
                k: inst.k,
                restart: record.index,
                side: side.into(),
                active_dim: inst.accounting.active_dim,
                m: inst.accounting.m,
                full_dim: inst.memory.full_dim,
                reduced_dim: inst.memory.reduced_dim,
                closure_method: inst.closure.method.clone(),
                reducible: inst.verdict.reducible,
                evidence: inst.verdict.evidence.as_str().into(),
                gammas: join(&cert.params_used.gammas),
                betas: join(&cert.params_used.betas),
                energy,
                optimizer_energy: record.energy,
                brute_force_min: inst.oracle.brute_force_min,
                fidelity_offset: cert.fidelity_offset,
                delta_e: cert.delta_e,
                delta_e_relative: cert.delta_e_relative,
                tvd: cert.tvd,
                intertwine_residual: cert.intertwine_residual,
                intertwine_max_column: cert.intertwine_max_column,
                gram_residual: cert.isometry_residuals[0],
                projector_residual: cert.isometry_residuals[1],
                sector_leakage: inst.sector_leakage,
                exclusion_passed: excl.passed,
                driver: inst.optimization.driver.clone(),
                wall_time,
            });
        }
    }
    rows
}

pub fn write_csv(rows: &[ResultRow]) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| csv::Error::from(e.into_error()))
}

pub fn read_csv(bytes: &[u8]) -> Result<Vec<ResultRow>, csv::Error> {
    csv::Reader::from_reader(bytes).deserialize().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub instance: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Controls {
    pub irreducibility: Vec<IrreducibilityCheck>,
    pub negative_control: Option<NegativeControl>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub config_hash: String,
    pub instances: Vec<InstanceReport>,
    pub failures: Vec<Failure>,
    pub controls: Controls,
}

/// One plotted series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotData {
    pub figure: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
}

fn series(label: impl Into<String>, pts: impl IntoIterator<Item = (f64, f64)>) -> Series {
    let (x, y) = pts.into_iter().unzip();
    Series { label: label.into(), x, y }
}

fn worst<F: Fn(&qaoa_reduce::equivalence::EquivalenceReport) -> f64>(inst: &InstanceReport, f: F) -> f64 {
    inst.certificates.iter().map(f).fold(0.0, f64::max)
}

fn equivalence_plot(
    figure: &str,
    x_label: &str,
    insts: &[&InstanceReport],
    x: impl Fn(&InstanceReport) -> f64,
) -> PlotData {
    let metric = |label: &str, f: &dyn Fn(&qaoa_reduce::equivalence::EquivalenceReport) -> f64| {
        series(label, insts.iter().map(|i| (x(i), worst(i, f))))
    };
    PlotData {
        figure: figure.into(),
        x_label: x_label.into(),
        y_label: "worst metric over restarts".into(),
        log_y: true,
        series: vec![
            metric("|F-1|", &|c| c.fidelity_offset.abs()),
            metric("|dE|", &|c| c.delta_e),
            metric("TVD", &|c| c.tvd),
        ],
    }
}

/// Plot data keyed by file stem.
pub fn plots(summary: &Summary) -> BTreeMap<String, PlotData> {
    let mut out = BTreeMap::new();
    let unconstrained: Vec<&InstanceReport> = summary.instances.iter().filter(|i| i.k.is_none()).collect();
    let constrained: Vec<&InstanceReport> = summary.instances.iter().filter(|i| i.k.is_some()).collect();
    let mut families: Vec<GraphFamily> = Vec::new();
    for i in &unconstrained {
        if !families.contains(&i.family) {
            families.push(i.family);
        }
    }

    let sizes: std::collections::BTreeSet<usize> = unconstrained.iter().map(|i| i.n).collect();
    let mut reduction = vec![series("original n", sizes.iter().map(|&n| (n as f64, n as f64)))];
    for &f in &families {
        reduction.push(series(
            f.as_str(),
            unconstrained.iter().filter(|i| i.family == f).map(|i| (i.n as f64, i.accounting.m as f64)),
        ));
    }
    out.insert(
        "qubit_reduction".into(),
        PlotData {
            figure: "qubit reduction by family".into(),
            x_label: "n".into(),
            y_label: "qubits".into(),
            log_y: false,
            series: reduction,
        },
    );

    let k = |i: &InstanceReport| i.k.unwrap_or(0) as f64;
    out.insert(
        "constraint_sweep".into(),
        PlotData {
            figure: "reduced qubits against Hamming weight".into(),
            x_label: "k".into(),
            y_label: "qubits".into(),
            log_y: false,
            series: vec![
                series("m", constrained.iter().map(|i| (k(i), i.accounting.m as f64))),
                series("M", constrained.iter().map(|i| (k(i), i.accounting.active_dim as f64))),
                series("n", constrained.iter().map(|i| (k(i), i.n as f64))),
            ],
        },
    );

    for &f in &families {
        let group: Vec<&InstanceReport> = unconstrained.iter().copied().filter(|i| i.family == f).collect();
        out.insert(
            format!("equivalence_{f}"),
            equivalence_plot(&format!("equivalence, {f}"), "n", &group, |i| i.n as f64),
        );
    }
    out.insert(
        "equivalence_constraints".into(),
        equivalence_plot("equivalence under constraints", "k", &constrained, k),
    );

    let mut memory = Vec::new();
    for &f in &families {
        let group = unconstrained.iter().filter(|i| i.family == f);
        memory.push(series(format!("{f} full"), group.clone().map(|i| (i.n as f64, i.memory.full_dim as f64))));
        memory.push(series(format!("{f} reduced"), group.map(|i| (i.n as f64, i.memory.reduced_dim as f64))));
    }
    out.insert(
        "memory".into(),
        PlotData {
            figure: "state dimension".into(),
            x_label: "n".into(),
            y_label: "Hilbert space dimension".into(),
            log_y: true,
            series: memory,
        },
    );
    out
}
