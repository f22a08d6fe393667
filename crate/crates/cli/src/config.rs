//! Strict JSON configuration schema. Unknown keys are rejected so a typo
//! cannot silently change the physics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use coldlab_core::bounds::{CoolingTask, DoSModel};
use coldlab_core::cooling::{CoolingSetup, DumpDensity};
use coldlab_core::linalg::RMatrix;
use coldlab_core::network::{
    DampingBackend, DensityKind, NetworkSpec, ReservoirSpec, SpectralDensity,
};
use coldlab_core::CoreError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Bounds,
    Simulate,
    Coolscan,
    Validate,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Mode::Bounds => "bounds",
            Mode::Simulate => "simulate",
            Mode::Coolscan => "coolscan",
            Mode::Validate => "validate",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: String,
    pub mode: Mode,
    #[serde(default)]
    pub network: Option<NetworkConfig>,
    #[serde(default)]
    pub reservoirs: Vec<ReservoirConfig>,
    #[serde(default)]
    pub damping: Option<DampingConfig>,
    #[serde(default)]
    pub bounds_tasks: Vec<BoundsTaskConfig>,
    #[serde(default)]
    pub cooling: Option<CoolingConfig>,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub n_nodes: usize,
    #[serde(default)]
    pub masses: Option<Vec<f64>>,
    pub v0: Vec<Vec<f64>>,
    #[serde(default)]
    pub vk: Vec<HarmonicConfig>,
    #[serde(default)]
    pub omega_d: Option<f64>,
    #[serde(default = "default_true")]
    pub time_reversal: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicConfig {
    pub k: i32,
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ReservoirConfig {
    pub label: String,
    pub temperature: f64,
    pub sites: Vec<usize>,
    pub density: DensityConfig,
    /// Optional full site-weight matrix; defaults to the projector on
    /// `sites`.
    #[serde(default)]
    pub weights: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensityConfig {
    Ohmic {
        gamma: f64,
        #[serde(default)]
        cutoff: Option<f64>,
    },
    DeltaMode {
        strength: f64,
        omega_m: f64,
    },
    Table {
        points: Vec<(f64, f64)>,
    },
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DampingConfig {
    MarkovianOhmic,
    Phenomenological { gamma: f64, omega0: f64 },
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsTaskConfig {
    pub id: String,
    pub d_s: u32,
    pub g: u32,
    pub delta: f64,
    pub temperature: f64,
    pub w_wc: f64,
    #[serde(default)]
    pub dos: Option<DosConfig>,
    #[serde(default)]
    pub volume: Option<f64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub j_b: Option<f64>,
    #[serde(default)]
    pub d_b: Option<u32>,
    #[serde(default)]
    pub lambda_min: Option<f64>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DosConfig {
    PowerLaw { a: f64, nu: f64, volume: f64 },
    Radiation { volume: f64 },
    Tabulated { table: Vec<(f64, f64)> },
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CoolingConfig {
    pub omega_m: f64,
    pub omega_0: f64,
    pub gamma: f64,
    pub dump: DumpConfig,
    pub drive_v: f64,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    pub scan_lo: f64,
    pub scan_hi: f64,
}

fn default_k_max() -> usize {
    5
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DumpConfig {
    Flat { level: f64 },
    Band { level: f64, lo: f64, hi: f64 },
    Ohmic { gamma: f64, #[serde(default)] cutoff: Option<f64> },
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsConfig {
    #[serde(default = "default_quad_tol")]
    pub quad_rel_tol: f64,
    #[serde(default)]
    pub floquet_k: Option<usize>,
    #[serde(default = "default_scan_steps")]
    pub scan_steps: usize,
    #[serde(default)]
    pub threads: Option<usize>,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            quad_rel_tol: default_quad_tol(),
            floquet_k: None,
            scan_steps: default_scan_steps(),
            threads: None,
        }
    }
}

fn default_quad_tol() -> f64 {
    1e-8
}

fn default_scan_steps() -> usize {
    400
}

#[derive(Debug, Deserialize, Serialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// CSV destination; stdout when absent.
    #[serde(default)]
    pub path: Option<String>,
    #[serde(default)]
    pub format: Option<String>,
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, CoreError> {
    let cfg: RunConfig = serde_json::from_str(text)
        .map_err(|e| CoreError::InvalidInput(format!("config: {e}")))?;
    if let Some(fmt) = &cfg.output.format {
        if fmt != "csv" {
            return Err(CoreError::InvalidInput(format!(
                "output.format: only \"csv\" is supported, got \"{fmt}\""
            )));
        }
    }
    Ok(cfg)
}

fn to_matrix(rows: &[Vec<f64>], n: usize, what: &str) -> Result<RMatrix, CoreError> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(CoreError::InvalidInput(format!("{what}: expected a {n}x{n} matrix")));
    }
    Ok(RMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Materialize the network section.
pub fn build_network(cfg: &NetworkConfig) -> Result<NetworkSpec, CoreError> {
    let n = cfg.n_nodes;
    let masses = cfg.masses.clone().unwrap_or_else(|| vec![1.0; n]);
    let v0 = to_matrix(&cfg.v0, n, "network.v0")?;
    let mut vk = BTreeMap::new();
    for h in &cfg.vk {
        let m = to_matrix(&h.matrix, n, &format!("network.vk[k={}]", h.k))?;
        if vk.insert(h.k, m).is_some() {
            return Err(CoreError::InvalidInput(format!(
                "network.vk: harmonic k = {} given twice",
                h.k
            )));
        }
    }
    NetworkSpec::new(masses, v0, vk, cfg.omega_d, cfg.time_reversal)
}

/// Materialize one reservoir.
pub fn build_reservoir(cfg: &ReservoirConfig, n_nodes: usize) -> Result<ReservoirSpec, CoreError> {
    let weights = match &cfg.weights {
        Some(rows) => to_matrix(rows, n_nodes, &format!("reservoirs[{}].weights", cfg.label))?,
        None => {
            let mut w = RMatrix::zeros(n_nodes, n_nodes);
            for &s in &cfg.sites {
                if s >= n_nodes {
                    return Err(CoreError::InvalidInput(format!(
                        "reservoirs[{}].sites: site {s} out of range",
                        cfg.label
                    )));
                }
                w[(s, s)] = 1.0;
            }
            w
        }
    };
    let kind = match &cfg.density {
        DensityConfig::Ohmic { gamma, cutoff } => DensityKind::Ohmic { gamma: *gamma, cutoff: *cutoff },
        DensityConfig::DeltaMode { strength, omega_m } => {
            DensityKind::DeltaMode { strength: *strength, omega_m: *omega_m }
        }
        DensityConfig::Table { points } => DensityKind::Table { points: points.clone() },
    };
    let density = SpectralDensity::new(kind, weights)?;
    ReservoirSpec::new(cfg.label.clone(), cfg.temperature, density, &cfg.sites, n_nodes)
}

pub fn build_damping(
    cfg: &Option<DampingConfig>,
    reservoirs: &[ReservoirSpec],
) -> Result<DampingBackend, CoreError> {
    match cfg {
        None | Some(DampingConfig::MarkovianOhmic) => {
            DampingBackend::markovian_from_reservoirs(reservoirs)
        }
        Some(DampingConfig::Phenomenological { gamma, omega0 }) => {
            DampingBackend::phenomenological(*gamma, *omega0)
        }
    }
}

pub fn build_task(cfg: &BoundsTaskConfig) -> Result<CoolingTask, CoreError> {
    CoolingTask::new(cfg.d_s, cfg.g, cfg.delta, cfg.temperature, cfg.w_wc)
}

pub fn build_dos(cfg: &DosConfig) -> Result<DoSModel, CoreError> {
    match cfg {
        DosConfig::PowerLaw { a, nu, volume } => DoSModel::power_law(*a, *nu, *volume),
        DosConfig::Radiation { volume } => DoSModel::radiation(*volume),
        DosConfig::Tabulated { table } => DoSModel::tabulated(table.clone()),
    }
}

pub fn build_cooling_setup(cfg: &CoolingConfig) -> Result<CoolingSetup, CoreError> {
    let dump = match &cfg.dump {
        DumpConfig::Flat { level } => DumpDensity::Flat { level: *level },
        DumpConfig::Band { level, lo, hi } => DumpDensity::Band { level: *level, lo: *lo, hi: *hi },
        DumpConfig::Ohmic { gamma, cutoff } => DumpDensity::Ohmic { gamma: *gamma, cutoff: *cutoff },
    };
    CoolingSetup::new(cfg.omega_m, cfg.omega_0, cfg.gamma, dump, cfg.drive_v, cfg.k_max)
}
