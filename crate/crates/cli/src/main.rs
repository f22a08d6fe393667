//! Command line front end: parses a strict JSON config, dispatches on the
//! run mode and emits plot-ready CSV in natural units (ħ = k_B = 1).

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use coldlab_core::bounds::{
    allahverdyan_bound, bath_family_error_bound, landauer_purity_bound, masanes_error_bound,
    radiation_temperature_bound, scharlau_bound, temperature_from_error, DoSModel,
};
use coldlab_core::cooling::optimize_drive_frequency;
use coldlab_core::currents::{SimOptions, Simulation};
use coldlab_core::CoreError;

use coldlab_cli::config::{self, parse_config, Mode, RunConfig};
use coldlab_cli::validate;

const UNIT_NOTE: &str = "natural units: hbar = kB = 1, masses default 1";

#[derive(Parser, Debug)]
#[command(name = "coldlab", version, about = "Driven harmonic-network refrigerators and cooling bounds")]
struct Cli {
    /// Path to the JSON configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the run mode from the config.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Override the output path from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for parallel sweeps (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Seed for the sampling oracles in validate mode.
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let kind = match &err {
                CoreError::Accuracy(_) => "accuracy",
                CoreError::Instability(_) | CoreError::Regime(_) => "instability",
                CoreError::InvalidInput(_) => "config",
                CoreError::Domain(_) => "domain",
                CoreError::ModelInvalid(_) => "model",
                CoreError::Contract(_) => "contract",
                CoreError::Degenerate(_) => "degenerate",
            };
            let record = serde_json::json!({ "error": { "kind": kind, "message": err.to_string() } });
            eprintln!("{record}");
            match err {
                CoreError::Accuracy(_) => ExitCode::from(3),
                CoreError::Instability(_) | CoreError::Regime(_) => ExitCode::from(4),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn run(cli: &Cli) -> Result<(), CoreError> {
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| CoreError::InvalidInput(format!("cannot read {}: {e}", cli.config.display())))?;
    let cfg = parse_config(&text)?;
    let mode = cli.mode.unwrap_or(cfg.mode);

    let threads = cli.threads.or(cfg.numerics.threads);
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CoreError::InvalidInput(format!("thread pool: {e}")))?;
    }

    let header = csv_header(&text, mode);
    let out_path = cli.out.clone().or_else(|| cfg.output.path.as_ref().map(PathBuf::from));

    match mode {
        Mode::Bounds => run_bounds(&cfg, &header, out_path.as_deref()),
        Mode::Simulate => run_simulate(&cfg, &header, out_path.as_deref()),
        Mode::Coolscan => run_coolscan(&cfg, &header, out_path.as_deref()),
        Mode::Validate => validate::run_validate(&cfg, cli.seed),
    }
}

/// Header comment carrying provenance: version, mode, config hash, units.
fn csv_header(config_text: &str, mode: Mode) -> String {
    format!(
        "# coldlab v{} mode={mode} config_fnv1a={:016x} unit_note={UNIT_NOTE}\n",
        env!("CARGO_PKG_VERSION"),
        fnv1a(config_text.as_bytes())
    )
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn emit(path: Option<&std::path::Path>, content: &str) -> Result<(), CoreError> {
    match path {
        Some(p) => std::fs::write(p, content)
            .map_err(|e| CoreError::InvalidInput(format!("cannot write {}: {e}", p.display()))),
        None => {
            std::io::stdout()
                .write_all(content.as_bytes())
                .map_err(|e| CoreError::InvalidInput(format!("stdout: {e}")))
        }
    }
}

fn fmt(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.12e}")
    }
}

fn run_bounds(cfg: &RunConfig, header: &str, out: Option<&std::path::Path>) -> Result<(), CoreError> {
    if cfg.bounds_tasks.is_empty() {
        return Err(CoreError::InvalidInput("bounds mode: no bounds_tasks given".into()));
    }
    let mut csv = String::from(header);
    csv.push_str("task,bound,value,regime_flag\n");
    for tc in &cfg.bounds_tasks {
        let task = config::build_task(tc)?;
        let mut row = |bound: &str, value: f64, flag: &str| {
            csv.push_str(&format!("{},{},{},{}\n", tc.id, bound, fmt(value), flag));
        };
        if let Some(eps) = tc.epsilon {
            row("temperature_from_error", temperature_from_error(&task, eps)?, "");
        }
        if let Some(dos_cfg) = &tc.dos {
            let dos = config::build_dos(dos_cfg)?;
            let b = masanes_error_bound(&task, &dos)?;
            row(
                "masanes_error_bound",
                b.epsilon_min,
                if b.regime_valid { "leading_order_valid" } else { "outside_leading_order" },
            );
            // The error bound often underflows f64; its log stays usable.
            row("masanes_log_epsilon", b.log_epsilon_min, "");
            row("masanes_e0", b.e0, "");
            match dos {
                DoSModel::PowerLawEntropy { a, nu, volume } => {
                    row("bath_family_error_bound", bath_family_error_bound(&task, a, nu, volume)?, "");
                }
                DoSModel::Radiation { volume } => {
                    row(
                        "bath_family_error_bound",
                        bath_family_error_bound(
                            &task,
                            coldlab_core::bounds::RADIATION_A,
                            coldlab_core::bounds::RADIATION_NU,
                            volume,
                        )?,
                        "",
                    );
                }
                DoSModel::Tabulated { .. } => {}
            }
        }
        if let Some(v) = tc.volume {
            let b = radiation_temperature_bound(&task, v)?;
            row(
                "radiation_temperature_bound",
                b.t_prime_min,
                if b.regime_large_v_and_w { "leading_order_valid" } else { "outside_leading_order" },
            );
        }
        if let Some(j_b) = tc.j_b {
            row("allahverdyan_bound", allahverdyan_bound(tc.temperature, tc.delta, j_b)?, "");
            if let Some(d_b) = tc.d_b {
                row("scharlau_bound", scharlau_bound(tc.temperature, tc.delta, j_b, d_b)?, "");
            }
            if let Some(lmin) = tc.lambda_min {
                row("landauer_purity_bound", landauer_purity_bound(lmin, 1.0 / tc.temperature, j_b)?, "");
            }
        }
    }
    emit(out, &csv)
}

fn build_simulation(cfg: &RunConfig) -> Result<Simulation, CoreError> {
    let net_cfg = cfg
        .network
        .as_ref()
        .ok_or_else(|| CoreError::InvalidInput("simulate mode: missing network section".into()))?;
    let network = config::build_network(net_cfg)?;
    if cfg.reservoirs.is_empty() {
        return Err(CoreError::InvalidInput("simulate mode: no reservoirs".into()));
    }
    let reservoirs: Result<Vec<_>, _> = cfg
        .reservoirs
        .iter()
        .map(|r| config::build_reservoir(r, network.n_nodes()))
        .collect();
    let reservoirs = reservoirs?;
    let damping = config::build_damping(&cfg.damping, &reservoirs)?;
    let options = SimOptions {
        k_range: cfg.numerics.floquet_k,
        quad_rel_tol: cfg.numerics.quad_rel_tol,
        ..SimOptions::default()
    };
    Simulation::new(network, reservoirs, damping, options)
}

fn run_simulate(cfg: &RunConfig, header: &str, out: Option<&std::path::Path>) -> Result<(), CoreError> {
    let sim = build_simulation(cfg)?;
    let report = sim.report()?;
    let mut csv = String::from(header);
    csv.push_str("reservoir,q_rp,q_rh,q_nrh,q_total,q_direct,power,err_estimate\n");
    for row in &report.reservoirs {
        let direct = row.q_direct.map(fmt).unwrap_or_default();
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.label,
            fmt(row.q_rp),
            fmt(row.q_rh),
            fmt(row.q_nrh),
            fmt(row.q_total),
            direct,
            fmt(report.power_balance),
            fmt(row.err_estimate),
        ));
    }
    emit(out, &csv)
}

fn run_coolscan(cfg: &RunConfig, header: &str, out: Option<&std::path::Path>) -> Result<(), CoreError> {
    let cc = cfg
        .cooling
        .as_ref()
        .ok_or_else(|| CoreError::InvalidInput("coolscan mode: missing cooling section".into()))?;
    let setup = config::build_cooling_setup(cc)?;
    let result = optimize_drive_frequency(&setup, (cc.scan_lo, cc.scan_hi), cfg.numerics.scan_steps)?;

    let mut csv = String::from(header);
    csv.push_str("omega_d,n_bar,T_equiv\n");
    for &(w, n) in &result.trace {
        let t = if n.is_finite() && n > 0.0 {
            coldlab_core::cooling::occupation_to_temperature(n, setup.omega_m)?
        } else {
            f64::INFINITY
        };
        csv.push_str(&format!("{},{},{}\n", fmt(w), fmt(n), fmt(t)));
    }
    emit(out, &csv)?;

    // Single-row summary on stdout (separate from the trace file).
    let regime = match result.regime {
        coldlab_core::cooling::CoolingRegime::Doppler => "doppler",
        coldlab_core::cooling::CoolingRegime::Sideband => "sideband",
        coldlab_core::cooling::CoolingRegime::Intermediate => "intermediate",
    };
    let mut summary = String::new();
    if out.is_some() {
        summary.push_str(header);
    }
    summary.push_str("n_bar_min,omega_d_opt,T_min,regime\n");
    summary.push_str(&format!(
        "{},{},{},{}\n",
        fmt(result.n_bar_min),
        fmt(result.omega_d_opt),
        fmt(result.t_min),
        regime
    ));
    print!("{summary}");
    Ok(())
}
