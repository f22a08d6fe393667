//! Built-in validation suite: re-runs the load-bearing invariants on the
//! shipped fixtures and prints one pass/fail line per check.

use rayon::prelude::*;

use coldlab_core::bounds::{
    bath_family_log_error_bound, landauer_brute_force_oracle, masanes_error_bound, CoolingTask, DoSModel,
};
use coldlab_core::cooling::{optimize_drive_frequency, CoolingSetup, DumpDensity};
use coldlab_core::currents::{planck_occupation, SimOptions, Simulation};
use coldlab_core::linalg::{self, RMatrix};
use coldlab_core::network::{DampingBackend, ReservoirSpec, SpectralDensity};
use coldlab_core::qstat::{renyi_divergence, vacancy, DensityMatrix, HamiltonianSpec};
use coldlab_core::CoreError;

use crate::config::{self, parse_config, RunConfig};

const DRIVEN_FIXTURE: &str = include_str!("../fixtures/driven_two_node.json");
const SIDEBAND_FIXTURE: &str = include_str!("../fixtures/sideband.json");

type CheckResult = Result<String, String>;
type Check = (&'static str, Box<dyn Fn() -> CheckResult + Send + Sync>);

fn driven_simulation(temps: Option<(f64, f64)>) -> Result<Simulation, String> {
    let cfg = parse_config(DRIVEN_FIXTURE).map_err(|e| e.to_string())?;
    let net_cfg = cfg.network.as_ref().ok_or("fixture lacks network")?;
    let network = config::build_network(net_cfg).map_err(|e| e.to_string())?;
    let mut reservoirs = Vec::new();
    for (i, r) in cfg.reservoirs.iter().enumerate() {
        let mut built = config::build_reservoir(r, network.n_nodes()).map_err(|e| e.to_string())?;
        if let Some((ta, tb)) = temps {
            built.temperature = if i == 0 { ta } else { tb };
        }
        reservoirs.push(built);
    }
    let damping = config::build_damping(&cfg.damping, &reservoirs).map_err(|e| e.to_string())?;
    Simulation::new(network, reservoirs, damping, SimOptions::default()).map_err(|e| e.to_string())
}

fn check_density_invariants() -> CheckResult {
    let sim = driven_simulation(None)?;
    for r in sim.reservoirs() {
        for i in 0..64 {
            let omega = 0.02 + 0.11 * i as f64;
            let m = r.density.eval(omega).map_err(|e| e.to_string())?;
            let min = linalg::eigvals_sym(&m)[0];
            if min < -1e-12 {
                return Err(format!("density of {} not PSD at ω = {omega}", r.label));
            }
            let localized = &r.projector * &m * &r.projector;
            if (&localized - &m).amax() > 1e-12 {
                return Err(format!("density of {} leaks off its sites", r.label));
            }
        }
    }
    Ok("PSD and localization on 64 frequencies per reservoir".into())
}

fn check_equilibrium() -> CheckResult {
    let sim = driven_simulation(Some((0.7, 0.7)))?;
    // Undriven variant: rebuild without the harmonic.
    let cfg = parse_config(DRIVEN_FIXTURE).map_err(|e| e.to_string())?;
    let net_cfg = cfg.network.as_ref().unwrap();
    let undriven = coldlab_core::network::NetworkSpec::static_network(
        config::build_network(net_cfg).map_err(|e| e.to_string())?.v0().clone(),
    )
    .map_err(|e| e.to_string())?;
    let reservoirs: Vec<ReservoirSpec> = sim.reservoirs().to_vec();
    let damping = DampingBackend::markovian_from_reservoirs(&reservoirs).map_err(|e| e.to_string())?;
    let eq = Simulation::new(undriven, reservoirs, damping, SimOptions::default()).map_err(|e| e.to_string())?;
    for alpha in 0..2 {
        let q = eq.heat_rp(alpha).map_err(|e| e.to_string())?.value;
        if q.abs() > 1e-9 {
            return Err(format!("equilibrium current {q:.3e} at reservoir {alpha}"));
        }
    }
    Ok("undriven equal-temperature currents below 1e-9".into())
}

fn check_driven_closure() -> CheckResult {
    let sim = driven_simulation(None)?;
    let report = sim.report().map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for row in &report.reservoirs {
        let direct = row.q_direct.ok_or("expected disjoint sites")?;
        let rel = (direct - row.q_total).abs() / row.q_total.abs();
        worst = worst.max(rel);
        if rel > 1e-4 {
            return Err(format!("{}: decomposition vs direct rel {rel:.2e}", row.label));
        }
    }
    if report.first_law_residual > 1e-3 {
        return Err(format!("first-law residual {:.2e}", report.first_law_residual));
    }
    Ok(format!("closure rel {worst:.1e}, first-law {:.1e}", report.first_law_residual))
}

fn check_zero_temperature() -> CheckResult {
    let sim = driven_simulation(Some((0.0, 0.0)))?;
    for alpha in 0..2 {
        let rp = sim.heat_rp(alpha).map_err(|e| e.to_string())?.value;
        let rh = sim.heat_rh(alpha).map_err(|e| e.to_string())?.value;
        let nrh = sim.heat_nrh(alpha).map_err(|e| e.to_string())?.value;
        if rp.abs() + rh.abs() > 1e-10 {
            return Err(format!("resonant channels alive at T = 0: {rp:.1e}, {rh:.1e}"));
        }
        if nrh >= 0.0 {
            return Err(format!("pair creation not heating at T = 0: {nrh:.3e}"));
        }
    }
    Ok("resonant channels vanish, pair creation persists".into())
}

fn check_bounds_oracle() -> CheckResult {
    let w = 2.0 * (4.0_f64 / 3.0).ln();
    let tk = CoolingTask::new(2, 1, 0.05, 1.0, w).map_err(|e| e.to_string())?;
    let dos = DoSModel::power_law(1.0, 0.5, 1.0).map_err(|e| e.to_string())?;
    let b = masanes_error_bound(&tk, &dos).map_err(|e| e.to_string())?;
    let rel = (b.epsilon_min - (-1.0_f64).exp()).abs() / (-1.0_f64).exp();
    if rel > 1e-6 {
        return Err(format!("hand fixture rel {rel:.2e}"));
    }
    for &nu in &[0.25, 0.5, 0.75] {
        for &w_wc in &[1.0, 25.0] {
            let tk = CoolingTask::new(2, 1, 0.05, 1.0, w_wc).map_err(|e| e.to_string())?;
            let dos = DoSModel::power_law(1.0, nu, 1.0).map_err(|e| e.to_string())?;
            let numeric = masanes_error_bound(&tk, &dos).map_err(|e| e.to_string())?.log_epsilon_min;
            let closed = bath_family_log_error_bound(&tk, 1.0, nu, 1.0).map_err(|e| e.to_string())?;
            let rel = (numeric - closed).abs() / closed.abs();
            if rel > 1e-6 {
                return Err(format!("grid point nu={nu} W={w_wc}: rel {rel:.2e}"));
            }
        }
    }
    Ok("root-find matches closed form at 1e-6".into())
}

fn check_landauer(seed: u64) -> CheckResult {
    let violations = landauer_brute_force_oracle(2, 3, 1.0, 1000, seed).map_err(|e| e.to_string())?;
    if violations > 0 {
        return Err(format!("{violations} purity-bound violations"));
    }
    Ok("0 violations in 1000 Haar samples".into())
}

fn check_renyi_vacancy(seed: u64) -> CheckResult {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let alphas = [0.0, 0.25, 0.5, 1.0, 2.0, 10.0, 100.0];
    for _ in 0..200 {
        let dim = rng.random_range(2..=6);
        let p = random_dist(&mut rng, dim);
        let q = random_dist(&mut rng, dim);
        let mut last = -1.0;
        for &a in &alphas {
            let s = renyi_divergence(&p, &q, a).map_err(|e| e.to_string())?;
            if s < last - 1e-9 {
                return Err(format!("Rényi monotonicity defect at alpha = {a}"));
            }
            last = s;
        }
    }
    let h1 = HamiltonianSpec::diagonal(&[0.0, 0.9]).map_err(|e| e.to_string())?;
    let h2 = HamiltonianSpec::diagonal(&[0.0, 0.4, 1.1]).map_err(|e| e.to_string())?;
    let rho = DensityMatrix::from_diagonal(&[0.6, 0.4]).map_err(|e| e.to_string())?;
    let sig = DensityMatrix::from_diagonal(&[0.5, 0.25, 0.25]).map_err(|e| e.to_string())?;
    let beta = 1.2;
    let h_joint = HamiltonianSpec::new(
        linalg::kron(h1.matrix(), &linalg::identity_c(3)) + linalg::kron(&linalg::identity_c(2), h2.matrix()),
    )
    .map_err(|e| e.to_string())?;
    let defect = (vacancy(&rho.tensor(&sig), &h_joint, beta).map_err(|e| e.to_string())?
        - vacancy(&rho, &h1, beta).map_err(|e| e.to_string())?
        - vacancy(&sig, &h2, beta).map_err(|e| e.to_string())?)
    .abs();
    if defect > 1e-10 {
        return Err(format!("vacancy additivity defect {defect:.2e}"));
    }
    Ok("monotonicity on 200 pairs, additivity at 1e-10".into())
}

fn check_thermalization() -> CheckResult {
    let t_bath = 0.7;
    let net = coldlab_core::network::NetworkSpec::static_network(RMatrix::from_row_slice(1, 1, &[1.0]))
        .map_err(|e| e.to_string())?;
    let res = vec![ReservoirSpec::new(
        "B",
        t_bath,
        SpectralDensity::ohmic(1e-3, Some(50.0), RMatrix::from_row_slice(1, 1, &[1.0])).map_err(|e| e.to_string())?,
        &[0],
        1,
    )
    .map_err(|e| e.to_string())?];
    let damping = DampingBackend::markovian_from_reservoirs(&res).map_err(|e| e.to_string())?;
    let sim = Simulation::new(net, res, damping, SimOptions::default()).map_err(|e| e.to_string())?;
    let cov = sim.covariance_coefficients().map_err(|e| e.to_string())?;
    let sxx = cov.sigma_xx(0.0, 0.0)[(0, 0)];
    let spp = cov.sigma_pp(0.0, 0.0).map_err(|e| e.to_string())?[(0, 0)];
    let n_mean = 0.5 * (sxx + spp) - 0.5;
    let expect = planck_occupation(1.0, t_bath).map_err(|e| e.to_string())?;
    let rel = (n_mean - expect).abs() / expect;
    if rel > 0.02 {
        return Err(format!("⟨n⟩ off Planck by {rel:.2e}"));
    }
    Ok(format!("⟨n⟩ within {rel:.1e} of the Planck occupation"))
}

fn check_cooling_limits() -> CheckResult {
    let cfg = parse_config(SIDEBAND_FIXTURE).map_err(|e| e.to_string())?;
    let cc = cfg.cooling.as_ref().ok_or("fixture lacks cooling section")?;
    let setup = config::build_cooling_setup(cc).map_err(|e| e.to_string())?;
    let result = optimize_drive_frequency(&setup, (cc.scan_lo, cc.scan_hi), 200).map_err(|e| e.to_string())?;
    let rel_omega = (result.omega_d_opt - 99.0).abs() / 99.0;
    let rel_n = (result.n_bar_min - 2.5e-5).abs() / 2.5e-5;
    if rel_omega > 1e-3 || rel_n > 0.2 {
        return Err(format!("sideband optimum off: ω rel {rel_omega:.1e}, n̄ rel {rel_n:.1e}"));
    }
    let dop = CoolingSetup::new(1.0, 1000.0, 50.0, DumpDensity::Flat { level: 1.0 }, 5.0, 5)
        .map_err(|e| e.to_string())?;
    let result = optimize_drive_frequency(&dop, (500.0, 1000.0), 200).map_err(|e| e.to_string())?;
    let target = 50.0 / 2.0 * 1000.0 / 950.0;
    let rel_n = (result.n_bar_min - target).abs() / target;
    if (result.omega_d_opt - 950.0).abs() / 950.0 > 0.05 || rel_n > 0.2 {
        return Err(format!("doppler optimum off: ω = {}, n̄ rel {rel_n:.1e}", result.omega_d_opt));
    }
    Ok("sideband and doppler optima within tolerance".into())
}

fn random_dist<R: rand::Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(1e-3..1.0)).collect();
    let s: f64 = v.iter().sum();
    for x in &mut v {
        *x /= s;
    }
    v
}

pub fn run_validate(_cfg: &RunConfig, seed: u64) -> Result<(), CoreError> {
    let checks: Vec<Check> = vec![
        ("density_invariants", Box::new(check_density_invariants)),
        ("equilibrium_currents", Box::new(check_equilibrium)),
        ("driven_closure", Box::new(check_driven_closure)),
        ("zero_temperature", Box::new(check_zero_temperature)),
        ("bounds_oracle", Box::new(check_bounds_oracle)),
        ("landauer_sampling", Box::new(move || check_landauer(seed))),
        ("renyi_vacancy", Box::new(move || check_renyi_vacancy(seed.wrapping_add(1)))),
        ("thermalization", Box::new(check_thermalization)),
        ("cooling_limits", Box::new(check_cooling_limits)),
    ];
    let results: Vec<(String, CheckResult)> = checks
        .par_iter()
        .map(|(name, f)| (name.to_string(), f()))
        .collect();
    let mut failures = 0;
    for (name, result) in &results {
        match result {
            Ok(detail) => println!("validate {name}: PASS ({detail})"),
            Err(msg) => {
                failures += 1;
                println!("validate {name}: FAIL ({msg})");
            }
        }
    }
    if failures > 0 {
        return Err(CoreError::Accuracy(format!("{failures} validation checks failed")));
    }
    println!("validate: all {} checks passed", results.len());
    Ok(())
}
