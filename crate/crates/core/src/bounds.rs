//! Unattainability bounds: minimum cooling error and minimum temperature as
//! functions of worst-case work, bath volume, bath energy range and bath
//! dimension, together with brute-force verification oracles.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CoreError, Result};
use crate::linalg::{self, CMatrix};
use crate::qstat::{thermal_state, DensityMatrix, HamiltonianSpec};
use crate::quad::{integrate_scalar, QuadOptions, Upper};
use crate::roots::{bracketed_root, positive_axis_root, RootOptions};

/// Entropy prefactor of black-body radiation: (4/3)·15^{-1/4}·√π with
/// c = ħ = 1.
pub const RADIATION_A: f64 = 1.200_855_794_984_001;
/// Entropy exponent of black-body radiation.
pub const RADIATION_NU: f64 = 0.75;

/// Parametric density of states Ω(E) of a heat bath, described through
/// ln Ω.
#[derive(Debug, Clone)]
pub enum DoSModel {
    /// ln Ω(E) = a·V^{1−ν}·E^ν with 0 < ν < 1 (extensive Boltzmann entropy).
    PowerLawEntropy { a: f64, nu: f64, volume: f64 },
    /// The power-law family at the radiation parameters ν = 3/4,
    /// a = (4/3)·15^{-1/4}·√π.
    Radiation { volume: f64 },
    /// Strictly increasing samples of (E, ln Ω(E)); derivatives via local
    /// 3-point differences.
    Tabulated { table: Vec<(f64, f64)> },
}

impl DoSModel {
    pub fn power_law(a: f64, nu: f64, volume: f64) -> Result<Self> {
        if !(a > 0.0) || !(volume > 0.0) {
            return Err(CoreError::InvalidInput("DoSModel: a and volume must be > 0".into()));
        }
        if !(nu > 0.0 && nu < 1.0) {
            return Err(CoreError::InvalidInput(format!(
                "DoSModel: nu = {nu} outside (0, 1)"
            )));
        }
        Ok(DoSModel::PowerLawEntropy { a, nu, volume })
    }

    pub fn radiation(volume: f64) -> Result<Self> {
        if !(volume > 0.0) {
            return Err(CoreError::InvalidInput("DoSModel: volume must be > 0".into()));
        }
        Ok(DoSModel::Radiation { volume })
    }

    pub fn tabulated(table: Vec<(f64, f64)>) -> Result<Self> {
        if table.len() < 3 {
            return Err(CoreError::InvalidInput("DoSModel: table needs at least 3 points".into()));
        }
        if table.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(CoreError::InvalidInput("DoSModel: table energies must be strictly increasing".into()));
        }
        if table.iter().any(|&(e, l)| !e.is_finite() || !l.is_finite()) {
            return Err(CoreError::InvalidInput("DoSModel: non-finite table entry".into()));
        }
        Ok(DoSModel::Tabulated { table })
    }

    fn as_power_law(&self) -> Option<(f64, f64, f64)> {
        match *self {
            DoSModel::PowerLawEntropy { a, nu, volume } => Some((a, nu, volume)),
            DoSModel::Radiation { volume } => Some((RADIATION_A, RADIATION_NU, volume)),
            DoSModel::Tabulated { .. } => None,
        }
    }

    /// ln Ω(E).
    pub fn ln_omega(&self, e: f64) -> Result<f64> {
        if let Some((a, nu, v)) = self.as_power_law() {
            if e < 0.0 {
                return Err(CoreError::Domain(format!("ln Ω: E = {e} < 0")));
            }
            return Ok(a * v.powf(1.0 - nu) * e.powf(nu));
        }
        self.interp(e).map(|(l, _, _)| l)
    }

    /// ∂_E ln Ω(E).
    pub fn dln_omega(&self, e: f64) -> Result<f64> {
        if let Some((a, nu, v)) = self.as_power_law() {
            if !(e > 0.0) {
                return Err(CoreError::Domain(format!("∂ ln Ω: E = {e} ≤ 0")));
            }
            return Ok(a * v.powf(1.0 - nu) * nu * e.powf(nu - 1.0));
        }
        self.interp(e).map(|(_, d, _)| d)
    }

    /// ∂²_E ln Ω(E).
    pub fn d2ln_omega(&self, e: f64) -> Result<f64> {
        if let Some((a, nu, v)) = self.as_power_law() {
            if !(e > 0.0) {
                return Err(CoreError::Domain(format!("∂² ln Ω: E = {e} ≤ 0")));
            }
            return Ok(a * v.powf(1.0 - nu) * nu * (nu - 1.0) * e.powf(nu - 2.0));
        }
        self.interp(e).map(|(_, _, d2)| d2)
    }

    /// Value and central-difference derivatives from the local quadratic
    /// through the three nearest table points.
    fn interp(&self, e: f64) -> Result<(f64, f64, f64)> {
        let DoSModel::Tabulated { table } = self else {
            unreachable!()
        };
        let n = table.len();
        if e < table[0].0 || e > table[n - 1].0 {
            return Err(CoreError::Domain(format!(
                "tabulated DoS queried at E = {e} outside [{}, {}]",
                table[0].0,
                table[n - 1].0
            )));
        }
        // Center the 3-point stencil on the nearest table node.
        let idx = table.partition_point(|&(x, _)| x <= e).clamp(1, n - 1);
        let nearest = if (e - table[idx - 1].0).abs() <= (table[idx].0 - e).abs() {
            idx - 1
        } else {
            idx
        };
        let mid = nearest.clamp(1, n - 2);
        let (x0, y0) = table[mid - 1];
        let (x1, y1) = table[mid];
        let (x2, y2) = table[mid + 1];
        // Lagrange quadratic through the three points.
        let d0 = y0 / ((x0 - x1) * (x0 - x2));
        let d1 = y1 / ((x1 - x0) * (x1 - x2));
        let d2 = y2 / ((x2 - x0) * (x2 - x1));
        let value = d0 * (e - x1) * (e - x2) + d1 * (e - x0) * (e - x2) + d2 * (e - x0) * (e - x1);
        let deriv = d0 * (2.0 * e - x1 - x2) + d1 * (2.0 * e - x0 - x2) + d2 * (2.0 * e - x0 - x1);
        let second = 2.0 * (d0 + d1 + d2);
        Ok((value, deriv, second))
    }

    fn domain(&self) -> (f64, f64) {
        match self {
            DoSModel::Tabulated { table } => (table[0].0, table[table.len() - 1].0),
            _ => (0.0, f64::INFINITY),
        }
    }
}

/// Parameters of a cooling task: initial and final ranks, gap, bath
/// temperature and worst-case work budget.
#[derive(Debug, Clone)]
pub struct CoolingTask {
    pub d_s: u32,
    pub g: u32,
    pub delta: f64,
    pub temperature: f64,
    pub w_wc: f64,
}

impl CoolingTask {
    pub fn new(d_s: u32, g: u32, delta: f64, temperature: f64, w_wc: f64) -> Result<Self> {
        if d_s == 0 || g == 0 || g > d_s {
            return Err(CoreError::InvalidInput(format!(
                "CoolingTask: need 1 ≤ g ≤ d_S, got g = {g}, d_S = {d_s}"
            )));
        }
        if !(delta > 0.0 && temperature > 0.0 && w_wc > 0.0) {
            return Err(CoreError::InvalidInput(
                "CoolingTask: delta, temperature, w_wc must be > 0".into(),
            ));
        }
        Ok(Self { d_s, g, delta, temperature, w_wc })
    }

    /// ln(2 d_S / 3g), the rank factor entering the work-constrained bounds.
    fn log_rank_factor(&self) -> Result<f64> {
        let arg = 2.0 * self.d_s as f64 / (3.0 * self.g as f64);
        if arg <= 1.0 {
            return Err(CoreError::Domain(format!(
                "2 d_S / 3g = {arg} ≤ 1; the work-constrained bound is vacuous"
            )));
        }
        Ok(arg.ln())
    }
}

/// Minimum final temperature implied by a cooling error ε:
/// T' ≥ Δ / ln(d_S / (g ε)).
pub fn temperature_from_error(task: &CoolingTask, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(CoreError::Domain(format!("epsilon = {epsilon} outside (0, 1)")));
    }
    let arg = task.d_s as f64 / (task.g as f64 * epsilon);
    if arg <= 1.0 {
        return Err(CoreError::Domain(format!(
            "d_S/(g ε) = {arg} ≤ 1; the temperature bound is vacuous"
        )));
    }
    Ok(task.delta / arg.ln())
}

/// Micro-canonical heat capacity C_B(E) = −(∂_E ln Ω)² / ∂²_E ln Ω.
pub fn heat_capacity(dos: &DoSModel, e: f64) -> Result<f64> {
    let d1 = dos.dln_omega(e)?;
    let d2 = dos.d2ln_omega(e)?;
    if d2.abs() < 1e-300 {
        return Err(CoreError::ModelInvalid(
            "heat_capacity: vanishing entropy curvature (singular capacity)".into(),
        ));
    }
    Ok(-d1 * d1 / d2)
}

/// Result of the work-constrained error bound.
#[derive(Debug, Clone)]
pub struct WorkConstrainedBound {
    /// Leading-order minimum cooling error e^{−E₀/T}.
    pub epsilon_min: f64,
    /// ln of the leading-order bound (finite even when ε underflows).
    pub log_epsilon_min: f64,
    /// Root of ∂_E ln Ω(E₀) = ln(2 d_S/3g) / W_wc.
    pub e0: f64,
    /// Full prefactor variant Ω(E₀) e^{−E₀/T} / tr e^{−H_B/T} with the
    /// partition function from Laplace-window quadrature. Diagnostic only;
    /// coincides with `epsilon_min` at leading order in W_wc.
    pub epsilon_with_prefactor: f64,
    /// ln Z of the bath at the task temperature.
    pub log_z_bath: f64,
    /// True when W_wc is comfortably inside the leading-order regime
    /// (W_wc ≥ 10 T and W_wc ≥ 10 Δ).
    pub regime_valid: bool,
}

/// Work-constrained minimum cooling error for a bath with density of states
/// Ω(E): solves the implicit equation for E₀ by a bracketed root-finder and
/// evaluates the bound.
pub fn masanes_error_bound(task: &CoolingTask, dos: &DoSModel) -> Result<WorkConstrainedBound> {
    let target = task.log_rank_factor()? / task.w_wc;
    let e0 = solve_dln_omega(dos, target)?;

    // Concavity of ln Ω at the root; non-concave models have no valid bound.
    let d2 = dos.d2ln_omega(e0)?;
    if d2 >= 0.0 {
        return Err(CoreError::ModelInvalid(
            "masanes_error_bound: ln Ω not strictly concave at E₀".into(),
        ));
    }

    let t = task.temperature;
    let log_eps = -e0 / t;
    let log_z = log_partition_function(dos, t)?;
    let log_full = dos.ln_omega(e0)? + log_eps - log_z;

    Ok(WorkConstrainedBound {
        epsilon_min: log_eps.exp(),
        log_epsilon_min: log_eps,
        e0,
        epsilon_with_prefactor: log_full.exp(),
        log_z_bath: log_z,
        regime_valid: task.w_wc >= 10.0 * t && task.w_wc >= 10.0 * task.delta,
    })
}

/// Solve ∂_E ln Ω(E) = target for E.
fn solve_dln_omega(dos: &DoSModel, target: f64) -> Result<f64> {
    if !(target > 0.0) {
        return Err(CoreError::Domain(format!(
            "entropy-derivative target {target} must be > 0"
        )));
    }
    let opts = RootOptions::default();
    match dos {
        DoSModel::Tabulated { table } => {
            let lo = table[0].0;
            let hi = table[table.len() - 1].0;
            bracketed_root(|e| dos.dln_omega(e).unwrap_or(f64::NAN) - target, lo, hi, &opts)
        }
        _ => {
            // ∂ ln Ω is monotone decreasing on (0, ∞) for 0 < ν < 1.
            let (a, nu, v) = dos.as_power_law().unwrap();
            let guess = (a * v.powf(1.0 - nu) * nu / target).powf(1.0 / (1.0 - nu));
            positive_axis_root(|e| dos.dln_omega(e).unwrap_or(f64::NAN) - target, guess.max(1e-12), &opts)
        }
    }
}

/// ln tr e^{−H_B/T} for a continuum bath, via adaptive quadrature of
/// ∫ Ω(E) e^{−E/T} dE around the Laplace point of the integrand
/// (∂_E ln Ω(E*) = 1/T) plus the residual tail.
pub fn log_partition_function(dos: &DoSModel, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(CoreError::InvalidInput("log_partition_function: T must be > 0".into()));
    }
    let e_star = solve_dln_omega(dos, 1.0 / t)?;
    let h_star = dos.ln_omega(e_star)? - e_star / t;
    let curvature = dos.d2ln_omega(e_star)?;
    if curvature >= 0.0 {
        return Err(CoreError::ModelInvalid(
            "log_partition_function: integrand maximum is not a peak".into(),
        ));
    }
    let sigma = (-1.0 / curvature).sqrt();
    let (dom_lo, dom_hi) = dos.domain();
    let lo = (e_star - 40.0 * sigma).max(dom_lo);
    let window_hi = e_star + 40.0 * sigma;
    let opts = QuadOptions { rel_tol: 1e-10, ..QuadOptions::default() };
    let body = |e: f64| (dos.ln_omega(e).unwrap_or(f64::NEG_INFINITY) - e / t - h_star).exp();

    let mut integral = 0.0;
    if dom_hi.is_finite() {
        let hi = window_hi.min(dom_hi);
        integral += integrate_scalar(body, lo, Upper::Finite(hi), &[e_star], &opts)?.value;
    } else {
        integral += integrate_scalar(body, lo, Upper::Finite(window_hi), &[e_star], &opts)?.value;
        // The tail beyond the Laplace window decays at least exponentially.
        integral += integrate_scalar(body, window_hi, Upper::Infinite { scale: t }, &[], &opts)?.value;
    }
    if !(integral > 0.0) {
        return Err(CoreError::Accuracy("log_partition_function: vanishing integral".into()));
    }
    Ok(h_star + integral.ln())
}

/// Closed-form error bound for the extensive power-law bath family:
/// ε ≥ exp[−(V/T)(aνW_wc / ln(2d_S/3g))^{1/(1−ν)}].
pub fn bath_family_error_bound(task: &CoolingTask, a: f64, nu: f64, v: f64) -> Result<f64> {
    Ok(bath_family_log_error_bound(task, a, nu, v)?.exp())
}

/// ln of `bath_family_error_bound`; finite even deep in the underflow range.
pub fn bath_family_log_error_bound(task: &CoolingTask, a: f64, nu: f64, v: f64) -> Result<f64> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(CoreError::Domain(format!("bath_family: nu = {nu} outside (0, 1)")));
    }
    if !(a > 0.0 && v > 0.0) {
        return Err(CoreError::Domain("bath_family: a and V must be > 0".into()));
    }
    let l = task.log_rank_factor()?;
    let base = a * nu * task.w_wc / l;
    Ok(-(v / task.temperature) * base.powf(1.0 / (1.0 - nu)))
}

/// Result of the radiation-bath temperature bound with its regime note.
#[derive(Debug, Clone)]
pub struct RadiationBound {
    pub t_prime_min: f64,
    /// The closed form is the leading order for large V and large W_wc⁴.
    pub regime_large_v_and_w: bool,
}

/// T' ≥ (15 c³ħ³/π²)·ln⁴(2d_S/3g)·TΔ/(V W_wc⁴) with c = ħ = 1.
pub fn radiation_temperature_bound(task: &CoolingTask, v: f64) -> Result<RadiationBound> {
    if !(v > 0.0) {
        return Err(CoreError::InvalidInput("radiation bound: V must be > 0".into()));
    }
    let l = task.log_rank_factor()?;
    let t_prime = 15.0 / (std::f64::consts::PI * std::f64::consts::PI)
        * l.powi(4)
        * task.temperature
        * task.delta
        / (v * task.w_wc.powi(4));
    Ok(RadiationBound {
        t_prime_min: t_prime,
        regime_large_v_and_w: task.w_wc >= 10.0 * task.temperature && task.w_wc >= 10.0 * task.delta,
    })
}

/// Time-parametrized unattainability bound: with W_wc = w_rate·t and
/// V = (c_speed·t)³ the radiation bound scales as t⁻⁷.
pub fn time_scaling_bound(task: &CoolingTask, t: f64, w_rate: f64, c_speed: f64) -> Result<f64> {
    if !(t > 0.0 && w_rate > 0.0 && c_speed > 0.0) {
        return Err(CoreError::InvalidInput("time_scaling_bound: inputs must be > 0".into()));
    }
    let scaled = CoolingTask { w_wc: w_rate * t, ..task.clone() };
    let v = (c_speed * t).powi(3);
    Ok(radiation_temperature_bound(&scaled, v)?.t_prime_min)
}

/// Lower bound on the smallest eigenvalue after contact with a bath of
/// energy range J_B: λ_min(ρ') ≥ e^{−β J_B} λ_min(ρ).
pub fn landauer_purity_bound(lambda_min_in: f64, beta: f64, j_b: f64) -> Result<f64> {
    if !(lambda_min_in > 0.0 && lambda_min_in <= 1.0) {
        return Err(CoreError::InvalidInput(format!(
            "landauer_purity_bound: λ_min = {lambda_min_in} outside (0, 1]"
        )));
    }
    if beta < 0.0 || j_b < 0.0 {
        return Err(CoreError::InvalidInput("landauer_purity_bound: beta and J_B must be ≥ 0".into()));
    }
    Ok((-beta * j_b).exp() * lambda_min_in)
}

/// Sampling verification of the purity bound: Haar-random global unitaries
/// acting on system ⊗ thermal bath must never push the smallest eigenvalue
/// below e^{−βJ_B} λ_min(ρ_S) − slack. Returns the number of violations.
pub fn landauer_brute_force_oracle(
    dim_s: usize,
    dim_b: usize,
    beta: f64,
    trials: usize,
    seed: u64,
) -> Result<usize> {
    if !(2..=4).contains(&dim_s) || !(2..=6).contains(&dim_b) {
        return Err(CoreError::InvalidInput(
            "landauer oracle: dims restricted to 2 ≤ dim_S ≤ 4, 2 ≤ dim_B ≤ 6".into(),
        ));
    }
    if beta < 0.0 {
        return Err(CoreError::InvalidInput("landauer oracle: beta must be ≥ 0".into()));
    }
    const SLACK: f64 = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    for _ in 0..trials {
        let h_b = random_hermitian(&mut rng, dim_b);
        let evals = linalg::eigh(&h_b).0;
        let j_b = evals[dim_b - 1] - evals[0];
        let bath = if beta > 0.0 {
            thermal_state(&HamiltonianSpec::new(h_b)?, beta)?
        } else {
            DensityMatrix::maximally_mixed(dim_b)
        };
        let rho_s = random_density(&mut rng, dim_s);
        let lambda_in = rho_s.min_eigenvalue();
        let u = linalg::haar_unitary(&mut rng, dim_s * dim_b);
        let joint = rho_s.tensor(&bath);
        let evolved = &u * joint.matrix() * u.adjoint();
        let reduced = linalg::partial_trace(&evolved, &[dim_s, dim_b], &[0])?;
        let lambda_out = linalg::min_eigval(&reduced);
        if lambda_out < (-beta * j_b).exp() * lambda_in - SLACK {
            violations += 1;
        }
    }
    Ok(violations)
}

fn random_hermitian<R: rand::Rng>(rng: &mut R, dim: usize) -> CMatrix {
    use num_complex::Complex64;
    use rand_distr::StandardNormal;
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    (&g + g.adjoint()).scale(0.5)
}

fn random_density<R: rand::Rng>(rng: &mut R, dim: usize) -> DensityMatrix {
    use num_complex::Complex64;
    use rand_distr::StandardNormal;
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let m = &g * g.adjoint();
    let tr = linalg::trace(&m).re;
    DensityMatrix::new(m / Complex64::new(tr, 0.0)).expect("Wishart matrix is a valid state")
}

/// Final-temperature bound for energy-conserving unitaries with a
/// finite-dimensional bath: T' ≥ TΔ/(J_B + T ln d_B).
pub fn scharlau_bound(t: f64, delta: f64, j_b: f64, d_b: u32) -> Result<f64> {
    if !(t > 0.0 && delta > 0.0 && j_b > 0.0) || d_b == 0 {
        return Err(CoreError::InvalidInput("scharlau_bound: inputs must be positive".into()));
    }
    Ok(t * delta / (j_b + t * (d_b as f64).ln()))
}

/// Final-temperature bound with arbitrary unitaries: T' ≥ TΔ/J_B.
pub fn allahverdyan_bound(t: f64, delta: f64, j_b: f64) -> Result<f64> {
    if !(t > 0.0 && delta > 0.0 && j_b > 0.0) {
        return Err(CoreError::InvalidInput("allahverdyan_bound: inputs must be positive".into()));
    }
    Ok(t * delta / j_b)
}

/// Necessary vacancy condition for cooling: the resource must carry at least
/// as much vacancy as the target state requires.
pub fn cooling_necessary_condition(resource_vacancy: f64, target_vacancy: f64) -> bool {
    resource_vacancy >= target_vacancy
}

/// Work-qubit criterion: cooling to the ground state with a pure work qubit
/// of energy W is possible whenever W > ln Z_β(H_S), strictly.
pub fn work_qubit_cooling_possible(w: f64, h_s: &HamiltonianSpec, beta: f64) -> Result<bool> {
    if !(beta > 0.0) {
        return Err(CoreError::InvalidInput("work_qubit: beta must be > 0".into()));
    }
    Ok(w > h_s.log_partition(beta))
}
