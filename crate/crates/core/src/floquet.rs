//! Floquet coefficients A_k(ω) of the asymptotic Green's function of a
//! periodically driven damped network.
//!
//! The two-time Green's function of a stable driven network decomposes as
//!
//! G(t,t') = (1/2π) Σ_k ∫ dω A_k(ω) e^{iω(t−t')} e^{ikω_d t},
//!
//! and the coefficients solve the block-banded linear system
//!
//! D(ω + kω_d) A_k(ω) + Σ_{m≠0} V_m A_{k−m}(ω) = δ_{k,0}·1,
//!
//! where D(ν) is the inverse undriven propagator. The solver exploits the
//! block-tridiagonal structure of purely harmonic driving and falls back to
//! a dense assembly for higher harmonics.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::linalg::{self, CMatrix, RMatrix};
use crate::network::{renormalized_potential, DampingBackend, NetworkSpec};
use crate::quad::{self, QuadOptions, Upper};

/// Relative singular-value floor below which D(ω) counts as a real-axis pole.
const POLE_TOL: f64 = 1e-12;
/// Harmonic-balance condition numbers above this flag a near-resonance.
pub const CONDITION_THRESHOLD: f64 = 1e12;
/// Truncation cap for the automatic harmonic range.
pub const K_MAX: usize = 25;

/// Which formula produced a set of coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FloquetMethod {
    Perturbative,
    HarmonicBalance,
}

/// Reusable solver handle: network + damping + truncation range.
#[derive(Debug, Clone)]
pub struct FloquetContext {
    net: NetworkSpec,
    damping: DampingBackend,
    k_range: usize,
    v_complex: BTreeMap<i32, CMatrix>,
    v_r: RMatrix,
}

/// Coefficients A_k(ω) at a single frequency, k ∈ [−k_range, k_range].
#[derive(Debug, Clone)]
pub struct FloquetCoeffs {
    pub omega: f64,
    pub k_range: usize,
    mats: Vec<CMatrix>,
}

impl FloquetCoeffs {
    /// A_k(ω); zero matrix for |k| beyond the truncation.
    pub fn a(&self, k: i32) -> CMatrix {
        let kr = self.k_range as i32;
        if k.abs() > kr {
            let n = self.mats[0].nrows();
            return CMatrix::zeros(n, n);
        }
        self.mats[(k + kr) as usize].clone()
    }

    pub fn a_ref(&self, k: i32) -> Option<&CMatrix> {
        let kr = self.k_range as i32;
        if k.abs() > kr {
            None
        } else {
            Some(&self.mats[(k + kr) as usize])
        }
    }
}

impl FloquetContext {
    pub fn new(net: &NetworkSpec, damping: &DampingBackend, k_range: usize) -> Result<Self> {
        if net.is_driven() && (k_range as i32) < net.max_harmonic() {
            return Err(CoreError::InvalidInput(format!(
                "FloquetContext: k_range {k_range} below the highest drive harmonic {}",
                net.max_harmonic()
            )));
        }
        let v_complex = net
            .vk()
            .iter()
            .map(|(&k, m)| (k, linalg::to_complex(m)))
            .collect();
        let v_r = renormalized_potential(net, damping);
        Ok(Self {
            net: net.clone(),
            damping: damping.clone(),
            k_range: if net.is_driven() { k_range } else { 0 },
            v_complex,
            v_r,
        })
    }

    pub fn network(&self) -> &NetworkSpec {
        &self.net
    }

    pub fn damping(&self) -> &DampingBackend {
        &self.damping
    }

    pub fn k_range(&self) -> usize {
        self.k_range
    }

    /// Inverse undriven propagator D(ν) = ĝ(iν)⁻¹.
    pub fn d_matrix(&self, nu: f64) -> CMatrix {
        let n = self.net.n_nodes();
        match &self.damping {
            DampingBackend::MarkovianOhmic { .. } => {
                let gamma_hat = self.damping.gamma_hat(nu, n);
                let mut d = linalg::to_complex(&self.v_r);
                let m = self.net.masses();
                for i in 0..n {
                    d[(i, i)] -= Complex64::new(nu * nu * m[i], 0.0);
                }
                d + gamma_hat * Complex64::new(0.0, nu)
            }
            DampingBackend::Phenomenological { gamma, omega0 } => {
                let z = Complex64::new(nu, -gamma);
                let val = z * z - omega0 * omega0;
                CMatrix::identity(n, n) * val
            }
        }
    }

    /// Undriven propagator ĝ(iν) with real-axis pole detection.
    pub fn propagator(&self, nu: f64) -> Result<CMatrix> {
        let d = self.d_matrix(nu);
        let inv = linalg::solve_lu(d.clone(), linalg::identity_c(self.net.n_nodes()))
            .map_err(|_| pole_error(nu))?;
        if linalg::condition_inf(&d, &inv) > 1.0 / POLE_TOL {
            return Err(pole_error(nu));
        }
        Ok(inv)
    }

    /// Weak-driving coefficients: A_0 = ĝ(iω),
    /// A_k = −ĝ(i(ω+kω_d))·V_k·ĝ(iω) for every harmonic in the drive.
    pub fn perturbative(&self, omega: f64) -> Result<FloquetCoeffs> {
        let g0 = self.propagator(omega)?;
        let kr = self.k_range as i32;
        let n = self.net.n_nodes();
        let mut mats = vec![CMatrix::zeros(n, n); 2 * self.k_range + 1];
        mats[self.k_range] = g0.clone();
        if let Some(w_d) = self.net.omega_d() {
            for (&k, vk) in &self.v_complex {
                if k.abs() > kr {
                    continue;
                }
                let g_shift = self.propagator(omega + k as f64 * w_d)?;
                mats[(k + kr) as usize] = -(&g_shift * vk * &g0);
            }
        }
        Ok(FloquetCoeffs { omega, k_range: self.k_range, mats })
    }

    /// True when the drive is weak enough for the perturbative formula.
    pub fn weak_drive(&self) -> bool {
        self.net.drive_ratio() <= 0.1
    }

    /// Harmonic-balance coefficients at ω (fast path, no condition number).
    pub fn coeffs(&self, omega: f64) -> Result<FloquetCoeffs> {
        if !self.net.is_driven() {
            let g = self.propagator(omega)?;
            return Ok(FloquetCoeffs { omega, k_range: 0, mats: vec![g] });
        }
        if self.net.max_harmonic() == 1 {
            self.solve_block_tridiagonal(omega)
        } else {
            Ok(self.solve_dense(omega)?.0)
        }
    }

    /// Harmonic-balance coefficients plus the condition number of the full
    /// block system (dense assembly).
    pub fn coeffs_with_condition(&self, omega: f64) -> Result<(FloquetCoeffs, f64)> {
        if !self.net.is_driven() {
            let d = self.d_matrix(omega);
            let cond = linalg::condition_number(&d);
            let g = self.propagator(omega)?;
            return Ok((FloquetCoeffs { omega, k_range: 0, mats: vec![g] }, cond));
        }
        self.solve_dense(omega)
    }

    /// Thomas elimination on the block-tridiagonal system of purely
    /// harmonic driving (V_{±1} only).
    fn solve_block_tridiagonal(&self, omega: f64) -> Result<FloquetCoeffs> {
        let n = self.net.n_nodes();
        let kr = self.k_range as i32;
        let w_d = self.net.omega_d().expect("driven network has omega_d");
        let v1 = &self.v_complex[&1];
        let nblocks = 2 * self.k_range + 1;
        let rhs_index = self.k_range; // block holding δ_{k,0}·1

        // Forward sweep.
        let mut c_tilde: Vec<CMatrix> = Vec::with_capacity(nblocks);
        let mut r_tilde: Vec<CMatrix> = Vec::with_capacity(nblocks);
        for i in 0..nblocks {
            let k = i as i32 - kr;
            let d_k = self.d_matrix(omega + k as f64 * w_d);
            let denom = if i == 0 {
                d_k
            } else {
                d_k - v1 * &c_tilde[i - 1]
            };
            let rhs_i = if i == rhs_index {
                linalg::identity_c(n)
            } else {
                CMatrix::zeros(n, n)
            };
            let rhs_corr = if i == 0 {
                rhs_i
            } else {
                rhs_i - v1 * &r_tilde[i - 1]
            };
            let lu = denom.lu();
            let ct = if i + 1 < nblocks {
                lu.solve(v1).ok_or_else(|| near_resonance(omega))?
            } else {
                CMatrix::zeros(n, n)
            };
            let rt = lu.solve(&rhs_corr).ok_or_else(|| near_resonance(omega))?;
            c_tilde.push(ct);
            r_tilde.push(rt);
        }
        // Back substitution.
        let mut mats = vec![CMatrix::zeros(n, n); nblocks];
        mats[nblocks - 1] = r_tilde[nblocks - 1].clone();
        for i in (0..nblocks - 1).rev() {
            mats[i] = &r_tilde[i] - &c_tilde[i] * &mats[i + 1];
        }
        Ok(FloquetCoeffs { omega, k_range: self.k_range, mats })
    }

    /// Dense assembly of the block system; returns the condition number too.
    fn solve_dense(&self, omega: f64) -> Result<(FloquetCoeffs, f64)> {
        let n = self.net.n_nodes();
        let kr = self.k_range as i32;
        let w_d = self.net.omega_d().expect("driven network has omega_d");
        let nblocks = 2 * self.k_range + 1;
        let size = nblocks * n;
        let mut big = CMatrix::zeros(size, size);
        for bi in 0..nblocks {
            let k = bi as i32 - kr;
            let d_k = self.d_matrix(omega + k as f64 * w_d);
            big.view_mut((bi * n, bi * n), (n, n)).copy_from(&d_k);
            for (&m, vm) in &self.v_complex {
                let j = k - m;
                if j.abs() <= kr {
                    let bj = (j + kr) as usize;
                    let mut view = big.view_mut((bi * n, bj * n), (n, n));
                    view += vm;
                }
            }
        }
        let cond = linalg::condition_number(&big);
        if cond > CONDITION_THRESHOLD {
            return Err(near_resonance(omega));
        }
        let mut rhs = CMatrix::zeros(size, n);
        rhs.view_mut((self.k_range * n, 0), (n, n))
            .copy_from(&linalg::identity_c(n));
        let sol = linalg::solve_lu(big, rhs)?;
        let mats = (0..nblocks)
            .map(|bi| sol.view((bi * n, 0), (n, n)).into_owned())
            .collect();
        Ok((FloquetCoeffs { omega, k_range: self.k_range, mats }, cond))
    }
}

fn near_resonance(omega: f64) -> CoreError {
    CoreError::Instability(format!(
        "harmonic-balance system near-singular at ω = {omega} (parametric resonance?)"
    ))
}

fn pole_error(nu: f64) -> CoreError {
    CoreError::Instability(format!(
        "undriven propagator singular at ω = {nu} (marginally stable network)"
    ))
}

/// Truncation range for the harmonic-balance system: start at
/// max(3, 3·max|k|) and double until A_{±1} stops moving or the cap is hit.
pub fn auto_k_range(net: &NetworkSpec, damping: &DampingBackend, probes: &[f64]) -> Result<usize> {
    if !net.is_driven() {
        return Ok(0);
    }
    let mut k = (3 * net.max_harmonic() as usize).clamp(3, K_MAX);
    loop {
        let next = (2 * k).min(K_MAX);
        if next == k {
            return Ok(k);
        }
        let ctx_a = FloquetContext::new(net, damping, k)?;
        let ctx_b = FloquetContext::new(net, damping, next)?;
        let mut worst: f64 = 0.0;
        for &w in probes {
            let ca = ctx_a.coeffs(w)?;
            let cb = ctx_b.coeffs(w)?;
            for kk in [-1i32, 1] {
                let delta = (ca.a(kk) - cb.a(kk)).norm();
                let scale = cb.a(kk).norm().max(1e-300);
                worst = worst.max(delta / scale);
            }
        }
        if worst < 1e-8 {
            return Ok(next);
        }
        k = next;
    }
}

/// Materialized coefficients on a frequency grid plus stability metadata.
#[derive(Debug, Clone)]
pub struct FloquetSolution {
    pub k_range: usize,
    pub grid: Vec<f64>,
    /// coeffs[grid index][k + k_range]
    pub coeffs: Vec<FloquetCoeffs>,
    pub method: FloquetMethod,
    pub stable: bool,
    pub condition_numbers: Vec<f64>,
}

impl FloquetSolution {
    pub fn a(&self, k: i32, grid_idx: usize) -> CMatrix {
        self.coeffs[grid_idx].a(k)
    }
}

/// Solve on an explicit grid with the requested method.
pub fn solve_on_grid(
    net: &NetworkSpec,
    damping: &DampingBackend,
    grid: &[f64],
    k_range: usize,
    method: FloquetMethod,
) -> Result<FloquetSolution> {
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CoreError::InvalidInput("solve_on_grid: grid must be strictly increasing".into()));
    }
    let ctx = FloquetContext::new(net, damping, k_range)?;
    let mut coeffs = Vec::with_capacity(grid.len());
    let mut conds = Vec::with_capacity(grid.len());
    let mut stable = true;
    for &w in grid {
        match method {
            FloquetMethod::Perturbative => {
                coeffs.push(ctx.perturbative(w)?);
                conds.push(f64::NAN);
            }
            FloquetMethod::HarmonicBalance => match ctx.coeffs_with_condition(w) {
                Ok((c, cond)) => {
                    coeffs.push(c);
                    conds.push(cond);
                }
                Err(CoreError::Instability(_)) => {
                    stable = false;
                    coeffs.push(ctx.perturbative(w)?);
                    conds.push(f64::INFINITY);
                }
                Err(e) => return Err(e),
            },
        }
    }
    Ok(FloquetSolution {
        k_range: ctx.k_range(),
        grid: grid.to_vec(),
        coeffs,
        method,
        stable,
        condition_numbers: conds,
    })
}

/// Stability diagnostics over a frequency grid.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub stable: bool,
    /// Frequency of the worst harmonic-balance condition number.
    pub worst_omega: f64,
    pub max_condition: f64,
    /// Grid frequency at which the undriven propagator is singular, if any.
    pub real_axis_pole: Option<f64>,
    /// The renormalized potential must be positive definite; an inverted
    /// mode grows exponentially without ever producing a real-axis pole.
    pub potential_positive_definite: bool,
}

/// Checks positive definiteness of the renormalized potential, real-axis
/// poles of the undriven propagator and near-singular harmonic-balance
/// systems across the grid.
pub fn stability_check(
    net: &NetworkSpec,
    damping: &DampingBackend,
    omega_grid: &[f64],
    k_range: usize,
) -> Result<StabilityReport> {
    let ctx = FloquetContext::new(net, damping, k_range)?;
    let positive_definite = {
        let vr = renormalized_potential(net, damping);
        let mut w = vr;
        let m = net.masses();
        for i in 0..net.n_nodes() {
            for j in 0..net.n_nodes() {
                w[(i, j)] /= (m[i] * m[j]).sqrt();
            }
        }
        linalg::eigvals_sym(&w)[0] > 0.0
    };
    let mut pole = None;
    let mut max_cond: f64 = 0.0;
    let mut worst_omega = f64::NAN;
    for &w in omega_grid {
        if pole.is_none() && ctx.propagator(w).is_err() {
            pole = Some(w);
        }
        let cond = if net.is_driven() {
            match ctx.coeffs_with_condition(w) {
                Ok((_, c)) => c,
                Err(CoreError::Instability(_)) => f64::INFINITY,
                Err(e) => return Err(e),
            }
        } else {
            linalg::condition_number(&ctx.d_matrix(w))
        };
        if cond > max_cond {
            max_cond = cond;
            worst_omega = w;
        }
    }
    Ok(StabilityReport {
        stable: positive_definite && pole.is_none() && max_cond <= CONDITION_THRESHOLD,
        worst_omega,
        max_condition: max_cond,
        real_axis_pole: pole,
        potential_positive_definite: positive_definite,
    })
}

/// Frequency grid clustered around the shifted resonances |±Ω_r + kω_d|.
pub fn default_omega_grid(net: &NetworkSpec, damping: &DampingBackend, k_range: usize) -> Vec<f64> {
    let resonances = crate::network::resonance_frequencies(net, damping);
    let gamma = damping.damping_scale(net.n_nodes()).max(1e-9);
    let w_d = net.omega_d().unwrap_or(0.0);
    let top = resonances.iter().cloned().fold(1.0_f64, f64::max);
    let omega_max = top + (k_range as f64 + 1.0) * w_d + 10.0 * top;

    let mut pts: Vec<f64> = Vec::new();
    // Linear backbone.
    let backbone = 64;
    for i in 1..=backbone {
        pts.push(omega_max * i as f64 / backbone as f64);
    }
    // Clusters around every shifted resonance.
    let offsets = [0.0, 1.0, -1.0, 2.0, -2.0, 5.0, -5.0, 10.0, -10.0, 30.0, -30.0];
    for &r in &resonances {
        for k in -(k_range as i32)..=(k_range as i32) {
            for &sgn in &[1.0, -1.0] {
                let center = sgn * r + k as f64 * w_d;
                for &o in &offsets {
                    let w = center.abs() + o * gamma;
                    if w > 0.0 && w < omega_max {
                        pts.push(w);
                    }
                }
            }
        }
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    pts
}

/// Value of a Green's-function reconstruction with its truncation bound.
#[derive(Debug, Clone)]
pub struct GreensValue {
    pub value: RMatrix,
    /// Bound on the neglected |ω| > ω_max tail; a large value signals
    /// insufficient coverage.
    pub tail_bound: f64,
}

/// Numerically invert the Floquet decomposition to recover G(t, t').
///
/// Validation tool: folds the ω < 0 half onto [0, ∞) through the conjugation
/// symmetry of the coefficients. The slowly decaying −M⁻¹/ω² part of A_0 is
/// removed with a Lorentzian reference whose transform is known in closed
/// form, so the numeric integrand decays like ω⁻³ and the truncation at
/// `omega_max` (auto-chosen when None) is benign.
pub fn greens_time_domain(
    ctx: &FloquetContext,
    t: f64,
    t_prime: f64,
    omega_max: Option<f64>,
) -> Result<GreensValue> {
    let tau = t - t_prime;
    let n = ctx.network().n_nodes();
    let resonances = crate::network::resonance_frequencies(ctx.network(), ctx.damping());
    let top = resonances.iter().cloned().fold(1.0_f64, f64::max);
    let omega_max = omega_max.unwrap_or(200.0 * top);
    // Reference width for the subtracted Lorentzian.
    let w_ref = 3.0 * top;
    let m_inv = {
        let mut m = RMatrix::zeros(n, n);
        for (i, &mass) in ctx.network().masses().iter().enumerate() {
            m[(i, i)] = 1.0 / mass;
        }
        linalg::to_complex(&m)
    };
    // The phenomenological propagator carries the opposite overall sign, so
    // its large-ω behavior is +1/ω² instead of −M⁻¹/ω².
    let asym_sign = match ctx.damping() {
        DampingBackend::MarkovianOhmic { .. } => -1.0,
        DampingBackend::Phenomenological { .. } => 1.0,
    };

    let w_d = ctx.network().omega_d().unwrap_or(0.0);
    let kr = ctx.k_range() as i32;
    let gamma = ctx.damping().damping_scale(n);
    let mut breakpoints = vec![w_ref];
    for &r in &resonances {
        for k in -kr..=kr {
            for &sgn in &[1.0, -1.0] {
                let c = (sgn * r + k as f64 * w_d).abs();
                if c > 0.0 && c < omega_max {
                    breakpoints.push(c);
                    breakpoints.push(c + 5.0 * gamma);
                    breakpoints.push((c - 5.0 * gamma).max(1e-12));
                }
            }
        }
    }

    let opts = QuadOptions { rel_tol: 1e-9, ..QuadOptions::default() };
    let mut total = RMatrix::zeros(n, n);
    for k in -kr..=kr {
        let phase_t = Complex64::from_polar(1.0, k as f64 * w_d * t);
        let q = quad::integrate(
            |w: f64| {
                let coeffs = ctx.coeffs(w).expect("stable solution required");
                let osc = Complex64::from_polar(1.0, w * tau);
                let mut val = coeffs.a(k);
                if k == 0 {
                    // Remove the ω⁻² asymptote: A_0 − sign·(−M⁻¹)/(ω²+W²).
                    let lorentz = Complex64::new(-asym_sign / (w * w + w_ref * w_ref), 0.0);
                    val += &m_inv * lorentz;
                }
                val * (osc * phase_t)
            },
            0.0,
            Upper::Finite(omega_max),
            &breakpoints,
            &opts,
        )?;
        total += q.value.map(|z| z.re);
    }
    // Closed form of the subtracted piece:
    // (1/π)·Re ∫₀^∞ sign·(−M⁻¹) e^{iωτ}/(ω²+W²) dω = −sign·M⁻¹ e^{−W|τ|}/(2W).
    let correction = m_inv.map(|z| z.re) * (asym_sign * (-w_ref * tau.abs()).exp() / (2.0 * w_ref));
    let value = total / std::f64::consts::PI + correction;
    let mass_scale = ctx.network().masses().iter().fold(0.0_f64, |m, &x| m.max(1.0 / x));
    // Residual tail after subtraction decays like (W² + γω)/ω³.
    let tail_bound = mass_scale
        * (w_ref * w_ref / (2.0 * omega_max * omega_max) + gamma / omega_max)
        / std::f64::consts::PI;
    Ok(GreensValue { value, tail_bound })
}
