//! Heat currents of a driven network: the transfer-function decomposition
//! into resonant pumping (RP), resonant heating (RH) and non-resonant
//! heating (NRH), the covariance-based direct current, average power and
//! the first-law cross-check.
//!
//! Conventions: a positive heat current means energy flowing out of the
//! reservoir into the network (the reservoir is being cooled). The three
//! decomposition channels integrate the transfer function
//!
//! p^{(k)}_{αβ}(ω) = (π/2) tr[I_α(|ω+kω_d|) A_k(ω) I_β(ω) A_k†(ω)]
//!
//! against Planck factors; the direct route evaluates the period-averaged
//! Tr[P_α V(t) σ^{xp}(t) M⁻¹] through the Fourier coefficients of the
//! asymptotic covariance. The two agree for reservoirs attached to disjoint
//! site sets when the damping backend matches the spectral densities.

use std::cell::RefCell;
use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::floquet::{auto_k_range, default_omega_grid, stability_check, FloquetContext, StabilityReport};
use crate::linalg::{self, CMatrix, RMatrix};
use crate::network::{resonance_frequencies, DampingBackend, DensityKind, NetworkSpec, ReservoirSpec};
use crate::quad::{self, QuadOptions, Upper};

/// Bose-Einstein occupation N(ω, T) = 1/(e^{ω/T} − 1).
///
/// T = 0 returns 0; small ω/T is evaluated through expm1 so the 1/x pole is
/// accurate to machine precision.
pub fn planck_occupation(omega: f64, temperature: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(CoreError::Domain(format!("planck_occupation: ω = {omega} must be > 0")));
    }
    if temperature < 0.0 {
        return Err(CoreError::Domain("planck_occupation: T must be ≥ 0".into()));
    }
    Ok(planck_raw(omega, temperature))
}

fn planck_raw(omega: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        return 0.0;
    }
    let x = omega / temperature;
    if x > 700.0 {
        0.0
    } else {
        1.0 / x.exp_m1()
    }
}

/// coth(ω/2T) = 1 + 2N(ω, T); equals 1 at T = 0.
fn coth_half_raw(omega: f64, temperature: f64) -> f64 {
    1.0 + 2.0 * planck_raw(omega, temperature)
}

/// Numerical options of a heat-current simulation.
#[derive(Debug, Clone)]
pub struct SimOptions {
    /// Harmonic truncation; None selects the self-converged automatic range.
    pub k_range: Option<usize>,
    pub quad_rel_tol: f64,
    /// Required bound on |last k shell| / |value| of every k-sum.
    pub k_tail_tol: f64,
    /// Additional forced quadrature break-points (sharp user-known
    /// features the resonance scan cannot anticipate).
    pub extra_breakpoints: Vec<f64>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { k_range: None, quad_rel_tol: 1e-8, k_tail_tol: 1e-6, extra_breakpoints: Vec::new() }
    }
}

/// A fully specified transport problem: network, reservoirs, damping.
#[derive(Debug, Clone)]
pub struct Simulation {
    ctx: FloquetContext,
    reservoirs: Vec<ReservoirSpec>,
    weights_c: Vec<CMatrix>,
    options: SimOptions,
    resonances: Vec<f64>,
    disjoint_sites: bool,
    stability: StabilityReport,
}

/// Value of one heat-current channel with its accuracy metadata.
#[derive(Debug, Clone)]
pub struct HeatIntegral {
    pub value: f64,
    pub abs_error: f64,
    /// |contribution of the outermost k shell| / |value|.
    pub k_tail_ratio: f64,
}

/// Fourier coefficients of the asymptotic second moments on the harmonic
/// band |j − k| ≤ max drive harmonic.
#[derive(Debug, Clone)]
pub struct CovarianceCoeffs {
    /// S^{xx}_{jk}: σ^{xx}(t) = Re Σ S^{xx}_{jk} e^{iω_d (j−k) t}.
    pub s_xx: BTreeMap<(i32, i32), CMatrix>,
    /// S^{xp}_{jk} (momentum index on the right).
    pub s_xp: BTreeMap<(i32, i32), CMatrix>,
    /// S^{pp}_{jk}; empty when a density without UV cutoff makes the
    /// momentum variance logarithmically divergent.
    pub s_pp: BTreeMap<(i32, i32), CMatrix>,
    /// Raw integrals Z_{jk} = ½ Σ_β ∫ (ω+kω_d) A_j I_β A_k† coth dω, the
    /// common kernel of S^{xp} and the direct heat current.
    z_xp: BTreeMap<(i32, i32), CMatrix>,
    pub abs_error: f64,
}

impl CovarianceCoeffs {
    /// Equal-time σ^{xx}(t).
    pub fn sigma_xx(&self, t: f64, omega_d: f64) -> RMatrix {
        reconstruct(&self.s_xx, t, omega_d)
    }

    /// Equal-time σ^{xp}(t), symmetrized over indices.
    pub fn sigma_xp(&self, t: f64, omega_d: f64) -> RMatrix {
        let m = reconstruct(&self.s_xp, t, omega_d);
        (&m + m.transpose()) * 0.5
    }

    /// Equal-time σ^{pp}(t). Errors when the momentum variance is UV
    /// divergent (strict-ohmic density without cutoff).
    pub fn sigma_pp(&self, t: f64, omega_d: f64) -> Result<RMatrix> {
        if self.s_pp.is_empty() {
            return Err(CoreError::Contract(
                "σ^{pp} is UV divergent without a spectral-density cutoff".into(),
            ));
        }
        Ok(reconstruct(&self.s_pp, t, omega_d))
    }
}

fn reconstruct(map: &BTreeMap<(i32, i32), CMatrix>, t: f64, omega_d: f64) -> RMatrix {
    let n = map.values().next().map_or(0, |m| m.nrows());
    let mut acc = CMatrix::zeros(n, n);
    for (&(j, k), m) in map {
        let phase = Complex64::from_polar(1.0, omega_d * (j - k) as f64 * t);
        acc += m * phase;
    }
    acc.map(|z| z.re)
}

/// Per-reservoir entries of a heat-current report.
#[derive(Debug, Clone)]
pub struct ReservoirCurrents {
    pub label: String,
    pub q_rp: f64,
    pub q_rh: f64,
    pub q_nrh: f64,
    /// RP + RH + NRH.
    pub q_total: f64,
    /// Independent covariance-route value (None when reservoir sites
    /// overlap and the projector split is invalid).
    pub q_direct: Option<f64>,
    pub err_estimate: f64,
    pub k_tail_ratio: f64,
}

/// Heat currents of every reservoir plus the two power estimates.
#[derive(Debug, Clone)]
pub struct HeatCurrentReport {
    pub reservoirs: Vec<ReservoirCurrents>,
    /// Power from the first law, Ẇ = −Σ_α Q̇_α.
    pub power_balance: f64,
    /// Independent estimate Ẇ = avg ½ Tr[V̇(t) σ^{xx}(t)].
    pub power_direct: Option<f64>,
    /// |Ẇ_direct + Σ Q̇_α| / max |Q̇_α|; NaN when power_direct is absent.
    pub first_law_residual: f64,
    pub k_range: usize,
}

impl Simulation {
    pub fn new(
        network: NetworkSpec,
        reservoirs: Vec<ReservoirSpec>,
        damping: DampingBackend,
        options: SimOptions,
    ) -> Result<Self> {
        if reservoirs.is_empty() {
            return Err(CoreError::InvalidInput("Simulation: no reservoirs".into()));
        }
        let n = network.n_nodes();
        for r in &reservoirs {
            if r.projector.nrows() != n {
                return Err(CoreError::InvalidInput(format!(
                    "Simulation: reservoir {} projector does not match the network size",
                    r.label
                )));
            }
        }
        let mut disjoint = true;
        for i in 0..reservoirs.len() {
            for j in 0..i {
                let overlap = (&reservoirs[i].projector * &reservoirs[j].projector).amax();
                if overlap > 0.0 {
                    disjoint = false;
                }
            }
        }

        let resonances = resonance_frequencies(&network, &damping);
        let probes: Vec<f64> = {
            let mut p: Vec<f64> = resonances.clone();
            if let Some(wd) = network.omega_d() {
                p.push(wd);
                p.push(0.5 * wd);
            }
            p.push(resonances.iter().cloned().fold(1.0, f64::max) * 1.7);
            p
        };
        let k_range = match options.k_range {
            Some(k) => k,
            None => auto_k_range(&network, &damping, &probes)?,
        };
        let ctx = FloquetContext::new(&network, &damping, k_range)?;

        let grid = default_omega_grid(&network, &damping, k_range.min(3));
        let stability = stability_check(&network, &damping, &grid, k_range)?;

        let weights_c = reservoirs
            .iter()
            .map(|r| linalg::to_complex(&r.density.site_weights))
            .collect();

        Ok(Self { ctx, reservoirs, weights_c, options, resonances, disjoint_sites: disjoint, stability })
    }

    pub fn network(&self) -> &NetworkSpec {
        self.ctx.network()
    }

    pub fn reservoirs(&self) -> &[ReservoirSpec] {
        &self.reservoirs
    }

    pub fn k_range(&self) -> usize {
        self.ctx.k_range()
    }

    pub fn stability(&self) -> &StabilityReport {
        &self.stability
    }

    pub fn floquet(&self) -> &FloquetContext {
        &self.ctx
    }

    fn require_stable(&self) -> Result<()> {
        if !self.stability.stable {
            return Err(CoreError::Instability(format!(
                "simulation is not stable (worst condition {:.3e} at ω = {})",
                self.stability.max_condition, self.stability.worst_omega
            )));
        }
        Ok(())
    }

    fn omega_d(&self) -> f64 {
        self.network().omega_d().unwrap_or(0.0)
    }

    fn temperature_scale(&self) -> f64 {
        self.reservoirs.iter().map(|r| r.temperature).fold(0.0, f64::max)
    }

    fn infinite_scale(&self) -> f64 {
        let top = self.resonances.iter().cloned().fold(1.0, f64::max);
        (self.temperature_scale() * 5.0).max(top + (self.k_range() as f64 + 1.0) * self.omega_d())
    }

    /// Quadrature break-points: shifted resonances of every A_m block plus
    /// the kinks of tabulated densities.
    fn breakpoints(&self, shift: f64) -> Vec<f64> {
        let gamma = self.ctx.damping().damping_scale(self.network().n_nodes()).max(1e-12);
        let kr = self.k_range() as i32;
        let w_d = self.omega_d();
        let mut pts = Vec::new();
        for &r in &self.resonances {
            for m in -kr..=kr {
                for &sgn in &[1.0, -1.0] {
                    let c = sgn * r - m as f64 * w_d;
                    if c > 0.0 {
                        pts.push(c);
                        pts.push(c + 5.0 * gamma);
                        pts.push((c - 5.0 * gamma).max(1e-12));
                    }
                }
            }
        }
        for r in &self.reservoirs {
            if let DensityKind::Table { points } = &r.density.kind {
                // Finely sampled tables are effectively smooth; force cuts
                // only at the support edges and around the strongest peak so
                // a narrow feature cannot slip between panels.
                let kinks: Vec<f64> = if points.len() > 32 {
                    let mut ks = vec![points[0].0, points[points.len() - 1].0];
                    if let Some(peak) = points
                        .iter()
                        .enumerate()
                        .max_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
                        .map(|(i, _)| i)
                    {
                        let half = points[peak].1 * 0.5;
                        let left = points[..peak].iter().rev().find(|p| p.1 < half);
                        let right = points[peak + 1..].iter().find(|p| p.1 < half);
                        ks.push(points[peak].0);
                        if let Some(&(w, _)) = left {
                            ks.push(w);
                        }
                        if let Some(&(w, _)) = right {
                            ks.push(w);
                        }
                    }
                    ks
                } else {
                    points.iter().map(|&(w, _)| w).collect()
                };
                for w in kinks {
                    for &x in &[w, w - shift, -w - shift] {
                        if x > 0.0 {
                            pts.push(x);
                        }
                    }
                }
            }
        }
        for &w in &self.options.extra_breakpoints {
            for &x in &[w, w - shift, -w - shift] {
                if x > 0.0 {
                    pts.push(x);
                }
            }
        }
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        pts
    }

    fn quad_opts(&self) -> QuadOptions {
        QuadOptions { rel_tol: self.options.quad_rel_tol, ..QuadOptions::default() }
    }

    /// Transfer function p^{(k)}_{αβ}(ω) for numerically evaluable
    /// densities. Symbolic (single-mode) densities are integrated out
    /// analytically inside the heat-current channels and refuse pointwise
    /// evaluation here.
    pub fn transfer_function(&self, alpha: usize, beta: usize, k: i32, omega: f64) -> Result<f64> {
        self.check_reservoir(alpha)?;
        self.check_reservoir(beta)?;
        if omega < 0.0 {
            return Err(CoreError::Domain("transfer_function: ω must be ≥ 0".into()));
        }
        let la = self.reservoirs[alpha].density.level((omega + k as f64 * self.omega_d()).abs())?;
        let lb = self.reservoirs[beta].density.level(omega)?;
        let coeffs = self.ctx.coeffs(omega)?;
        Ok(self.transfer_core(alpha, beta, &coeffs.a(k)) * la * lb)
    }

    /// (π/2) tr[W_α A W_β A†]; densities' scalar levels multiply outside.
    fn transfer_core(&self, alpha: usize, beta: usize, a_k: &CMatrix) -> f64 {
        let m = &self.weights_c[alpha] * a_k * &self.weights_c[beta] * a_k.adjoint();
        0.5 * std::f64::consts::PI * linalg::trace(&m).re
    }

    fn check_reservoir(&self, idx: usize) -> Result<()> {
        if idx >= self.reservoirs.len() {
            return Err(CoreError::InvalidInput(format!(
                "reservoir index {idx} out of range ({} reservoirs)",
                self.reservoirs.len()
            )));
        }
        Ok(())
    }

    /// One channel term ∫ weight(ω) p^{(k)}_{αβ}(ω) dω over (lo, hi),
    /// dispatching on the symbolic/numeric kinds of both density slots.
    fn channel_integral<W: Fn(f64) -> f64>(
        &self,
        alpha: usize,
        beta: usize,
        k: i32,
        lo: f64,
        hi: Option<f64>,
        weight: W,
    ) -> Result<(f64, f64)> {
        let shift = k as f64 * self.omega_d();
        let da = &self.reservoirs[alpha].density;
        let db = &self.reservoirs[beta].density;
        let in_range = |w: f64| w > lo && hi.is_none_or(|h| w < h);

        match (&da.kind, &db.kind) {
            (DensityKind::DeltaMode { strength: sa, omega_m: wa }, DensityKind::DeltaMode { strength: _, omega_m: wb }) => {
                // Both slots collapse; simultaneous support needs the delta
                // arguments to coincide, which is a degenerate configuration.
                for root in [wa - shift, -wa - shift] {
                    if in_range(root) && (root - wb).abs() < 1e-9 * wb.max(1.0) {
                        return Err(CoreError::Degenerate(format!(
                            "coinciding single-mode collapse points at ω = {root} (strengths {sa}, ...)"
                        )));
                    }
                }
                Ok((0.0, 0.0))
            }
            (DensityKind::DeltaMode { strength, omega_m }, _) => {
                // δ(|ω + shift| − ω_m) has roots ω_m − shift and −ω_m − shift.
                let mut acc = 0.0;
                for root in [omega_m - shift, -omega_m - shift] {
                    if in_range(root) {
                        let lb = db.level(root)?;
                        let coeffs = self.ctx.coeffs(root)?;
                        acc += strength * lb * self.transfer_core(alpha, beta, &coeffs.a(k)) * weight(root);
                    }
                }
                Ok((acc, 0.0))
            }
            (_, DensityKind::DeltaMode { strength, omega_m }) => {
                let mut acc = 0.0;
                if in_range(*omega_m) {
                    let la = da.level((omega_m + shift).abs())?;
                    let coeffs = self.ctx.coeffs(*omega_m)?;
                    acc = strength * la * self.transfer_core(alpha, beta, &coeffs.a(k)) * weight(*omega_m);
                }
                Ok((acc, 0.0))
            }
            _ => {
                let failure: RefCell<Option<CoreError>> = RefCell::new(None);
                let integrand = |w: f64| -> f64 {
                    let la = match da.level((w + shift).abs()) {
                        Ok(v) => v,
                        Err(e) => {
                            failure.borrow_mut().get_or_insert(e);
                            return 0.0;
                        }
                    };
                    let lb = match db.level(w) {
                        Ok(v) => v,
                        Err(e) => {
                            failure.borrow_mut().get_or_insert(e);
                            return 0.0;
                        }
                    };
                    if la == 0.0 && lb == 0.0 {
                        return 0.0;
                    }
                    match self.ctx.coeffs(w) {
                        Ok(c) => la * lb * self.transfer_core(alpha, beta, &c.a(k)) * weight(w),
                        Err(e) => {
                            failure.borrow_mut().get_or_insert(e);
                            0.0
                        }
                    }
                };
                let upper = match hi {
                    Some(h) => Upper::Finite(h),
                    None => Upper::Infinite { scale: self.infinite_scale() },
                };
                let q = quad::integrate_scalar(integrand, lo, upper, &self.breakpoints(shift), &self.quad_opts())?;
                if let Some(e) = failure.into_inner() {
                    return Err(e);
                }
                Ok((q.value, q.abs_error))
            }
        }
    }

    /// Resonant-pumping current of reservoir α: drive-assisted transport
    /// between α and every other reservoir. This is the only channel that
    /// can cool a reservoir.
    pub fn heat_rp(&self, alpha: usize) -> Result<HeatIntegral> {
        self.check_reservoir(alpha)?;
        self.require_stable()?;
        let w_d = self.omega_d();
        let kr = self.k_range() as i32;
        let t_a = self.reservoirs[alpha].temperature;

        let mut value = 0.0;
        let mut err = 0.0;
        let mut shell: f64 = 0.0;
        for beta in 0..self.reservoirs.len() {
            if beta == alpha {
                continue;
            }
            let t_b = self.reservoirs[beta].temperature;
            for k in -kr..=kr {
                let lo = (-(k as f64) * w_d).max(0.0);
                let mut contrib = 0.0;
                // ω p^{(k)}_{βα}(ω) N_α(ω): energy leaving reservoir α.
                if t_a > 0.0 {
                    let (v, e) = self.channel_integral(beta, alpha, k, lo, None, |w| w * planck_raw(w, t_a))?;
                    contrib += v;
                    err += e;
                }
                // −(ω+kω_d) p^{(k)}_{αβ}(ω) N_β(ω): energy arriving in α.
                if t_b > 0.0 {
                    let (v, e) = self.channel_integral(alpha, beta, k, lo, None, |w| {
                        -(w + k as f64 * w_d) * planck_raw(w, t_b)
                    })?;
                    contrib += v;
                    err += e;
                }
                value += contrib;
                if k.abs() == kr && kr > 0 {
                    shell += contrib.abs();
                }
            }
        }
        Ok(HeatIntegral { value, abs_error: err, k_tail_ratio: tail_ratio(shell, value) })
    }

    /// Resonant-heating current of reservoir α (drive-assisted transport
    /// within α); nonpositive up to quadrature error.
    pub fn heat_rh(&self, alpha: usize) -> Result<HeatIntegral> {
        self.check_reservoir(alpha)?;
        self.require_stable()?;
        let w_d = self.omega_d();
        let kr = self.k_range() as i32;
        let t_a = self.reservoirs[alpha].temperature;
        if t_a == 0.0 {
            return Ok(HeatIntegral { value: 0.0, abs_error: 0.0, k_tail_ratio: 0.0 });
        }
        let mut value = 0.0;
        let mut err = 0.0;
        let mut shell: f64 = 0.0;
        for k in -kr..=kr {
            if k == 0 {
                continue; // weightless
            }
            let lo = (-(k as f64) * w_d).max(0.0);
            let (v, e) = self.channel_integral(alpha, alpha, k, lo, None, |w| {
                -(k as f64) * w_d * planck_raw(w, t_a)
            })?;
            value += v;
            err += e;
            if k.abs() == kr {
                shell += v.abs();
            }
        }
        Ok(HeatIntegral { value, abs_error: err, k_tail_ratio: tail_ratio(shell, value) })
    }

    /// Non-resonant heating of reservoir α: pair creation powered by the
    /// drive. Nonpositive, and nonvanishing even at zero temperature.
    pub fn heat_nrh(&self, alpha: usize) -> Result<HeatIntegral> {
        self.check_reservoir(alpha)?;
        self.require_stable()?;
        if !self.network().time_reversal() {
            return Err(CoreError::Contract(
                "heat_nrh requires a time-reversal-invariant drive (V(−t) = V(t+t₀))".into(),
            ));
        }
        let w_d = self.omega_d();
        let kr = self.k_range() as i32;
        if !self.network().is_driven() {
            return Ok(HeatIntegral { value: 0.0, abs_error: 0.0, k_tail_ratio: 0.0 });
        }
        let t_a = self.reservoirs[alpha].temperature;

        let mut value = 0.0;
        let mut err = 0.0;
        let mut shell: f64 = 0.0;
        for k in 1..=kr {
            let hi = k as f64 * w_d;
            let mut contrib = 0.0;
            // Both created quanta in α.
            let (v, e) = self.channel_integral(alpha, alpha, -k, 0.0, Some(hi), |w| {
                -(k as f64) * w_d * (planck_raw(w, t_a) + 0.5)
            })?;
            contrib += v;
            err += e;
            for beta in 0..self.reservoirs.len() {
                if beta == alpha {
                    continue;
                }
                let t_b = self.reservoirs[beta].temperature;
                // Quantum kω_d − ω lands in α, partner ω in β.
                let (v2, e2) = self.channel_integral(alpha, beta, -k, 0.0, Some(hi), |w| {
                    -(k as f64 * w_d - w) * (planck_raw(w, t_b) + 0.5)
                })?;
                // Quantum ω lands in α, partner in β.
                let (v3, e3) = self.channel_integral(beta, alpha, -k, 0.0, Some(hi), |w| {
                    -w * (planck_raw(w, t_a) + 0.5)
                })?;
                contrib += v2 + v3;
                err += e2 + e3;
            }
            value += contrib;
            if k == kr {
                shell += contrib.abs();
            }
        }
        Ok(HeatIntegral { value, abs_error: err, k_tail_ratio: tail_ratio(shell, value) })
    }

    /// Fourier coefficients of the asymptotic second moments on the
    /// harmonic band, from the same A_k(ω) integrals as the heat currents.
    pub fn covariance_coefficients(&self) -> Result<CovarianceCoeffs> {
        self.require_stable()?;
        let kr = self.k_range() as i32;
        let w_d = self.omega_d();
        let n = self.network().n_nodes();
        let masses = self.network().masses().to_vec();

        // Band of (j, k) pairs coupling through the drive harmonics.
        let mut harmonics: Vec<i32> = vec![0];
        harmonics.extend(self.network().vk().keys().cloned());
        let mut pairs: Vec<(i32, i32)> = Vec::new();
        for j in -kr..=kr {
            for &m in &harmonics {
                let k = j + m;
                if k.abs() <= kr && !pairs.contains(&(j, k)) {
                    pairs.push((j, k));
                }
            }
        }

        // σ^{pp} only converges when every density has an integrable UV
        // tail; a strict-ohmic bath makes it logarithmically divergent.
        let with_pp = self.reservoirs.iter().all(|r| {
            !matches!(r.density.kind, DensityKind::Ohmic { cutoff: None, .. })
        });
        let rows = if with_pp { 3 } else { 2 };

        let mut s_xx = BTreeMap::new();
        let mut s_xp = BTreeMap::new();
        let mut s_pp = BTreeMap::new();
        let mut z_xp = BTreeMap::new();
        let mut total_err = 0.0;

        for &(j, k) in &pairs {
            let mut xx = CMatrix::zeros(n, n);
            let mut zx = CMatrix::zeros(n, n);
            let mut pp = CMatrix::zeros(n, n);
            for (bi, res) in self.reservoirs.iter().enumerate() {
                let t_b = res.temperature;
                match &res.density.kind {
                    DensityKind::DeltaMode { strength, omega_m } => {
                        let coeffs = self.ctx.coeffs(*omega_m)?;
                        let core = coeffs.a(j) * &self.weights_c[bi] * coeffs.a(k).adjoint();
                        let coth = coth_half_raw(*omega_m, t_b);
                        let base = core * Complex64::new(0.5 * strength * coth, 0.0);
                        xx += &base;
                        zx += &base * Complex64::new(omega_m + k as f64 * w_d, 0.0);
                        pp += &base * Complex64::new((omega_m + j as f64 * w_d) * (omega_m + k as f64 * w_d), 0.0);
                    }
                    _ => {
                        let failure: RefCell<Option<CoreError>> = RefCell::new(None);
                        // Integrate the frequency weights in one pass: rows
                        // stacked [xx; xp; pp?].
                        let integrand = |w: f64| -> CMatrix {
                            let mut out = CMatrix::zeros(rows * n, n);
                            let level = match res.density.level(w) {
                                Ok(v) => v,
                                Err(e) => {
                                    failure.borrow_mut().get_or_insert(e);
                                    return out;
                                }
                            };
                            if level == 0.0 {
                                return out;
                            }
                            let coeffs = match self.ctx.coeffs(w) {
                                Ok(c) => c,
                                Err(e) => {
                                    failure.borrow_mut().get_or_insert(e);
                                    return out;
                                }
                            };
                            let core = coeffs.a(j) * &self.weights_c[bi] * coeffs.a(k).adjoint();
                            let coth = coth_half_raw(w, t_b);
                            let base = core * Complex64::new(0.5 * level * coth, 0.0);
                            let wk = w + k as f64 * w_d;
                            let wj = w + j as f64 * w_d;
                            out.view_mut((0, 0), (n, n)).copy_from(&base);
                            out.view_mut((n, 0), (n, n)).copy_from(&(&base * Complex64::new(wk, 0.0)));
                            if with_pp {
                                out.view_mut((2 * n, 0), (n, n))
                                    .copy_from(&(&base * Complex64::new(wj * wk, 0.0)));
                            }
                            out
                        };
                        let q = quad::integrate(
                            integrand,
                            0.0,
                            Upper::Infinite { scale: self.infinite_scale() },
                            &self.breakpoints(k as f64 * w_d),
                            &self.quad_opts(),
                        )?;
                        if let Some(e) = failure.into_inner() {
                            return Err(e);
                        }
                        total_err += q.abs_error;
                        xx += q.value.view((0, 0), (n, n)).into_owned();
                        zx += q.value.view((n, 0), (n, n)).into_owned();
                        if with_pp {
                            pp += q.value.view((2 * n, 0), (n, n)).into_owned();
                        }
                    }
                }
            }
            // S^{xp} = −i Z M; S^{pp} = M (pp) M.
            let mut xp = zx.clone() * Complex64::new(0.0, -1.0);
            for col in 0..n {
                for row in 0..n {
                    xp[(row, col)] *= masses[col];
                    pp[(row, col)] *= masses[row] * masses[col];
                }
            }
            s_xx.insert((j, k), xx);
            s_xp.insert((j, k), xp);
            if with_pp {
                s_pp.insert((j, k), pp);
            }
            z_xp.insert((j, k), zx);
        }
        Ok(CovarianceCoeffs { s_xx, s_xp, s_pp, z_xp, abs_error: total_err })
    }

    /// Covariance-route heat current Q̇_α = Σ_{jk} tr[P_α V_{k−j} Im Z_{jk}],
    /// the period average of Tr[P_α V(t) σ^{xp}(t) M⁻¹].
    ///
    /// Valid for reservoirs attached to disjoint site sets; the masses
    /// cancel exactly between σ^{xp} and M⁻¹.
    pub fn heat_direct(&self, alpha: usize, cov: &CovarianceCoeffs) -> Result<f64> {
        self.check_reservoir(alpha)?;
        if !self.disjoint_sites {
            return Err(CoreError::Contract(
                "heat_direct: reservoirs share network sites; the projector split is invalid".into(),
            ));
        }
        let proj = &self.reservoirs[alpha].projector;
        let mut total = 0.0;
        for (&(j, k), z) in &cov.z_xp {
            let m = k - j;
            let v_m = if m == 0 {
                self.network().v0().clone()
            } else {
                match self.network().vk().get(&m) {
                    Some(v) => v.clone(),
                    None => continue,
                }
            };
            let pv = proj * v_m;
            let im_z = z.map(|x| x.im);
            let n = pv.nrows();
            for r in 0..n {
                for c in 0..n {
                    total += pv[(r, c)] * im_z[(c, r)];
                }
            }
        }
        Ok(total)
    }

    /// Independent power estimate Ẇ = avg ½ Tr[V̇(t) σ^{xx}(t)]
    /// = −½ Σ_{jk} (k−j) ω_d tr[V_{k−j} Im S^{xx}_{jk}].
    pub fn power_direct(&self, cov: &CovarianceCoeffs) -> f64 {
        let w_d = self.omega_d();
        let mut total = 0.0;
        for (&(j, k), s) in &cov.s_xx {
            let m = k - j;
            if m == 0 {
                continue;
            }
            let Some(v_m) = self.network().vk().get(&m) else { continue };
            let im_s = s.map(|x| x.im);
            let n = v_m.nrows();
            let mut tr = 0.0;
            for r in 0..n {
                for c in 0..n {
                    tr += v_m[(r, c)] * im_s[(c, r)];
                }
            }
            total += -0.5 * (m as f64) * w_d * tr;
        }
        total
    }

    /// Full heat-current report: decomposition, direct route, both power
    /// estimates and the first-law residual.
    pub fn report(&self) -> Result<HeatCurrentReport> {
        self.require_stable()?;
        let cov = self.covariance_coefficients()?;
        let mut rows = Vec::new();
        let mut power_balance = 0.0;
        let mut max_q: f64 = 0.0;
        for alpha in 0..self.reservoirs.len() {
            let rp = self.heat_rp(alpha)?;
            let rh = self.heat_rh(alpha)?;
            let nrh = self.heat_nrh(alpha)?;
            let q_total = rp.value + rh.value + nrh.value;
            let q_direct = if self.disjoint_sites {
                Some(self.heat_direct(alpha, &cov)?)
            } else {
                None
            };
            power_balance -= q_total;
            max_q = max_q.max(q_total.abs());
            rows.push(ReservoirCurrents {
                label: self.reservoirs[alpha].label.clone(),
                q_rp: rp.value,
                q_rh: rh.value,
                q_nrh: nrh.value,
                q_total,
                q_direct,
                err_estimate: rp.abs_error + rh.abs_error + nrh.abs_error,
                k_tail_ratio: rp.k_tail_ratio.max(rh.k_tail_ratio).max(nrh.k_tail_ratio),
            });
        }
        let power_direct = if self.network().is_driven() {
            Some(self.power_direct(&cov))
        } else {
            Some(0.0)
        };
        let first_law_residual = match power_direct {
            Some(w) => {
                let sum_q: f64 = rows.iter().map(|r| r.q_total).sum();
                if max_q > 0.0 {
                    (w + sum_q).abs() / max_q
                } else {
                    (w + sum_q).abs()
                }
            }
            None => f64::NAN,
        };
        Ok(HeatCurrentReport {
            reservoirs: rows,
            power_balance,
            power_direct,
            first_law_residual,
            k_range: self.k_range(),
        })
    }
}

fn tail_ratio(shell: f64, value: f64) -> f64 {
    if value.abs() > 0.0 {
        shell / value.abs()
    } else {
        0.0
    }
}

/// Average power consumed by the drive, from the first law Ẇ = −Σ_α Q̇_α.
pub fn average_power(report: &HeatCurrentReport) -> f64 {
    report.power_balance
}

/// True when reservoir α is net cooled: Q̇^RP exceeds the total heating
/// |Q̇^RH + Q̇^NRH| strictly. The strict inequality is guarded by the
/// report's own integration-error estimate so round-off-level currents
/// never count as cooling.
pub fn cooling_condition(report: &HeatCurrentReport, alpha: usize) -> Result<bool> {
    let row = report
        .reservoirs
        .get(alpha)
        .ok_or_else(|| CoreError::Contract(format!("cooling_condition: no reservoir {alpha}")))?;
    let guard = row.err_estimate.max(1e-14);
    Ok(row.q_rp > (row.q_rh + row.q_nrh).abs() + guard)
}
