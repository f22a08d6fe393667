//! Domain types describing driven harmonic networks, their reservoirs,
//! spectral densities and damping backends.
//!
//! A network of N oscillators with mass matrix M and periodically driven
//! potential V(t) = Σ_k V_k e^{ikω_d t} couples bilinearly to independent
//! bosonic reservoirs. Each reservoir is described by its temperature, the
//! sites it touches and a spectral density model.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::linalg::{self, CMatrix, RMatrix};

const SYM_TOL: f64 = 1e-12;

/// A driven harmonic network: masses, static potential matrix, Fourier
/// components of the drive and the driving frequency.
#[derive(Debug, Clone)]
pub struct NetworkSpec {
    n_nodes: usize,
    masses: Vec<f64>,
    v0: RMatrix,
    /// Fourier components V_k for k ≠ 0. Real symmetric matrices; the map
    /// always carries both signs with V_{−k} = V_k.
    vk: BTreeMap<i32, RMatrix>,
    omega_d: Option<f64>,
    time_reversal: bool,
}

impl NetworkSpec {
    /// Undriven network with unit masses.
    pub fn static_network(v0: RMatrix) -> Result<Self> {
        Self::new(vec![1.0; v0.nrows()], v0, BTreeMap::new(), None, true)
    }

    pub fn new(
        masses: Vec<f64>,
        v0: RMatrix,
        vk: BTreeMap<i32, RMatrix>,
        omega_d: Option<f64>,
        time_reversal: bool,
    ) -> Result<Self> {
        let n = v0.nrows();
        if n == 0 {
            return Err(CoreError::InvalidInput("NetworkSpec: empty potential matrix".into()));
        }
        if masses.len() != n {
            return Err(CoreError::InvalidInput("NetworkSpec: masses length mismatch".into()));
        }
        if masses.iter().any(|&m| !(m > 0.0)) {
            return Err(CoreError::InvalidInput("NetworkSpec: masses must be > 0".into()));
        }
        linalg::require_symmetric(&v0, SYM_TOL, "NetworkSpec V0")?;

        if !vk.is_empty() && omega_d.is_none() {
            return Err(CoreError::InvalidInput(
                "NetworkSpec: Fourier components given without a driving frequency".into(),
            ));
        }
        if let Some(w) = omega_d {
            if !(w > 0.0) {
                return Err(CoreError::InvalidInput("NetworkSpec: omega_d must be > 0".into()));
            }
        }

        // Normalize the harmonic map: validate each component and mirror it
        // so V_{-k} = V_k always holds. Real Fourier components make V(t)
        // real exactly when the map is even in k, which is also the
        // time-reversal-invariance condition.
        let mut mirrored: BTreeMap<i32, RMatrix> = BTreeMap::new();
        for (&k, m) in &vk {
            if k == 0 {
                return Err(CoreError::InvalidInput(
                    "NetworkSpec: k = 0 belongs in V0, not the harmonic map".into(),
                ));
            }
            if m.nrows() != n || m.ncols() != n {
                return Err(CoreError::InvalidInput(format!(
                    "NetworkSpec: V_{k} has shape {}x{}, expected {n}x{n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            linalg::require_symmetric(m, SYM_TOL, &format!("NetworkSpec V_{k}"))?;
            if let Some(existing) = mirrored.get(&k) {
                if (existing - m).amax() > SYM_TOL {
                    return Err(CoreError::InvalidInput(format!(
                        "NetworkSpec: V_{k} conflicts with the mirrored V_{}",
                        -k
                    )));
                }
            }
            mirrored.insert(k, m.clone());
            mirrored.entry(-k).or_insert_with(|| m.clone());
        }
        if time_reversal {
            for (&k, m) in &mirrored {
                if k > 0 {
                    let neg = &mirrored[&-k];
                    if (m - neg).amax() > SYM_TOL {
                        return Err(CoreError::InvalidInput(format!(
                            "NetworkSpec: time-reversal invariance requires V_{k} = V_{}",
                            -k
                        )));
                    }
                }
            }
        }

        Ok(Self { n_nodes: n, masses, v0, vk: mirrored, omega_d, time_reversal })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn mass_matrix(&self) -> RMatrix {
        RMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.masses.clone()))
    }

    pub fn v0(&self) -> &RMatrix {
        &self.v0
    }

    pub fn vk(&self) -> &BTreeMap<i32, RMatrix> {
        &self.vk
    }

    pub fn omega_d(&self) -> Option<f64> {
        self.omega_d
    }

    pub fn is_driven(&self) -> bool {
        !self.vk.is_empty()
    }

    pub fn time_reversal(&self) -> bool {
        self.time_reversal
    }

    /// Largest |k| present in the harmonic map (0 for an undriven network).
    pub fn max_harmonic(&self) -> i32 {
        self.vk.keys().map(|k| k.abs()).max().unwrap_or(0)
    }

    /// Ratio of the strongest harmonic to the static potential, the
    /// weak-driving figure of merit.
    pub fn drive_ratio(&self) -> f64 {
        let v0_norm = linalg::spectral_norm_real(&self.v0);
        if v0_norm == 0.0 {
            return f64::INFINITY;
        }
        self.vk
            .values()
            .map(linalg::spectral_norm_real)
            .fold(0.0, f64::max)
            / v0_norm
    }
}

/// Spectral density model of one reservoir.
#[derive(Debug, Clone)]
pub enum DensityKind {
    /// Single environmental mode: I(ω) = strength · δ(ω − ω_m) · W.
    /// Handled symbolically; pointwise evaluation is a contract error.
    DeltaMode { strength: f64, omega_m: f64 },
    /// Ohmic with optional Lorentz-Drude cutoff:
    /// I(ω) = (2/π)·γ·ω·Λ²/(ω²+Λ²) · W, with Λ → ∞ when `cutoff` is None.
    Ohmic { gamma: f64, cutoff: Option<f64> },
    /// Piecewise-linear interpolation of sampled scalar levels c(ω) with
    /// I(ω) = c(ω) · W; constant extension outside the sampled range.
    Table { points: Vec<(f64, f64)> },
}

#[derive(Debug, Clone)]
pub struct SpectralDensity {
    pub kind: DensityKind,
    /// Positive-semidefinite matrix localizing the coupling on the
    /// reservoir's sites.
    pub site_weights: RMatrix,
}

impl SpectralDensity {
    pub fn new(kind: DensityKind, site_weights: RMatrix) -> Result<Self> {
        linalg::require_symmetric(&site_weights, SYM_TOL, "SpectralDensity site_weights")?;
        let evals = linalg::eigvals_sym(&site_weights);
        if evals[0] < -1e-10 {
            return Err(CoreError::InvalidInput(format!(
                "SpectralDensity: site weights not PSD (min eigenvalue {:.3e})",
                evals[0]
            )));
        }
        match &kind {
            DensityKind::DeltaMode { strength, omega_m } => {
                if !(*strength > 0.0 && *omega_m > 0.0) {
                    return Err(CoreError::InvalidInput(
                        "SpectralDensity: delta mode needs positive strength and frequency".into(),
                    ));
                }
            }
            DensityKind::Ohmic { gamma, cutoff } => {
                if !(*gamma > 0.0) {
                    return Err(CoreError::InvalidInput("SpectralDensity: gamma must be > 0".into()));
                }
                if let Some(l) = cutoff {
                    if !(*l > 0.0) {
                        return Err(CoreError::InvalidInput("SpectralDensity: cutoff must be > 0".into()));
                    }
                }
            }
            DensityKind::Table { points } => {
                if points.len() < 2 {
                    return Err(CoreError::InvalidInput("SpectralDensity: table needs ≥ 2 points".into()));
                }
                if points.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(CoreError::InvalidInput(
                        "SpectralDensity: table frequencies must be strictly increasing".into(),
                    ));
                }
                if points.iter().any(|&(w, c)| w < 0.0 || c < 0.0 || !c.is_finite()) {
                    return Err(CoreError::InvalidInput(
                        "SpectralDensity: table entries must be finite and nonnegative".into(),
                    ));
                }
            }
        }
        Ok(Self { kind, site_weights })
    }

    pub fn ohmic(gamma: f64, cutoff: Option<f64>, site_weights: RMatrix) -> Result<Self> {
        Self::new(DensityKind::Ohmic { gamma, cutoff }, site_weights)
    }

    pub fn delta_mode(strength: f64, omega_m: f64, site_weights: RMatrix) -> Result<Self> {
        Self::new(DensityKind::DeltaMode { strength, omega_m }, site_weights)
    }

    pub fn is_delta(&self) -> bool {
        matches!(self.kind, DensityKind::DeltaMode { .. })
    }

    /// Scalar level of the density at ω ≥ 0 (the matrix is level · W).
    pub fn level(&self, omega: f64) -> Result<f64> {
        if omega < 0.0 {
            return Ok(0.0);
        }
        match &self.kind {
            DensityKind::DeltaMode { .. } => Err(CoreError::Contract(
                "delta-mode spectral density queried pointwise; use the symbolic path".into(),
            )),
            DensityKind::Ohmic { gamma, cutoff } => {
                let base = 2.0 / std::f64::consts::PI * gamma * omega;
                Ok(match cutoff {
                    Some(l) => base * l * l / (omega * omega + l * l),
                    None => base,
                })
            }
            DensityKind::Table { points } => {
                let n = points.len();
                if omega <= points[0].0 {
                    return Ok(points[0].1);
                }
                if omega >= points[n - 1].0 {
                    return Ok(points[n - 1].1);
                }
                let idx = points.partition_point(|&(w, _)| w <= omega);
                let (w0, c0) = points[idx - 1];
                let (w1, c1) = points[idx];
                Ok(c0 + (c1 - c0) * (omega - w0) / (w1 - w0))
            }
        }
    }

    /// Full matrix I(ω) = level(ω) · W for non-symbolic kinds.
    pub fn eval(&self, omega: f64) -> Result<RMatrix> {
        Ok(&self.site_weights * self.level(omega)?)
    }
}

/// One thermal reservoir attached to the network.
#[derive(Debug, Clone)]
pub struct ReservoirSpec {
    pub label: String,
    pub temperature: f64,
    pub density: SpectralDensity,
    /// 0/1 diagonal matrix selecting the coupled sites.
    pub projector: RMatrix,
}

impl ReservoirSpec {
    pub fn new(label: impl Into<String>, temperature: f64, density: SpectralDensity, sites: &[usize], n_nodes: usize) -> Result<Self> {
        if temperature < 0.0 {
            return Err(CoreError::InvalidInput("ReservoirSpec: temperature must be ≥ 0".into()));
        }
        if sites.is_empty() {
            return Err(CoreError::InvalidInput("ReservoirSpec: no coupled sites".into()));
        }
        let mut projector = RMatrix::zeros(n_nodes, n_nodes);
        for &s in sites {
            if s >= n_nodes {
                return Err(CoreError::InvalidInput(format!(
                    "ReservoirSpec: site {s} out of range for {n_nodes} nodes"
                )));
            }
            projector[(s, s)] = 1.0;
        }
        // The density must live on the declared sites: P W P = W.
        let w = &density.site_weights;
        if w.nrows() != n_nodes {
            return Err(CoreError::InvalidInput(
                "ReservoirSpec: site-weight dimension does not match the network".into(),
            ));
        }
        let localized = &projector * w * &projector;
        if (&localized - w).amax() > 1e-10 {
            return Err(CoreError::InvalidInput(
                "ReservoirSpec: spectral density has weight outside the declared sites".into(),
            ));
        }
        Ok(Self { label: label.into(), temperature, density, projector })
    }
}

/// Dissipation model entering the network propagator.
#[derive(Debug, Clone)]
pub enum DampingBackend {
    /// Ohmic (optionally Drude-regularized) damping assembled from the
    /// reservoirs' spectral densities, so the propagator's anti-Hermitian
    /// part matches (π/2)·I_tot(ω) at every frequency.
    MarkovianOhmic { terms: Vec<OhmicTerm> },
    /// Per-node exponential-decay phenomenology:
    /// ĝ(iω) = 1/((ω − iγ)² − ω₀²) on every node.
    Phenomenological { gamma: f64, omega0: f64 },
}

#[derive(Debug, Clone)]
pub struct OhmicTerm {
    pub gamma: f64,
    pub cutoff: Option<f64>,
    pub weights: RMatrix,
}

impl DampingBackend {
    /// Build the Markovian backend from the ohmic reservoirs of a set.
    ///
    /// Delta-mode reservoirs contribute no damping (their back-action is
    /// treated as negligible); tabulated densities have no Markovian kernel
    /// and are rejected.
    pub fn markovian_from_reservoirs(reservoirs: &[ReservoirSpec]) -> Result<Self> {
        let mut terms = Vec::new();
        for r in reservoirs {
            match &r.density.kind {
                DensityKind::Ohmic { gamma, cutoff } => terms.push(OhmicTerm {
                    gamma: *gamma,
                    cutoff: *cutoff,
                    weights: r.density.site_weights.clone(),
                }),
                DensityKind::DeltaMode { .. } => {}
                DensityKind::Table { .. } => {
                    return Err(CoreError::InvalidInput(
                        "markovian damping: tabulated spectral densities are unsupported; \
                         use the phenomenological backend"
                            .into(),
                    ));
                }
            }
        }
        Ok(DampingBackend::MarkovianOhmic { terms })
    }

    pub fn phenomenological(gamma: f64, omega0: f64) -> Result<Self> {
        if !(gamma > 0.0 && omega0 > 0.0) {
            return Err(CoreError::InvalidInput(
                "phenomenological damping: gamma and omega0 must be > 0".into(),
            ));
        }
        Ok(DampingBackend::Phenomenological { gamma, omega0 })
    }

    /// Laplace-domain damping kernel γ̂(iν) for the Markovian backend.
    pub fn gamma_hat(&self, nu: f64, n: usize) -> CMatrix {
        match self {
            DampingBackend::MarkovianOhmic { terms } => {
                let mut acc = CMatrix::zeros(n, n);
                for t in terms {
                    let factor = match t.cutoff {
                        // γΛ/(Λ + iν)
                        Some(l) => Complex64::new(l, 0.0) / Complex64::new(l, nu) * t.gamma,
                        None => Complex64::new(t.gamma, 0.0),
                    };
                    acc += linalg::to_complex(&t.weights) * factor;
                }
                acc
            }
            DampingBackend::Phenomenological { .. } => {
                unreachable!("gamma_hat is only defined for the Markovian backend")
            }
        }
    }

    /// Scale of the per-node decay rate, used to size resonance windows.
    pub fn damping_scale(&self, n: usize) -> f64 {
        match self {
            DampingBackend::MarkovianOhmic { terms } => {
                let total: f64 = terms
                    .iter()
                    .map(|t| t.gamma * t.weights.diagonal().iter().sum::<f64>())
                    .sum();
                (total / n as f64).max(1e-12) / 2.0
            }
            DampingBackend::Phenomenological { gamma, .. } => *gamma,
        }
    }
}

/// Renormalized potential matrix seen by the propagator.
///
/// For the Markovian backend the delta-kernel counterterm cancels exactly
/// and the user-specified V0 is already the physical potential. The
/// phenomenological backend encodes it through ω₀ directly.
pub fn renormalized_potential(net: &NetworkSpec, damping: &DampingBackend) -> RMatrix {
    match damping {
        DampingBackend::MarkovianOhmic { .. } => net.v0().clone(),
        DampingBackend::Phenomenological { omega0, .. } => {
            RMatrix::identity(net.n_nodes(), net.n_nodes()) * (omega0 * omega0)
        }
    }
}

/// Undriven resonance frequencies √λ of M⁻¹V_R (positive eigenvalues only).
pub fn resonance_frequencies(net: &NetworkSpec, damping: &DampingBackend) -> Vec<f64> {
    let vr = renormalized_potential(net, damping);
    let m = net.masses();
    let n = net.n_nodes();
    // Symmetric whitening M^{-1/2} V_R M^{-1/2}.
    let mut w = vr;
    for i in 0..n {
        for j in 0..n {
            w[(i, j)] /= (m[i] * m[j]).sqrt();
        }
    }
    linalg::eigvals_sym(&w)
        .into_iter()
        .filter(|&l| l > 0.0)
        .map(f64::sqrt)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mat2(a: f64, b: f64, c: f64, d: f64) -> RMatrix {
        RMatrix::from_row_slice(2, 2, &[a, b, c, d])
    }

    #[test]
    fn single_oscillator_static_network() {
        let net = NetworkSpec::static_network(RMatrix::from_row_slice(1, 1, &[2.25])).unwrap();
        assert_eq!(net.n_nodes(), 1);
        assert!(!net.is_driven());
        assert_eq!(net.max_harmonic(), 0);
    }

    #[test]
    fn coupled_pair_is_positive_definite() {
        let net = NetworkSpec::static_network(mat2(1.0, 0.2, 0.2, 1.69)).unwrap();
        let evals = linalg::eigvals_sym(net.v0());
        assert!(evals[0] > 0.0);
        let freqs = resonance_frequencies(
            &net,
            &DampingBackend::markovian_from_reservoirs(&[]).unwrap(),
        );
        assert_eq!(freqs.len(), 2);
        assert!(freqs[0] < freqs[1]);
    }

    #[test]
    fn drive_without_frequency_rejected() {
        let mut vk = BTreeMap::new();
        vk.insert(1, mat2(0.0, 0.1, 0.1, 0.0));
        let err = NetworkSpec::new(vec![1.0, 1.0], mat2(1.0, 0.0, 0.0, 1.0), vk, None, true);
        assert!(err.is_err());
    }

    #[test]
    fn asymmetric_potential_rejected() {
        assert!(NetworkSpec::static_network(mat2(1.0, 0.1, 0.2, 1.0)).is_err());
    }

    #[test]
    fn harmonic_map_is_mirrored() {
        let mut vk = BTreeMap::new();
        vk.insert(1, mat2(0.0, 0.1, 0.1, 0.0));
        let net = NetworkSpec::new(vec![1.0, 1.0], mat2(1.0, 0.0, 0.0, 1.0), vk, Some(0.7), true).unwrap();
        assert!(net.vk().contains_key(&-1));
        assert_relative_eq!(net.vk()[&-1][(0, 1)], 0.1, max_relative = 1e-15);
    }

    #[test]
    fn ohmic_density_is_psd_on_sampled_frequencies() {
        let w = mat2(1.0, 0.0, 0.0, 0.0);
        let d = SpectralDensity::ohmic(0.05, Some(30.0), w).unwrap();
        for i in 0..64 {
            let omega = 0.05 + i as f64 * 0.5;
            let m = d.eval(omega).unwrap();
            let evals = linalg::eigvals_sym(&m);
            assert!(evals[0] >= -1e-14);
        }
        // Vanishes at negative frequencies.
        assert_relative_eq!(d.level(-1.0).unwrap(), 0.0);
    }

    #[test]
    fn density_localized_on_declared_sites() {
        let w = mat2(0.0, 0.0, 0.0, 1.0);
        let d = SpectralDensity::ohmic(0.02, None, w).unwrap();
        let r = ReservoirSpec::new("B", 0.5, d, &[1], 2).unwrap();
        let i_m = r.density.eval(1.3).unwrap();
        let proj = &r.projector * &i_m * &r.projector;
        assert_relative_eq!((proj - i_m).amax(), 0.0, epsilon = 1e-14);
        // Declaring the wrong site fails.
        let d2 = SpectralDensity::ohmic(0.02, None, mat2(0.0, 0.0, 0.0, 1.0)).unwrap();
        assert!(ReservoirSpec::new("B", 0.5, d2, &[0], 2).is_err());
    }

    #[test]
    fn delta_density_refuses_pointwise_evaluation() {
        let d = SpectralDensity::delta_mode(0.1, 1.0, RMatrix::from_row_slice(1, 1, &[1.0])).unwrap();
        assert!(matches!(d.level(1.0), Err(CoreError::Contract(_))));
    }

    #[test]
    fn table_density_interpolates_and_extends() {
        let d = SpectralDensity::new(
            DensityKind::Table { points: vec![(1.0, 0.0), (2.0, 1.0), (4.0, 1.0)] },
            RMatrix::from_row_slice(1, 1, &[1.0]),
        )
        .unwrap();
        assert_relative_eq!(d.level(1.5).unwrap(), 0.5);
        assert_relative_eq!(d.level(3.0).unwrap(), 1.0);
        assert_relative_eq!(d.level(10.0).unwrap(), 1.0);
        assert_relative_eq!(d.level(0.5).unwrap(), 0.0);
    }

    #[test]
    fn markovian_gamma_hat_limits() {
        let w = RMatrix::from_row_slice(1, 1, &[1.0]);
        let r = ReservoirSpec::new(
            "A",
            1.0,
            SpectralDensity::ohmic(0.1, Some(50.0), w.clone()).unwrap(),
            &[0],
            1,
        )
        .unwrap();
        let backend = DampingBackend::markovian_from_reservoirs(&[r]).unwrap();
        // At ν ≪ Λ the kernel is the bare γ.
        let g0 = backend.gamma_hat(0.0, 1)[(0, 0)];
        assert_relative_eq!(g0.re, 0.1, max_relative = 1e-12);
        // The strict-ohmic limit is frequency independent.
        let strict = DampingBackend::MarkovianOhmic {
            terms: vec![OhmicTerm { gamma: 0.1, cutoff: None, weights: w }],
        };
        let g = strict.gamma_hat(123.0, 1)[(0, 0)];
        assert_relative_eq!(g.re, 0.1, max_relative = 1e-15);
        assert_relative_eq!(g.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn renormalized_potential_per_backend() {
        let net = NetworkSpec::static_network(mat2(1.0, 0.2, 0.2, 1.69)).unwrap();
        let markov = DampingBackend::markovian_from_reservoirs(&[]).unwrap();
        assert_relative_eq!((renormalized_potential(&net, &markov) - net.v0()).amax(), 0.0);
        let phen = DampingBackend::phenomenological(0.1, 2.0).unwrap();
        let vr = renormalized_potential(&net, &phen);
        assert_relative_eq!(vr[(0, 0)], 4.0);
        assert_relative_eq!(vr[(0, 1)], 0.0);
    }
}
