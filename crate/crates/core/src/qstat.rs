//! Finite-dimensional quantum-state and thermodynamic primitives: thermal
//! states, entropies, Rényi divergences, vacancy, free energy and
//! worst-case work.
//!
//! All quantities are expressed in natural units (ħ = k_B = 1) and
//! divergences are returned in nats. `f64::INFINITY` encodes the extended
//! value taken on support mismatches.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::linalg::{self, CMatrix};

/// Tolerance for Hermiticity / trace / distribution validation.
pub const VALIDATION_TOL: f64 = 1e-12;
/// Eigenvalues below this are treated as outside the support.
pub const RANK_TOL: f64 = 1e-12;
/// Default overlap threshold deciding whether a unitary connects two levels.
pub const DEFAULT_OVERLAP_TOL: f64 = 1e-10;

/// A Hermitian Hamiltonian on a finite-dimensional Hilbert space.
#[derive(Debug, Clone)]
pub struct HamiltonianSpec {
    matrix: CMatrix,
    dim: usize,
}

impl HamiltonianSpec {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        linalg::require_hermitian(&matrix, VALIDATION_TOL, "HamiltonianSpec")?;
        let dim = matrix.nrows();
        if dim == 0 {
            return Err(CoreError::InvalidInput("HamiltonianSpec: empty matrix".into()));
        }
        Ok(Self { matrix, dim })
    }

    /// Diagonal Hamiltonian from a list of energies.
    pub fn diagonal(energies: &[f64]) -> Result<Self> {
        let d = DVector::from_iterator(energies.len(), energies.iter().map(|&e| Complex64::new(e, 0.0)));
        Self::new(CMatrix::from_diagonal(&d))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Eigenvalues in ascending order.
    pub fn energies(&self) -> Vec<f64> {
        linalg::eigh(&self.matrix).0
    }

    /// ln Z at inverse temperature β, evaluated with a ground-state shift so
    /// that no weight underflows.
    pub fn log_partition(&self, beta: f64) -> f64 {
        let evals = self.energies();
        let e0 = evals[0];
        let sum: f64 = evals.iter().map(|&e| (-beta * (e - e0)).exp()).sum();
        sum.ln() - beta * e0
    }
}

/// A density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    matrix: CMatrix,
    dim: usize,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        linalg::require_hermitian(&matrix, VALIDATION_TOL, "DensityMatrix")?;
        let dim = matrix.nrows();
        let tr = linalg::trace(&matrix);
        if (tr.re - 1.0).abs() > VALIDATION_TOL || tr.im.abs() > VALIDATION_TOL {
            return Err(CoreError::InvalidInput(format!(
                "DensityMatrix: trace {tr} differs from 1"
            )));
        }
        let min = linalg::min_eigval(&matrix);
        if min < -VALIDATION_TOL {
            return Err(CoreError::InvalidInput(format!(
                "DensityMatrix: negative eigenvalue {min:.3e}"
            )));
        }
        Ok(Self { matrix, dim })
    }

    pub fn from_diagonal(probs: &[f64]) -> Result<Self> {
        let d = DVector::from_iterator(probs.len(), probs.iter().map(|&p| Complex64::new(p, 0.0)));
        Self::new(CMatrix::from_diagonal(&d))
    }

    pub fn pure(state: &[Complex64]) -> Result<Self> {
        let norm: f64 = state.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-15 {
            return Err(CoreError::InvalidInput("pure state with zero norm".into()));
        }
        let v = DVector::from_iterator(state.len(), state.iter().map(|z| z / norm));
        let m = &v * v.adjoint();
        Self::new(m)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let m = CMatrix::identity(dim, dim) * Complex64::new(1.0 / dim as f64, 0.0);
        Self { matrix: m, dim }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigh(&self.matrix).0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Von Neumann entropy in nats.
    pub fn entropy(&self) -> f64 {
        self.eigenvalues()
            .iter()
            .filter(|&&p| p > RANK_TOL)
            .map(|&p| -p * p.ln())
            .sum()
    }

    /// Kronecker product of two states.
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        let m = linalg::kron(&self.matrix, &other.matrix);
        DensityMatrix { dim: m.nrows(), matrix: m }
    }
}

/// Probabilities and energies of a state diagonal in its energy basis.
#[derive(Debug, Clone)]
pub struct SpectrumPair {
    pub probs: Vec<f64>,
    pub energies: Vec<f64>,
}

impl SpectrumPair {
    pub fn new(probs: Vec<f64>, energies: Vec<f64>) -> Result<Self> {
        if probs.len() != energies.len() {
            return Err(CoreError::InvalidInput(
                "SpectrumPair: probs and energies length mismatch".into(),
            ));
        }
        if probs.is_empty() {
            return Err(CoreError::InvalidInput("SpectrumPair: empty".into()));
        }
        if probs.iter().any(|&p| p < -VALIDATION_TOL) {
            return Err(CoreError::InvalidInput("SpectrumPair: negative probability".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-10 {
            return Err(CoreError::InvalidInput(format!(
                "SpectrumPair: probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(Self { probs, energies })
    }

    /// Gibbs weights of the energies at inverse temperature β.
    pub fn gibbs_weights(&self, beta: f64) -> Vec<f64> {
        gibbs_weights(&self.energies, beta)
    }
}

/// Gibbs distribution over a list of energies, computed with a shift so the
/// largest weight is exactly representable.
pub fn gibbs_weights(energies: &[f64], beta: f64) -> Vec<f64> {
    let e0 = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = energies.iter().map(|&e| (-beta * (e - e0)).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

/// Thermal (Gibbs) state ω_β(H) = e^{−βH} / Tr e^{−βH}.
pub fn thermal_state(h: &HamiltonianSpec, beta: f64) -> Result<DensityMatrix> {
    if !(beta > 0.0) {
        return Err(CoreError::InvalidInput(format!("thermal_state: beta = {beta} must be > 0")));
    }
    let (evals, evecs) = linalg::eigh(h.matrix());
    let probs = gibbs_weights(&evals, beta);
    let diag = CMatrix::from_diagonal(&DVector::from_iterator(
        probs.len(),
        probs.iter().map(|&p| Complex64::new(p, 0.0)),
    ));
    let m = &evecs * diag * evecs.adjoint();
    // Round-off from the basis rotation can leave a 1e-16 trace defect.
    let tr = linalg::trace(&m).re;
    DensityMatrix::new(m / Complex64::new(tr, 0.0))
}

/// Quantum relative entropy S(ρ‖σ) = tr ρ ln ρ − tr ρ ln σ, in nats.
///
/// Returns +∞ when the support of ρ is not contained in the support of σ.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(CoreError::InvalidInput(format!(
            "relative_entropy: dimension mismatch {} vs {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    let (p, _) = linalg::eigh(rho.matrix());
    let tr_rho_ln_rho: f64 = p.iter().filter(|&&x| x > RANK_TOL).map(|&x| x * x.ln()).sum();

    let (q, v) = linalg::eigh(sigma.matrix());
    // ⟨ψ_j| ρ |ψ_j⟩ for every eigenvector of σ.
    let mut tr_rho_ln_sigma = 0.0;
    for (j, &q_j) in q.iter().enumerate() {
        let col = v.column(j);
        let overlap = (col.adjoint() * rho.matrix() * col)[(0, 0)].re.max(0.0);
        if q_j <= RANK_TOL {
            if overlap > RANK_TOL {
                return Ok(f64::INFINITY);
            }
        } else if overlap > 0.0 {
            tr_rho_ln_sigma += overlap * q_j.ln();
        }
    }
    Ok((tr_rho_ln_rho - tr_rho_ln_sigma).max(0.0))
}

/// Vacancy 𝒱_β(ρ, H) = S(ω_β(H) ‖ ρ).
pub fn vacancy(rho: &DensityMatrix, h: &HamiltonianSpec, beta: f64) -> Result<f64> {
    if rho.dim() != h.dim() {
        return Err(CoreError::InvalidInput("vacancy: dimension mismatch".into()));
    }
    let omega = thermal_state(h, beta)?;
    relative_entropy(&omega, rho)
}

/// Classical Rényi divergence S_α(p‖q) in nats.
///
/// S_α = (α−1)⁻¹ ln Σᵢ pᵢ^α qᵢ^{1−α} for α ∈ (0,1) ∪ (1,∞), with the
/// analytic continuations S₁ = KL divergence and S₀ = −ln Σ_{pᵢ>0} qᵢ.
pub fn renyi_divergence(p: &[f64], q: &[f64], alpha: f64) -> Result<f64> {
    if p.len() != q.len() {
        return Err(CoreError::InvalidInput("renyi_divergence: length mismatch".into()));
    }
    if alpha < 0.0 {
        return Err(CoreError::InvalidInput(format!(
            "renyi_divergence: alpha = {alpha} must be ≥ 0"
        )));
    }
    validate_distribution(p)?;
    validate_distribution(q)?;

    if alpha.abs() < 1e-300 {
        let mass: f64 = p
            .iter()
            .zip(q)
            .filter(|(&pi, _)| pi > RANK_TOL)
            .map(|(_, &qi)| qi)
            .sum();
        return Ok(if mass > 0.0 { (-mass.ln()).max(0.0) } else { f64::INFINITY });
    }

    // The α → 1 limit is the KL divergence; switch to it analytically.
    if (alpha - 1.0).abs() < 1e-9 {
        let mut kl = 0.0;
        for (&pi, &qi) in p.iter().zip(q) {
            if pi > RANK_TOL {
                if qi <= RANK_TOL {
                    return Ok(f64::INFINITY);
                }
                kl += pi * (pi / qi).ln();
            }
        }
        return Ok(kl.max(0.0));
    }

    let mut sum = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi <= RANK_TOL {
            continue;
        }
        if qi <= RANK_TOL {
            if alpha > 1.0 {
                return Ok(f64::INFINITY);
            }
            continue; // q^{1−α} with α < 1 kills the term
        }
        sum += pi.powf(alpha) * qi.powf(1.0 - alpha);
    }
    if sum <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((sum.ln() / (alpha - 1.0)).max(0.0))
}

fn validate_distribution(p: &[f64]) -> Result<()> {
    if p.iter().any(|&x| x < -VALIDATION_TOL || !x.is_finite()) {
        return Err(CoreError::InvalidInput("distribution has negative or non-finite entries".into()));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(CoreError::InvalidInput(format!("distribution sums to {s}, expected 1")));
    }
    Ok(())
}

/// Proxy used for the α → ∞ member of the Rényi family.
pub const ALPHA_MAX_PROXY: f64 = 100.0;

/// Outcome of the Rényi second-laws feasibility check.
#[derive(Debug, Clone)]
pub struct TransitionReport {
    pub allowed: bool,
    /// α at which the margin LHS − RHS is smallest.
    pub worst_alpha: f64,
    pub worst_margin: f64,
    /// True when the worst margin sits at the finite proxy for α = ∞.
    pub at_alpha_max_proxy: bool,
}

/// Checks S_α(resource ‖ ω_β) ≥ S_α(target ‖ ω_β) on a grid of α values.
///
/// The grid is augmented with {0, 1/2, 1, 2, ALPHA_MAX_PROXY} so the
/// characteristic members of the family are always present, plus small-α
/// points: near α = 0 the divergences behave as α·S(ω_β‖ρ), so these
/// members carry the vacancy necessary condition that coarser grids miss.
pub fn transition_allowed(
    resource: &SpectrumPair,
    target: &SpectrumPair,
    beta: f64,
    alpha_grid: &[f64],
) -> Result<TransitionReport> {
    if alpha_grid.is_empty() {
        return Err(CoreError::InvalidInput("transition_allowed: empty alpha grid".into()));
    }
    if !(beta > 0.0) {
        return Err(CoreError::InvalidInput("transition_allowed: beta must be > 0".into()));
    }
    let mut grid: Vec<f64> = alpha_grid.to_vec();
    for required in [0.0, 1e-4, 1e-3, 1e-2, 0.1, 0.5, 1.0, 2.0, ALPHA_MAX_PROXY] {
        if !grid.iter().any(|&a| (a - required).abs() < 1e-12) {
            grid.push(required);
        }
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let q_res = resource.gibbs_weights(beta);
    let q_tgt = target.gibbs_weights(beta);

    let mut allowed = true;
    let mut worst_alpha = grid[0];
    let mut worst_margin = f64::INFINITY;
    for &alpha in &grid {
        let lhs = renyi_divergence(&resource.probs, &q_res, alpha)?;
        let rhs = renyi_divergence(&target.probs, &q_tgt, alpha)?;
        let margin = match (lhs.is_infinite(), rhs.is_infinite()) {
            (true, _) => f64::INFINITY,
            (false, true) => f64::NEG_INFINITY,
            (false, false) => lhs - rhs,
        };
        if margin < -1e-12 {
            allowed = false;
        }
        if margin < worst_margin {
            worst_margin = margin;
            worst_alpha = alpha;
        }
    }
    Ok(TransitionReport {
        allowed,
        worst_alpha,
        worst_margin,
        at_alpha_max_proxy: (worst_alpha - ALPHA_MAX_PROXY).abs() < 1e-12,
    })
}

/// Free energy F_β(ρ, H) = tr(ρH) − β⁻¹ S(ρ).
pub fn free_energy(rho: &DensityMatrix, h: &HamiltonianSpec, beta: f64) -> Result<f64> {
    if rho.dim() != h.dim() {
        return Err(CoreError::InvalidInput("free_energy: dimension mismatch".into()));
    }
    if !(beta > 0.0) {
        return Err(CoreError::InvalidInput("free_energy: beta must be > 0".into()));
    }
    let energy = linalg::trace_prod_re(rho.matrix(), h.matrix());
    Ok(energy - rho.entropy() / beta)
}

/// Worst-case work of a unitary: the largest energy-level transition E₂ − E₁
/// over eigenpairs genuinely connected by U.
///
/// Degenerate levels are grouped and connectivity is decided by the spectral
/// norm of the corresponding block of U in the energy eigenbasis, so the
/// result does not depend on the basis chosen inside a degenerate subspace.
pub fn worst_case_work(u: &CMatrix, h: &HamiltonianSpec, overlap_tol: f64) -> Result<f64> {
    if u.nrows() != h.dim() || u.ncols() != h.dim() {
        return Err(CoreError::InvalidInput("worst_case_work: dimension mismatch".into()));
    }
    let unitarity = (u * u.adjoint() - linalg::identity_c(u.nrows())).norm();
    if unitarity > 1e-10 {
        return Err(CoreError::InvalidInput(format!(
            "worst_case_work: U not unitary (defect {unitarity:.3e})"
        )));
    }
    let (evals, evecs) = linalg::eigh(h.matrix());

    // Group eigenvalues into degenerate blocks.
    let scale = evals.iter().fold(1.0_f64, |m, &e| m.max(e.abs()));
    let degeneracy_tol = 1e-10 * scale.max(1.0);
    let mut blocks: Vec<(f64, Vec<usize>)> = Vec::new();
    for (i, &ev) in evals.iter().enumerate() {
        match blocks.last_mut() {
            Some((e, idxs)) if (ev - *e).abs() <= degeneracy_tol => idxs.push(i),
            _ => blocks.push((ev, vec![i])),
        }
    }

    // U in the energy eigenbasis.
    let u_eig = evecs.adjoint() * u * &evecs;

    let mut best = f64::NEG_INFINITY;
    for (e2, rows) in &blocks {
        for (e1, cols) in &blocks {
            let mut block = CMatrix::zeros(rows.len(), cols.len());
            for (bi, &i) in rows.iter().enumerate() {
                for (bj, &j) in cols.iter().enumerate() {
                    block[(bi, bj)] = u_eig[(i, j)];
                }
            }
            if linalg::spectral_norm(&block) > overlap_tol {
                best = best.max(e2 - e1);
            }
        }
    }
    if best == f64::NEG_INFINITY {
        return Err(CoreError::Degenerate(
            "worst_case_work: no connected eigenpair above the overlap tolerance".into(),
        ));
    }
    Ok(best)
}

/// Partial trace over the complement of `keep` in a multipartite state.
pub fn partial_trace(rho: &DensityMatrix, dims: &[usize], keep: &[usize]) -> Result<DensityMatrix> {
    let reduced = linalg::partial_trace(rho.matrix(), dims, keep)?;
    DensityMatrix::new(reduced)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn thermal_state_of_trivial_hamiltonian_is_maximally_mixed() {
        let h = HamiltonianSpec::diagonal(&[0.0, 0.0]).unwrap();
        let w = thermal_state(&h, 1.0).unwrap();
        assert_abs_diff_eq!(w.matrix()[(0, 0)].re, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(w.matrix()[(1, 1)].re, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn thermal_state_qubit_weights() {
        // Oracle: direct Gibbs weights e^{-βE}/Z with Z = 1 + e^{-1}.
        let z = 1.0 + (-1.0_f64).exp();
        let p0 = 1.0 / z;
        let p1 = (-1.0_f64).exp() / z;
        let h = HamiltonianSpec::diagonal(&[0.0, 1.0]).unwrap();
        let w = thermal_state(&h, 1.0).unwrap();
        assert_abs_diff_eq!(w.matrix()[(0, 0)].re, p0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.matrix()[(1, 1)].re, p1, epsilon = 1e-12);
        assert_abs_diff_eq!(p0, 0.731059, epsilon = 1e-6);
    }

    #[test]
    fn thermal_state_zero_temperature_limit() {
        let h = HamiltonianSpec::diagonal(&[0.0, 1.0]).unwrap();
        let w = thermal_state(&h, 1e6).unwrap();
        assert_abs_diff_eq!(w.matrix()[(0, 0)].re, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(w.matrix()[(1, 1)].re, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn thermal_state_commutes_with_h() {
        let h = HamiltonianSpec::new(CMatrix::from_row_slice(2, 2, &[
            c(1.0, 0.0), c(0.3, 0.4),
            c(0.3, -0.4), c(-0.5, 0.0),
        ]))
        .unwrap();
        let w = thermal_state(&h, 2.0).unwrap();
        let comm = h.matrix() * w.matrix() - w.matrix() * h.matrix();
        assert!(comm.norm() < 1e-10);
    }

    #[test]
    fn non_hermitian_hamiltonian_rejected() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(HamiltonianSpec::new(m).is_err());
    }

    #[test]
    fn relative_entropy_identical_is_zero() {
        let rho = DensityMatrix::from_diagonal(&[0.3, 0.7]).unwrap();
        assert_abs_diff_eq!(relative_entropy(&rho, &rho).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn relative_entropy_diagonal_matches_classical_sum() {
        // Oracle: Σ p ln(p/q) evaluated directly.
        let p = [1.0 / (1.0 + (-1.0_f64).exp()), (-1.0_f64).exp() / (1.0 + (-1.0_f64).exp())];
        let q = [0.9, 0.1];
        let expect: f64 = p.iter().zip(&q).map(|(&pi, &qi)| pi * (pi / qi).ln()).sum();
        let rho = DensityMatrix::from_diagonal(&p).unwrap();
        let sig = DensityMatrix::from_diagonal(&q).unwrap();
        assert_abs_diff_eq!(relative_entropy(&rho, &sig).unwrap(), expect, epsilon = 1e-12);
        assert_abs_diff_eq!(expect, 0.114082, epsilon = 1e-6);
    }

    #[test]
    fn relative_entropy_disjoint_supports_is_infinite() {
        let rho = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        let sig = DensityMatrix::from_diagonal(&[0.0, 1.0]).unwrap();
        assert!(relative_entropy(&rho, &sig).unwrap().is_infinite());
    }

    #[test]
    fn vacancy_of_thermal_state_is_zero() {
        let h = HamiltonianSpec::diagonal(&[0.0, 1.0]).unwrap();
        let w = thermal_state(&h, 1.3).unwrap();
        assert_abs_diff_eq!(vacancy(&w, &h, 1.3).unwrap(), 0.0, epsilon = 1e-11);
    }

    #[test]
    fn vacancy_matches_ordered_relative_entropy() {
        let h = HamiltonianSpec::diagonal(&[0.0, 1.0]).unwrap();
        let rho = DensityMatrix::from_diagonal(&[0.9, 0.1]).unwrap();
        let w = thermal_state(&h, 1.0).unwrap();
        let expect = relative_entropy(&w, &rho).unwrap();
        assert_abs_diff_eq!(vacancy(&rho, &h, 1.0).unwrap(), expect, epsilon = 1e-13);
        assert_abs_diff_eq!(expect, 0.114082, epsilon = 1e-6);
    }

    #[test]
    fn vacancy_of_pure_state_is_infinite() {
        let h = HamiltonianSpec::diagonal(&[0.0, 1.0]).unwrap();
        let pure = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        assert!(vacancy(&pure, &h, 0.7).unwrap().is_infinite());
    }

    #[test]
    fn renyi_same_distribution_is_zero_for_all_alpha() {
        let p = [0.2, 0.5, 0.3];
        for alpha in [0.0, 0.3, 0.5, 1.0, 2.0, 10.0, 100.0] {
            assert_abs_diff_eq!(renyi_divergence(&p, &p, alpha).unwrap(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn renyi_alpha_two_hand_value() {
        // Oracle: ln(0.25/0.9 + 0.25/0.1).
        let expect = (0.25_f64 / 0.9 + 0.25 / 0.1).ln();
        let got = renyi_divergence(&[0.5, 0.5], &[0.9, 0.1], 2.0).unwrap();
        assert_abs_diff_eq!(got, expect, epsilon = 1e-12);
        assert_abs_diff_eq!(expect, 1.021651, epsilon = 1e-6);
    }

    #[test]
    fn renyi_continuous_at_one() {
        let p = [0.5_f64, 0.5];
        let q = [0.9_f64, 0.1];
        let kl: f64 = p.iter().zip(&q).map(|(&pi, &qi)| pi * (pi / qi).ln()).sum();
        let at_one = renyi_divergence(&p, &q, 1.0).unwrap();
        let near_one = renyi_divergence(&p, &q, 1.0 + 1e-7).unwrap();
        assert_abs_diff_eq!(at_one, kl, epsilon = 1e-12);
        assert_abs_diff_eq!(near_one, kl, epsilon = 1e-6);
        assert_abs_diff_eq!(kl, 0.510826, epsilon = 1e-6);
    }

    #[test]
    fn renyi_negative_alpha_rejected() {
        assert!(renyi_divergence(&[0.5, 0.5], &[0.5, 0.5], -0.1).is_err());
    }

    #[test]
    fn renyi_monotone_in_alpha() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let alphas = [0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 5.0, 20.0, 100.0];
        for _ in 0..200 {
            let dim = rng.random_range(2..=8);
            let p = random_dist(&mut rng, dim);
            let q = random_dist(&mut rng, dim);
            let mut last = -1.0;
            for &a in &alphas {
                let s = renyi_divergence(&p, &q, a).unwrap();
                assert!(s >= last - 1e-9, "monotonicity violated at alpha {a}: {s} < {last}");
                last = s;
            }
        }
    }

    #[test]
    fn renyi_nonnegative_on_random_pairs() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let dim = rng.random_range(2..=8);
            let p = random_dist(&mut rng, dim);
            let q = random_dist(&mut rng, dim);
            let alpha = rng.random_range(0.0..5.0);
            assert!(renyi_divergence(&p, &q, alpha).unwrap() >= 0.0);
            let rho = DensityMatrix::from_diagonal(&p).unwrap();
            let sig = DensityMatrix::from_diagonal(&q).unwrap();
            assert!(relative_entropy(&rho, &sig).unwrap() >= 0.0);
        }
    }

    fn random_dist<R: rand::Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(1e-3..1.0)).collect();
        let s: f64 = v.iter().sum();
        for x in &mut v {
            *x /= s;
        }
        v
    }

    #[test]
    fn transition_same_state_is_allowed_with_zero_margin() {
        let sp = SpectrumPair::new(vec![0.6, 0.4], vec![0.0, 1.0]).unwrap();
        let rep = transition_allowed(&sp, &sp, 1.0, &[0.0, 1.0, 2.0]).unwrap();
        assert!(rep.allowed);
        assert_abs_diff_eq!(rep.worst_margin, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn thermal_resource_is_useless() {
        let energies = vec![0.0, 1.0];
        let beta = 1.0;
        let resource = SpectrumPair::new(gibbs_weights(&energies, beta), energies.clone()).unwrap();
        let target = SpectrumPair::new(vec![0.95, 0.05], energies).unwrap();
        let rep = transition_allowed(&resource, &target, beta, &[0.5]).unwrap();
        assert!(!rep.allowed);
    }

    #[test]
    fn pure_work_qubit_enables_cooling_to_ground() {
        // Resource: pure excited qubit with energy W = 2; target: ground
        // state of diag(0, 1) at β = 1. W exceeds ln Z = ln(1 + e⁻¹).
        let w = 2.0;
        let resource = SpectrumPair::new(vec![0.0, 1.0], vec![0.0, w]).unwrap();
        let target = SpectrumPair::new(vec![1.0, 0.0], vec![0.0, 1.0]).unwrap();
        let rep = transition_allowed(&resource, &target, 1.0, &[0.0, 0.5, 1.0, 2.0]).unwrap();
        assert!(rep.allowed);
        assert!(w > (1.0 + (-1.0_f64).exp()).ln());
    }

    #[test]
    fn free_energy_of_thermal_state_is_minus_log_z_over_beta() {
        let h = HamiltonianSpec::diagonal(&[0.0, 1.0]).unwrap();
        let beta = 1.0;
        let w = thermal_state(&h, beta).unwrap();
        let expect = -(1.0 + (-1.0_f64).exp()).ln();
        assert_abs_diff_eq!(free_energy(&w, &h, beta).unwrap(), expect, epsilon = 1e-12);
        assert_abs_diff_eq!(expect, -0.313262, epsilon = 1e-6);
    }

    #[test]
    fn free_energy_trivial_hamiltonian_is_minus_entropy_over_beta() {
        let h = HamiltonianSpec::diagonal(&[0.0, 0.0]).unwrap();
        let rho = DensityMatrix::maximally_mixed(2);
        assert_abs_diff_eq!(
            free_energy(&rho, &h, 1.0).unwrap(),
            -(2.0_f64.ln()),
            epsilon = 1e-12
        );
        let pure = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(free_energy(&pure, &h, 1.0).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn free_energy_difference_equals_relative_entropy_over_beta() {
        let h = HamiltonianSpec::new(CMatrix::from_row_slice(2, 2, &[
            c(0.2, 0.0), c(0.1, -0.3),
            c(0.1, 0.3), c(1.1, 0.0),
        ]))
        .unwrap();
        let beta = 1.7;
        let omega = thermal_state(&h, beta).unwrap();
        let rho = DensityMatrix::from_diagonal(&[0.8, 0.2]).unwrap();
        let lhs = free_energy(&rho, &h, beta).unwrap() - free_energy(&omega, &h, beta).unwrap();
        let rhs = relative_entropy(&rho, &omega).unwrap() / beta;
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-10);
    }

    #[test]
    fn thermal_state_minimizes_free_energy() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let h = HamiltonianSpec::diagonal(&[0.0, 0.7, 1.9]).unwrap();
        for &beta in &[0.3, 1.0, 4.0] {
            let omega = thermal_state(&h, beta).unwrap();
            let f_star = free_energy(&omega, &h, beta).unwrap();
            for _ in 0..100 {
                let u = linalg::haar_unitary(&mut rng, 3);
                let mut probs = [0.0; 3];
                let mut s = 0.0;
                for p in &mut probs {
                    use rand::Rng;
                    *p = rng.random_range(0.01..1.0);
                    s += *p;
                }
                let diag = CMatrix::from_diagonal(&DVector::from_iterator(
                    3,
                    probs.iter().map(|&p| c(p / s, 0.0)),
                ));
                let rho = DensityMatrix::new(&u * diag * u.adjoint()).unwrap();
                assert!(free_energy(&rho, &h, beta).unwrap() >= f_star - 1e-10);
            }
        }
    }

    #[test]
    fn worst_case_work_identity_is_zero() {
        let h = HamiltonianSpec::diagonal(&[0.0, 0.4, 1.0]).unwrap();
        let u = linalg::identity_c(3);
        assert_abs_diff_eq!(worst_case_work(&u, &h, DEFAULT_OVERLAP_TOL).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn worst_case_work_swap_is_the_gap() {
        let delta = 0.8;
        let h = HamiltonianSpec::diagonal(&[0.0, delta]).unwrap();
        let x = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        assert_abs_diff_eq!(worst_case_work(&x, &h, DEFAULT_OVERLAP_TOL).unwrap(), delta, epsilon = 1e-12);
    }

    #[test]
    fn energy_conserving_unitary_has_zero_worst_case_work() {
        let h = HamiltonianSpec::diagonal(&[0.0, 1.0]).unwrap();
        let u = CMatrix::from_row_slice(2, 2, &[
            c(1.0, 0.0), c(0.0, 0.0),
            c(0.0, 0.0), Complex64::from_polar(1.0, 0.9),
        ]);
        assert_abs_diff_eq!(worst_case_work(&u, &h, DEFAULT_OVERLAP_TOL).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn worst_case_work_matches_exhaustive_search() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        // Nondegenerate spectrum so eigenpair enumeration is unambiguous.
        let energies = [0.0, 0.31, 0.9, 1.4, 2.2];
        let h = HamiltonianSpec::diagonal(&energies).unwrap();
        for _ in 0..20 {
            let u = linalg::haar_unitary(&mut rng, 5);
            let mut brute = f64::NEG_INFINITY;
            for i in 0..5 {
                for j in 0..5 {
                    if u[(j, i)].norm() > DEFAULT_OVERLAP_TOL {
                        brute = brute.max(energies[j] - energies[i]);
                    }
                }
            }
            let got = worst_case_work(&u, &h, DEFAULT_OVERLAP_TOL).unwrap();
            assert_abs_diff_eq!(got, brute, epsilon = 1e-10);
        }
    }

    #[test]
    fn worst_case_work_degenerate_block_is_basis_independent() {
        // Degenerate ground doublet; a rotation inside the doublet must not
        // register as a transition.
        let h = HamiltonianSpec::diagonal(&[0.0, 0.0, 1.0]).unwrap();
        let theta: f64 = 0.6;
        let u = CMatrix::from_row_slice(3, 3, &[
            c(theta.cos(), 0.0), c(-theta.sin(), 0.0), c(0.0, 0.0),
            c(theta.sin(), 0.0), c(theta.cos(), 0.0), c(0.0, 0.0),
            c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0),
        ]);
        assert_abs_diff_eq!(worst_case_work(&u, &h, DEFAULT_OVERLAP_TOL).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn non_unitary_rejected() {
        let h = HamiltonianSpec::diagonal(&[0.0, 1.0]).unwrap();
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)]);
        assert!(worst_case_work(&m, &h, DEFAULT_OVERLAP_TOL).is_err());
    }

    #[test]
    fn partial_trace_recovers_product_factor() {
        let a = DensityMatrix::from_diagonal(&[0.25, 0.75]).unwrap();
        let b = DensityMatrix::from_diagonal(&[0.1, 0.3, 0.6]).unwrap();
        let joint = a.tensor(&b);
        let ta = partial_trace(&joint, &[2, 3], &[0]).unwrap();
        assert!((ta.matrix() - a.matrix()).norm() < 1e-12);
    }

    #[test]
    fn maximally_entangled_reduces_to_maximally_mixed() {
        let psi = [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)];
        let rho = DensityMatrix::pure(&psi).unwrap();
        for keep in [0usize, 1] {
            let red = partial_trace(&rho, &[2, 2], &[keep]).unwrap();
            assert!((red.matrix() - DensityMatrix::maximally_mixed(2).matrix()).norm() < 1e-12);
        }
    }

    #[test]
    fn vacancy_additive_over_noninteracting_pairs() {
        let h1 = HamiltonianSpec::diagonal(&[0.0, 1.0]).unwrap();
        let h2 = HamiltonianSpec::diagonal(&[0.0, 0.3, 0.9]).unwrap();
        let beta = 0.8;
        let rho = DensityMatrix::from_diagonal(&[0.7, 0.3]).unwrap();
        let sig = DensityMatrix::from_diagonal(&[0.5, 0.3, 0.2]).unwrap();
        // H = H₁ ⊗ 1 + 1 ⊗ H₂ on the product space.
        let id1 = linalg::identity_c(2);
        let id2 = linalg::identity_c(3);
        let h_sum = linalg::kron(h1.matrix(), &id2) + linalg::kron(&id1, h2.matrix());
        let h_joint = HamiltonianSpec::new(h_sum).unwrap();
        let joint = rho.tensor(&sig);
        let lhs = vacancy(&joint, &h_joint, beta).unwrap();
        let rhs = vacancy(&rho, &h1, beta).unwrap() + vacancy(&sig, &h2, beta).unwrap();
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-10);
    }
}
