//! Dense linear-algebra helpers built on nalgebra.
//!
//! Everything here works on dynamically sized matrices; the systems in this
//! crate are small (network sizes and Hilbert-space dimensions well below a
//! hundred), so dense routines are the right tool.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{CoreError, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type RMatrix = DMatrix<f64>;

/// Maximum absolute deviation of `m` from its conjugate transpose.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let adj = m.adjoint();
    (m - adj).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Maximum absolute deviation of a real matrix from its transpose.
pub fn symmetry_defect(m: &RMatrix) -> f64 {
    let t = m.transpose();
    (m - t).iter().map(|x| x.abs()).fold(0.0, f64::max)
}

pub fn require_hermitian(m: &CMatrix, tol: f64, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(CoreError::InvalidInput(format!("{what}: matrix not square")));
    }
    let defect = hermiticity_defect(m);
    if defect > tol {
        return Err(CoreError::InvalidInput(format!(
            "{what}: not Hermitian (defect {defect:.3e} > {tol:.1e})"
        )));
    }
    Ok(())
}

pub fn require_symmetric(m: &RMatrix, tol: f64, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(CoreError::InvalidInput(format!("{what}: matrix not square")));
    }
    let defect = symmetry_defect(m);
    if defect > tol {
        return Err(CoreError::InvalidInput(format!(
            "{what}: not symmetric (defect {defect:.3e} > {tol:.1e})"
        )));
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Returns eigenvalues in ascending order together with the matrix whose
/// columns are the corresponding orthonormal eigenvectors.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    // Symmetrize first so eigensolver noise cannot leak in from round-off.
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vecs.set_column(col, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn eigvals_sym(m: &RMatrix) -> Vec<f64> {
    let c = m.map(|x| Complex64::new(x, 0.0));
    eigh(&c).0
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Real part of tr(a b). Both arguments must be square and of equal size.
pub fn trace_prod_re(a: &CMatrix, b: &CMatrix) -> f64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let z = a[(i, j)] * b[(j, i)];
            acc += z.re;
        }
    }
    acc
}

pub fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Kronecker product a ⊗ b.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let scaled = b.scale(1.0) * a[(i, j)];
            out.view_mut((i * br, j * bc), (br, bc)).copy_from(&scaled);
        }
    }
    out
}

/// Partial trace of a multipartite matrix.
///
/// `dims` are the factor dimensions whose product must equal the matrix side,
/// `keep` lists the factor indices to retain (strictly increasing order is
/// applied internally).
pub fn partial_trace(rho: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    if rho.nrows() != total || rho.ncols() != total {
        return Err(CoreError::InvalidInput(format!(
            "partial_trace: factor dims product {} does not match matrix side {}",
            total,
            rho.nrows()
        )));
    }
    if keep.iter().any(|&k| k >= dims.len()) {
        return Err(CoreError::InvalidInput(
            "partial_trace: keep index out of range".into(),
        ));
    }
    let mut keep_sorted: Vec<usize> = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();

    let kept_dim: usize = keep_sorted.iter().map(|&k| dims[k]).product();
    let mut out = CMatrix::zeros(kept_dim, kept_dim);

    // Mixed-radix index helpers over the factor structure.
    let nfac = dims.len();
    let decode = |mut idx: usize| -> Vec<usize> {
        let mut digits = vec![0usize; nfac];
        for f in (0..nfac).rev() {
            digits[f] = idx % dims[f];
            idx /= dims[f];
        }
        digits
    };
    let encode_kept = |digits: &[usize]| -> usize {
        let mut idx = 0;
        for &k in &keep_sorted {
            idx = idx * dims[k] + digits[k];
        }
        idx
    };

    for row in 0..total {
        let rd = decode(row);
        for col in 0..total {
            let cd = decode(col);
            // Traced-out factors must match between row and column.
            let diagonal_in_traced = (0..nfac)
                .filter(|f| !keep_sorted.contains(f))
                .all(|f| rd[f] == cd[f]);
            if diagonal_in_traced {
                out[(encode_kept(&rd), encode_kept(&cd))] += rho[(row, col)];
            }
        }
    }
    Ok(out)
}

/// Largest singular value (spectral norm).
pub fn spectral_norm(m: &CMatrix) -> f64 {
    m.clone().singular_values().max()
}

pub fn spectral_norm_real(m: &RMatrix) -> f64 {
    m.clone().singular_values().max()
}

/// Haar-distributed random unitary via QR of a complex Ginibre matrix.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    // Fix the phase ambiguity so the distribution is exactly Haar.
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] /= phase;
        }
    }
    q
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigval(m: &CMatrix) -> f64 {
    eigh(m).0[0]
}

/// Solve the dense complex system `a x = b` by LU with partial pivoting.
pub fn solve_lu(a: CMatrix, b: CMatrix) -> Result<CMatrix> {
    a.lu()
        .solve(&b)
        .ok_or_else(|| CoreError::Instability("singular linear system".into()))
}

pub fn identity_c(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Condition number estimate from the full singular spectrum.
///
/// The matrix is normalized by its largest entry first (the condition
/// number is scale invariant) and a failed SVD counts as singular.
pub fn condition_number(m: &CMatrix) -> f64 {
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 || !scale.is_finite() {
        return f64::INFINITY;
    }
    let normalized = m.map(|z| z / scale);
    match normalized.try_svd(false, false, 1e-14, 200) {
        Some(svd) => {
            let max = svd.singular_values.max();
            let min = svd.singular_values.min();
            if min <= 0.0 {
                f64::INFINITY
            } else {
                max / min
            }
        }
        None => f64::INFINITY,
    }
}

/// Cheap condition estimate ‖a‖∞·‖a⁻¹‖∞ given a matrix and its inverse.
pub fn condition_inf(a: &CMatrix, a_inv: &CMatrix) -> f64 {
    inf_norm(a) * inf_norm(a_inv)
}

fn inf_norm(m: &CMatrix) -> f64 {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}
