//! Dense complex linear algebra: Hermitian eigendecomposition, SVD, PSD
//! square roots, Hermitian exponentials and norms.
//!
//! Every tolerance used for validation lives in [`NumericPolicy`].

mod eigen;
mod matrix;

pub use matrix::{ComplexMatrix, C64};
pub(crate) use matrix::{ONE, ZERO};

use crate::error::{Error, Result};

/// Tolerance policy shared by every validation in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericPolicy {
    /// ‖M − M†‖_F allowed, relative to max(1, ‖M‖_F).
    pub hermitian_tol: f64,
    /// Most negative eigenvalue tolerated (and clamped) for PSD inputs.
    pub psd_tol: f64,
    /// |Tr ρ − 1| allowed for density matrices.
    pub trace_tol: f64,
    /// |‖ψ‖² − 1| allowed for state vectors.
    pub normalization_tol: f64,
    /// ‖ρ² − ρ‖_F threshold for purity.
    pub purity_tol: f64,
    /// ‖Σ Λ − I‖_F allowed for POVMs.
    pub povm_tol: f64,
    /// ‖Σ K†K − I‖_F allowed for channels.
    pub channel_tol: f64,
    /// Sweep cap for the Jacobi iterations.
    pub max_sweeps: usize,
}

impl NumericPolicy {
    pub const DEFAULT: NumericPolicy = NumericPolicy {
        hermitian_tol: 1e-9,
        psd_tol: 1e-9,
        trace_tol: 1e-9,
        normalization_tol: 1e-10,
        purity_tol: 1e-8,
        povm_tol: 1e-8,
        channel_tol: 1e-8,
        max_sweeps: 100,
    };
}

impl Default for NumericPolicy {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Eigenvalues (descending) and orthonormal eigenvectors (columns).
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// V · diag(f(λ)) · V†.
    pub fn map(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let n = self.dim();
        let v = &self.eigenvectors;
        let fvals: Vec<C64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        ComplexMatrix::from_fn(n, n, |i, j| {
            (0..n).map(|k| v[(i, k)] * fvals[k] * v[(j, k)].conj()).sum()
        })
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map(|l| C64::new(l, 0.0))
    }

    /// Projector onto the span of eigenvectors whose eigenvalue satisfies `keep`.
    pub fn projector(&self, keep: impl Fn(f64) -> bool) -> ComplexMatrix {
        self.map(|l| if keep(l) { ONE } else { ZERO })
    }
}

/// Thin singular value decomposition `M = U Σ V†`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let (m, k) = self.u.shape();
        let n = self.v.rows();
        ComplexMatrix::from_fn(m, n, |i, j| {
            (0..k)
                .map(|l| self.u[(i, l)] * self.singular_values[l] * self.v[(j, l)].conj())
                .sum()
        })
    }
}

pub(crate) fn check_hermitian(m: &ComplexMatrix, policy: &NumericPolicy) -> Result<()> {
    m.ensure_square()?;
    let deviation = m.hermitian_deviation();
    let tolerance = policy.hermitian_tol * m.frobenius_norm().max(1.0);
    if deviation > tolerance {
        return Err(Error::NotHermitian { deviation, tolerance });
    }
    Ok(())
}

fn sort_descending(values: Vec<f64>, mut vectors: ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let sorted_vals = order.iter().map(|&i| values[i]).collect();
    let cols: Vec<Vec<C64>> = order.iter().map(|&i| vectors.column(i)).collect();
    for (j, col) in cols.into_iter().enumerate() {
        for (i, z) in col.into_iter().enumerate() {
            vectors[(i, j)] = z;
        }
    }
    (sorted_vals, vectors)
}

/// Eigendecomposition of a Hermitian matrix.
pub fn herm_eig(m: &ComplexMatrix) -> Result<SpectralDecomposition> {
    herm_eig_with(m, &NumericPolicy::DEFAULT)
}

pub fn herm_eig_with(m: &ComplexMatrix, policy: &NumericPolicy) -> Result<SpectralDecomposition> {
    check_hermitian(m, policy)?;
    let (vals, vecs) = eigen::jacobi_hermitian(&m.hermitian_part(), policy.max_sweeps)?;
    let (eigenvalues, eigenvectors) = sort_descending(vals, vecs);
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Thin SVD; singular values are sorted descending.
pub fn svd(m: &ComplexMatrix) -> Result<Svd> {
    let sweeps = NumericPolicy::DEFAULT.max_sweeps;
    if m.rows() >= m.cols() {
        let (u, s, v) = eigen::jacobi_svd_tall(m, sweeps)?;
        let (s, u, v) = sort_svd(s, u, v);
        Ok(Svd {
            u,
            singular_values: s,
            v,
        })
    } else {
        // M† = U' Σ V'†  ⇒  M = V' Σ U'†
        let (u, s, v) = eigen::jacobi_svd_tall(&m.dagger(), sweeps)?;
        let (s, u, v) = sort_svd(s, u, v);
        Ok(Svd {
            u: v,
            singular_values: s,
            v: u,
        })
    }
}

fn sort_svd(s: Vec<f64>, mut u: ComplexMatrix, mut v: ComplexMatrix) -> (Vec<f64>, ComplexMatrix, ComplexMatrix) {
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let u_cols: Vec<Vec<C64>> = order.iter().map(|&i| u.column(i)).collect();
    let v_cols: Vec<Vec<C64>> = order.iter().map(|&i| v.column(i)).collect();
    for (j, (uc, vc)) in u_cols.into_iter().zip(v_cols).enumerate() {
        for (i, z) in uc.into_iter().enumerate() {
            u[(i, j)] = z;
        }
        for (i, z) in vc.into_iter().enumerate() {
            v[(i, j)] = z;
        }
    }
    (order.iter().map(|&i| s[i]).collect(), u, v)
}

/// ‖M‖₁, the sum of singular values.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    m.ensure_square()?;
    Ok(svd(m)?.singular_values.iter().sum())
}

/// Σ|λᵢ| for Hermitian input; agrees with [`trace_norm`].
pub fn trace_norm_hermitian(m: &ComplexMatrix) -> Result<f64> {
    Ok(herm_eig(m)?.eigenvalues.iter().map(|l| l.abs()).sum())
}

pub fn frobenius_norm(m: &ComplexMatrix) -> f64 {
    m.frobenius_norm()
}

/// Eigenvalues below this are rounding noise of a PSD spectrum and
/// are treated as exact zeros.
fn noise_floor(spec: &SpectralDecomposition) -> f64 {
    let top = spec.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    16.0 * spec.dim() as f64 * f64::EPSILON * top
}

/// Principal square root of a PSD matrix.
pub fn mat_sqrt_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    mat_sqrt_psd_with(m, &NumericPolicy::DEFAULT)
}

pub fn mat_sqrt_psd_with(m: &ComplexMatrix, policy: &NumericPolicy) -> Result<ComplexMatrix> {
    let spec = herm_eig_with(m, policy)?;
    let min = spec.eigenvalues.last().copied().unwrap_or(0.0);
    if min < -policy.psd_tol {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    let floor = noise_floor(&spec);
    Ok(spec.map(|l| if l <= floor { ZERO } else { C64::new(l.sqrt(), 0.0) }))
}

/// e^{−iHt} with ℏ = 1.
pub fn unitary_from_hamiltonian(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    if !t.is_finite() {
        return Err(Error::BadParameter(format!("time {t} is not finite")));
    }
    let spec = herm_eig(h)?;
    Ok(unitary_from_spectrum(&spec, t))
}

pub(crate) fn unitary_from_spectrum(spec: &SpectralDecomposition, t: f64) -> ComplexMatrix {
    spec.map(|l| C64::from_polar(1.0, -l * t))
}
