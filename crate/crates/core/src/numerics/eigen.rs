//! Cyclic complex Jacobi eigensolver for Hermitian matrices and the
//! one-sided (Hestenes) Jacobi SVD. Both are O(n³) per sweep and converge
//! quadratically; the dimensions used here stay well under 64.

use super::matrix::{ComplexMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// 2x2 unitary `G` such that `G† [[a, b], [b*, d]] G` is diagonal.
///
/// Returns `(g00, g01, g10, g11)`.
fn jacobi_rotation(a: f64, d: f64, b: C64) -> (C64, C64, C64, C64) {
    let mag = b.norm();
    let phase = b / mag;
    let theta = (d - a) / (2.0 * mag);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    // G = diag(1, e^{-iφ}) · [[c, s], [-s, c]]
    let pc = phase.conj();
    (C64::new(c, 0.0), C64::new(s, 0.0), pc * (-s), pc * c)
}

fn rotate_columns(m: &mut ComplexMatrix, p: usize, q: usize, g: (C64, C64, C64, C64)) {
    let (g00, g01, g10, g11) = g;
    for k in 0..m.rows() {
        let mp = m[(k, p)];
        let mq = m[(k, q)];
        m[(k, p)] = mp * g00 + mq * g10;
        m[(k, q)] = mp * g01 + mq * g11;
    }
}

fn rotate_rows_dagger(m: &mut ComplexMatrix, p: usize, q: usize, g: (C64, C64, C64, C64)) {
    let (g00, g01, g10, g11) = g;
    for k in 0..m.cols() {
        let mp = m[(p, k)];
        let mq = m[(q, k)];
        m[(p, k)] = g00.conj() * mp + g10.conj() * mq;
        m[(q, k)] = g01.conj() * mp + g11.conj() * mq;
    }
}

fn off_diagonal_norm(m: &ComplexMatrix) -> f64 {
    let n = m.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += m[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Eigen-decomposes a matrix that is already exactly Hermitian.
/// Eigenvalues are returned unsorted, paired with the columns of `V`.
pub(crate) fn jacobi_hermitian(h: &ComplexMatrix, max_sweeps: usize) -> Result<(Vec<f64>, ComplexMatrix)> {
    let n = h.rows();
    let mut a = h.clone();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm();
    if scale == 0.0 || n == 1 {
        let vals = (0..n).map(|i| a[(i, i)].re).collect();
        return Ok((vals, v));
    }
    let target = (n as f64) * f64::EPSILON * scale;
    let mut sweeps = 0;
    while off_diagonal_norm(&a) > target {
        if sweeps == max_sweeps {
            return Err(Error::ConvergenceFailure {
                routine: "hermitian eigensolver",
                sweeps,
            });
        }
        sweeps += 1;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let b = a[(p, q)];
                if b.norm() <= f64::MIN_POSITIVE {
                    continue;
                }
                let g = jacobi_rotation(a[(p, p)].re, a[(q, q)].re, b);
                rotate_columns(&mut a, p, q, g);
                rotate_rows_dagger(&mut a, p, q, g);
                rotate_columns(&mut v, p, q, g);
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
            }
        }
    }
    let vals = (0..n).map(|i| a[(i, i)].re).collect();
    Ok((vals, v))
}

/// One-sided Jacobi SVD for `rows >= cols`. Returns `(U, σ, V)` with
/// `U` of shape rows×cols, unsorted.
pub(crate) fn jacobi_svd_tall(m: &ComplexMatrix, max_sweeps: usize) -> Result<(ComplexMatrix, Vec<f64>, ComplexMatrix)> {
    let (rows, cols) = m.shape();
    debug_assert!(rows >= cols);
    let mut u = m.clone();
    let mut v = ComplexMatrix::identity(cols);
    let tol = f64::EPSILON;
    let mut sweeps = 0;
    loop {
        let mut rotated = false;
        for p in 0..cols.saturating_sub(1) {
            for q in p + 1..cols {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = ZERO;
                for k in 0..rows {
                    let up = u[(k, p)];
                    let uq = u[(k, q)];
                    alpha += up.norm_sqr();
                    beta += uq.norm_sqr();
                    gamma += up.conj() * uq;
                }
                if gamma.norm() <= tol * (alpha * beta).sqrt() || gamma.norm() <= f64::MIN_POSITIVE {
                    continue;
                }
                rotated = true;
                let g = jacobi_rotation(alpha, beta, gamma);
                rotate_columns(&mut u, p, q, g);
                rotate_columns(&mut v, p, q, g);
            }
        }
        if !rotated {
            break;
        }
        sweeps += 1;
        if sweeps == max_sweeps {
            return Err(Error::ConvergenceFailure {
                routine: "svd",
                sweeps,
            });
        }
    }

    let sigma: Vec<f64> = (0..cols)
        .map(|j| (0..rows).map(|k| u[(k, j)].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let sigma_max = sigma.iter().cloned().fold(0.0, f64::max);
    let floor = (rows.max(cols) as f64) * f64::EPSILON * sigma_max;
    let mut degenerate = Vec::new();
    for (j, &s) in sigma.iter().enumerate() {
        if s > floor && s > 0.0 {
            let inv = 1.0 / s;
            for k in 0..rows {
                u[(k, j)] *= inv;
            }
        } else {
            degenerate.push(j);
        }
    }
    complete_orthonormal(&mut u, &degenerate);
    Ok((u, sigma, v))
}

/// Replaces the listed columns with unit vectors orthogonal to all other
/// columns (modified Gram-Schmidt with reorthogonalization).
fn complete_orthonormal(u: &mut ComplexMatrix, slots: &[usize]) {
    if slots.is_empty() {
        return;
    }
    let rows = u.rows();
    let mut filled: Vec<usize> = (0..u.cols()).filter(|j| !slots.contains(j)).collect();
    let mut candidate = 0;
    for &slot in slots {
        loop {
            assert!(candidate < rows, "cannot complete orthonormal basis");
            let mut w = vec![ZERO; rows];
            w[candidate] = ONE;
            candidate += 1;
            for _ in 0..2 {
                for &j in &filled {
                    let proj: C64 = (0..rows).map(|k| u[(k, j)].conj() * w[k]).sum();
                    for (k, wk) in w.iter_mut().enumerate() {
                        *wk -= proj * u[(k, j)];
                    }
                }
            }
            let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-6 {
                for (k, wk) in w.iter().enumerate() {
                    u[(k, slot)] = wk / norm;
                }
                filled.push(slot);
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_diagonalizes_block() {
        let b = C64::new(0.3, -0.7);
        let (a, d) = (1.5, -0.25);
        let g = jacobi_rotation(a, d, b);
        let m = ComplexMatrix::from_rows(&[[C64::new(a, 0.0), b], [b.conj(), C64::new(d, 0.0)]]);
        let gm = ComplexMatrix::from_rows(&[[g.0, g.1], [g.2, g.3]]);
        let r = gm.dagger().matmul(&m).matmul(&gm);
        assert!(r[(0, 1)].norm() < 1e-14);
        assert!((gm.dagger().matmul(&gm) - ComplexMatrix::identity(2)).frobenius_norm() < 1e-14);
    }
}
