//! Seeded generators for random states, unitaries, channels and
//! measurement effects. All output is a deterministic function of the seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::{self, ComplexMatrix, C64};
use crate::qstate::{DensityMatrix, Povm, QuantumChannel, StateVector};

pub type TestRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

pub fn density<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> Result<DensityMatrix> {
    if rank == 0 || rank > dim {
        return Err(Error::BadRank { rank, dim });
    }
    let g = ginibre(rng, dim, rank);
    let w = g.matmul(&g.dagger());
    let tr = w.trace().re;
    DensityMatrix::new(w.scale_real(1.0 / tr))
}

pub fn pure_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> StateVector {
    let amps = (0..dim).map(|_| complex_normal(rng)).collect();
    StateVector::normalized(amps).expect("gaussian vector is nonzero")
}

/// GUE-style Hermitian matrix with unit-variance entries.
pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    ginibre(rng, dim, dim).hermitian_part()
}

/// Haar-distributed unitary: Gram-Schmidt on a Ginibre matrix.
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let mut u = ginibre(rng, dim, dim);
    for j in 0..dim {
        for _ in 0..2 {
            for k in 0..j {
                let proj: C64 = (0..dim).map(|i| u[(i, k)].conj() * u[(i, j)]).sum();
                for i in 0..dim {
                    let uk = u[(i, k)];
                    u[(i, j)] -= proj * uk;
                }
            }
        }
        let norm = (0..dim).map(|i| u[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..dim {
            u[(i, j)] /= norm;
        }
    }
    u
}

/// Random CPTP map with `n_kraus` operators: Kᵢ = Gᵢ S^{−1/2}, S = Σ Gᵢ†Gᵢ.
pub fn channel<R: Rng + ?Sized>(rng: &mut R, dim: usize, n_kraus: usize) -> QuantumChannel {
    let gs: Vec<ComplexMatrix> = (0..n_kraus.max(1)).map(|_| ginibre(rng, dim, dim)).collect();
    let mut s = ComplexMatrix::zeros(dim, dim);
    for g in &gs {
        s = &s + &g.dagger().matmul(g);
    }
    let spec = numerics::herm_eig(&s.hermitian_part()).expect("Gram matrix is Hermitian");
    let inv_sqrt = spec.map(|l| C64::new(1.0 / l.sqrt(), 0.0));
    let kraus = gs.iter().map(|g| g.matmul(&inv_sqrt)).collect();
    QuantumChannel::new(kraus).expect("normalized Kraus set is trace preserving")
}

/// Effect operator 0 ⪯ Λ ⪯ I with uniform eigenvalues in a Haar basis.
/// With probability ½ the eigenvalues are rounded to {0, 1} (projective).
pub fn effect<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let u = unitary(rng, dim);
    let projective = rng.random_bool(0.5);
    let vals: Vec<f64> = (0..dim)
        .map(|_| {
            let x: f64 = rng.random();
            if projective {
                x.round()
            } else {
                x
            }
        })
        .collect();
    ComplexMatrix::from_real_diag(&vals).conjugate_by(&u).hermitian_part()
}

pub fn binary_povm<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Povm {
    Povm::binary(effect(rng, dim)).expect("effect operator yields a valid POVM")
}
