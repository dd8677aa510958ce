use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use linkfid::batch::{self, Execution};
use linkfid::control::{self, ControlProblem};
use linkfid::dynamics::Hamiltonian;
use linkfid::qstate::{self, DensityMatrix};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn sandwich(c: &mut Criterion) {
    let mut g = c.benchmark_group("fvdg_sandwich");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new(name, 200), |b| {
            b.iter(|| batch::fvdg_sandwich(black_box(200), &[2, 3, 4, 5, 6], 1, exec).unwrap())
        });
    }
    g.finish();
}

fn optimality(c: &mut Criterion) {
    let mut g = c.benchmark_group("helstrom_optimality");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new(name, "16x100"), |b| {
            b.iter(|| batch::helstrom_optimality(black_box(16), 100, &[2, 3, 4], 2, exec).unwrap())
        });
    }
    g.finish();
}

fn grape_gradient(c: &mut Criterion) {
    let problem = ControlProblem::new(
        Hamiltonian::new(qstate::pauli_z().scale_real(0.2)).unwrap(),
        vec![
            Hamiltonian::new(qstate::pauli_x()).unwrap(),
            Hamiltonian::new(qstate::pauli_y()).unwrap(),
        ],
        64,
        1.0,
        DensityMatrix::basis(2, 0),
        DensityMatrix::basis(2, 1),
    )
    .unwrap();
    let amps: Vec<Vec<f64>> = (0..2).map(|c| (0..64).map(|j| 0.01 * (j + c) as f64).collect()).collect();
    let mut g = c.benchmark_group("grape_gradient");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new(name, "2x64"), |b| {
            b.iter(|| control::fidelity_gradient(&problem, black_box(&amps), exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, sandwich, optimality, grape_gradient);
criterion_main!(benches);
