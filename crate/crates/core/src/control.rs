//! GRAPE-style optimization of piecewise-constant controls.
//!
//! The objective is the overlap fidelity ½(1 + Tr{ρ_target ρ(T)}). Gradients
//! are central finite differences, evaluated per (control, slice) against
//! cached forward states and back-propagated targets so that each component
//! costs one slice exponential instead of a full propagation.

use rand::Rng;

use crate::batch::{self, Execution};
use crate::dynamics::Hamiltonian;
use crate::error::{Error, Result};
use crate::metrics;
use crate::numerics::{self, ComplexMatrix};
use crate::qstate::{ensure_dim, DensityMatrix};
use crate::random;

/// Central-difference step for gradient components.
pub const FD_STEP: f64 = 1e-6;
/// Optimization stops once the gradient norm drops below this.
pub const GRADIENT_TOL: f64 = 1e-8;
/// Scale of the seeded random initial amplitudes.
pub const INIT_SCALE: f64 = 1e-2;

const MAX_HALVINGS: usize = 60;

/// Amplitudes indexed `[control][slice]`.
pub type Amplitudes = Vec<Vec<f64>>;

#[derive(Debug, Clone)]
pub struct ControlProblem {
    drift: Hamiltonian,
    controls: Vec<ComplexMatrix>,
    n_slices: usize,
    horizon: f64,
    rho0: DensityMatrix,
    target: DensityMatrix,
}

impl ControlProblem {
    pub fn new(
        drift: Hamiltonian,
        controls: Vec<Hamiltonian>,
        n_slices: usize,
        horizon: f64,
        rho0: DensityMatrix,
        target: DensityMatrix,
    ) -> Result<Self> {
        if n_slices == 0 {
            return Err(Error::BadParameter("need at least one time slice".into()));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::BadParameter(format!("horizon {horizon} must be positive")));
        }
        let dim = drift.dim();
        for c in &controls {
            ensure_dim(dim, c.dim())?;
        }
        ensure_dim(dim, rho0.dim())?;
        ensure_dim(dim, target.dim())?;
        Ok(Self {
            drift,
            controls: controls.into_iter().map(|c| c.matrix().clone()).collect(),
            n_slices,
            horizon,
            rho0,
            target,
        })
    }

    pub fn n_controls(&self) -> usize {
        self.controls.len()
    }

    pub fn n_slices(&self) -> usize {
        self.n_slices
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_slices as f64
    }

    pub fn rho0(&self) -> &DensityMatrix {
        &self.rho0
    }

    pub fn target(&self) -> &DensityMatrix {
        &self.target
    }

    pub fn zero_amplitudes(&self) -> Amplitudes {
        vec![vec![0.0; self.n_slices]; self.n_controls()]
    }

    fn check_shape(&self, amps: &Amplitudes) -> Result<()> {
        let found = (amps.len(), amps.first().map(Vec::len).unwrap_or(self.n_slices));
        let expected = (self.n_controls(), self.n_slices);
        if found != expected || amps.iter().any(|row| row.len() != self.n_slices) {
            return Err(Error::ShapeMismatch { expected, found });
        }
        if amps.iter().flatten().any(|a| !a.is_finite()) {
            return Err(Error::BadParameter("non-finite amplitude".into()));
        }
        Ok(())
    }

    /// H₀ + Σ_c a_c H_c
    fn slice_hamiltonian(&self, coeffs: impl Iterator<Item = f64>) -> ComplexMatrix {
        let mut h = self.drift.matrix().clone();
        for (a, hc) in coeffs.zip(&self.controls) {
            if a != 0.0 {
                h = &h + &hc.scale_real(a);
            }
        }
        h
    }

    fn slice_unitary(&self, coeffs: impl Iterator<Item = f64>) -> Result<ComplexMatrix> {
        numerics::unitary_from_hamiltonian(&self.slice_hamiltonian(coeffs), self.dt())
    }

    fn slice_unitaries(&self, amps: &Amplitudes) -> Result<Vec<ComplexMatrix>> {
        (0..self.n_slices)
            .map(|j| self.slice_unitary(amps.iter().map(|row| row[j])))
            .collect()
    }
}

/// Applies the slice unitaries in order and returns the final state.
pub fn propagate(problem: &ControlProblem, amps: &Amplitudes) -> Result<DensityMatrix> {
    problem.check_shape(amps)?;
    let mut rho = problem.rho0.matrix().clone();
    for u in problem.slice_unitaries(amps)? {
        rho = rho.conjugate_by(&u);
    }
    Ok(DensityMatrix::from_trusted(rho))
}

/// Overlap fidelity of the propagated state with the target.
pub fn fidelity(problem: &ControlProblem, amps: &Amplitudes) -> Result<f64> {
    metrics::overlap_fidelity(&problem.target, &propagate(problem, amps)?)
}

/// Central finite-difference gradient of [`fidelity`], `[control][slice]`.
pub fn fidelity_gradient(problem: &ControlProblem, amps: &Amplitudes, exec: Execution) -> Result<Amplitudes> {
    problem.check_shape(amps)?;
    let unitaries = problem.slice_unitaries(amps)?;
    let n = problem.n_slices;

    // forward[j]: state before slice j
    let mut forward = Vec::with_capacity(n);
    let mut rho = problem.rho0.matrix().clone();
    for u in &unitaries {
        forward.push(rho.clone());
        rho = rho.conjugate_by(u);
    }
    // backward[j]: target pulled back through slices j+1..n
    let mut backward = vec![problem.target.matrix().clone(); n];
    for j in (0..n - 1).rev() {
        let u = &unitaries[j + 1];
        backward[j] = backward[j + 1].conjugate_by(&u.dagger());
    }

    let n_controls = problem.n_controls();
    let components = batch::try_map_indexed(n_controls * n, exec, |idx| {
        let (c, j) = (idx / n, idx % n);
        let shifted = |delta: f64| -> Result<f64> {
            let coeffs = (0..n_controls).map(|k| amps[k][j] + if k == c { delta } else { 0.0 });
            let u = problem.slice_unitary(coeffs)?;
            let evolved = forward[j].conjugate_by(&u);
            Ok(0.5 * (1.0 + backward[j].trace_product(&evolved).re))
        };
        Ok((shifted(FD_STEP)? - shifted(-FD_STEP)?) / (2.0 * FD_STEP))
    })?;
    Ok(components.chunks(n).map(|row| row.to_vec()).collect())
}

/// Optimizer output.
#[derive(Debug, Clone)]
pub struct PulseSchedule {
    pub amplitudes: Amplitudes,
    /// Fidelity at iteration 0 and after every accepted step; strictly increasing.
    pub fidelity_trace: Vec<f64>,
    /// Stopped because the gradient norm fell below [`GRADIENT_TOL`].
    pub converged: bool,
}

impl PulseSchedule {
    pub fn final_fidelity(&self) -> f64 {
        *self.fidelity_trace.last().expect("trace has the initial fidelity")
    }

    pub fn iterations(&self) -> usize {
        self.fidelity_trace.len() - 1
    }
}

/// Seeded small random initial amplitudes, then [`grape_optimize_from`].
pub fn grape_optimize(problem: &ControlProblem, max_iters: usize, seed: u64) -> Result<PulseSchedule> {
    let mut rng = random::seeded(seed);
    let init = (0..problem.n_controls())
        .map(|_| {
            (0..problem.n_slices)
                .map(|_| rng.random_range(-INIT_SCALE..INIT_SCALE))
                .collect()
        })
        .collect();
    grape_optimize_from(problem, init, max_iters)
}

/// Gradient ascent with a backtracking line search. A step is only taken
/// when it strictly increases the fidelity; the trial step length doubles
/// after each success and halves on each rejection.
pub fn grape_optimize_from(problem: &ControlProblem, initial: Amplitudes, max_iters: usize) -> Result<PulseSchedule> {
    let mut amps = initial;
    let mut current = fidelity(problem, &amps)?;
    let mut trace = vec![current];
    let mut step = 1.0;
    let mut converged = false;

    for _ in 0..max_iters {
        let grad = fidelity_gradient(problem, &amps, Execution::Auto)?;
        let norm = grad.iter().flatten().map(|g| g * g).sum::<f64>().sqrt();
        if norm < GRADIENT_TOL {
            converged = true;
            break;
        }
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial: Amplitudes = amps
                .iter()
                .zip(&grad)
                .map(|(row, g)| row.iter().zip(g).map(|(a, d)| a + step * d).collect())
                .collect();
            let f = fidelity(problem, &trial)?;
            if f > current {
                accepted = Some((trial, f));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((trial, f)) => {
                amps = trial;
                current = f;
                trace.push(f);
                step *= 2.0;
            }
            None => break,
        }
    }
    if max_iters > 0 && !converged {
        let grad = fidelity_gradient(problem, &amps, Execution::Auto)?;
        converged = grad.iter().flatten().map(|g| g * g).sum::<f64>().sqrt() < GRADIENT_TOL;
    }
    Ok(PulseSchedule {
        amplitudes: amps,
        fidelity_trace: trace,
        converged,
    })
}
