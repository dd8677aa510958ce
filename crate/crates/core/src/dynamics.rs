//! Unitary and Lindblad time evolution of density matrices.
//!
//! The master equation is integrated with fixed-step classical RK4 directly
//! on the matrix ODE. Each step is re-Hermitized; the trace is *not*
//! renormalized, so trace drift stays visible as a diagnostic.

use crate::error::{Error, Result};
use crate::metrics::{self, TdBand};
use crate::numerics::{self, ComplexMatrix, SpectralDecomposition, C64};
use crate::qstate::{ensure_dim, DensityMatrix};

/// Trace drift (or purity above 1) beyond this aborts integration.
pub const MAX_TRACE_DRIFT: f64 = 1e-3;
/// Trace drift beyond this is logged as a warning.
pub const WARN_TRACE_DRIFT: f64 = 1e-6;

/// Hermitian generator with its spectrum cached.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    matrix: ComplexMatrix,
    spectrum: SpectralDecomposition,
}

impl Hamiltonian {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let spectrum = numerics::herm_eig(&matrix)?;
        Ok(Self {
            matrix: matrix.hermitian_part(),
            spectrum,
        })
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(ComplexMatrix::zeros(dim, dim)).expect("zero matrix is Hermitian")
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn spectrum(&self) -> &SpectralDecomposition {
        &self.spectrum
    }

    /// e^{−iHt}
    pub fn propagator(&self, t: f64) -> ComplexMatrix {
        numerics::unitary_from_spectrum(&self.spectrum, t)
    }

    /// Largest |eigenvalue|.
    pub fn spectral_norm(&self) -> f64 {
        self.spectrum.eigenvalues.iter().map(|l| l.abs()).fold(0.0, f64::max)
    }
}

/// Hamiltonian plus collapse operators Lₖ = √γₖ·Aₖ (rates folded in).
#[derive(Debug, Clone)]
pub struct LindbladModel {
    hamiltonian: Hamiltonian,
    collapse_ops: Vec<ComplexMatrix>,
}

impl LindbladModel {
    pub fn new(hamiltonian: Hamiltonian, collapse_ops: Vec<ComplexMatrix>) -> Result<Self> {
        let dim = hamiltonian.dim();
        for l in &collapse_ops {
            if l.shape() != (dim, dim) {
                return Err(Error::DimMismatch {
                    expected: dim,
                    found: l.rows().max(l.cols()),
                });
            }
        }
        Ok(Self {
            hamiltonian,
            collapse_ops,
        })
    }

    /// Closed-system model.
    pub fn unitary(hamiltonian: Hamiltonian) -> Self {
        Self {
            hamiltonian,
            collapse_ops: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.hamiltonian
    }

    pub fn collapse_ops(&self) -> &[ComplexMatrix] {
        &self.collapse_ops
    }

    pub fn is_closed(&self) -> bool {
        self.collapse_ops.is_empty()
    }

    /// Upper bound on the generator norm: 2‖H‖ + 2Σ‖Lₖ‖².
    pub fn generator_norm_bound(&self) -> f64 {
        2.0 * self.hamiltonian.spectral_norm()
            + 2.0 * self.collapse_ops.iter().map(|l| l.frobenius_norm().powi(2)).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_start: f64,
    t_end: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, steps: usize) -> Result<Self> {
        if !t_start.is_finite() || !t_end.is_finite() || t_end <= t_start {
            return Err(Error::BadParameter(format!(
                "time grid needs t_end > t_start, got [{t_start}, {t_end}]"
            )));
        }
        if steps == 0 {
            return Err(Error::BadParameter("time grid needs at least one step".into()));
        }
        Ok(Self { t_start, t_end, steps })
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t_start) / self.steps as f64
    }

    /// Time of grid point `i`, `0 ≤ i ≤ steps`.
    pub fn time(&self, i: usize) -> f64 {
        if i == self.steps {
            self.t_end
        } else {
            self.t_start + i as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|i| self.time(i)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// max |Tr ρ(t) − 1| over the trajectory.
    pub max_trace_drift: f64,
}

/// e^{−iHt} ρ₀ e^{iHt}
pub fn unitary_evolve(rho0: &DensityMatrix, h: &Hamiltonian, t: f64) -> Result<DensityMatrix> {
    ensure_dim(h.dim(), rho0.dim())?;
    rho0.conjugated(&h.propagator(t))
}

fn rhs_matrix(rho: &ComplexMatrix, model: &LindbladModel) -> ComplexMatrix {
    let h = model.hamiltonian.matrix();
    let mut out = h.commutator(rho).scale(C64::new(0.0, -1.0));
    for l in &model.collapse_ops {
        let ld = l.dagger();
        let jump = rho.conjugate_by(l);
        let anti = ld.matmul(l).anticommutator(rho).scale_real(0.5);
        out = &out + &(&jump - &anti);
    }
    out
}

/// −i[H, ρ] + Σₖ (Lₖ ρ Lₖ† − ½{Lₖ†Lₖ, ρ})
pub fn lindblad_rhs(rho: &DensityMatrix, model: &LindbladModel) -> Result<ComplexMatrix> {
    ensure_dim(model.dim(), rho.dim())?;
    Ok(rhs_matrix(rho.matrix(), model))
}

fn rk4_step(rho: &ComplexMatrix, model: &LindbladModel, dt: f64) -> ComplexMatrix {
    let k1 = rhs_matrix(rho, model);
    let k2 = rhs_matrix(&(rho + &k1.scale_real(0.5 * dt)), model);
    let k3 = rhs_matrix(&(rho + &k2.scale_real(0.5 * dt)), model);
    let k4 = rhs_matrix(&(rho + &k3.scale_real(dt)), model);
    let incr = &(&k1 + &k2.scale_real(2.0)) + &(&k3.scale_real(2.0) + &k4);
    (rho + &incr.scale_real(dt / 6.0)).hermitian_part()
}

/// Fixed-step RK4 integration of the master equation over `grid`.
pub fn lindblad_evolve(rho0: &DensityMatrix, model: &LindbladModel, grid: &TimeGrid) -> Result<Trajectory> {
    ensure_dim(model.dim(), rho0.dim())?;
    let dt = grid.dt();
    let bound = model.generator_norm_bound();
    if bound > 0.0 && dt > 0.1 / bound {
        log::warn!(
            "step {dt:.3e} exceeds the recommended 0.1/‖L‖ = {:.3e}",
            0.1 / bound
        );
    }
    let mut times = Vec::with_capacity(grid.steps() + 1);
    let mut states = Vec::with_capacity(grid.steps() + 1);
    let mut rho = rho0.matrix().clone();
    let mut max_drift: f64 = (rho.trace().re - 1.0).abs();
    times.push(grid.time(0));
    states.push(rho0.clone());
    for i in 1..=grid.steps() {
        rho = rk4_step(&rho, model, dt);
        let drift = (rho.trace().re - 1.0).abs();
        // RK4 preserves the trace of a traceless generator exactly, so an
        // unstable step shows up as purity above 1 rather than trace drift.
        let excess = rho.frobenius_norm().powi(2) - 1.0;
        let worst = drift.max(excess);
        if !rho.is_finite() || worst.is_nan() || worst > MAX_TRACE_DRIFT {
            return Err(Error::StepTooLarge { drift: worst });
        }
        max_drift = max_drift.max(drift);
        times.push(grid.time(i));
        states.push(DensityMatrix::from_trusted(rho.clone()));
    }
    if max_drift > WARN_TRACE_DRIFT {
        log::warn!("trace drift {max_drift:.3e} over the horizon");
    }
    Ok(Trajectory {
        times,
        states,
        max_trace_drift: max_drift,
    })
}

/// One row of a trace-distance trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdSample {
    pub t: f64,
    pub trace_distance: f64,
    pub band: TdBand,
    pub fidelity: f64,
}

/// Evolves both states under the same model and evaluates the metrics at
/// every grid point.
pub fn td_trajectory(
    rho0: &DensityMatrix,
    sigma0: &DensityMatrix,
    model: &LindbladModel,
    grid: &TimeGrid,
) -> Result<Vec<TdSample>> {
    ensure_dim(rho0.dim(), sigma0.dim())?;
    let (a, b) = crate::batch::join(
        || lindblad_evolve(rho0, model, grid),
        || lindblad_evolve(sigma0, model, grid),
    );
    let (a, b) = (a?, b?);
    a.times
        .iter()
        .zip(a.states.iter().zip(&b.states))
        .map(|(&t, (rho, sigma))| {
            let td = metrics::trace_distance(rho, sigma)?;
            Ok(TdSample {
                t,
                trace_distance: td,
                band: metrics::band_from_td(td),
                fidelity: metrics::uhlmann_fidelity(rho, sigma)?,
            })
        })
        .collect()
}

/// First sample index after which the trace distance changes by less than
/// `1e-8` between consecutive samples for 100 consecutive steps.
pub fn steady_state_index(series: &[TdSample]) -> Option<usize> {
    const WINDOW: usize = 100;
    const TOL: f64 = 1e-8;
    let mut run = 0;
    for i in 1..series.len() {
        if (series[i].trace_distance - series[i - 1].trace_distance).abs() < TOL {
            run += 1;
            if run == WINDOW {
                return Some(i - WINDOW);
            }
        } else {
            run = 0;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{density_from_pure, pauli_z, sigma_minus, StateVector};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn plus() -> DensityMatrix {
        density_from_pure(&StateVector::plus())
    }

    fn dephasing(gamma: f64) -> LindbladModel {
        LindbladModel::new(Hamiltonian::zero(2), vec![pauli_z().scale_real(gamma.sqrt())]).unwrap()
    }

    #[test]
    fn unitary_examples() {
        let h = Hamiltonian::new(pauli_z()).unwrap();
        let rho = plus();
        let same = unitary_evolve(&rho, &h, 0.0).unwrap();
        assert!((same.matrix() - rho.matrix()).frobenius_norm() < 1e-15);

        let ground = DensityMatrix::basis(2, 0);
        for t in [0.3, 1.7, 12.0] {
            let out = unitary_evolve(&ground, &h, t).unwrap();
            assert!((out.matrix() - ground.matrix()).frobenius_norm() < 1e-14);
        }

        // e^{-iσz t} rotates the Bloch vector by 2t about z:
        // t = π/2 takes |+⟩ to |−⟩, t = π/4 takes it to (|0⟩ + i|1⟩)/√2.
        let out = unitary_evolve(&rho, &h, FRAC_PI_2).unwrap();
        let expected = density_from_pure(&StateVector::minus());
        assert!((out.matrix() - expected.matrix()).frobenius_norm() < 1e-14);
        let out = unitary_evolve(&rho, &h, FRAC_PI_4).unwrap();
        let h2 = std::f64::consts::FRAC_1_SQRT_2;
        let plus_i = StateVector::new(vec![C64::new(h2, 0.0), C64::new(0.0, h2)]).unwrap();
        let expected = density_from_pure(&plus_i);
        assert!((out.matrix() - expected.matrix()).frobenius_norm() < 1e-14);
    }

    #[test]
    fn rhs_examples() {
        let free = LindbladModel::unitary(Hamiltonian::zero(2));
        let rho = crate::qstate::random_density(2, 2, 1).unwrap();
        assert_eq!(lindblad_rhs(&rho, &free).unwrap().frobenius_norm(), 0.0);

        let gamma = 0.7;
        let d = lindblad_rhs(&DensityMatrix::maximally_mixed(2), &dephasing(gamma)).unwrap();
        assert!(d.frobenius_norm() < 1e-15);

        let d = lindblad_rhs(&plus(), &dephasing(gamma)).unwrap();
        assert!((d[(0, 1)] - C64::new(-2.0 * gamma * 0.5, 0.0)).norm() < 1e-14);
        assert!(d[(0, 0)].norm() < 1e-15);
    }

    #[test]
    fn rhs_is_traceless_and_hermitian() {
        let mut rng = crate::random::seeded(17);
        for dim in 2..5 {
            let h = Hamiltonian::new(crate::random::hermitian(&mut rng, dim)).unwrap();
            let ls = (0..2).map(|_| crate::random::ginibre(&mut rng, dim, dim).scale_real(0.3)).collect();
            let model = LindbladModel::new(h, ls).unwrap();
            let rho = crate::random::density(&mut rng, dim, dim).unwrap();
            let d = lindblad_rhs(&rho, &model).unwrap();
            assert!(d.trace().norm() < 1e-12);
            assert!(d.hermitian_deviation() < 1e-12);
        }
    }

    #[test]
    fn evolve_examples() {
        let grid = TimeGrid::new(0.0, 1.0, 50).unwrap();
        let free = LindbladModel::unitary(Hamiltonian::zero(2));
        let rho = crate::qstate::random_density(2, 2, 4).unwrap();
        let traj = lindblad_evolve(&rho, &free, &grid).unwrap();
        assert_eq!(traj.states.len(), 51);
        assert!(traj.states.iter().all(|s| s == &rho));

        let gamma: f64 = 1.0;
        let grid = TimeGrid::new(0.0, 2.0, 2000).unwrap();
        let traj = lindblad_evolve(&DensityMatrix::basis(2, 1), &{
            LindbladModel::new(Hamiltonian::zero(2), vec![sigma_minus().scale_real(gamma.sqrt())]).unwrap()
        }, &grid)
        .unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            assert!((s.matrix()[(1, 1)].re - (-gamma * t).exp()).abs() < 1e-6);
        }
        assert!(traj.max_trace_drift < 1e-6);
    }

    #[test]
    fn runaway_step_is_an_error() {
        let grid = TimeGrid::new(0.0, 10.0, 2).unwrap();
        let err = lindblad_evolve(&plus(), &dephasing(50.0), &grid).unwrap_err();
        assert!(matches!(err, Error::StepTooLarge { .. }));
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(1.0, 1.0, 10).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0).is_err());
        let g = TimeGrid::new(0.0, 1.0, 3).unwrap();
        assert_eq!(g.times().len(), 4);
        assert_eq!(g.time(3), 1.0);
    }

    #[test]
    fn td_trajectory_examples() {
        let grid = TimeGrid::new(0.0, 1.0, 1000).unwrap();
        let minus = density_from_pure(&StateVector::minus());
        let gamma = 1.0;
        let series = td_trajectory(&plus(), &minus, &dephasing(gamma), &grid).unwrap();
        for s in &series {
            assert!((s.trace_distance - (-2.0 * gamma * s.t).exp()).abs() < 1e-6);
        }

        let same = td_trajectory(&plus(), &plus(), &dephasing(gamma), &grid).unwrap();
        assert!(same.iter().all(|s| s.trace_distance == 0.0));

        let h = Hamiltonian::new(crate::qstate::pauli_x().scale_real(0.8)).unwrap();
        let closed = LindbladModel::unitary(h);
        let a = crate::qstate::random_density(2, 2, 1).unwrap();
        let b = crate::qstate::random_density(2, 1, 2).unwrap();
        let series = td_trajectory(&a, &b, &closed, &grid).unwrap();
        let first = series[0].trace_distance;
        assert!(series.iter().all(|s| (s.trace_distance - first).abs() < 1e-9));
    }

    #[test]
    fn steady_state_is_detected() {
        let grid = TimeGrid::new(0.0, 20.0, 2000).unwrap();
        let minus = density_from_pure(&StateVector::minus());
        let series = td_trajectory(&plus(), &minus, &dephasing(1.0), &grid).unwrap();
        let idx = steady_state_index(&series).expect("decays to a steady state");
        assert!(series[idx].trace_distance < 1e-5);
        let short = TimeGrid::new(0.0, 0.5, 50).unwrap();
        let series = td_trajectory(&plus(), &minus, &dephasing(1.0), &short).unwrap();
        assert_eq!(steady_state_index(&series), None);
    }
}
