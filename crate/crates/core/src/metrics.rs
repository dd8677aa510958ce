//! State-comparison quantities.
//!
//! Conventions:
//! * [`trace_distance`] is normalized, ½‖ρ−σ‖₁ ∈ [0, 1]; the raw trace norm
//!   Σ|λᵢ| is [`trace_norm_difference`].
//! * [`uhlmann_fidelity`] is the squared convention (Tr√(√ρσ√ρ))².
//! * [`frobenius_fidelity`] evaluates ‖√ρ σ √ρ‖_F literally. It agrees with
//!   the Uhlmann fidelity on pure states only; it is reported next to it,
//!   never in its place.
//! * [`published_fidelity_bounds`] returns √TD and √(1−TD) exactly as
//!   published, including the crossover above TD = ½ where the "lower"
//!   bound exceeds the "upper" one.

use crate::error::{Error, Result};
use crate::numerics::{self, ComplexMatrix};
use crate::qstate::{ensure_dim, DensityMatrix, Povm};

fn difference(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<ComplexMatrix> {
    ensure_dim(rho.dim(), sigma.dim())?;
    Ok(rho.matrix() - sigma.matrix())
}

fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange { name, value })
    }
}

/// Orders the pair by entries so that swapped arguments give bitwise equal results.
fn canonical<'a>(rho: &'a DensityMatrix, sigma: &'a DensityMatrix) -> (&'a DensityMatrix, &'a DensityMatrix) {
    let order = rho
        .matrix()
        .as_slice()
        .iter()
        .zip(sigma.matrix().as_slice())
        .map(|(x, y)| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)))
        .find(|o| o.is_ne());
    if order.is_some_and(|o| o.is_gt()) {
        (sigma, rho)
    } else {
        (rho, sigma)
    }
}

/// ‖ρ − σ‖₁ = Σ|λᵢ(ρ − σ)|.
pub fn trace_norm_difference(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    let (a, b) = canonical(rho, sigma);
    numerics::trace_norm_hermitian(&difference(a, b)?)
}

/// ½‖ρ − σ‖₁.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    Ok((0.5 * trace_norm_difference(rho, sigma)?).clamp(0.0, 1.0))
}

/// Optimal distinguishing effect for the variational form of the trace distance.
#[derive(Debug, Clone)]
pub struct Witness {
    /// Projector onto the nonnegative eigenspace of ρ − σ.
    pub operator: ComplexMatrix,
    /// Tr{Λ(ρ − σ)}
    pub value: f64,
}

pub fn td_witness(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<Witness> {
    let diff = difference(rho, sigma)?;
    let spec = numerics::herm_eig(&diff)?;
    let operator = spec.projector(|l| l >= 0.0);
    let value = operator.trace_product(&diff).re;
    Ok(Witness { operator, value })
}

/// Both sides of Tr{Λρ} ≤ bound + Tr{Λσ} for a given effect Λ.
#[derive(Debug, Clone, Copy)]
pub struct WitnessBound {
    pub lhs: f64,
    /// ½‖ρ−σ‖₁ + Tr{Λσ}; a valid bound for every 0 ⪯ Λ ⪯ I.
    pub rhs_trace_norm: f64,
    /// ‖ρ−σ‖_F + Tr{Λσ}; the Schatten-2 variant, which is not a bound in general.
    pub rhs_frobenius: f64,
}

impl WitnessBound {
    pub fn holds(&self, slack: f64) -> bool {
        self.lhs <= self.rhs_trace_norm + slack
    }
}

pub fn witness_bound(rho: &DensityMatrix, sigma: &DensityMatrix, effect: &ComplexMatrix) -> Result<WitnessBound> {
    let diff = difference(rho, sigma)?;
    ensure_dim(rho.dim(), effect.ensure_square()?)?;
    let lhs = effect.trace_product(rho.matrix()).re;
    let on_sigma = effect.trace_product(sigma.matrix()).re;
    Ok(WitnessBound {
        lhs,
        rhs_trace_norm: 0.5 * numerics::trace_norm_hermitian(&diff)? + on_sigma,
        rhs_frobenius: diff.frobenius_norm() + on_sigma,
    })
}

/// Binary hypothesis test: ρ with prior `prior_rho`, σ otherwise.
#[derive(Debug, Clone)]
pub struct DiscriminationProblem {
    rho: DensityMatrix,
    sigma: DensityMatrix,
    prior_rho: f64,
}

impl DiscriminationProblem {
    pub fn new(rho: DensityMatrix, sigma: DensityMatrix, prior_rho: f64) -> Result<Self> {
        ensure_dim(rho.dim(), sigma.dim())?;
        check_unit("prior", prior_rho)?;
        Ok(Self { rho, sigma, prior_rho })
    }

    /// Equal priors.
    pub fn balanced(rho: DensityMatrix, sigma: DensityMatrix) -> Result<Self> {
        Self::new(rho, sigma, 0.5)
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn sigma(&self) -> &DensityMatrix {
        &self.sigma
    }

    pub fn prior_rho(&self) -> f64 {
        self.prior_rho
    }

    /// Success probability of a two-outcome measurement whose first
    /// outcome means "guess ρ".
    pub fn success_probability(&self, povm: &Povm) -> Result<f64> {
        if povm.len() != 2 {
            return Err(Error::BadParameter(format!("expected 2 outcomes, got {}", povm.len())));
        }
        ensure_dim(self.rho.dim(), povm.dim())?;
        let [guess_rho, guess_sigma] = [&povm.elements()[0], &povm.elements()[1]];
        let r = self.prior_rho;
        Ok(r * guess_rho.trace_product(self.rho.matrix()).re
            + (1.0 - r) * guess_sigma.trace_product(self.sigma.matrix()).re)
    }
}

#[derive(Debug, Clone)]
pub struct HelstromResult {
    pub p_success: f64,
    pub p_error: f64,
    /// Outcomes `guess_rho`, `guess_sigma`.
    pub decision_povm: Povm,
}

/// Minimum-error discrimination: p_success = ½(1 + ‖rρ − (1−r)σ‖₁).
pub fn helstrom(problem: &DiscriminationProblem) -> Result<HelstromResult> {
    let r = problem.prior_rho;
    let weighted = &problem.rho.matrix().scale_real(r) - &problem.sigma.matrix().scale_real(1.0 - r);
    let spec = numerics::herm_eig(&weighted)?;
    let norm: f64 = spec.eigenvalues.iter().map(|l| l.abs()).sum();
    let p_success = (0.5 * (1.0 + norm)).min(1.0);
    let guess_rho = spec.projector(|l| l > 0.0);
    let dim = guess_rho.rows();
    let guess_sigma = &ComplexMatrix::identity(dim) - &guess_rho;
    let decision_povm = Povm::new(
        vec![guess_rho, guess_sigma],
        vec!["guess_rho".into(), "guess_sigma".into()],
    )?;
    Ok(HelstromResult {
        p_success,
        p_error: 1.0 - p_success,
        decision_povm,
    })
}

/// Symmetric band `center ± half_width`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdBand {
    pub center: f64,
    pub half_width: f64,
    pub low: f64,
    pub high: f64,
}

impl TdBand {
    pub fn new(center: f64, half_width: f64) -> Self {
        let half_width = half_width.max(0.0);
        Self {
            center,
            half_width,
            low: center - half_width,
            high: center + half_width,
        }
    }

    /// Band endpoints clipped to [0, 1], as written to reports.
    pub fn clipped(&self) -> (f64, f64) {
        (self.low.clamp(0.0, 1.0), self.high.clamp(0.0, 1.0))
    }
}

/// Operational trace distance: center ½(1 + TD), half-width the
/// equal-prior Helstrom error ½(1 − TD).
pub fn operational_td_band(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<TdBand> {
    let td = trace_distance(rho, sigma)?;
    Ok(band_from_td(td))
}

pub(crate) fn band_from_td(td: f64) -> TdBand {
    TdBand::new(0.5 * (1.0 + td), 0.5 * (1.0 - td))
}

/// (Tr√(√ρ σ √ρ))², evaluated as ‖√σ √ρ‖₁² so that rank-deficient
/// inputs do not pick up square roots of rounding noise.
pub fn uhlmann_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    ensure_dim(rho.dim(), sigma.dim())?;
    let sr = numerics::mat_sqrt_psd(rho.matrix())?;
    let ss = numerics::mat_sqrt_psd(sigma.matrix())?;
    let nuclear = numerics::trace_norm(&ss.matmul(&sr))?;
    Ok((nuclear * nuclear).clamp(0.0, 1.0))
}

/// ½(1 + Tr{ρ_target ρ_evolved}).
pub fn overlap_fidelity(target: &DensityMatrix, evolved: &DensityMatrix) -> Result<f64> {
    ensure_dim(target.dim(), evolved.dim())?;
    Ok(0.5 * (1.0 + target.matrix().trace_product(evolved.matrix()).re))
}

/// ‖√ρ σ √ρ‖_F.
pub fn frobenius_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    ensure_dim(rho.dim(), sigma.dim())?;
    let sr = numerics::mat_sqrt_psd(rho.matrix())?;
    Ok(sigma.matrix().conjugate_by(&sr).frobenius_norm())
}

/// Fuchs–van de Graaf trace-distance bounds for fidelity F:
/// (1 − √F, √(1 − F)).
pub fn fvdg_bounds(fidelity: f64) -> Result<(f64, f64)> {
    check_unit("fidelity", fidelity)?;
    Ok((1.0 - fidelity.sqrt(), (1.0 - fidelity).sqrt()))
}

/// As-published fidelity bounds for trace distance TD:
/// (F_lower, F_upper) = (√TD, √(1 − TD)).
pub fn published_fidelity_bounds(td: f64) -> Result<(f64, f64)> {
    check_unit("trace distance", td)?;
    Ok((td.sqrt(), (1.0 - td).sqrt()))
}

/// The as-published bounds are inverted (F_lower > F_upper) above this TD.
pub const PUBLISHED_BOUNDS_CROSSOVER: f64 = 0.5;
