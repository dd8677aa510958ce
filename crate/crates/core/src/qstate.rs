//! States, measurements and channels.
//!
//! Pure states are carried around as their projectors |ψ⟩⟨ψ|; every
//! [`DensityMatrix`] is validated (Hermitian, unit trace, PSD) on
//! construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, ComplexMatrix, NumericPolicy, C64, ONE, ZERO};
use crate::random;

/// Normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidShape("empty state vector".into()));
        }
        let norm_sqr: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if !norm_sqr.is_finite() || (norm_sqr - 1.0).abs() > NumericPolicy::DEFAULT.normalization_tol {
            return Err(Error::NotNormalized { norm: norm_sqr.sqrt() });
        }
        Ok(Self { amplitudes })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized { norm });
        }
        Self::new(amplitudes.into_iter().map(|z| z / norm).collect())
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index {index} out of range for dim {dim}");
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        Self { amplitudes }
    }

    /// (|0⟩ + |1⟩)/√2
    pub fn plus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            amplitudes: vec![C64::new(h, 0.0), C64::new(h, 0.0)],
        }
    }

    /// (|0⟩ − |1⟩)/√2
    pub fn minus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            amplitudes: vec![C64::new(h, 0.0), C64::new(-h, 0.0)],
        }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &Self) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::new_with(matrix, &NumericPolicy::DEFAULT)
    }

    pub fn new_with(matrix: ComplexMatrix, policy: &NumericPolicy) -> Result<Self> {
        let spec = numerics::herm_eig_with(&matrix, policy)?;
        let trace = matrix.trace().re;
        if (trace - 1.0).abs() > policy.trace_tol {
            return Err(Error::TraceNotUnit { trace });
        }
        let min = spec.eigenvalues.last().copied().unwrap_or(0.0);
        if min < -policy.psd_tol {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
        Ok(Self {
            matrix: matrix.hermitian_part(),
        })
    }

    /// Wraps a matrix produced by a trusted numerical path, forcing it
    /// Hermitian but skipping the spectral check.
    pub(crate) fn from_trusted(matrix: ComplexMatrix) -> Self {
        Self {
            matrix: matrix.hermitian_part(),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    /// |i⟩⟨i| in dimension `dim`.
    pub fn basis(dim: usize, index: usize) -> Self {
        density_from_pure(&StateVector::basis(dim, index))
    }

    /// Convex combination Σ wᵢ ρᵢ; weights must be nonnegative and sum to 1.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::BadParameter("empty mixture".into()))?;
        let dim = first.1.dim();
        let mut total = 0.0;
        let mut acc = ComplexMatrix::zeros(dim, dim);
        for (w, rho) in parts {
            if *w < 0.0 || !w.is_finite() {
                return Err(Error::BadParameter(format!("mixture weight {w}")));
            }
            if rho.dim() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    found: rho.dim(),
                });
            }
            total += w;
            acc = &acc + &rho.matrix.scale_real(*w);
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::BadParameter(format!("mixture weights sum to {total}")));
        }
        Ok(Self::from_trusted(acc))
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// Tr ρ²
    pub fn purity(&self) -> f64 {
        self.matrix.trace_product(&self.matrix).re
    }

    /// ‖ρ² − ρ‖_F ≤ 1e−8
    pub fn is_pure(&self) -> bool {
        let sq = self.matrix.matmul(&self.matrix);
        (sq - self.matrix.clone()).frobenius_norm() <= NumericPolicy::DEFAULT.purity_tol
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(*numerics::herm_eig(&self.matrix)?
            .eigenvalues
            .last()
            .expect("non-empty spectrum"))
    }

    /// ⟨ψ|ρ|ψ⟩
    pub fn expectation(&self, psi: &StateVector) -> Result<f64> {
        ensure_dim(self.dim(), psi.dim())?;
        let a = psi.amplitudes();
        let n = self.dim();
        let mut acc = ZERO;
        for i in 0..n {
            for j in 0..n {
                acc += a[i].conj() * self.matrix[(i, j)] * a[j];
            }
        }
        Ok(acc.re)
    }

    /// U ρ U†
    pub fn conjugated(&self, u: &ComplexMatrix) -> Result<Self> {
        ensure_dim(self.dim(), u.cols())?;
        u.ensure_square()?;
        Ok(Self::from_trusted(self.matrix.conjugate_by(u)))
    }
}

pub(crate) fn ensure_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimMismatch { expected, found })
    }
}

/// Finite measurement {Λₓ} with Σ Λₓ = I.
#[derive(Debug, Clone)]
pub struct Povm {
    elements: Vec<ComplexMatrix>,
    labels: Vec<String>,
}

impl Povm {
    pub fn new(elements: Vec<ComplexMatrix>, labels: Vec<String>) -> Result<Self> {
        let policy = NumericPolicy::DEFAULT;
        let first = elements
            .first()
            .ok_or_else(|| Error::BadParameter("POVM needs at least one element".into()))?;
        let dim = first.ensure_square()?;
        if labels.len() != elements.len() {
            return Err(Error::BadParameter(format!(
                "{} labels for {} POVM elements",
                labels.len(),
                elements.len()
            )));
        }
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for e in &elements {
            ensure_dim(dim, e.ensure_square()?)?;
            let spec = numerics::herm_eig(e)?;
            let min = *spec.eigenvalues.last().expect("non-empty");
            if min < -policy.psd_tol {
                return Err(Error::NotPsd { min_eigenvalue: min });
            }
            sum = &sum + e;
        }
        let deviation = (sum - ComplexMatrix::identity(dim)).frobenius_norm();
        if deviation > policy.povm_tol {
            return Err(Error::IncompletePovm { deviation });
        }
        Ok(Self { elements, labels })
    }

    /// Elements labelled "0", "1", ...
    pub fn unlabelled(elements: Vec<ComplexMatrix>) -> Result<Self> {
        let labels = (0..elements.len()).map(|i| i.to_string()).collect();
        Self::new(elements, labels)
    }

    pub fn computational_basis(dim: usize) -> Self {
        let elements = (0..dim)
            .map(|i| DensityMatrix::basis(dim, i).into_matrix())
            .collect();
        Self {
            elements,
            labels: (0..dim).map(|i| i.to_string()).collect(),
        }
    }

    /// Rank-1 projective measurement in an orthonormal basis given by the
    /// columns of a unitary.
    pub fn from_basis(u: &ComplexMatrix) -> Result<Self> {
        let n = u.ensure_square()?;
        let elements = (0..n)
            .map(|j| {
                let col = u.column(j);
                ComplexMatrix::outer(&col, &col)
            })
            .collect();
        Self::unlabelled(elements)
    }

    /// The single-outcome measurement {I}.
    pub fn trivial(dim: usize) -> Self {
        Self {
            elements: vec![ComplexMatrix::identity(dim)],
            labels: vec!["0".into()],
        }
    }

    /// {Λ, I − Λ} for 0 ⪯ Λ ⪯ I.
    pub fn binary(lambda: ComplexMatrix) -> Result<Self> {
        let n = lambda.ensure_square()?;
        let rest = &ComplexMatrix::identity(n) - &lambda;
        Self::unlabelled(vec![lambda, rest])
    }

    pub fn dim(&self) -> usize {
        self.elements[0].rows()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// Kraus-form channel from an N-dimensional to an M-dimensional system.
#[derive(Debug, Clone)]
pub struct QuantumChannel {
    input_dim: usize,
    output_dim: usize,
    kraus: Vec<ComplexMatrix>,
}

impl QuantumChannel {
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::BadParameter("channel needs at least one Kraus operator".into()))?;
        let (output_dim, input_dim) = first.shape();
        let mut sum = ComplexMatrix::zeros(input_dim, input_dim);
        for k in &kraus {
            if k.shape() != (output_dim, input_dim) {
                return Err(Error::InvalidShape(format!(
                    "Kraus operator {}x{} in a {output_dim}x{input_dim} channel",
                    k.rows(),
                    k.cols()
                )));
            }
            sum = &sum + &k.dagger().matmul(k);
        }
        let deviation = (sum - ComplexMatrix::identity(input_dim)).frobenius_norm();
        if deviation > NumericPolicy::DEFAULT.channel_tol {
            return Err(Error::NotTracePreserving { deviation });
        }
        Ok(Self {
            input_dim,
            output_dim,
            kraus,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            input_dim: dim,
            output_dim: dim,
            kraus: vec![ComplexMatrix::identity(dim)],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn kraus_ops(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// Channel acting as `self ⊗ other` on a bipartite system.
    pub fn tensor(&self, other: &QuantumChannel) -> QuantumChannel {
        let kraus = self
            .kraus
            .iter()
            .flat_map(|a| other.kraus.iter().map(move |b| a.kron(b)))
            .collect();
        QuantumChannel {
            input_dim: self.input_dim * other.input_dim,
            output_dim: self.output_dim * other.output_dim,
            kraus,
        }
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        apply_channel(rho, self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Depolarizing,
    Dephasing,
    AmplitudeDamping,
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[[0.0, 1.0], [1.0, 0.0]])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[[ZERO, C64::new(0.0, -1.0)], [C64::new(0.0, 1.0), ZERO]])
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_real_diag(&[1.0, -1.0])
}

/// σ₋ = |0⟩⟨1|, the qubit lowering operator.
pub fn sigma_minus() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[[0.0, 1.0], [0.0, 0.0]])
}

pub fn density_from_pure(v: &StateVector) -> DensityMatrix {
    DensityMatrix {
        matrix: ComplexMatrix::outer(v.amplitudes(), v.amplitudes()),
    }
}

/// |Φ⁺⟩⟨Φ⁺| with |Φ⁺⟩ = (|00⟩ + |11⟩)/√2.
pub fn epr_pair() -> DensityMatrix {
    density_from_pure(&bell_phi_plus())
}

pub fn bell_phi_plus() -> StateVector {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    StateVector {
        amplitudes: vec![h, ZERO, ZERO, h],
    }
}

/// Ginibre-ensemble state G·G†/Tr with G of shape dim×rank.
pub fn random_density(dim: usize, rank: usize, seed: u64) -> Result<DensityMatrix> {
    let mut rng = random::seeded(seed);
    random::density(&mut rng, dim, rank)
}

pub fn tensor_product(a: &DensityMatrix, b: &DensityMatrix) -> DensityMatrix {
    DensityMatrix::from_trusted(a.matrix.kron(&b.matrix))
}

/// Traces out every subsystem not listed in `keep`.
pub fn partial_trace(rho: &DensityMatrix, dims: &[usize], keep: &[usize]) -> Result<DensityMatrix> {
    let total: usize = dims.iter().product();
    ensure_dim(rho.dim(), total)?;
    if dims.contains(&0) {
        return Err(Error::BadParameter("subsystem dimension 0".into()));
    }
    let mut kept = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if let Some(&bad) = kept.iter().find(|&&k| k >= dims.len()) {
        return Err(Error::BadParameter(format!(
            "subsystem {bad} out of range for {} subsystems",
            dims.len()
        )));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !kept.contains(i)).collect();
    let kept_dims: Vec<usize> = kept.iter().map(|&i| dims[i]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&i| dims[i]).collect();
    let out_dim: usize = kept_dims.iter().product();
    let env_dim: usize = traced_dims.iter().product();

    // Combines kept and traced digits into a full row-major index.
    let full_index = |k_idx: usize, e_idx: usize| -> usize {
        let mut digits = vec![0usize; dims.len()];
        let mut rem = k_idx;
        for (pos, &sub) in kept.iter().enumerate().rev() {
            digits[sub] = rem % kept_dims[pos];
            rem /= kept_dims[pos];
        }
        let mut rem = e_idx;
        for (pos, &sub) in traced.iter().enumerate().rev() {
            digits[sub] = rem % traced_dims[pos];
            rem /= traced_dims[pos];
        }
        digits
            .iter()
            .zip(dims)
            .fold(0, |acc, (&d, &size)| acc * size + d)
    };

    let m = rho.matrix();
    let out = ComplexMatrix::from_fn(out_dim, out_dim, |i, j| {
        (0..env_dim)
            .map(|e| m[(full_index(i, e), full_index(j, e))])
            .sum()
    });
    Ok(DensityMatrix::from_trusted(out))
}

/// Born-rule probabilities Tr{Λₓ ρ} in POVM order.
pub fn measure_povm(rho: &DensityMatrix, povm: &Povm) -> Result<Vec<f64>> {
    ensure_dim(povm.dim(), rho.dim())?;
    Ok(povm
        .elements()
        .iter()
        .map(|e| e.trace_product(rho.matrix()).re.max(0.0))
        .collect())
}

/// ρ ↦ Σₓ Tr{Λₓ ρ} |x⟩⟨x| on the classical register indexed by POVM order.
pub fn measurement_channel(rho: &DensityMatrix, povm: &Povm) -> Result<DensityMatrix> {
    let probs = measure_povm(rho, povm)?;
    Ok(DensityMatrix::from_trusted(ComplexMatrix::from_real_diag(&probs)))
}

pub fn apply_channel(rho: &DensityMatrix, ch: &QuantumChannel) -> Result<DensityMatrix> {
    ensure_dim(ch.input_dim(), rho.dim())?;
    let n = ch.output_dim();
    let mut acc = ComplexMatrix::zeros(n, n);
    for k in ch.kraus_ops() {
        acc = &acc + &rho.matrix().conjugate_by(k);
    }
    Ok(DensityMatrix::from_trusted(acc))
}

/// Standard qubit noise channels with strength `p ∈ [0, 1]`.
///
/// * depolarizing: ρ ↦ (1−p)ρ + p·I/2
/// * dephasing: off-diagonals scaled by (1−p)
/// * amplitude damping: |1⟩ decays to |0⟩ with probability p
pub fn standard_channel(kind: ChannelKind, p: f64) -> Result<QuantumChannel> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::BadParameter(format!("channel strength {p} outside [0, 1]")));
    }
    let id = ComplexMatrix::identity(2);
    let kraus = match kind {
        ChannelKind::Depolarizing => vec![
            id.scale_real((1.0 - 0.75 * p).sqrt()),
            pauli_x().scale_real((p / 4.0).sqrt()),
            pauli_y().scale_real((p / 4.0).sqrt()),
            pauli_z().scale_real((p / 4.0).sqrt()),
        ],
        ChannelKind::Dephasing => vec![
            id.scale_real((1.0 - 0.5 * p).sqrt()),
            pauli_z().scale_real((0.5 * p).sqrt()),
        ],
        ChannelKind::AmplitudeDamping => vec![
            ComplexMatrix::from_real_diag(&[1.0, (1.0 - p).sqrt()]),
            sigma_minus().scale_real(p.sqrt()),
        ],
    };
    QuantumChannel::new(kraus)
}
