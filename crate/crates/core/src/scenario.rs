//! Serde descriptions of states, noise models, channels and time grids as
//! they appear in scenario files. Each `resolve`/`build` method validates
//! its input and reports failures as [`Error::Spec`] tagged with the field
//! path that was given.

use rand::Rng;
use serde::Deserialize;

use crate::dynamics::{Hamiltonian, LindbladModel, TimeGrid};
use crate::error::{Error, Result};
use crate::numerics::{ComplexMatrix, C64};
use crate::qstate::{self, ChannelKind, DensityMatrix, QuantumChannel, StateVector};
use crate::random;

/// Rewraps any library error as a spec error on `field`.
pub(crate) fn at(field: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::Spec { .. } => e,
        other => Error::spec(field, other.to_string()),
    }
}

/// A matrix entry: either a real number or `[re, im]`.
#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl From<Entry> for C64 {
    fn from(e: Entry) -> Self {
        match e {
            Entry::Real(re) => C64::new(re, 0.0),
            Entry::Complex([re, im]) => C64::new(re, im),
        }
    }
}

/// A state given by name or as a literal density matrix.
///
/// Names: `zero`, `one`, `plus`, `minus`, `plus_i`, `minus_i`, `mixed`,
/// `random` (full-rank random mixed state) and `random_pure`.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum StateSpec {
    Named(String),
    Literal { matrix: Vec<Vec<Entry>> },
}

impl StateSpec {
    pub fn named(name: &str) -> Self {
        StateSpec::Named(name.to_string())
    }

    /// Dimension implied by the description, if any.
    pub fn dim(&self) -> Option<usize> {
        match self {
            StateSpec::Named(_) => None,
            StateSpec::Literal { matrix } => Some(matrix.len()),
        }
    }

    /// `dim` is used by named states; literal matrices carry their own.
    pub fn resolve<R: Rng + ?Sized>(&self, field: &str, dim: usize, rng: &mut R) -> Result<DensityMatrix> {
        let qubit_only = |name: &str| {
            if dim == 2 {
                Ok(())
            } else {
                Err(Error::spec(field, format!("state `{name}` is only defined for dim 2")))
            }
        };
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            StateSpec::Named(name) => match name.as_str() {
                "zero" => Ok(DensityMatrix::basis(dim, 0)),
                "one" => {
                    qubit_only(name)?;
                    Ok(DensityMatrix::basis(2, 1))
                }
                "plus" | "minus" | "plus_i" | "minus_i" => {
                    qubit_only(name)?;
                    let b = match name.as_str() {
                        "plus" => C64::new(s, 0.0),
                        "minus" => C64::new(-s, 0.0),
                        "plus_i" => C64::new(0.0, s),
                        _ => C64::new(0.0, -s),
                    };
                    let v = StateVector::new(vec![C64::new(s, 0.0), b]).map_err(at(field))?;
                    Ok(qstate::density_from_pure(&v))
                }
                "mixed" => Ok(DensityMatrix::maximally_mixed(dim)),
                "random" => random::density(rng, dim, dim).map_err(at(field)),
                "random_pure" => Ok(qstate::density_from_pure(&random::pure_state(rng, dim))),
                other => Err(Error::spec(field, format!("unknown state name `{other}`"))),
            },
            StateSpec::Literal { matrix } => {
                let rows: Vec<Vec<C64>> = matrix.iter().map(|r| r.iter().map(|&e| e.into()).collect()).collect();
                if rows.is_empty() || rows.iter().any(|r| r.len() != rows.len()) {
                    return Err(Error::spec(field, "literal matrix must be square and non-empty"));
                }
                let m = ComplexMatrix::new(rows.len(), rows.len(), rows.concat()).map_err(at(field))?;
                DensityMatrix::new(m).map_err(at(field))
            }
        }
    }
}

/// Qubit noise: Hamiltonian `hx X + hy Y + hz Z` plus collapse operators
/// `√γ_φ Z` (dephasing), `√γ_a σ₋` (damping) and `√(γ_d/4)·{X, Y, Z}`
/// (depolarizing).
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default)]
    pub field: [f64; 3],
    #[serde(default)]
    pub dephasing: f64,
    #[serde(default)]
    pub damping: f64,
    #[serde(default)]
    pub depolarizing: f64,
}

impl NoiseSpec {
    pub fn dephasing(gamma: f64) -> Self {
        Self {
            dephasing: gamma,
            ..Self::default()
        }
    }

    pub fn build(&self, field: &str) -> Result<LindbladModel> {
        for (name, v) in [("dephasing", self.dephasing), ("damping", self.damping), ("depolarizing", self.depolarizing)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::spec(format!("{field}.{name}"), format!("rate must be finite and ≥ 0, got {v}")));
            }
        }
        if self.field.iter().any(|h| !h.is_finite()) {
            return Err(Error::spec(format!("{field}.field"), "coefficients must be finite"));
        }
        let [hx, hy, hz] = self.field;
        let h = &(&qstate::pauli_x().scale_real(hx) + &qstate::pauli_y().scale_real(hy)) + &qstate::pauli_z().scale_real(hz);
        let mut ops = Vec::new();
        if self.dephasing > 0.0 {
            ops.push(qstate::pauli_z().scale_real(self.dephasing.sqrt()));
        }
        if self.damping > 0.0 {
            ops.push(qstate::sigma_minus().scale_real(self.damping.sqrt()));
        }
        if self.depolarizing > 0.0 {
            let k = (self.depolarizing / 4.0).sqrt();
            ops.extend([qstate::pauli_x(), qstate::pauli_y(), qstate::pauli_z()].map(|p| p.scale_real(k)));
        }
        LindbladModel::new(Hamiltonian::new(h).map_err(at(field))?, ops).map_err(at(field))
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub kind: ChannelKind,
    pub p: f64,
}

impl ChannelSpec {
    pub fn build(&self, field: &str) -> Result<QuantumChannel> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::spec(format!("{field}.p"), format!("probability must lie in [0, 1], got {}", self.p)));
        }
        qstate::standard_channel(self.kind, self.p).map_err(at(field))
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default)]
    pub t_start: f64,
    pub t_end: f64,
    pub steps: usize,
}

impl GridSpec {
    pub fn build(&self, field: &str) -> Result<TimeGrid> {
        if self.steps == 0 {
            return Err(Error::spec(format!("{field}.steps"), "must be ≥ 1"));
        }
        TimeGrid::new(self.t_start, self.t_end, self.steps).map_err(at(field))
    }
}
