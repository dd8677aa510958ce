//! Small tensor-diagram builder and contraction engine.
//!
//! Every node is a matrix with a row leg and a column leg. Bonds join two
//! legs of equal dimension; the remaining legs are listed as open legs, in
//! output order. Contraction yields a scalar (no open legs), a column
//! vector (one) or a matrix (two).

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::numerics::{self, ComplexMatrix, C64, ZERO};
use crate::qstate::{ensure_dim, DensityMatrix};

#[derive(Debug, Clone)]
struct TensorNode {
    name: String,
    matrix: ComplexMatrix,
    legs: [String; 2],
}

#[derive(Debug, Clone, Default)]
pub struct TensorExpr {
    nodes: Vec<TensorNode>,
    bonds: Vec<(String, String)>,
    open: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ContractionOrder {
    /// Contract the bonded pair with the smallest intermediate first.
    #[default]
    Greedy,
    /// Contract the first bonded pair in node order.
    Sequential,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Contracted {
    Scalar(C64),
    Matrix(ComplexMatrix),
}

impl Contracted {
    pub fn scalar(&self) -> Option<C64> {
        match self {
            Contracted::Scalar(z) => Some(*z),
            Contracted::Matrix(_) => None,
        }
    }

    pub fn matrix(&self) -> Option<&ComplexMatrix> {
        match self {
            Contracted::Matrix(m) => Some(m),
            Contracted::Scalar(_) => None,
        }
    }
}

impl TensorExpr {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `matrix` with row leg `row` and column leg `col`.
    pub fn add_node(&mut self, name: &str, matrix: &ComplexMatrix, row: &str, col: &str) -> Result<&mut Self> {
        self.push(name, matrix.clone(), row, col)
    }

    /// Adds the elementwise complex conjugate of `matrix`.
    pub fn add_conjugate(&mut self, name: &str, matrix: &ComplexMatrix, row: &str, col: &str) -> Result<&mut Self> {
        self.push(name, matrix.conj(), row, col)
    }

    fn push(&mut self, name: &str, matrix: ComplexMatrix, row: &str, col: &str) -> Result<&mut Self> {
        for leg in [row, col] {
            if leg.is_empty() || self.leg_dim(leg).is_some() {
                return Err(Error::DanglingBondMismatch(format!("leg `{leg}` is empty or already used")));
            }
        }
        if row == col {
            return Err(Error::DanglingBondMismatch(format!("node `{name}` repeats leg `{row}`")));
        }
        self.nodes.push(TensorNode {
            name: name.to_string(),
            matrix,
            legs: [row.to_string(), col.to_string()],
        });
        Ok(self)
    }

    fn leg_dim(&self, leg: &str) -> Option<usize> {
        self.nodes.iter().find_map(|n| {
            if n.legs[0] == leg {
                Some(n.matrix.rows())
            } else if n.legs[1] == leg {
                Some(n.matrix.cols())
            } else {
                None
            }
        })
    }

    fn is_used(&self, leg: &str) -> bool {
        self.open.iter().any(|l| l == leg) || self.bonds.iter().any(|(a, b)| a == leg || b == leg)
    }

    /// Joins two legs; their dimensions must agree.
    pub fn bond(&mut self, a: &str, b: &str) -> Result<&mut Self> {
        let da = self.leg_dim(a).ok_or_else(|| Error::DanglingBondMismatch(format!("unknown leg `{a}`")))?;
        let db = self.leg_dim(b).ok_or_else(|| Error::DanglingBondMismatch(format!("unknown leg `{b}`")))?;
        if a == b || self.is_used(a) || self.is_used(b) {
            return Err(Error::DanglingBondMismatch(format!("legs `{a}`, `{b}` are already bonded or open")));
        }
        ensure_dim(da, db)?;
        self.bonds.push((a.to_string(), b.to_string()));
        Ok(self)
    }

    /// Declares an open leg; open legs appear in the result in call order.
    pub fn open(&mut self, leg: &str) -> Result<&mut Self> {
        if self.leg_dim(leg).is_none() {
            return Err(Error::DanglingBondMismatch(format!("unknown leg `{leg}`")));
        }
        if self.is_used(leg) {
            return Err(Error::DanglingBondMismatch(format!("leg `{leg}` is already bonded or open")));
        }
        if self.open.len() == 2 {
            return Err(Error::InvalidShape("at most two open legs".into()));
        }
        self.open.push(leg.to_string());
        Ok(self)
    }

    pub fn node_names(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(|n| n.name.as_str())
    }

    fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::DanglingBondMismatch("empty diagram".into()));
        }
        for n in &self.nodes {
            for leg in &n.legs {
                if !self.is_used(leg) {
                    return Err(Error::DanglingBondMismatch(format!(
                        "leg `{leg}` of node `{}` is neither bonded nor open",
                        n.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn contract(&self) -> Result<Contracted> {
        self.contract_with(ContractionOrder::Greedy)
    }

    pub fn contract_with(&self, order: ContractionOrder) -> Result<Contracted> {
        self.validate()?;
        let partner: HashMap<&str, &str> = self
            .bonds
            .iter()
            .flat_map(|(a, b)| [(a.as_str(), b.as_str()), (b.as_str(), a.as_str())])
            .collect();
        let mut pool: Vec<Tensor> = self
            .nodes
            .iter()
            .map(|n| Tensor::from_node(n).self_trace(&partner))
            .collect();

        while let Some((i, j)) = pick_pair(&pool, &partner, order) {
            let b = pool.remove(j);
            let a = pool.remove(i);
            pool.insert(i, a.contract(&b, &partner));
        }
        let mut result = pool.remove(0);
        for t in pool {
            result = result.contract(&t, &partner);
        }
        result = result.permuted(&self.open);

        Ok(match result.dims.len() {
            0 => Contracted::Scalar(result.data[0]),
            1 => Contracted::Matrix(ComplexMatrix::new(result.dims[0], 1, result.data)?),
            _ => Contracted::Matrix(ComplexMatrix::new(result.dims[0], result.dims[1], result.data)?),
        })
    }
}

/// Next pair `(i, j)`, `i < j`, sharing at least one bond.
fn pick_pair(pool: &[Tensor], partner: &HashMap<&str, &str>, order: ContractionOrder) -> Option<(usize, usize)> {
    let shares = |a: &Tensor, b: &Tensor| a.legs.iter().any(|l| partner.get(l.as_str()).is_some_and(|p| b.legs.iter().any(|m| m == p)));
    match order {
        ContractionOrder::Sequential => (0..pool.len())
            .flat_map(|i| (i + 1..pool.len()).map(move |j| (i, j)))
            .find(|&(i, j)| shares(&pool[i], &pool[j])),
        ContractionOrder::Greedy => {
            let mut best: Option<(usize, (usize, usize))> = None;
            for i in 0..pool.len() {
                for j in i + 1..pool.len() {
                    if shares(&pool[i], &pool[j]) {
                        let size = pool[i].free_size(&pool[j], partner) * pool[j].free_size(&pool[i], partner);
                        if best.is_none_or(|(s, _)| size < s) {
                            best = Some((size, (i, j)));
                        }
                    }
                }
            }
            best.map(|(_, p)| p)
        }
    }
}

/// Dense tensor, row-major over `legs`.
#[derive(Debug, Clone)]
struct Tensor {
    legs: Vec<String>,
    dims: Vec<usize>,
    data: Vec<C64>,
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Calls `f` with every multi-index in row-major order.
fn for_each_index(dims: &[usize], mut f: impl FnMut(&[usize])) {
    let total: usize = dims.iter().product();
    let mut idx = vec![0; dims.len()];
    for _ in 0..total {
        f(&idx);
        for k in (0..dims.len()).rev() {
            idx[k] += 1;
            if idx[k] < dims[k] {
                break;
            }
            idx[k] = 0;
        }
    }
}

impl Tensor {
    fn from_node(n: &TensorNode) -> Self {
        Self {
            legs: n.legs.to_vec(),
            dims: vec![n.matrix.rows(), n.matrix.cols()],
            data: n.matrix.as_slice().to_vec(),
        }
    }

    fn position(&self, leg: &str) -> Option<usize> {
        self.legs.iter().position(|l| l == leg)
    }

    /// Size of this tensor's legs that stay open after contracting with `other`.
    fn free_size(&self, other: &Tensor, partner: &HashMap<&str, &str>) -> usize {
        self.legs
            .iter()
            .zip(&self.dims)
            .filter(|(l, _)| !partner.get(l.as_str()).is_some_and(|p| other.position(p).is_some()))
            .map(|(_, &d)| d)
            .product()
    }

    /// Sums over bonds whose two legs both belong to this tensor.
    fn self_trace(self, partner: &HashMap<&str, &str>) -> Self {
        let pairs: Vec<(usize, usize)> = self
            .legs
            .iter()
            .enumerate()
            .filter_map(|(i, l)| {
                let j = self.position(partner.get(l.as_str())?)?;
                (i < j).then_some((i, j))
            })
            .collect();
        if pairs.is_empty() {
            return self;
        }
        let traced: Vec<usize> = pairs.iter().flat_map(|&(i, j)| [i, j]).collect();
        let keep: Vec<usize> = (0..self.legs.len()).filter(|k| !traced.contains(k)).collect();
        let st = strides(&self.dims);
        let out_dims: Vec<usize> = keep.iter().map(|&k| self.dims[k]).collect();
        let sum_dims: Vec<usize> = pairs.iter().map(|&(i, _)| self.dims[i]).collect();
        let mut data = Vec::with_capacity(out_dims.iter().product());
        for_each_index(&out_dims, |o| {
            let base: usize = keep.iter().zip(o).map(|(&k, &x)| x * st[k]).sum();
            let mut acc = ZERO;
            for_each_index(&sum_dims, |s| {
                let off: usize = pairs.iter().zip(s).map(|(&(i, j), &x)| x * (st[i] + st[j])).sum();
                acc += self.data[base + off];
            });
            data.push(acc);
        });
        Self {
            legs: keep.iter().map(|&k| self.legs[k].clone()).collect(),
            dims: out_dims,
            data,
        }
    }

    /// Contracts all bonds between `self` and `other`; an outer product if there are none.
    fn contract(&self, other: &Tensor, partner: &HashMap<&str, &str>) -> Tensor {
        let shared: Vec<(usize, usize)> = self
            .legs
            .iter()
            .enumerate()
            .filter_map(|(i, l)| Some((i, other.position(partner.get(l.as_str())?)?)))
            .collect();
        let a_free: Vec<usize> = (0..self.legs.len()).filter(|k| !shared.iter().any(|s| s.0 == *k)).collect();
        let b_free: Vec<usize> = (0..other.legs.len()).filter(|k| !shared.iter().any(|s| s.1 == *k)).collect();
        let (sa, sb) = (strides(&self.dims), strides(&other.dims));
        let out_dims: Vec<usize> = a_free
            .iter()
            .map(|&k| self.dims[k])
            .chain(b_free.iter().map(|&k| other.dims[k]))
            .collect();
        let sum_dims: Vec<usize> = shared.iter().map(|&(i, _)| self.dims[i]).collect();
        let na = a_free.len();
        let mut data = Vec::with_capacity(out_dims.iter().product());
        for_each_index(&out_dims, |o| {
            let base_a: usize = a_free.iter().zip(&o[..na]).map(|(&k, &x)| x * sa[k]).sum();
            let base_b: usize = b_free.iter().zip(&o[na..]).map(|(&k, &x)| x * sb[k]).sum();
            let mut acc = ZERO;
            for_each_index(&sum_dims, |s| {
                let (mut ia, mut ib) = (base_a, base_b);
                for (&(i, j), &x) in shared.iter().zip(s) {
                    ia += x * sa[i];
                    ib += x * sb[j];
                }
                acc += self.data[ia] * other.data[ib];
            });
            data.push(acc);
        });
        Tensor {
            legs: a_free
                .iter()
                .map(|&k| self.legs[k].clone())
                .chain(b_free.iter().map(|&k| other.legs[k].clone()))
                .collect(),
            dims: out_dims,
            data,
        }
    }

    /// Reorders legs to `order`, which must be a permutation of `self.legs`.
    fn permuted(self, order: &[String]) -> Tensor {
        if order == self.legs.as_slice() {
            return self;
        }
        let perm: Vec<usize> = order.iter().map(|l| self.position(l).expect("open legs survive contraction")).collect();
        let st = strides(&self.dims);
        let dims: Vec<usize> = perm.iter().map(|&k| self.dims[k]).collect();
        let mut data = Vec::with_capacity(self.data.len());
        for_each_index(&dims, |o| {
            data.push(self.data[perm.iter().zip(o).map(|(&k, &x)| x * st[k]).sum::<usize>()]);
        });
        Tensor {
            legs: order.to_vec(),
            dims,
            data,
        }
    }
}

fn scalar(expr: &TensorExpr) -> Result<C64> {
    Ok(expr.contract()?.scalar().expect("closed diagram"))
}

/// Tr M: one node with its legs joined.
pub fn trace_diagram(m: &ComplexMatrix) -> Result<C64> {
    let mut e = TensorExpr::new();
    e.add_node("M", m, "i", "j")?.bond("i", "j")?;
    scalar(&e)
}

/// Tr[AB]: a two-node ring.
pub fn product_trace_diagram(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<C64> {
    let mut e = TensorExpr::new();
    e.add_node("A", a, "i", "j")?.add_node("B", b, "k", "l")?.bond("j", "k")?.bond("l", "i")?;
    scalar(&e)
}

/// ‖M‖_F: M contracted leg-for-leg with its conjugate.
pub fn frobenius_diagram(m: &ComplexMatrix) -> Result<f64> {
    let mut e = TensorExpr::new();
    e.add_node("M", m, "i", "j")?
        .add_conjugate("M*", m, "k", "l")?
        .bond("i", "k")?
        .bond("j", "l")?;
    Ok(scalar(&e)?.re.max(0.0).sqrt())
}

/// ½(1 + Tr[ρ_target ρ_evolved]) through [`product_trace_diagram`].
pub fn overlap_diagram(target: &DensityMatrix, evolved: &DensityMatrix) -> Result<f64> {
    ensure_dim(target.dim(), evolved.dim())?;
    Ok(0.5 * (1.0 + product_trace_diagram(target.matrix(), evolved.matrix())?.re))
}

/// ½ Tr[V |Λ| V†] with ρ − σ = V Λ V† diagonalized outside the diagram.
pub fn diagram_trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    ensure_dim(rho.dim(), sigma.dim())?;
    let spec = numerics::herm_eig(&(rho.matrix() - sigma.matrix()))?;
    let abs: Vec<f64> = spec.eigenvalues.iter().map(|l| l.abs()).collect();
    let v = &spec.eigenvectors;
    let mut e = TensorExpr::new();
    e.add_node("V", v, "i", "k")?
        .add_node("|L|", &ComplexMatrix::from_real_diag(&abs), "k2", "l")?
        .add_node("V+", &v.dagger(), "l2", "i2")?
        .bond("k", "k2")?
        .bond("l", "l2")?
        .bond("i2", "i")?;
    Ok((0.5 * scalar(&e)?.re).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics;
    use crate::random;

    #[test]
    fn trace_of_a_state_is_one() {
        let rho = crate::qstate::random_density(4, 2, 1).unwrap();
        assert!((trace_diagram(rho.matrix()).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn product_and_frobenius_match_direct() {
        let mut rng = random::seeded(2);
        let (a, b) = (random::ginibre(&mut rng, 3, 3), random::ginibre(&mut rng, 3, 3));
        assert!((product_trace_diagram(&a, &b).unwrap() - a.trace_product(&b)).norm() < 1e-12);
        assert!((frobenius_diagram(&a).unwrap() - a.frobenius_norm()).abs() < 1e-12);
    }

    #[test]
    fn trace_distance_diagram_limits() {
        let rho = crate::qstate::random_density(3, 3, 4).unwrap();
        assert!(diagram_trace_distance(&rho, &rho).unwrap() < 1e-12);
        let (z, o) = (DensityMatrix::basis(2, 0), DensityMatrix::basis(2, 1));
        assert!((diagram_trace_distance(&z, &o).unwrap() - 1.0).abs() < 1e-12);
        let sigma = crate::qstate::random_density(3, 1, 5).unwrap();
        let direct = metrics::trace_distance(&rho, &sigma).unwrap();
        assert!((diagram_trace_distance(&rho, &sigma).unwrap() - direct).abs() < 1e-10);
    }

    #[test]
    fn open_legs_give_matrix_product() {
        let mut rng = random::seeded(3);
        let (a, b) = (random::ginibre(&mut rng, 2, 3), random::ginibre(&mut rng, 3, 4));
        let mut e = TensorExpr::new();
        e.add_node("A", &a, "i", "j").unwrap().add_node("B", &b, "k", "l").unwrap();
        e.bond("j", "k").unwrap().open("i").unwrap().open("l").unwrap();
        let m = e.contract().unwrap();
        assert!((m.matrix().unwrap() - &a.matmul(&b)).max_abs() < 1e-12);

        let mut t = TensorExpr::new();
        t.add_node("A", &a, "i", "j").unwrap().add_node("B", &b, "k", "l").unwrap();
        t.bond("j", "k").unwrap().open("l").unwrap().open("i").unwrap();
        let mt = t.contract().unwrap();
        assert!((mt.matrix().unwrap() - &a.matmul(&b).transpose()).max_abs() < 1e-12);
    }

    #[test]
    fn disconnected_parts_multiply() {
        let mut rng = random::seeded(4);
        let (a, b) = (random::ginibre(&mut rng, 3, 3), random::ginibre(&mut rng, 2, 2));
        let mut e = TensorExpr::new();
        e.add_node("A", &a, "i", "j").unwrap().add_node("B", &b, "k", "l").unwrap();
        e.bond("i", "j").unwrap().bond("k", "l").unwrap();
        let z = e.contract().unwrap().scalar().unwrap();
        assert!((z - a.trace() * b.trace()).norm() < 1e-12);
    }

    #[test]
    fn malformed_diagrams_are_rejected() {
        let (a, b) = (ComplexMatrix::identity(2), ComplexMatrix::identity(3));
        let mut e = TensorExpr::new();
        e.add_node("A", &a, "i", "j").unwrap().add_node("B", &b, "k", "l").unwrap();
        assert!(matches!(e.bond("j", "k"), Err(Error::DimMismatch { .. })));
        assert!(matches!(e.bond("j", "zz"), Err(Error::DanglingBondMismatch(_))));
        assert!(matches!(e.add_node("C", &a, "i", "m"), Err(Error::DanglingBondMismatch(_))));
        e.bond("i", "j").unwrap();
        assert!(matches!(e.bond("i", "k"), Err(Error::DanglingBondMismatch(_))));
        assert!(matches!(e.contract(), Err(Error::DanglingBondMismatch(_))));
    }

    #[test]
    fn orders_agree_on_chain() {
        let mut rng = random::seeded(6);
        let ms: Vec<ComplexMatrix> = (0..5).map(|_| random::ginibre(&mut rng, 2, 2)).collect();
        let mut e = TensorExpr::new();
        for (k, m) in ms.iter().enumerate() {
            e.add_node(&format!("M{k}"), m, &format!("r{k}"), &format!("c{k}")).unwrap();
        }
        for k in 0..4 {
            e.bond(&format!("c{k}"), &format!("r{}", k + 1)).unwrap();
        }
        e.open("r0").unwrap().open("c4").unwrap();
        let g = e.contract_with(ContractionOrder::Greedy).unwrap();
        let s = e.contract_with(ContractionOrder::Sequential).unwrap();
        let direct = ms[1..].iter().fold(ms[0].clone(), |acc, m| acc.matmul(m));
        assert!((g.matrix().unwrap() - s.matrix().unwrap()).max_abs() < 1e-12);
        assert!((g.matrix().unwrap() - &direct).max_abs() < 1e-12);
    }
}
