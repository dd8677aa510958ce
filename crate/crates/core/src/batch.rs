//! Data-parallel batch drivers.
//!
//! With the `parallel` feature (on by default) independent work items run on
//! the rayon pool; without it, or with [`Execution::Sequential`], they run
//! in order on the calling thread. Each item draws from its own RNG stream
//! derived from `(seed, index)`, so results are identical under either
//! execution mode.

use crate::error::Result;
use crate::metrics::{self, DiscriminationProblem};
use rand::Rng;

use crate::random;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    /// Parallel when the `parallel` feature is enabled.
    #[default]
    Auto,
    Sequential,
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && !matches!(self, Execution::Sequential)
    }
}

/// Independent RNG stream for work item `index`.
pub fn item_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// `(0..n).map(f)` collected in index order.
pub fn map_indexed<T, F>(n: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec.is_parallel() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    let _ = exec;
    (0..n).map(f).collect()
}

pub fn try_map_indexed<T, F>(n: usize, exec: Execution, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    map_indexed(n, exec, f).into_iter().collect()
}

/// Runs two closures, potentially in parallel.
pub fn join<A, B, RA, RB>(a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    #[cfg(feature = "parallel")]
    {
        rayon::join(a, b)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (a(), b())
    }
}

/// One random pair checked against the Fuchs–van de Graaf sandwich.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichSample {
    pub dim: usize,
    pub trace_distance: f64,
    pub fidelity: f64,
    pub td_low: f64,
    pub td_high: f64,
}

impl SandwichSample {
    /// Largest amount by which TD leaves [1 − √F, √(1 − F)]; ≤ 0 when inside.
    pub fn violation(&self) -> f64 {
        (self.td_low - self.trace_distance).max(self.trace_distance - self.td_high)
    }
}

/// Random state pairs with dimensions cycling through `dims` and ranks
/// drawn uniformly in 1..=dim.
pub fn fvdg_sandwich(n_pairs: usize, dims: &[usize], seed: u64, exec: Execution) -> Result<Vec<SandwichSample>> {
    try_map_indexed(n_pairs, exec, |i| {
        let dim = dims[i % dims.len()];
        let mut rng = random::seeded(item_seed(seed, i));
        let r1 = 1 + rng.random_range(0..dim);
        let r2 = 1 + rng.random_range(0..dim);
        let rho = random::density(&mut rng, dim, r1)?;
        let sigma = random::density(&mut rng, dim, r2)?;
        let trace_distance = metrics::trace_distance(&rho, &sigma)?;
        let fidelity = metrics::uhlmann_fidelity(&rho, &sigma)?;
        let (td_low, td_high) = metrics::fvdg_bounds(fidelity)?;
        Ok(SandwichSample {
            dim,
            trace_distance,
            fidelity,
            td_low,
            td_high,
        })
    })
}

/// Helstrom bound against random two-outcome measurements for one problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalitySample {
    pub helstrom_success: f64,
    pub best_random_success: f64,
}

impl OptimalitySample {
    pub fn excess(&self) -> f64 {
        self.best_random_success - self.helstrom_success
    }
}

/// `n_problems` random discrimination problems (random dimension in
/// `dims`, random prior), each probed with `n_povms` random binary POVMs.
pub fn helstrom_optimality(
    n_problems: usize,
    n_povms: usize,
    dims: &[usize],
    seed: u64,
    exec: Execution,
) -> Result<Vec<OptimalitySample>> {
    try_map_indexed(n_problems, exec, |i| {
        let dim = dims[i % dims.len()];
        let mut rng = random::seeded(item_seed(seed, i));
        let r1 = 1 + rng.random_range(0..dim);
        let r2 = 1 + rng.random_range(0..dim);
        let prior: f64 = rng.random();
        let rho = random::density(&mut rng, dim, r1)?;
        let sigma = random::density(&mut rng, dim, r2)?;
        let problem = DiscriminationProblem::new(rho, sigma, prior)?;
        let helstrom = metrics::helstrom(&problem)?;
        let mut best = f64::NEG_INFINITY;
        for _ in 0..n_povms {
            let povm = random::binary_povm(&mut rng, dim);
            best = best.max(problem.success_probability(&povm)?);
        }
        Ok(OptimalitySample {
            helstrom_success: helstrom.p_success,
            best_random_success: best,
        })
    })
}

/// Trace distance before and after one random channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractivitySample {
    pub before: f64,
    pub after: f64,
}

pub fn channel_contractivity(
    n_channels: usize,
    dims: &[usize],
    seed: u64,
    exec: Execution,
) -> Result<Vec<ContractivitySample>> {
    try_map_indexed(n_channels, exec, |i| {
        let dim = dims[i % dims.len()];
        let mut rng = random::seeded(item_seed(seed, i));
        let n_kraus = 1 + rng.random_range(0..dim * dim);
        let ch = random::channel(&mut rng, dim, n_kraus);
        let r1 = 1 + rng.random_range(0..dim);
        let r2 = 1 + rng.random_range(0..dim);
        let rho = random::density(&mut rng, dim, r1)?;
        let sigma = random::density(&mut rng, dim, r2)?;
        let before = metrics::trace_distance(&rho, &sigma)?;
        let after = metrics::trace_distance(&ch.apply(&rho)?, &ch.apply(&sigma)?)?;
        Ok(ContractivitySample { before, after })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn execution_modes_agree() {
        let a = fvdg_sandwich(24, &[2, 3, 4], 5, Execution::Sequential).unwrap();
        let b = fvdg_sandwich(24, &[2, 3, 4], 5, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        let a = helstrom_optimality(4, 10, &[2, 3], 1, Execution::Sequential).unwrap();
        let b = helstrom_optimality(4, 10, &[2, 3], 1, Execution::Auto).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn map_preserves_order() {
        let v = map_indexed(100, Execution::Parallel, |i| i * i);
        assert!(v.iter().enumerate().all(|(i, &x)| x == i * i));
    }

    #[test]
    fn contractivity_holds_on_small_batch() {
        let samples = channel_contractivity(20, &[2, 3], 9, Execution::Auto).unwrap();
        assert!(samples.iter().all(|s| s.after <= s.before + 1e-9));
    }
}
