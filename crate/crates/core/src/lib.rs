//! Quantum network link-fidelity simulation.
//!
//! Density-matrix states and channels, trace distance with its operational
//! error band, Helstrom discrimination, Uhlmann and overlap fidelities,
//! Fuchs–van de Graaf bounds, Lindblad dynamics, a finite-difference GRAPE
//! optimizer, multi-node network scenarios and a small tensor-diagram
//! contraction engine used as an independent cross-check.

pub mod error;
pub mod numerics;

pub use error::{Error, Result};
pub mod qstate;
pub mod random;
pub mod metrics;
pub mod batch;
pub mod dynamics;
pub mod control;
pub mod scenario;
pub mod network;
pub mod tensornet;
pub mod cli;
