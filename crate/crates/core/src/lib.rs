//! Multiplicative Schwarz iterations over space splittings with greedy,
//! randomized and deterministic component selection, plus the model
//! problems and bound evaluators used to study their convergence.

pub mod analysis;
pub mod error;
pub mod models;
pub mod rng;
pub mod solver;
pub mod splitting;
pub mod system;

pub use error::{Error, Result};
pub use solver::{run, DeterministicOrder, IterationTrace, PoolPolicy, Relaxation, SelectionRule};
pub use splitting::{FiniteSplitting, MatrixSystem, Problem};
pub use system::SchwarzSystem;
