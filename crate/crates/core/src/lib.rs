//! Multi-layer α-divergence non-negative matrix factorization with bounded
//! layer initialization, energy-barrier diagnostics over solver traces, and a
//! k-means / ACC / NMI clustering evaluation pipeline.

pub mod alpha;
pub mod cluster;
pub mod diagnostics;
pub mod error;
pub mod euclid;
pub mod matrix;
pub mod multilayer;
pub mod signal;

pub use alpha::{FactorPair, SolveTrace, SolverConfig};
pub use diagnostics::{BarrierParams, LayerBarrierReport};
pub use error::{Error, Result};
pub use matrix::{EpsilonPolicy, NonNegMatrix};
pub use multilayer::{solve_chem_nmf, LayerSpec, MultiLayerResult};
