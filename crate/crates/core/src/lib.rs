//! Private subgraph counting under edge local differential privacy.
//!
//! Every user holds one row of the adjacency matrix. A single round of
//! randomized response (or Laplace noise) produces a symmetric, zero-diagonal,
//! entrywise-unbiased *noisy adjacency matrix* `Â`. Powers of `Â` carry the
//! same expectations as powers of the true adjacency matrix off the diagonal,
//! which is what the estimators here build on:
//!
//! * [`estimators::tri_or`]: one round, `tr(Â³)/6`.
//! * [`estimators::tri_tr`], [`estimators::tri_mtr`], [`estimators::qua_tr`]:
//!   two rounds, with a clamp-then-Laplace second randomizer.
//! * [`estimators::two_star`]: noisy degrees from graph projection.
//!
//! Exact oracles ([`graph`]), closed-form error formulas ([`analysis`]) and a
//! simulated user/collector protocol with byte accounting ([`protocol`],
//! [`harness`]) sit around them.

pub mod analysis;
pub mod error;
pub mod estimators;
pub mod graph;
pub mod harness;
pub mod matrix;
pub mod mechanisms;
pub mod nam;
pub mod projection;
pub mod protocol;
pub mod rng;

pub use error::{Error, Result};
pub use estimators::{Algorithm, BudgetSplit, Estimate, EstimatorParams, StageMask};
pub use graph::{Graph, SubgraphKind};
pub use matrix::{DenseMatrix, MatMulStrategy};
pub use mechanisms::{EntryVariance, Mechanism, MechanismKind};
pub use nam::NoisyAdjacencyMatrix;
pub use protocol::{BudgetLedger, CostMeter, RunTrace};
pub use rng::SeedStream;
