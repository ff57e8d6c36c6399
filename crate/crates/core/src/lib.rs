//! Distributed first-order optimization over strongly connected directed
//! graphs using only row-stochastic mixing weights.
//!
//! Every agent keeps three iterates: its estimate `x`, a running estimate `y`
//! of the Perron left eigenvector of the weight matrix, and a gradient tracker
//! `z` whose gradient contributions are divided by the agent's own entry of
//! `y`. The division cancels the non-uniform weighting that row-stochastic
//! consensus would otherwise introduce, so agents need only in-neighbor
//! information and still reach the exact minimizer at a linear rate.
//!
//! Module map:
//!
//! - [`digraph`]: topology, strong connectivity, local-degree weights.
//! - [`spectral`]: Perron vector, limit matrix, contraction norm and the
//!   network constants consumed by the analysis.
//! - [`objectives`]: local objectives with strong-convexity and Lipschitz
//!   constants (quadratic and logistic regression suites).
//! - [`algorithms`]: the row-stochastic gradient-tracking method, centralized
//!   gradient descent and the Subgradient-Push baseline.
//! - [`analysis`]: the `G`/`H_k` comparison system, step-size bound, trace
//!   records and linear-rate fitting.

pub mod algorithms;
pub mod analysis;
pub mod digraph;
mod error;
pub mod linalg;
pub mod objectives;
pub mod spectral;

pub use algorithms::{NetworkState, RunConfig};
pub use analysis::{ConvergenceTrace, RateEstimate, TraceRecord};
pub use digraph::{DirectedGraph, WeightMatrix};
pub use error::{Error, Result};
pub use objectives::{LogisticData, ObjectiveSuite};
pub use spectral::{BoundConstants, NormOperator};

pub use nalgebra::{DMatrix, DVector};
