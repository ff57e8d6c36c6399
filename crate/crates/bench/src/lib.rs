//! Fixed instances shared by the kernel benchmarks.

use rowstoch_core::algorithms::{init_state, NetworkState};
use rowstoch_core::objectives::{logistic_suite, random_quadratic_suite};
use rowstoch_core::{DMatrix, DirectedGraph, LogisticData, ObjectiveSuite, WeightMatrix};

/// A graph, its local-degree weights, a suite and the initial state.
pub struct Instance {
    pub graph: DirectedGraph,
    pub weights: WeightMatrix,
    pub suite: ObjectiveSuite,
    pub state: NetworkState,
}

/// Random strongly connected graph on `n` nodes with quadratic objectives in `p` dimensions.
pub fn quadratic_instance(n: usize, p: usize, seed: u64) -> Instance {
    let graph = DirectedGraph::random_strongly_connected(n, 0.15, seed).expect("n >= 1");
    let suite = random_quadratic_suite(n, p, seed).expect("valid sizes");
    build(graph, suite)
}

/// Logistic regression with `m` samples per agent in `p` dimensions.
pub fn logistic_instance(n: usize, m: usize, p: usize, seed: u64) -> Instance {
    let graph = DirectedGraph::random_strongly_connected(n, 0.15, seed).expect("n >= 1");
    let suite = logistic_suite(&LogisticData::generate(n, m, p, 1.0, seed)).expect("valid data");
    build(graph, suite)
}

fn build(graph: DirectedGraph, suite: ObjectiveSuite) -> Instance {
    let weights = WeightMatrix::local_degree(&graph);
    let state = init_state(&suite, &DMatrix::zeros(suite.n(), suite.p())).expect("shapes agree");
    Instance { graph, weights, suite, state }
}
