//! Communication topology and row-stochastic weights built from in-neighbor
//! information only.
//!
//! An edge `(i, j)` means agent `j` sends to agent `i`. Every agent is its own
//! in-neighbor, so weight matrices always have a positive diagonal.

use std::collections::VecDeque;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Row sums of a [`WeightMatrix`] must be within this of one.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// A strongly connected digraph described by sorted in-neighbor lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectedGraph {
    in_neighbors: Vec<Vec<usize>>,
}

/// On-disk form: `{"n": 3, "edges": [[1, 0], [2, 1], [0, 2]]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphFile {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
}

impl DirectedGraph {
    /// Builds a graph from `(receiver, sender)` pairs. Self-loops are added and
    /// duplicates dropped; the result must be strongly connected.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let graph = Self::new_unchecked(n, edges)?;
        graph.ensure_strongly_connected()?;
        Ok(graph)
    }

    /// Like [`DirectedGraph::new`] but skips the connectivity check.
    ///
    /// Only index validity is enforced. Used to inspect arbitrary topologies.
    pub fn new_unchecked(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut in_neighbors: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for &(i, j) in edges {
            for index in [i, j] {
                if index >= n {
                    return Err(Error::BadIndex { index, n });
                }
            }
            in_neighbors[i].push(j);
        }
        for list in &mut in_neighbors {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { in_neighbors })
    }

    pub fn n(&self) -> usize {
        self.in_neighbors.len()
    }

    /// Agents that send to `i`, including `i` itself, in increasing order.
    pub fn in_neighbors(&self, i: usize) -> &[usize] {
        &self.in_neighbors[i]
    }

    /// Agents that receive from `j`, including `j` itself, in increasing order.
    pub fn out_neighbors(&self, j: usize) -> Vec<usize> {
        (0..self.n())
            .filter(|&i| self.in_neighbors[i].binary_search(&j).is_ok())
            .collect()
    }

    pub fn has_edge(&self, receiver: usize, sender: usize) -> bool {
        self.in_neighbors[receiver].binary_search(&sender).is_ok()
    }

    /// Non-self edges as `(receiver, sender)` pairs, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.in_neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().filter(move |&&j| j != i).map(move |&j| (i, j)))
            .collect()
    }

    pub fn is_strongly_connected(&self) -> bool {
        self.ensure_strongly_connected().is_ok()
    }

    /// A single forward and a single backward search from node 0 suffice:
    /// every node reaches 0 and 0 reaches every node.
    fn ensure_strongly_connected(&self) -> Result<()> {
        let n = self.n();
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, list) in self.in_neighbors.iter().enumerate() {
            for &j in list {
                out[j].push(i);
            }
        }
        if let Some(unreached) = first_unreached(&out) {
            return Err(Error::NotStronglyConnected { from: 0, to: unreached });
        }
        if let Some(unreached) = first_unreached(&self.in_neighbors) {
            return Err(Error::NotStronglyConnected { from: unreached, to: 0 });
        }
        Ok(())
    }

    /// Random Hamiltonian cycle plus every other ordered pair with
    /// probability `extra_edge_prob`. Deterministic in `seed`.
    pub fn random_strongly_connected(n: usize, extra_edge_prob: f64, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let prob = extra_edge_prob.clamp(0.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut edges = Vec::new();
        if n > 1 {
            for w in 0..n {
                let sender = order[w];
                let receiver = order[(w + 1) % n];
                edges.push((receiver, sender));
            }
        }
        for i in 0..n {
            for j in 0..n {
                if i != j && rng.random::<f64>() < prob {
                    edges.push((i, j));
                }
            }
        }
        Self::new(n, &edges)
    }

    pub fn to_file(&self) -> GraphFile {
        GraphFile {
            n: self.n(),
            edges: self.edges().into_iter().map(|(i, j)| [i, j]).collect(),
        }
    }

    pub fn from_file(file: &GraphFile) -> Result<Self> {
        let edges: Vec<(usize, usize)> = file.edges.iter().map(|e| (e[0], e[1])).collect();
        Self::new(file.n, &edges)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Self::from_file(&serde_json::from_str(json)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("graph file serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    /// Relabels agents: new agent `perm[i]` is old agent `i`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let edges: Vec<(usize, usize)> = self
            .edges()
            .into_iter()
            .map(|(i, j)| (perm[i], perm[j]))
            .collect();
        Self::new(self.n(), &edges)
    }
}

fn first_unreached(adjacency: &[Vec<usize>]) -> Option<usize> {
    let n = adjacency.len();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(u) = queue.pop_front() {
        for &v in &adjacency[u] {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen.iter().position(|&s| !s)
}

/// Dense row-stochastic mixing matrix `A`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMatrix(DMatrix<f64>);

impl WeightMatrix {
    /// Local-degree weights: `a_ij = 1 / |N_i^in|` on the in-neighborhood.
    pub fn local_degree(graph: &DirectedGraph) -> Self {
        let n = graph.n();
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            let nbrs = graph.in_neighbors(i);
            let w = 1.0 / nbrs.len() as f64;
            for &j in nbrs {
                a[(i, j)] = w;
            }
        }
        Self(a)
    }

    /// Wraps an arbitrary matrix after checking it against `graph`.
    pub fn from_matrix(matrix: DMatrix<f64>, graph: &DirectedGraph) -> Result<Self> {
        let candidate = Self(matrix);
        match candidate.violations(graph).into_iter().next() {
            Some(v) => Err(Error::InvalidWeights(v)),
            None => Ok(candidate),
        }
    }

    /// Wraps a matrix with no validation. Intended for fault injection.
    pub fn from_matrix_unchecked(matrix: DMatrix<f64>) -> Self {
        Self(matrix)
    }

    /// Human-readable list of broken invariants; empty when `self` is a valid
    /// row-stochastic matrix supported exactly on `graph`.
    pub fn violations(&self, graph: &DirectedGraph) -> Vec<String> {
        let a = &self.0;
        let n = graph.n();
        if a.nrows() != n || a.ncols() != n {
            return vec![format!("expected {n}x{n}, got {}x{}", a.nrows(), a.ncols())];
        }
        let mut out = Vec::new();
        for i in 0..n {
            let sum: f64 = a.row(i).sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                out.push(format!("row {i} sums to {sum}"));
            }
            for j in 0..n {
                let v = a[(i, j)];
                let linked = graph.has_edge(i, j);
                if !v.is_finite() || v < 0.0 {
                    out.push(format!("entry ({i},{j}) = {v} is not a nonnegative number"));
                } else if linked && v <= 0.0 {
                    out.push(format!("entry ({i},{j}) must be positive"));
                } else if !linked && v != 0.0 {
                    out.push(format!("entry ({i},{j}) = {v} outside graph support"));
                }
            }
        }
        out
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }
}

/// Column-stochastic weights `a_ij = 1 / |N_j^out|`. Requires out-degree
/// knowledge; used only by the push-sum baseline.
pub fn column_stochastic_weights(graph: &DirectedGraph) -> DMatrix<f64> {
    let n = graph.n();
    let mut a = DMatrix::zeros(n, n);
    for j in 0..n {
        let outs = graph.out_neighbors(j);
        let w = 1.0 / outs.len() as f64;
        for i in outs {
            a[(i, j)] = w;
        }
    }
    a
}
