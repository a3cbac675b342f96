//! Sparse undirected weighted graphs.
//!
//! The canonical exchange form is an edge list with each unordered pair stored
//! once as `(i, j, w)` with `i < j`, sorted lexicographically. A compressed
//! adjacency with both directions materialized backs the O(n + m) matvecs.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("edge ({i}, {j}) references a node outside 0..{n}")]
    IndexOutOfRange { i: usize, j: usize, n: usize },
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("edge ({i}, {j}) has non-positive or non-finite weight {w}")]
    NonpositiveWeight { i: usize, j: usize, w: f64 },
    #[error("node {0} has zero strength")]
    ZeroStrengthNode(usize),
}

/// One undirected edge in canonical orientation (`i < j`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

/// A simple undirected graph with strictly positive edge weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "GraphRepr", try_from = "GraphRepr")]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl From<WeightedGraph> for GraphRepr {
    fn from(g: WeightedGraph) -> Self {
        GraphRepr {
            n: g.n,
            edges: g.edges.iter().map(|e| (e.i, e.j, e.w)).collect(),
        }
    }
}

impl TryFrom<GraphRepr> for WeightedGraph {
    type Error = GraphError;

    fn try_from(r: GraphRepr) -> Result<Self, Self::Error> {
        build_graph(r.n, r.edges)
    }
}

/// Validates an edge list and builds the graph.
///
/// Each unordered pair may appear once, in either orientation.
pub fn build_graph<I>(n: usize, edge_list: I) -> Result<WeightedGraph, GraphError>
where
    I: IntoIterator<Item = (usize, usize, f64)>,
{
    let mut edges = Vec::new();
    for (a, b, w) in edge_list {
        if a >= n || b >= n {
            return Err(GraphError::IndexOutOfRange { i: a, j: b, n });
        }
        if a == b {
            return Err(GraphError::SelfLoop(a));
        }
        if !(w > 0.0) || !w.is_finite() {
            return Err(GraphError::NonpositiveWeight { i: a, j: b, w });
        }
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        edges.push(Edge { i, j, w });
    }
    edges.sort_by(|x, y| (x.i, x.j).cmp(&(y.i, y.j)));
    if let Some(dup) = edges.windows(2).find(|p| p[0].i == p[1].i && p[0].j == p[1].j) {
        return Err(GraphError::DuplicateEdge(dup[0].i, dup[0].j));
    }
    Ok(WeightedGraph::from_canonical(n, edges))
}

impl WeightedGraph {
    fn from_canonical(n: usize, edges: Vec<Edge>) -> Self {
        let mut degree = vec![0usize; n];
        for e in &edges {
            degree[e.i] += 1;
            degree[e.j] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..n].to_vec();
        let mut neighbors = vec![0; 2 * edges.len()];
        let mut weights = vec![0.0; 2 * edges.len()];
        // Canonical edges are sorted by (i, j), so each row ends up sorted by neighbor.
        for e in &edges {
            neighbors[cursor[e.i]] = e.j;
            weights[cursor[e.i]] = e.w;
            cursor[e.i] += 1;
        }
        for e in &edges {
            neighbors[cursor[e.j]] = e.i;
            weights[cursor[e.j]] = e.w;
            cursor[e.j] += 1;
        }
        for v in 0..n {
            let (lo, hi) = (offsets[v], offsets[v + 1]);
            let mut row: Vec<(usize, f64)> = neighbors[lo..hi]
                .iter()
                .copied()
                .zip(weights[lo..hi].iter().copied())
                .collect();
            row.sort_by_key(|&(u, _)| u);
            for (k, (u, w)) in row.into_iter().enumerate() {
                neighbors[lo + k] = u;
                weights[lo + k] = w;
            }
        }
        WeightedGraph {
            n,
            edges,
            offsets,
            neighbors,
            weights,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// Canonical edges, sorted, `i < j`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Neighbors of `v` with the corresponding weights.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.offsets[v], self.offsets[v + 1]);
        self.neighbors[lo..hi]
            .iter()
            .copied()
            .zip(self.weights[lo..hi].iter().copied())
    }

    /// `y = W x`
    pub fn adjacency_apply(&self, x: &[f64], y: &mut [f64]) {
        for (v, yv) in y.iter_mut().enumerate() {
            let (lo, hi) = (self.offsets[v], self.offsets[v + 1]);
            let mut acc = 0.0;
            for k in lo..hi {
                acc += self.weights[k] * x[self.neighbors[k]];
            }
            *yv = acc;
        }
    }

    /// SHA-256 over the canonical edge list, used to tie state files to their graph.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n as u64).to_le_bytes());
        for e in &self.edges {
            h.update((e.i as u64).to_le_bytes());
            h.update((e.j as u64).to_le_bytes());
            h.update(e.w.to_bits().to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

/// Connected-component structure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Components {
    pub count: usize,
    pub labels: Vec<usize>,
}

impl Components {
    pub fn members(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(move |&(_, &l)| l == k)
            .map(|(v, _)| v)
    }
}

/// Labels components in order of their smallest node index.
pub fn connected_components(g: &WeightedGraph) -> Components {
    const UNSEEN: usize = usize::MAX;
    let mut labels = vec![UNSEEN; g.n()];
    let mut count = 0;
    let mut stack = Vec::new();
    for root in 0..g.n() {
        if labels[root] != UNSEEN {
            continue;
        }
        labels[root] = count;
        stack.push(root);
        while let Some(v) = stack.pop() {
            for (u, _) in g.neighbors(v) {
                if labels[u] == UNSEEN {
                    labels[u] = count;
                    stack.push(u);
                }
            }
        }
        count += 1;
    }
    Components { count, labels }
}

/// Nodal strengths `s_i = Σ_j W_ij` and their total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrengthProfile {
    pub strengths: Vec<f64>,
    pub total: f64,
}

pub fn strengths(g: &WeightedGraph) -> StrengthProfile {
    let strengths: Vec<f64> = (0..g.n()).map(|v| g.neighbors(v).map(|(_, w)| w).sum()).collect();
    let total = strengths.iter().sum();
    StrengthProfile { strengths, total }
}

/// Rescales every weight to `W_ij / sqrt(s_i s_j)`.
pub fn normalize_weights(g: &WeightedGraph) -> Result<WeightedGraph, GraphError> {
    let sp = strengths(g);
    if let Some(v) = sp.strengths.iter().position(|&s| s <= 0.0) {
        return Err(GraphError::ZeroStrengthNode(v));
    }
    let edges = g
        .edges()
        .iter()
        .map(|e| Edge {
            i: e.i,
            j: e.j,
            w: e.w / (sp.strengths[e.i] * sp.strengths[e.j]).sqrt(),
        })
        .collect();
    Ok(WeightedGraph::from_canonical(g.n(), edges))
}
