//! Undirected simple graphs with dense `0..n` node IDs, plus fixture
//! generators that carry an arboricity certificate and a plain-text
//! edge-list format.

mod generate;
mod io;

use std::fmt;

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use generate::{generate, ArboricityCertificate, Generated, GraphSpec};
pub use io::{read_graph, write_graph};

pub type NodeId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(NodeId, NodeId),
    #[error("node {node} out of range for a graph with {n} nodes")]
    NodeOutOfRange { node: NodeId, n: usize },
    #[error("invalid generator parameters: {0}")]
    InvalidSpec(String),
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// An immutable undirected simple graph.
///
/// The edge list is kept sorted with `u < v` for every pair and every
/// adjacency list is sorted by neighbor ID, so port `i` of node `u`
/// always refers to `neighbors(u)[i]`.
#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    edges: Vec<(NodeId, NodeId)>,
    adj: Vec<Vec<NodeId>>,
}

impl Graph {
    pub fn edgeless(n: usize) -> Self {
        Graph { edges: Vec::new(), adj: vec![Vec::new(); n] }
    }

    /// Builds a graph from unordered pairs. Rejects self-loops, repeated
    /// pairs (in either orientation) and out-of-range endpoints.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let mut canon = Vec::new();
        for (u, v) in edges {
            for node in [u, v] {
                if node >= n {
                    return Err(GraphError::NodeOutOfRange { node, n });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            canon.push((u.min(v), u.max(v)));
        }
        canon.sort_unstable();
        if let Some(w) = canon.windows(2).find(|w| w[0] == w[1]) {
            return Err(GraphError::DuplicateEdge(w[0].0, w[0].1));
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &canon {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(Graph { edges: canon, adj })
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> std::ops::Range<NodeId> {
        0..self.adj.len()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn neighbors(&self, u: NodeId) -> &[NodeId] {
        &self.adj[u]
    }

    pub fn degree(&self, u: NodeId) -> usize {
        self.adj[u].len()
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        u < self.adj.len() && self.adj[u].binary_search(&v).is_ok()
    }

    /// Port index of `v` in `u`'s adjacency list.
    pub fn port_of(&self, u: NodeId, v: NodeId) -> Option<usize> {
        self.adj[u].binary_search(&v).ok()
    }

    /// Largest neighbor count, 0 for graphs without edges.
    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph").field("n", &self.node_count()).field("edges", &self.edges).finish()
    }
}

/// Serialized form used inside reports and caches.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphSummary {
    pub n: usize,
    pub m: usize,
    pub max_degree: usize,
}

impl From<&Graph> for GraphSummary {
    fn from(g: &Graph) -> Self {
        GraphSummary { n: g.node_count(), m: g.edge_count(), max_degree: g.max_degree() }
    }
}

/// True if the given edges contain no cycle on `n` nodes.
pub fn is_acyclic(n: usize, edges: &[(NodeId, NodeId)]) -> bool {
    let mut uf = UnionFind::<usize>::new(n);
    edges.iter().all(|&(u, v)| uf.union(u, v))
}
