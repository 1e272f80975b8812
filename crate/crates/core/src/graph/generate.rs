use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{is_acyclic, Graph, GraphError, NodeId};

/// A fixture family and its size parameters.
///
/// `n` is always the total node count, so a star with `n = 6` is `K(1,5)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GraphSpec {
    Path { n: usize },
    Cycle { n: usize },
    Star { n: usize },
    Tree { n: usize, seed: u64 },
    Grid { rows: usize, cols: usize },
    Complete { n: usize },
    SubdividedClique { k: usize },
    ForestUnion { n: usize, alpha: usize, seed: u64 },
}

impl GraphSpec {
    /// Short stable identifier, used as the graph id in reports.
    pub fn id(&self) -> String {
        match self {
            GraphSpec::Path { n } => format!("path-{n}"),
            GraphSpec::Cycle { n } => format!("cycle-{n}"),
            GraphSpec::Star { n } => format!("star-{n}"),
            GraphSpec::Tree { n, seed } => format!("tree-{n}-s{seed}"),
            GraphSpec::Grid { rows, cols } => format!("grid-{rows}x{cols}"),
            GraphSpec::Complete { n } => format!("complete-{n}"),
            GraphSpec::SubdividedClique { k } => format!("subdivided-clique-{k}"),
            GraphSpec::ForestUnion { n, alpha, seed } => format!("forest-union-{n}-a{alpha}-s{seed}"),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            GraphSpec::Path { .. } => "path",
            GraphSpec::Cycle { .. } => "cycle",
            GraphSpec::Star { .. } => "star",
            GraphSpec::Tree { .. } => "tree",
            GraphSpec::Grid { .. } => "grid",
            GraphSpec::Complete { .. } => "complete",
            GraphSpec::SubdividedClique { .. } => "subdivided-clique",
            GraphSpec::ForestUnion { .. } => "forest-union",
        }
    }
}

/// Explicit list of edge-disjoint forests whose union is the edge set,
/// which bounds the arboricity by `forests.len()`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArboricityCertificate {
    pub forests: Vec<Vec<(NodeId, NodeId)>>,
}

impl ArboricityCertificate {
    pub fn bound(&self) -> usize {
        self.forests.len()
    }

    /// Checks that the forests are acyclic, pairwise edge-disjoint and
    /// together cover exactly the edges of `g`.
    pub fn verify(&self, g: &Graph) -> Result<(), String> {
        let mut seen = BTreeSet::new();
        for (i, forest) in self.forests.iter().enumerate() {
            let canon: Vec<_> = forest.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
            if canon.iter().any(|&(u, v)| v >= g.node_count() || u == v) {
                return Err(format!("forest {i} has an invalid edge"));
            }
            if !is_acyclic(g.node_count(), &canon) {
                return Err(format!("forest {i} contains a cycle"));
            }
            for e in canon {
                if !seen.insert(e) {
                    return Err(format!("edge {}-{} listed twice", e.0, e.1));
                }
            }
        }
        if seen.len() != g.edge_count() || !g.edges().iter().all(|e| seen.contains(e)) {
            return Err("forests do not cover the edge set exactly".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub graph: Graph,
    pub certificate: ArboricityCertificate,
}

fn positive(name: &str, value: usize) -> Result<(), GraphError> {
    if value == 0 {
        Err(GraphError::InvalidSpec(format!("{name} must be positive")))
    } else {
        Ok(())
    }
}

pub fn generate(spec: &GraphSpec) -> Result<Generated, GraphError> {
    let (n, forests) = match *spec {
        GraphSpec::Path { n } => {
            positive("n", n)?;
            (n, vec![(1..n).map(|v| (v - 1, v)).collect()])
        }
        GraphSpec::Cycle { n } => {
            if n < 3 {
                return Err(GraphError::InvalidSpec("a cycle needs at least 3 nodes".into()));
            }
            (n, vec![(1..n).map(|v| (v - 1, v)).collect(), vec![(0, n - 1)]])
        }
        GraphSpec::Star { n } => {
            positive("n", n)?;
            (n, vec![(1..n).map(|v| (0, v)).collect()])
        }
        GraphSpec::Tree { n, seed } => {
            positive("n", n)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (n, vec![random_recursive_tree(n, &mut rng)])
        }
        GraphSpec::Grid { rows, cols } => {
            positive("rows", rows)?;
            positive("cols", cols)?;
            let id = |r: usize, c: usize| r * cols + c;
            let horizontal = (0..rows).flat_map(|r| (1..cols).map(move |c| (id(r, c - 1), id(r, c)))).collect();
            let vertical = (1..rows).flat_map(|r| (0..cols).map(move |c| (id(r - 1, c), id(r, c)))).collect();
            (rows * cols, vec![horizontal, vertical])
        }
        GraphSpec::Complete { n } => {
            positive("n", n)?;
            (n, complete_paths(n))
        }
        GraphSpec::SubdividedClique { k } => {
            positive("k", k)?;
            // Original vertices are 0..k; the subdivision vertex of pair
            // (i, j) gets the next free ID. Each subdivision vertex has one
            // edge in each forest, so both forests are unions of stars.
            let mut low = Vec::new();
            let mut high = Vec::new();
            let mut next = k;
            for i in 0..k {
                for j in i + 1..k {
                    low.push((i, next));
                    high.push((j, next));
                    next += 1;
                }
            }
            (next, vec![low, high])
        }
        GraphSpec::ForestUnion { n, alpha, seed } => {
            positive("n", n)?;
            positive("alpha", alpha)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut seen = BTreeSet::new();
            let forests = (0..alpha)
                .map(|_| {
                    random_recursive_tree(n, &mut rng)
                        .into_iter()
                        .map(|(u, v)| (u.min(v), u.max(v)))
                        .filter(|&e| seen.insert(e))
                        .collect()
                })
                .collect();
            (n, forests)
        }
    };
    let forests: Vec<Vec<_>> = forests.into_iter().filter(|f: &Vec<_>| !f.is_empty()).collect();
    let graph = Graph::from_edges(n, forests.iter().flatten().copied())?;
    Ok(Generated { graph, certificate: ArboricityCertificate { forests } })
}

/// Spanning tree where the i-th node of a random order attaches to a
/// uniformly chosen earlier node.
fn random_recursive_tree(n: usize, rng: &mut ChaCha8Rng) -> Vec<(NodeId, NodeId)> {
    let mut order: Vec<NodeId> = (0..n).collect();
    order.shuffle(rng);
    (1..n).map(|i| (order[rng.gen_range(0..i)], order[i])).collect()
}

/// Decomposes `K_n` into `ceil(n/2)` forests: `K_{2h}` splits into `h`
/// zigzag Hamiltonian paths, and for odd `n` the phantom vertex `2h-1`
/// is dropped from each path.
fn complete_paths(n: usize) -> Vec<Vec<(NodeId, NodeId)>> {
    let half = n.div_ceil(2);
    let even = 2 * half;
    (0..half)
        .map(|i| {
            let seq: Vec<NodeId> = (0..even)
                .map(|j| {
                    let offset = if j % 2 == 1 { j.div_ceil(2) } else { even - j / 2 };
                    (i + offset) % even
                })
                .collect();
            seq.windows(2).map(|w| (w[0], w[1])).filter(|&(u, v)| u < n && v < n).collect()
        })
        .collect()
}
