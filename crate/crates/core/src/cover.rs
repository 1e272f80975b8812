//! Set-cover instances.
//!
//! [`SetSystem`] is an arbitrary finite set system. [`CoverInstance`] is the
//! one derived from a forest decomposition: the universe is the node set
//! and node `u` represents `S_u = {u} ∪ C(u)`. Each node can write down its
//! own set and the sets containing it (its own and its parents') from the
//! decomposition alone, so building it costs no communication.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forest::ForestDecomposition;
use crate::graph::NodeId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoverError {
    #[error("set {set} contains element {element} outside the universe of size {universe}")]
    ElementOutOfRange { set: usize, element: usize, universe: usize },
    #[error("element {0} is in no set")]
    Uncoverable(usize),
    #[error("set index {0} out of range")]
    UnknownSet(usize),
}

/// Sets over the universe `0..universe`. Member lists are kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetSystem {
    pub universe: usize,
    pub sets: Vec<Vec<usize>>,
}

impl SetSystem {
    pub fn new(universe: usize, sets: Vec<Vec<usize>>) -> Result<Self, CoverError> {
        let mut sets = sets;
        for (i, s) in sets.iter_mut().enumerate() {
            s.sort_unstable();
            s.dedup();
            if let Some(&element) = s.iter().find(|&&e| e >= universe) {
                return Err(CoverError::ElementOutOfRange { set: i, element, universe });
            }
        }
        Ok(SetSystem { universe, sets })
    }

    /// For every element, the indices of the sets containing it.
    pub fn containing(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.universe];
        for (i, s) in self.sets.iter().enumerate() {
            for &e in s {
                out[e].push(i);
            }
        }
        out
    }

    /// Largest number of sets sharing one element.
    pub fn frequency(&self) -> usize {
        self.containing().iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn max_set_size(&self) -> usize {
        self.sets.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Returns the first element no set contains, if any.
    pub fn first_uncoverable(&self) -> Option<usize> {
        self.containing().iter().position(Vec::is_empty)
    }

    pub fn is_cover(&self, chosen: &[usize]) -> Result<bool, CoverError> {
        let mut covered = vec![false; self.universe];
        for &i in chosen {
            let set = self.sets.get(i).ok_or(CoverError::UnknownSet(i))?;
            for &e in set {
                covered[e] = true;
            }
        }
        Ok(covered.into_iter().all(|c| c))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepresentedSet {
    pub representative: NodeId,
    pub members: Vec<NodeId>,
}

/// The bipartite instance `H = (A, B, E)` kept as per-node annotations:
/// `sets[u]` is `S_u` and `containing[v]` lists the representatives of the
/// sets that contain `v`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverInstance {
    pub universe: usize,
    pub sets: Vec<RepresentedSet>,
    #[serde(skip)]
    containing: Vec<Vec<NodeId>>,
    pub frequency: usize,
    pub max_set_size: usize,
}

impl CoverInstance {
    pub fn build(fd: &ForestDecomposition) -> Self {
        let n = fd.node_count();
        let sets: Vec<RepresentedSet> = (0..n)
            .map(|u| {
                let mut members: Vec<NodeId> = fd.children[u].iter().map(|c| c.node).collect();
                members.push(u);
                members.sort_unstable();
                RepresentedSet { representative: u, members }
            })
            .collect();
        let containing: Vec<Vec<NodeId>> = (0..n)
            .map(|v| {
                let mut reps: Vec<NodeId> = fd.parents[v].iter().map(|p| p.node).collect();
                reps.push(v);
                reps.sort_unstable();
                reps
            })
            .collect();
        let frequency = containing.iter().map(Vec::len).max().unwrap_or(0);
        let max_set_size = sets.iter().map(|s| s.members.len()).max().unwrap_or(0);
        CoverInstance { universe: n, sets, containing, frequency, max_set_size }
    }

    pub fn set(&self, representative: NodeId) -> &[NodeId] {
        &self.sets[representative].members
    }

    pub fn containing(&self, element: NodeId) -> &[NodeId] {
        &self.containing[element]
    }

    pub fn to_set_system(&self) -> SetSystem {
        SetSystem { universe: self.universe, sets: self.sets.iter().map(|s| s.members.clone()).collect() }
    }

    /// Restores the element-to-sets index after deserialization.
    pub fn reindex(mut self) -> Self {
        let mut containing = vec![Vec::new(); self.universe];
        for s in &self.sets {
            for &e in &s.members {
                containing[e].push(s.representative);
            }
        }
        for c in &mut containing {
            c.sort_unstable();
        }
        self.containing = containing;
        self
    }
}
