//! Sequential exact algorithms and checkers used to adjudicate the
//! distributed results on small inputs.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cover::{CoverInstance, SetSystem};
use crate::forest::ForestDecomposition;
use crate::graph::{write_graph, Graph, NodeId};

/// Environment variable naming the oracle cache directory.
pub const CACHE_ENV: &str = "CONGEST_MDS_CACHE";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("input of size {size} exceeds the oracle budget of {limit}")]
    OverBudget { size: usize, limit: usize },
    #[error("exact search exceeded its time cap of {0:?}")]
    Timeout(Duration),
    #[error("element {0} is contained in no set")]
    Infeasible(usize),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleBudget {
    pub max_nodes: usize,
    pub max_universe: usize,
    pub time_cap: Duration,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget { max_nodes: 22, max_universe: 22, time_cap: Duration::from_secs(60) }
    }
}

struct Clock {
    start: Instant,
    cap: Duration,
    ticks: u32,
}

impl Clock {
    fn new(cap: Duration) -> Self {
        Clock { start: Instant::now(), cap, ticks: 0 }
    }

    fn tick(&mut self) -> Result<(), OracleError> {
        self.ticks = self.ticks.wrapping_add(1);
        if (self.ticks == 1 || self.ticks.is_multiple_of(4096)) && self.start.elapsed() > self.cap {
            return Err(OracleError::Timeout(self.cap));
        }
        Ok(())
    }
}

/// Minimum dominating set by exhaustive search over increasing sizes.
/// Within a size, candidates are tried in lexicographic order, so the
/// result is the lexicographically smallest optimum.
pub fn exact_mds(g: &Graph, budget: &OracleBudget) -> Result<Vec<NodeId>, OracleError> {
    let n = g.node_count();
    if n > budget.max_nodes || n > 32 {
        return Err(OracleError::OverBudget { size: n, limit: budget.max_nodes.min(32) });
    }
    let closed: Vec<u32> = g.nodes().map(|u| g.neighbors(u).iter().fold(1u32 << u, |m, &v| m | (1 << v))).collect();
    let sets = closed.clone();
    let full = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let mut clock = Clock::new(budget.time_cap);
    for k in 0..=n {
        let mut chosen = Vec::with_capacity(k);
        if exact_cover_of_size(&sets, &closed, full, k, 0, 0, &mut chosen, g.max_degree() + 1, &mut clock)? {
            return Ok(chosen);
        }
    }
    unreachable!("the full vertex set dominates")
}

/// Looks for `k` more candidates, all `>= start`, that together with
/// `covered` cover `full`. `covers_of[w]` is the mask of candidates
/// covering `w` (for domination the closed neighborhood again).
#[allow(clippy::too_many_arguments)]
fn exact_cover_of_size(
    candidates: &[u32],
    covers_of: &[u32],
    full: u32,
    k: usize,
    start: usize,
    covered: u32,
    chosen: &mut Vec<usize>,
    max_gain: usize,
    clock: &mut Clock,
) -> Result<bool, OracleError> {
    clock.tick()?;
    let missing = full & !covered;
    if missing == 0 {
        return Ok(true);
    }
    if k == 0 || (missing.count_ones() as usize) > k * max_gain {
        return Ok(false);
    }
    let first = missing.trailing_zeros() as usize;
    // some pick at index >= start has to cover `first`
    let at_or_after = if start >= 32 { 0 } else { u32::MAX << start };
    if covers_of[first] & at_or_after == 0 {
        return Ok(false);
    }
    for c in start..candidates.len() {
        chosen.push(c);
        if exact_cover_of_size(
            candidates,
            covers_of,
            full,
            k - 1,
            c + 1,
            covered | candidates[c],
            chosen,
            max_gain,
            clock,
        )? {
            return Ok(true);
        }
        chosen.pop();
    }
    Ok(false)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactCover {
    pub size: usize,
    pub chosen: Vec<usize>,
}

/// Minimum set cover by exhaustive search over increasing sizes.
pub fn exact_setcover(sys: &SetSystem, budget: &OracleBudget) -> Result<ExactCover, OracleError> {
    if sys.universe > budget.max_universe || sys.universe > 32 {
        return Err(OracleError::OverBudget { size: sys.universe, limit: budget.max_universe.min(32) });
    }
    if sys.sets.len() > 32 {
        return Err(OracleError::OverBudget { size: sys.sets.len(), limit: 32 });
    }
    if let Some(e) = sys.first_uncoverable() {
        return Err(OracleError::Infeasible(e));
    }
    let masks: Vec<u32> = sys.sets.iter().map(|s| s.iter().fold(0u32, |m, &e| m | (1 << e))).collect();
    let mut covers_of = vec![0u32; sys.universe];
    for (i, s) in sys.sets.iter().enumerate() {
        for &e in s {
            covers_of[e] |= 1 << i;
        }
    }
    let full = if sys.universe == 32 { u32::MAX } else { (1u32 << sys.universe) - 1 };
    let mut clock = Clock::new(budget.time_cap);
    for k in 0..=sys.sets.len() {
        let mut chosen = Vec::with_capacity(k);
        if exact_cover_of_size(&masks, &covers_of, full, k, 0, 0, &mut chosen, sys.max_set_size().max(1), &mut clock)? {
            return Ok(ExactCover { size: k, chosen });
        }
    }
    unreachable!("feasibility was checked")
}

pub fn is_dominating(g: &Graph, set: &[NodeId]) -> Result<bool, OracleError> {
    let mut dominated = vec![false; g.node_count()];
    for &u in set {
        if u >= g.node_count() {
            return Err(OracleError::UnknownNode(u));
        }
        dominated[u] = true;
        for &v in g.neighbors(u) {
            dominated[v] = true;
        }
    }
    Ok(dominated.into_iter().all(|d| d))
}

pub fn is_cover(sys: &SetSystem, chosen: &[usize]) -> Result<bool, OracleError> {
    sys.is_cover(chosen).map_err(|e| match e {
        crate::cover::CoverError::UnknownSet(i) => OracleError::UnknownNode(i),
        other => unreachable!("{other}"),
    })
}

/// Outcome of building `D = M ∪ ⋃_{u∈M} P(u)` from a minimum dominating
/// set `M` and checking that `D`'s sets cover the universe.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExistenceCheck {
    pub mds_size: usize,
    pub witness: Vec<NodeId>,
    /// Elements not covered by the witness' sets (empty on success).
    pub uncovered: Vec<NodeId>,
    /// `(f + 1) |M|`.
    pub forest_bound: usize,
    /// `(t + 1) |M|`, which is `(3α + 1)|M|` at ε = 1.
    pub threshold_bound: usize,
}

impl ExistenceCheck {
    pub fn passed(&self) -> bool {
        self.uncovered.is_empty()
            && self.witness.len() <= self.forest_bound
            && self.witness.len() <= self.threshold_bound
    }
}

pub fn existence_bound_check(g: &Graph, fd: &ForestDecomposition, mds: &[NodeId]) -> ExistenceCheck {
    let inst = CoverInstance::build(fd);
    let mut witness: Vec<NodeId> = mds.to_vec();
    for &u in mds {
        witness.extend(fd.parents[u].iter().map(|p| p.node));
    }
    witness.sort_unstable();
    witness.dedup();
    let mut covered = vec![false; g.node_count()];
    for &u in &witness {
        for &v in inst.set(u) {
            covered[v] = true;
        }
    }
    let uncovered = covered.iter().enumerate().filter(|(_, c)| !**c).map(|(v, _)| v).collect();
    ExistenceCheck {
        mds_size: mds.len(),
        witness,
        uncovered,
        forest_bound: (fd.forest_count as usize + 1) * mds.len(),
        threshold_bound: (fd.threshold as usize + 1) * mds.len(),
    }
}

/// On-disk cache of exact MDS results keyed by a hash of the canonical
/// edge list.
#[derive(Debug, Clone)]
pub struct OracleCache {
    dir: PathBuf,
}

#[derive(Serialize, Deserialize)]
struct CachedMds {
    n: usize,
    mds: Vec<NodeId>,
}

impl OracleCache {
    pub fn new(dir: impl AsRef<Path>) -> Self {
        OracleCache { dir: dir.as_ref().to_path_buf() }
    }

    pub fn from_env() -> Option<Self> {
        std::env::var_os(CACHE_ENV).map(OracleCache::new)
    }

    pub fn key(g: &Graph) -> String {
        hex::encode(Sha256::digest(write_graph(g).as_bytes()))
    }

    fn path(&self, g: &Graph) -> PathBuf {
        self.dir.join(format!("{}.mds.json", Self::key(g)))
    }

    pub fn lookup_mds(&self, g: &Graph) -> Option<Vec<NodeId>> {
        let text = std::fs::read_to_string(self.path(g)).ok()?;
        let cached: CachedMds = serde_json::from_str(&text).ok()?;
        (cached.n == g.node_count()).then_some(cached.mds)
    }

    /// Cached exact MDS; computes and stores it on a miss. Write failures
    /// only cost the cache entry.
    pub fn exact_mds(&self, g: &Graph, budget: &OracleBudget) -> Result<Vec<NodeId>, OracleError> {
        if let Some(mds) = self.lookup_mds(g) {
            return Ok(mds);
        }
        let mds = exact_mds(g, budget)?;
        let entry = CachedMds { n: g.node_count(), mds: mds.clone() };
        if std::fs::create_dir_all(&self.dir).is_ok() {
            let _ = std::fs::write(self.path(g), serde_json::to_string(&entry).expect("serializable"));
        }
        Ok(mds)
    }
}
