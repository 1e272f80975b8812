//! Forest decomposition in the CONGEST model.
//!
//! Two node programs run back to back on the engine:
//!
//! 1. [`PeelProgram`] assigns levels. In iteration `i` every node that is
//!    still unleveled and has at most `t = ceil((2+ε)α)` unleveled
//!    neighbors takes level `i` and tells its unleveled neighbors.
//! 2. [`OrientProgram`] exchanges levels once, orients every edge toward
//!    the endpoint with the larger `(level, id)` key, and lets each child
//!    number its parent edges `1, 2, ...` in increasing parent-ID order.
//!    The child sends each parent the chosen forest index.
//!
//! Every node ends up with at most `t` parents: a parent of `u` was still
//! unleveled when `u` was peeled.

use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{is_acyclic, Graph, NodeId};
use crate::sim::{self, id_width, Message, NodeContext, NodeProgram, Outbox, RoundTrace, SimConfig, SimError, Step};

#[derive(Debug, Error, Clone)]
pub enum DecompError {
    #[error("invalid decomposition config: {0}")]
    InvalidConfig(String),
    #[error("arboricity promise violated: node {node} still unleveled after {level_cap} levels")]
    PromiseViolated { node: NodeId, level_cap: u32 },
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompConfig {
    pub alpha: u32,
    pub epsilon: Ratio<u64>,
    /// Replaces `ceil((2+ε)α)` as the peeling threshold when set.
    pub threshold_override: Option<u32>,
}

impl DecompConfig {
    pub fn new(alpha: u32, epsilon: Ratio<u64>) -> Result<Self, DecompError> {
        let cfg = DecompConfig { alpha, epsilon, threshold_override: None };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), DecompError> {
        if self.alpha == 0 {
            return Err(DecompError::InvalidConfig("alpha must be positive".into()));
        }
        if self.epsilon.is_zero() {
            return Err(DecompError::InvalidConfig("epsilon must be positive".into()));
        }
        if let Some(t) = self.threshold_override {
            if t <= 2 * self.alpha {
                return Err(DecompError::InvalidConfig(format!(
                    "threshold {t} must exceed 2*alpha = {}",
                    2 * self.alpha
                )));
            }
        }
        Ok(())
    }

    /// `ceil((2+ε)α)`, computed exactly.
    pub fn base_threshold(&self) -> u32 {
        let t = (Ratio::from_integer(2) + self.epsilon) * Ratio::from_integer(u64::from(self.alpha));
        t.ceil().to_integer() as u32
    }

    pub fn threshold(&self) -> u32 {
        self.threshold_override.unwrap_or_else(|| self.base_threshold())
    }

    /// Maximum number of peeling iterations on `n` nodes when the
    /// arboricity promise holds: `ceil(log n / log((2+ε)/2)) + 1`. With a
    /// threshold override the base `t / 2α` is used instead of `(2+ε)/2`.
    pub fn level_cap(&self, n: usize) -> u32 {
        if n <= 1 {
            return 1;
        }
        let base = match self.threshold_override {
            Some(t) => f64::from(t) / (2.0 * f64::from(self.alpha)),
            None => 1.0 + self.epsilon.to_f64().unwrap_or(1.0) / 2.0,
        };
        ((n as f64).log2() / base.log2()).ceil() as u32 + 1
    }
}

/// One parent or child record: the neighbor and the forest the edge lies in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ForestEdge {
    pub node: NodeId,
    pub forest: u32,
}

/// Per-node levels, parent and child lists. Forest indices start at 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestDecomposition {
    pub threshold: u32,
    pub levels: Vec<u32>,
    pub parents: Vec<Vec<ForestEdge>>,
    pub children: Vec<Vec<ForestEdge>>,
    /// Number of forests used (largest index assigned).
    pub forest_count: u32,
}

impl ForestDecomposition {
    pub fn node_count(&self) -> usize {
        self.levels.len()
    }

    pub fn max_level(&self) -> u32 {
        self.levels.iter().copied().max().unwrap_or(0)
    }

    fn key(&self, u: NodeId) -> (u32, NodeId) {
        (self.levels[u], u)
    }

    /// Edges `(child, parent)` carrying forest index `forest`.
    pub fn forest_edges(&self, forest: u32) -> Vec<(NodeId, NodeId)> {
        self.parents
            .iter()
            .enumerate()
            .flat_map(|(u, ps)| ps.iter().filter(move |p| p.forest == forest).map(move |p| (u, p.node)))
            .collect()
    }

    /// Checks every structural invariant against `g`.
    pub fn validate(&self, g: &Graph) -> Result<(), String> {
        let n = g.node_count();
        if self.levels.len() != n || self.parents.len() != n || self.children.len() != n {
            return Err("per-node vectors do not match the node count".into());
        }
        let mut recorded = 0usize;
        for u in g.nodes() {
            let ps = &self.parents[u];
            if ps.len() > self.threshold as usize {
                return Err(format!("node {u} has {} parents > threshold {}", ps.len(), self.threshold));
            }
            let mut seen_forests = Vec::with_capacity(ps.len());
            for p in ps {
                if !g.has_edge(u, p.node) {
                    return Err(format!("parent record {u}->{} is not an edge", p.node));
                }
                if self.key(p.node) <= self.key(u) {
                    return Err(format!("edge {u}->{} does not increase (level, id)", p.node));
                }
                if p.forest == 0 || p.forest > self.forest_count {
                    return Err(format!("forest index {} out of range on {u}->{}", p.forest, p.node));
                }
                if seen_forests.contains(&p.forest) {
                    return Err(format!("node {u} has two parents in forest {}", p.forest));
                }
                seen_forests.push(p.forest);
                if !self.children[p.node].contains(&ForestEdge { node: u, forest: p.forest }) {
                    return Err(format!("parent {} does not list child {u}", p.node));
                }
            }
            recorded += ps.len();
            for c in &self.children[u] {
                if !self.parents[c.node].contains(&ForestEdge { node: u, forest: c.forest }) {
                    return Err(format!("child record {}<-{u} has no matching parent record", c.node));
                }
            }
        }
        // Orientation is antisymmetric, so each edge is recorded at most
        // once; the count shows every edge is recorded.
        if recorded != g.edge_count() {
            return Err(format!("{recorded} parent records for {} edges", g.edge_count()));
        }
        if self.forest_count > self.threshold {
            return Err(format!("{} forests exceed threshold {}", self.forest_count, self.threshold));
        }
        for forest in 1..=self.forest_count {
            if !is_acyclic(n, &self.forest_edges(forest)) {
                return Err(format!("forest {forest} contains a cycle"));
            }
        }
        Ok(())
    }

    /// One line per node: `u level parent:forest ...`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (u, ps) in self.parents.iter().enumerate() {
            out.push_str(&format!("{u} {}", self.levels[u]));
            for p in ps {
                out.push_str(&format!(" {}:{}", p.node, p.forest));
            }
            out.push('\n');
        }
        out
    }
}

pub struct PeelProgram {
    pub threshold: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeelState {
    leveled: Vec<bool>,
    residual: usize,
}

impl PeelProgram {
    fn announce(&self, ctx: &NodeContext<'_>, state: PeelState, level: u32) -> Step<PeelState, u32> {
        let mut out = Outbox::new(ctx.degree());
        for (port, _) in state.leveled.iter().enumerate().filter(|(_, done)| !**done) {
            out.send(port, Message::flag(true));
        }
        Step::halt(state, out, level)
    }
}

impl NodeProgram for PeelProgram {
    type Input = ();
    type State = PeelState;
    type Output = u32;

    fn init(&self, ctx: &NodeContext<'_>, _: ()) -> Step<PeelState, u32> {
        let state = PeelState { leveled: vec![false; ctx.degree()], residual: ctx.degree() };
        if state.residual <= self.threshold as usize {
            self.announce(ctx, state, 1)
        } else {
            Step::running(state, Outbox::new(ctx.degree()))
        }
    }

    fn on_round(
        &self,
        ctx: &NodeContext<'_>,
        round: u32,
        mut state: PeelState,
        inbox: &[Option<Message>],
    ) -> Step<PeelState, u32> {
        for (port, msg) in inbox.iter().enumerate() {
            if msg.is_some() && !state.leveled[port] {
                state.leveled[port] = true;
                state.residual -= 1;
            }
        }
        if state.residual <= self.threshold as usize {
            self.announce(ctx, state, round + 1)
        } else {
            Step::running(state, Outbox::new(ctx.degree()))
        }
    }
}

pub struct OrientProgram;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrientState {
    level: u32,
    parents: Vec<ForestEdge>,
    child_ports: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrientOutput {
    pub level: u32,
    pub parents: Vec<ForestEdge>,
    pub children: Vec<ForestEdge>,
}

impl NodeProgram for OrientProgram {
    type Input = u32;
    type State = OrientState;
    type Output = OrientOutput;

    fn init(&self, ctx: &NodeContext<'_>, level: u32) -> Step<OrientState, OrientOutput> {
        let state = OrientState { level, parents: Vec::new(), child_ports: Vec::new() };
        let mut out = Outbox::new(ctx.degree());
        if ctx.degree() == 0 {
            return Step::halt(state, out, OrientOutput { level, parents: Vec::new(), children: Vec::new() });
        }
        out.broadcast(&Message::builder().push(u64::from(level), id_width(ctx.n)).finish());
        Step::running(state, out)
    }

    fn on_round(
        &self,
        ctx: &NodeContext<'_>,
        round: u32,
        mut state: OrientState,
        inbox: &[Option<Message>],
    ) -> Step<OrientState, OrientOutput> {
        let width = id_width(ctx.n);
        let mut out = Outbox::new(ctx.degree());
        if round == 1 {
            let own = (state.level, ctx.id);
            let mut forest = 0;
            for (port, msg) in inbox.iter().enumerate() {
                let level =
                    msg.as_ref().and_then(|m| m.reader().read(width)).expect("every neighbor sends its level") as u32;
                let neighbor = ctx.neighbors[port];
                if (level, neighbor) > own {
                    // neighbors are sorted by ID, so indices follow parent-ID order
                    forest += 1;
                    state.parents.push(ForestEdge { node: neighbor, forest });
                    out.send(port, Message::builder().push(u64::from(forest), width).finish());
                } else {
                    state.child_ports.push(port);
                }
            }
            if state.child_ports.is_empty() {
                let output = OrientOutput { level: state.level, parents: state.parents.clone(), children: Vec::new() };
                return Step::halt(state, out, output);
            }
            return Step::running(state, out);
        }
        let children = state
            .child_ports
            .iter()
            .map(|&port| {
                let forest = inbox[port].as_ref().and_then(|m| m.reader().read(width)).expect("child sends its index");
                ForestEdge { node: ctx.neighbors[port], forest: forest as u32 }
            })
            .collect();
        let output = OrientOutput { level: state.level, parents: state.parents.clone(), children };
        Step::halt(state, out, output)
    }
}

#[derive(Debug, Clone)]
pub struct DecompOutcome {
    pub decomposition: ForestDecomposition,
    pub peel_trace: RoundTrace,
    pub orient_trace: RoundTrace,
}

/// Runs the peeling program. Fails with [`DecompError::PromiseViolated`] if
/// some node is still unleveled after `cfg.level_cap(n)` iterations.
pub fn peel_levels(g: &Graph, cfg: &DecompConfig, sim_cfg: SimConfig) -> Result<(Vec<u32>, RoundTrace), DecompError> {
    cfg.validate()?;
    let level_cap = cfg.level_cap(g.node_count());
    let natural = level_cap.saturating_sub(1).max(1);
    let round_cap = natural.min(sim_cfg.round_cap);
    let program = PeelProgram { threshold: cfg.threshold() };
    let run_cfg = SimConfig { round_cap, ..sim_cfg };
    match sim::run(g, &program, vec![(); g.node_count()], run_cfg) {
        Ok(outcome) => Ok((outcome.outputs, outcome.trace)),
        Err(SimError::RoundCap { unhalted, .. }) if round_cap == natural => {
            Err(DecompError::PromiseViolated { node: unhalted[0], level_cap })
        }
        Err(e) => Err(e.into()),
    }
}

pub fn orient_and_assign(
    g: &Graph,
    levels: &[u32],
    threshold: u32,
    sim_cfg: SimConfig,
) -> Result<(ForestDecomposition, RoundTrace), DecompError> {
    let outcome = sim::run(g, &OrientProgram, levels.to_vec(), sim_cfg)?;
    let mut decomposition = ForestDecomposition {
        threshold,
        levels: Vec::with_capacity(levels.len()),
        parents: Vec::with_capacity(levels.len()),
        children: Vec::with_capacity(levels.len()),
        forest_count: 0,
    };
    for out in outcome.outputs {
        let used = out.parents.len() as u32;
        decomposition.forest_count = decomposition.forest_count.max(used);
        decomposition.levels.push(out.level);
        decomposition.parents.push(out.parents);
        decomposition.children.push(out.children);
    }
    Ok((decomposition, outcome.trace))
}

pub fn decompose(g: &Graph, cfg: &DecompConfig, sim_cfg: SimConfig) -> Result<DecompOutcome, DecompError> {
    let (levels, peel_trace) = peel_levels(g, cfg, sim_cfg)?;
    let (decomposition, orient_trace) = orient_and_assign(g, &levels, cfg.threshold(), sim_cfg)?;
    Ok(DecompOutcome { decomposition, peel_trace, orient_trace })
}

impl Default for DecompConfig {
    fn default() -> Self {
        DecompConfig { alpha: 1, epsilon: Ratio::one(), threshold_override: None }
    }
}
