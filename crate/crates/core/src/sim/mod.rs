//! Deterministic synchronous round engine with a per-edge bit budget.
//!
//! Every node runs the same [`NodeProgram`]. A step (the `init` call is
//! step 0, then one step per round) consumes the messages delivered this
//! round and places at most one message per incident edge direction;
//! those arrive at the neighbor in the next round. Ports are indices into
//! the node's sorted neighbor list.

mod message;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::graph::{Graph, NodeId};

pub use message::{budget, id_width, Message, MessageBuilder, MessageReader};

/// What a node knows locally: its ID, `n`, and its neighbors' IDs by port.
#[derive(Debug, Clone, Copy)]
pub struct NodeContext<'a> {
    pub id: NodeId,
    pub n: usize,
    pub neighbors: &'a [NodeId],
}

impl NodeContext<'_> {
    pub fn degree(&self) -> usize {
        self.neighbors.len()
    }

    pub fn port_of(&self, neighbor: NodeId) -> Option<usize> {
        self.neighbors.binary_search(&neighbor).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outbox {
    slots: Vec<Option<Message>>,
}

impl Outbox {
    pub fn new(degree: usize) -> Self {
        Outbox { slots: vec![None; degree] }
    }

    pub fn send(&mut self, port: usize, msg: Message) {
        self.slots[port] = Some(msg);
    }

    pub fn broadcast(&mut self, msg: &Message) {
        for slot in &mut self.slots {
            *slot = Some(msg.clone());
        }
    }

    pub fn slots(&self) -> &[Option<Message>] {
        &self.slots
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status<O> {
    Running,
    Halted(O),
}

/// Result of one local computation step.
#[derive(Debug, Clone)]
pub struct Step<S, O> {
    pub state: S,
    pub outbox: Outbox,
    pub status: Status<O>,
}

impl<S, O> Step<S, O> {
    pub fn running(state: S, outbox: Outbox) -> Self {
        Step { state, outbox, status: Status::Running }
    }

    pub fn halt(state: S, outbox: Outbox, output: O) -> Self {
        Step { state, outbox, status: Status::Halted(output) }
    }
}

/// A distributed algorithm, written from the point of view of one node.
///
/// `on_round` must depend only on its arguments; the engine relies on that
/// to evaluate nodes in any order or in parallel.
pub trait NodeProgram: Sync {
    type Input: Send;
    type State: Clone + Send + Sync;
    type Output: Clone + Send + Sync;

    fn init(&self, ctx: &NodeContext<'_>, input: Self::Input) -> Step<Self::State, Self::Output>;

    fn on_round(
        &self,
        ctx: &NodeContext<'_>,
        round: u32,
        state: Self::State,
        inbox: &[Option<Message>],
    ) -> Step<Self::State, Self::Output>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    /// `B` in the budget `B * ceil(log2(n+1))`.
    pub bandwidth_factor: u32,
    pub round_cap: u32,
    pub parallel: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { bandwidth_factor: 4, round_cap: 10_000, parallel: false }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundStats {
    /// Step in which the messages were placed; 0 is the init step.
    pub round: u32,
    pub messages: u64,
    pub total_bits: u64,
    pub max_bits: u32,
}

/// Evidence collected during a run: round count, per-round message
/// statistics and a digest over every message placed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundTrace {
    pub n: usize,
    pub budget_bits: u32,
    pub rounds_executed: u32,
    pub rounds: Vec<RoundStats>,
    pub total_messages: u64,
    pub max_bits: u32,
    /// Round in which each node halted, `None` if it never did.
    pub halted_at: Vec<Option<u32>>,
    pub message_digest: String,
}

impl RoundTrace {
    pub fn within_budget(&self) -> bool {
        self.max_bits <= self.budget_bits
    }
}

#[derive(Debug, Error, Clone)]
pub enum SimError {
    #[error("round cap must be positive")]
    ZeroRoundCap,
    #[error("expected {expected} inputs, got {got}")]
    InputCount { expected: usize, got: usize },
    #[error("bandwidth violation in round {round} on edge {from}->{to}: {bits} bits > budget {budget}")]
    Bandwidth { round: u32, from: NodeId, to: NodeId, bits: usize, budget: u32 },
    #[error("round cap {cap} reached with {} node(s) still running", unhalted.len())]
    RoundCap { cap: u32, unhalted: Vec<NodeId>, partial: Box<RoundTrace> },
}

#[derive(Debug, Clone)]
pub struct RunOutcome<O> {
    pub outputs: Vec<O>,
    pub trace: RoundTrace,
}

struct Slot<S, O> {
    state: Option<S>,
    output: Option<O>,
}

/// A run in progress. [`run`] drives it to completion; stepping manually
/// is useful to inspect or perturb intermediate states.
pub struct Simulation<'g, P: NodeProgram> {
    graph: &'g Graph,
    program: &'g P,
    config: SimConfig,
    budget: u32,
    reverse_port: Vec<Vec<usize>>,
    slots: Vec<Slot<P::State, P::Output>>,
    /// Messages placed in the last step, indexed by sender and sender port.
    placed: Vec<Vec<Option<Message>>>,
    round: u32,
    stats: Vec<RoundStats>,
    halted_at: Vec<Option<u32>>,
    hasher: Sha256,
}

impl<'g, P: NodeProgram> Simulation<'g, P> {
    pub fn new(graph: &'g Graph, program: &'g P, inputs: Vec<P::Input>, config: SimConfig) -> Result<Self, SimError> {
        let n = graph.node_count();
        if config.round_cap == 0 {
            return Err(SimError::ZeroRoundCap);
        }
        if inputs.len() != n {
            return Err(SimError::InputCount { expected: n, got: inputs.len() });
        }
        let reverse_port = graph
            .nodes()
            .map(|u| graph.neighbors(u).iter().map(|&v| graph.port_of(v, u).expect("adjacency is symmetric")).collect())
            .collect();
        let mut sim = Simulation {
            graph,
            program,
            config,
            budget: budget(n, config.bandwidth_factor),
            reverse_port,
            slots: Vec::with_capacity(n),
            placed: Vec::with_capacity(n),
            round: 0,
            stats: Vec::new(),
            halted_at: vec![None; n],
            hasher: Sha256::new(),
        };
        let steps: Vec<_> =
            inputs.into_iter().enumerate().map(|(u, input)| program.init(&sim.context(u), input)).collect();
        for _ in 0..n {
            sim.slots.push(Slot { state: None, output: None });
            sim.placed.push(Vec::new());
        }
        sim.apply(steps.into_iter().map(Some).collect())?;
        Ok(sim)
    }

    fn context(&self, u: NodeId) -> NodeContext<'g> {
        NodeContext { id: u, n: self.graph.node_count(), neighbors: self.graph.neighbors(u) }
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn all_halted(&self) -> bool {
        self.slots.iter().all(|s| s.output.is_some())
    }

    pub fn state(&self, u: NodeId) -> &P::State {
        self.slots[u].state.as_ref().expect("state present between steps")
    }

    pub fn state_mut(&mut self, u: NodeId) -> &mut P::State {
        self.slots[u].state.as_mut().expect("state present between steps")
    }

    /// Messages node `u` placed in the most recent step, by port.
    pub fn placed(&self, u: NodeId) -> &[Option<Message>] {
        &self.placed[u]
    }

    pub fn output(&self, u: NodeId) -> Option<&P::Output> {
        self.slots[u].output.as_ref()
    }

    /// Executes one round: delivers the messages placed in the previous
    /// step and runs every node that has not halted.
    pub fn step(&mut self) -> Result<(), SimError> {
        self.round += 1;
        let round = self.round;
        let graph = self.graph;
        let inboxes: Vec<Vec<Option<Message>>> = graph
            .nodes()
            .map(|v| {
                graph
                    .neighbors(v)
                    .iter()
                    .zip(&self.reverse_port[v])
                    .map(|(&u, &back)| self.placed[u].get(back).cloned().flatten())
                    .collect()
            })
            .collect();
        let program = self.program;
        let n = graph.node_count();
        let compute = |(u, slot): (usize, &mut Slot<P::State, P::Output>), inbox: &Vec<Option<Message>>| {
            if slot.output.is_some() {
                return None;
            }
            let ctx = NodeContext { id: u, n, neighbors: graph.neighbors(u) };
            let state = slot.state.take().expect("running node has state");
            Some(program.on_round(&ctx, round, state, inbox))
        };
        let steps: Vec<_> = if self.config.parallel {
            self.slots.par_iter_mut().enumerate().zip(inboxes.par_iter()).map(|(s, i)| compute(s, i)).collect()
        } else {
            self.slots.iter_mut().enumerate().zip(inboxes.iter()).map(|(s, i)| compute(s, i)).collect()
        };
        self.apply(steps)
    }

    fn apply(&mut self, steps: Vec<Option<Step<P::State, P::Output>>>) -> Result<(), SimError> {
        let mut stats = RoundStats { round: self.round, ..RoundStats::default() };
        for (u, step) in steps.into_iter().enumerate() {
            let Some(step) = step else {
                self.placed[u].clear();
                continue;
            };
            assert_eq!(step.outbox.slots.len(), self.graph.degree(u), "node {u} produced an outbox of the wrong width");
            for (port, msg) in step.outbox.slots.iter().enumerate() {
                let Some(msg) = msg else { continue };
                let bits = msg.bit_len();
                if bits > self.budget as usize {
                    return Err(SimError::Bandwidth {
                        round: self.round,
                        from: u,
                        to: self.graph.neighbors(u)[port],
                        bits,
                        budget: self.budget,
                    });
                }
                stats.messages += 1;
                stats.total_bits += bits as u64;
                stats.max_bits = stats.max_bits.max(bits as u32);
                self.hasher.update(self.round.to_le_bytes());
                self.hasher.update((u as u64).to_le_bytes());
                self.hasher.update((port as u64).to_le_bytes());
                self.hasher.update((bits as u64).to_le_bytes());
                self.hasher.update(msg.raw_bytes());
            }
            self.placed[u] = step.outbox.slots;
            let slot = &mut self.slots[u];
            slot.state = Some(step.state);
            if let Status::Halted(out) = step.status {
                slot.output = Some(out);
                self.halted_at[u] = Some(self.round);
            }
        }
        self.stats.push(stats);
        Ok(())
    }

    pub fn trace(&self) -> RoundTrace {
        RoundTrace {
            n: self.graph.node_count(),
            budget_bits: self.budget,
            rounds_executed: self.round,
            total_messages: self.stats.iter().map(|s| s.messages).sum(),
            max_bits: self.stats.iter().map(|s| s.max_bits).max().unwrap_or(0),
            rounds: self.stats.clone(),
            halted_at: self.halted_at.clone(),
            message_digest: hex::encode(self.hasher.clone().finalize()),
        }
    }

    /// Steps until every node halts or the round cap is hit.
    pub fn run_to_completion(mut self) -> Result<RunOutcome<P::Output>, SimError> {
        while !self.all_halted() {
            if self.round >= self.config.round_cap {
                let unhalted =
                    self.slots.iter().enumerate().filter(|(_, s)| s.output.is_none()).map(|(u, _)| u).collect();
                return Err(SimError::RoundCap {
                    cap: self.config.round_cap,
                    unhalted,
                    partial: Box::new(self.trace()),
                });
            }
            self.step()?;
        }
        let trace = self.trace();
        let outputs = self.slots.into_iter().map(|s| s.output.expect("all halted")).collect();
        Ok(RunOutcome { outputs, trace })
    }
}

/// Runs `program` on `graph` with one input per node.
pub fn run<P: NodeProgram>(
    graph: &Graph,
    program: &P,
    inputs: Vec<P::Input>,
    config: SimConfig,
) -> Result<RunOutcome<P::Output>, SimError> {
    Simulation::new(graph, program, inputs, config)?.run_to_completion()
}
