//! Deterministic primal-dual set cover on the round engine.
//!
//! In phase `k` every uncovered element carries the dual `μ^k / Δ`, where
//! `Δ` is the largest set size; a covered element keeps the dual it had
//! when it got covered. A set joins the cover in the first phase in which
//! the duals of its elements sum to at least 1, and its elements are then
//! covered. Phase `K = min{k : μ^k ≥ Δ}` covers every remaining element,
//! so at most `K + 1` phases run.
//!
//! A phase takes two rounds. In the even round sets decide and send a
//! 1-bit join notice to their uncovered members; in the odd round newly
//! covered elements send a 1-bit covered notice to every set containing
//! them. Sets recompute dual sums from the phase number and the notices,
//! so no dual value is ever transmitted.
//!
//! The program is topology-agnostic: each engine node may host one set
//! and one element, and the [`CoverRole`] input says which ports lead to
//! members and containers. [`solve`] embeds a [`CoverInstance`] on the
//! graph it was derived from (set `S_u` and element `u` both live on node
//! `u`); [`solve_set_system`] runs on the explicit bipartite network.

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cover::{CoverInstance, SetSystem};
use crate::graph::Graph;
use crate::sim::{self, Message, NodeContext, NodeProgram, Outbox, RoundTrace, SimConfig, SimError, Step};

#[derive(Debug, Error, Clone)]
pub enum SetCoverError {
    #[error("multiplier must be greater than 1, got {0}")]
    InvalidMultiplier(Ratio<u64>),
    #[error("element {0} is contained in no set")]
    Infeasible(usize),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// What one engine node hosts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CoverRole {
    pub set: Option<SetRole>,
    pub element: Option<ElementRole>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SetRole {
    /// Ports leading to the hosts of the set's members.
    pub member_ports: Vec<usize>,
    /// Whether the element hosted on this node is a member.
    pub has_local_member: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ElementRole {
    /// Ports leading to the hosts of the sets containing this element.
    pub container_ports: Vec<usize>,
}

pub struct SetCoverProgram {
    max_set_size: usize,
    /// `μ^k` for `k = 0..=last_phase`.
    powers: Vec<BigRational>,
}

impl SetCoverProgram {
    pub fn new(mu: Ratio<u64>, max_set_size: usize) -> Result<Self, SetCoverError> {
        if mu <= Ratio::one() {
            return Err(SetCoverError::InvalidMultiplier(mu));
        }
        let mu = to_big(mu);
        let target = BigRational::from_integer(BigInt::from(max_set_size));
        let mut powers = vec![BigRational::one()];
        while powers.last().unwrap() < &target {
            let next = powers.last().unwrap() * &mu;
            powers.push(next);
        }
        Ok(SetCoverProgram { max_set_size, powers })
    }

    /// Index of the last phase, `min{k : μ^k ≥ Δ}`.
    pub fn last_phase(&self) -> u32 {
        (self.powers.len() - 1) as u32
    }

    /// Whether `Σ_e μ^{k_e} ≥ Δ`, i.e. the duals sum to at least 1.
    fn saturated<I: Iterator<Item = u32>>(&self, exponents: I) -> bool {
        let total: BigRational = exponents.map(|k| &self.powers[k as usize]).sum();
        total >= BigRational::from_integer(BigInt::from(self.max_set_size))
    }
}

fn to_big(r: Ratio<u64>) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverNodeState {
    role: CoverRole,
    /// Phase in which each remote member became covered, by position in
    /// `member_ports`.
    member_phase: Vec<Option<u32>>,
    joined: Option<u32>,
    element_phase: Option<u32>,
    notified: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverNodeOutput {
    /// Phase in which the hosted set joined, if it did.
    pub joined: Option<u32>,
    /// Phase in which the hosted element was covered.
    pub element_phase: Option<u32>,
}

impl CoverNodeState {
    fn set_done(&self) -> bool {
        match &self.role.set {
            None => true,
            Some(set) => {
                self.joined.is_some()
                    || (self.member_phase.iter().all(Option::is_some)
                        && (!set.has_local_member || self.element_phase.is_some()))
            }
        }
    }

    fn element_done(&self) -> bool {
        self.role.element.is_none() || (self.element_phase.is_some() && self.notified)
    }

    fn output(&self) -> CoverNodeOutput {
        CoverNodeOutput { joined: self.joined, element_phase: self.element_phase }
    }
}

impl SetCoverProgram {
    /// Even step `2k`: the hosted set decides whether to join in phase `k`.
    fn decide(
        &self,
        ctx: &NodeContext<'_>,
        phase: u32,
        mut state: CoverNodeState,
    ) -> Step<CoverNodeState, CoverNodeOutput> {
        let mut out = Outbox::new(ctx.degree());
        if let Some(set) = &state.role.set {
            if state.joined.is_none() && !state.set_done() {
                let remote = state.member_phase.iter().map(|p| p.unwrap_or(phase));
                let local = set.has_local_member.then(|| state.element_phase.unwrap_or(phase));
                if self.saturated(remote.chain(local)) {
                    state.joined = Some(phase);
                    for (i, &port) in set.member_ports.iter().enumerate() {
                        if state.member_phase[i].is_none() {
                            out.send(port, Message::flag(true));
                        }
                    }
                    if set.has_local_member && state.element_phase.is_none() {
                        state.element_phase = Some(phase);
                        // nobody else to tell
                        if state.role.element.as_ref().is_some_and(|e| e.container_ports.is_empty()) {
                            state.notified = true;
                        }
                    }
                }
            }
        }
        self.finish(state, out)
    }

    fn finish(&self, state: CoverNodeState, out: Outbox) -> Step<CoverNodeState, CoverNodeOutput> {
        if state.set_done() && state.element_done() {
            let output = state.output();
            Step::halt(state, out, output)
        } else {
            Step::running(state, out)
        }
    }
}

impl NodeProgram for SetCoverProgram {
    type Input = CoverRole;
    type State = CoverNodeState;
    type Output = CoverNodeOutput;

    fn init(&self, ctx: &NodeContext<'_>, role: CoverRole) -> Step<CoverNodeState, CoverNodeOutput> {
        let members = role.set.as_ref().map_or(0, |s| s.member_ports.len());
        let state = CoverNodeState {
            role,
            member_phase: vec![None; members],
            joined: None,
            element_phase: None,
            notified: false,
        };
        self.decide(ctx, 0, state)
    }

    fn on_round(
        &self,
        ctx: &NodeContext<'_>,
        round: u32,
        mut state: CoverNodeState,
        inbox: &[Option<Message>],
    ) -> Step<CoverNodeState, CoverNodeOutput> {
        let phase = round / 2;
        if round % 2 == 1 {
            // join notices from the decisions of phase `phase`
            let mut out = Outbox::new(ctx.degree());
            if let Some(element) = &state.role.element {
                if state.element_phase.is_none() && element.container_ports.iter().any(|&p| inbox[p].is_some()) {
                    state.element_phase = Some(phase);
                }
                if state.element_phase.is_some() && !state.notified {
                    for &port in &element.container_ports {
                        out.send(port, Message::flag(true));
                    }
                    state.notified = true;
                }
            }
            return self.finish(state, out);
        }
        // covered notices for elements covered in phase `phase - 1`
        if let Some(set) = &state.role.set {
            for (i, &port) in set.member_ports.iter().enumerate() {
                if inbox[port].is_some() && state.member_phase[i].is_none() {
                    state.member_phase[i] = Some(phase - 1);
                }
            }
        }
        self.decide(ctx, phase, state)
    }
}

/// Cover chosen by one run, with the covering phase of every element.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverResult {
    /// Indices of the chosen sets (representatives, for a [`CoverInstance`]).
    pub chosen: Vec<usize>,
    pub size: usize,
    /// Number of phases that ran, i.e. last covering phase + 1.
    pub phases: u32,
    /// Dual exponent of each element: `y_e = μ^{k_e} / Δ`.
    pub element_phases: Vec<u32>,
    pub max_set_size: usize,
    pub trace: RoundTrace,
}

impl CoverResult {
    /// Elements covered by the end of phase `phase`.
    pub fn covered_after(&self, phase: u32) -> Vec<usize> {
        self.element_phases.iter().enumerate().filter(|(_, &k)| k <= phase).map(|(e, _)| e).collect()
    }
}

fn round_cap(program: &SetCoverProgram, sim_cfg: SimConfig) -> SimConfig {
    let natural = 2 * program.last_phase() + 3;
    SimConfig { round_cap: natural.min(sim_cfg.round_cap), ..sim_cfg }
}

/// Runs the set-cover program on `g`, hosting `S_u` and element `u` on
/// node `u`. `inst` must come from a decomposition of `g`.
pub fn solve(
    g: &Graph,
    inst: &CoverInstance,
    mu: Ratio<u64>,
    sim_cfg: SimConfig,
) -> Result<CoverResult, SetCoverError> {
    let program = SetCoverProgram::new(mu, inst.max_set_size)?;
    let roles: Vec<CoverRole> = g
        .nodes()
        .map(|u| {
            let member_ports = inst
                .set(u)
                .iter()
                .filter(|&&v| v != u)
                .map(|&v| g.port_of(u, v).expect("set members are neighbors"))
                .collect();
            let container_ports = inst
                .containing(u)
                .iter()
                .filter(|&&p| p != u)
                .map(|&p| g.port_of(u, p).expect("containers are neighbors"))
                .collect();
            CoverRole {
                set: Some(SetRole { member_ports, has_local_member: true }),
                element: Some(ElementRole { container_ports }),
            }
        })
        .collect();
    let outcome = sim::run(g, &program, roles, round_cap(&program, sim_cfg))?;
    let chosen = outcome.outputs.iter().enumerate().filter(|(_, o)| o.joined.is_some()).map(|(u, _)| u).collect();
    let element_phases = outcome.outputs.iter().map(|o| o.element_phase.expect("every element is covered")).collect();
    Ok(finish_result(chosen, element_phases, inst.max_set_size, outcome.trace))
}

/// Runs the set-cover program on the bipartite network of `sys`: node `i`
/// hosts set `i`, node `sets + e` hosts element `e`.
pub fn solve_set_system(sys: &SetSystem, mu: Ratio<u64>, sim_cfg: SimConfig) -> Result<CoverResult, SetCoverError> {
    if let Some(e) = sys.first_uncoverable() {
        return Err(SetCoverError::Infeasible(e));
    }
    let program = SetCoverProgram::new(mu, sys.max_set_size())?;
    let m = sys.sets.len();
    let edges = sys.sets.iter().enumerate().flat_map(|(i, s)| s.iter().map(move |&e| (i, m + e)));
    let network = Graph::from_edges(m + sys.universe, edges).expect("bipartite incidence graph is simple");
    // every neighbor of a set node is a member and vice versa
    let roles = network
        .nodes()
        .map(|u| {
            let ports = (0..network.degree(u)).collect();
            if u < m {
                CoverRole { set: Some(SetRole { member_ports: ports, has_local_member: false }), element: None }
            } else {
                CoverRole { set: None, element: Some(ElementRole { container_ports: ports }) }
            }
        })
        .collect();
    let outcome = sim::run(&network, &program, roles, round_cap(&program, sim_cfg))?;
    let chosen = outcome.outputs[..m].iter().enumerate().filter(|(_, o)| o.joined.is_some()).map(|(i, _)| i).collect();
    let element_phases =
        outcome.outputs[m..].iter().map(|o| o.element_phase.expect("every element is covered")).collect();
    Ok(finish_result(chosen, element_phases, sys.max_set_size(), outcome.trace))
}

fn finish_result(chosen: Vec<usize>, element_phases: Vec<u32>, max_set_size: usize, trace: RoundTrace) -> CoverResult {
    let phases = element_phases.iter().max().map_or(0, |k| k + 1);
    CoverResult { size: chosen.len(), chosen, phases, element_phases, max_set_size, trace }
}

/// Exact check of the primal-dual accounting for one run.
#[derive(Debug, Clone)]
pub struct DualAudit {
    /// `max_S Σ_{e∈S} y_e`; dual feasibility of `y/μ` needs this `≤ μ`.
    pub max_set_load: BigRational,
    pub total_dual: BigRational,
    /// `Σ_{S∈cover} Σ_{e∈S} y_e`.
    pub charged: BigRational,
    pub frequency: usize,
    pub dual_feasible: bool,
    /// `|cover| ≤ charged`.
    pub cover_charged: bool,
    /// `charged ≤ f · Σ y`.
    pub charge_bounded: bool,
    pub phase_bound_ok: bool,
}

impl DualAudit {
    pub fn holds(&self) -> bool {
        self.dual_feasible && self.cover_charged && self.charge_bounded && self.phase_bound_ok
    }

    /// Weak duality against an integral optimum: `Σ y ≤ μ · opt`.
    pub fn weak_duality(&self, mu: Ratio<u64>, opt: usize) -> bool {
        self.total_dual <= to_big(mu) * BigRational::from_integer(BigInt::from(opt))
    }
}

/// Recomputes the duals of `result` over `sys` and checks the
/// feasibility and charging inequalities exactly.
pub fn audit(sys: &SetSystem, result: &CoverResult, mu: Ratio<u64>) -> DualAudit {
    let big_mu = to_big(mu);
    let delta = BigRational::from_integer(BigInt::from(result.max_set_size.max(1)));
    let max_phase = result.element_phases.iter().copied().max().unwrap_or(0);
    let mut powers = vec![BigRational::one()];
    for k in 1..=max_phase as usize {
        let next = &powers[k - 1] * &big_mu;
        powers.push(next);
    }
    let duals: Vec<BigRational> = result.element_phases.iter().map(|&k| &powers[k as usize] / &delta).collect();
    let load = |s: &Vec<usize>| -> BigRational { s.iter().map(|&e| &duals[e]).sum() };
    let max_set_load = sys.sets.iter().map(load).max().unwrap_or_else(BigRational::zero);
    let total_dual: BigRational = duals.iter().sum();
    let charged: BigRational = result.chosen.iter().map(|&i| load(&sys.sets[i])).sum();
    let frequency = sys.frequency();
    let program_phases = SetCoverProgram::new(mu, result.max_set_size).map(|p| p.last_phase() + 1).unwrap_or(0);
    DualAudit {
        dual_feasible: max_set_load <= big_mu,
        cover_charged: BigRational::from_integer(BigInt::from(result.size)) <= charged,
        charge_bounded: charged <= BigRational::from_integer(BigInt::from(frequency)) * &total_dual,
        phase_bound_ok: result.phases <= program_phases,
        max_set_load,
        total_dual,
        charged,
        frequency,
    }
}

/// Number of phases guaranteed by the analysis: `ceil(log_μ Δ) + 1`.
pub fn phase_bound(mu: Ratio<u64>, max_set_size: usize) -> Result<u32, SetCoverError> {
    Ok(SetCoverProgram::new(mu, max_set_size)?.last_phase() + 1)
}
