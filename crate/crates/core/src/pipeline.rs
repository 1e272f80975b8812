//! End-to-end dominating set approximation: forest decomposition, the
//! derived set-cover instance, distributed set cover, and the
//! representatives of the chosen sets as output.
//!
//! Stages run one after another; each stage's round count is the number
//! of engine rounds until all of its nodes halted. Building the instance
//! is local and takes no rounds.

use num_rational::Ratio;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cover::CoverInstance;
use crate::forest::{decompose, DecompConfig, DecompError, ForestDecomposition};
use crate::graph::{Graph, NodeId};
use crate::params::serde_ratio;
use crate::setcover::{self, CoverResult, SetCoverError};
use crate::sim::{budget, RoundTrace, SimConfig, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Standard,
    Fast,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Standard => "standard",
            Mode::Fast => "fast",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "standard" => Ok(Mode::Standard),
            "fast" => Ok(Mode::Fast),
            other => Err(format!("unknown mode {other:?} (expected standard or fast)")),
        }
    }
}

fn default_epsilon() -> Ratio<u64> {
    Ratio::one()
}

fn default_mu() -> Ratio<u64> {
    Ratio::from_integer(2)
}

fn default_round_cap() -> u32 {
    10_000
}

fn default_bandwidth() -> u32 {
    4
}

fn default_mode() -> Mode {
    Mode::Standard
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub alpha: u32,
    #[serde(with = "serde_ratio", default = "default_epsilon")]
    pub epsilon: Ratio<u64>,
    #[serde(with = "serde_ratio", default = "default_mu")]
    pub mu: Ratio<u64>,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    /// Per-stage engine round cap.
    #[serde(default = "default_round_cap")]
    pub round_cap: u32,
    #[serde(default = "default_bandwidth")]
    pub bandwidth_factor: u32,
    #[serde(default)]
    pub parallel: bool,
}

impl PipelineConfig {
    pub fn new(alpha: u32) -> Self {
        PipelineConfig {
            alpha,
            epsilon: default_epsilon(),
            mu: default_mu(),
            mode: Mode::Standard,
            round_cap: default_round_cap(),
            bandwidth_factor: default_bandwidth(),
            parallel: false,
        }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig { bandwidth_factor: self.bandwidth_factor, round_cap: self.round_cap, parallel: self.parallel }
    }

    /// Decomposition parameters for an `n`-node input. Fast mode raises
    /// the peeling threshold to `max(ceil(sqrt(log2 n)), 2α+1)`.
    pub fn decomp_config(&self, n: usize) -> DecompConfig {
        let threshold_override = match self.mode {
            Mode::Standard => None,
            Mode::Fast => Some(fast_threshold(n, self.alpha)),
        };
        DecompConfig { alpha: self.alpha, epsilon: self.epsilon, threshold_override }
    }

    fn validate(&self, n: usize) -> Result<(), PipelineError> {
        let bad = |msg: String| Err(PipelineError::Config(msg));
        if self.alpha == 0 {
            return bad("alpha must be positive".into());
        }
        if self.epsilon <= Ratio::from_integer(0) {
            return bad("epsilon must be positive".into());
        }
        if self.mu <= Ratio::one() {
            return bad("mu must be greater than 1".into());
        }
        if self.round_cap == 0 {
            return bad("round cap must be positive".into());
        }
        if self.mode == Mode::Fast && n < 2 {
            return bad("fast mode needs at least 2 nodes".into());
        }
        Ok(())
    }
}

/// `max(ceil(sqrt(log2 n)), 2α + 1)`, computed in integers:
/// `s ≥ sqrt(log2 n)` iff `s² ≥ ceil(log2 n)`.
pub fn fast_threshold(n: usize, alpha: u32) -> u32 {
    let ceil_log2 = if n <= 1 { 0 } else { usize::BITS - (n - 1).leading_zeros() };
    let mut s = 0u32;
    while s * s < ceil_log2 {
        s += 1;
    }
    s.max(2 * alpha + 1)
}

/// Proven worst-case ratio of this implementation in standard mode:
/// `μ · (t + 1)²` with `t = ceil((2+ε)α)`. One factor `t + 1` bounds
/// the optimal cover by `(t+1)|M|`, the other bounds the set-cover
/// frequency by `f + 1 ≤ t + 1`.
pub fn certified_ratio_bound(alpha: u32, epsilon: Ratio<u64>, mu: Ratio<u64>) -> Ratio<u64> {
    let t = DecompConfig { alpha, epsilon, threshold_override: None }.base_threshold();
    let t1 = Ratio::from_integer(u64::from(t) + 1);
    mu * t1 * t1
}

#[derive(Debug, Error, Clone)]
pub enum PipelineError {
    #[error("invalid pipeline config: {0}")]
    Config(String),
    #[error("decomposition stage: {0}")]
    Decomposition(#[source] DecompError),
    #[error("set-cover stage: {0}")]
    SetCover(#[source] SetCoverError),
}

impl PipelineError {
    pub fn stage(&self) -> &'static str {
        match self {
            PipelineError::Config(_) => "config",
            PipelineError::Decomposition(_) => "decomposition",
            PipelineError::SetCover(_) => "set-cover",
        }
    }

    fn sim_error(&self) -> Option<&SimError> {
        match self {
            PipelineError::Decomposition(DecompError::Sim(e)) | PipelineError::SetCover(SetCoverError::Sim(e)) => {
                Some(e)
            }
            _ => None,
        }
    }

    /// Process exit code: 3 promise violation, 4 round cap, 5 bandwidth,
    /// 1 anything else. (2 is reserved for input parse errors.)
    pub fn exit_code(&self) -> i32 {
        if matches!(self, PipelineError::Decomposition(DecompError::PromiseViolated { .. })) {
            return 3;
        }
        match self.sim_error() {
            Some(SimError::RoundCap { .. }) => 4,
            Some(SimError::Bandwidth { .. }) => 5,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRounds {
    pub peel: u32,
    pub orient: u32,
    pub instance: u32,
    pub setcover: u32,
}

impl StageRounds {
    pub fn total(&self) -> u32 {
        self.peel + self.orient + self.instance + self.setcover
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MdsResult {
    pub dominating_set: Vec<NodeId>,
    pub size: usize,
    pub threshold: u32,
    pub forests: u32,
    pub levels: u32,
    pub frequency: usize,
    pub max_set_size: usize,
    pub setcover_phases: u32,
    pub rounds: StageRounds,
    pub total_rounds: u32,
    pub max_message_bits: u32,
    pub budget_bits: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageTraces {
    pub peel: RoundTrace,
    pub orient: RoundTrace,
    pub setcover: RoundTrace,
}

impl StageTraces {
    pub fn all(&self) -> [&RoundTrace; 3] {
        [&self.peel, &self.orient, &self.setcover]
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub result: MdsResult,
    pub decomposition: ForestDecomposition,
    pub instance: CoverInstance,
    pub cover: CoverResult,
    pub traces: StageTraces,
}

pub fn run_pipeline(g: &Graph, cfg: &PipelineConfig) -> Result<PipelineOutcome, PipelineError> {
    cfg.validate(g.node_count())?;
    let sim_cfg = cfg.sim_config();
    let decomp = decompose(g, &cfg.decomp_config(g.node_count()), sim_cfg).map_err(PipelineError::Decomposition)?;
    let fd = decomp.decomposition;
    let instance = CoverInstance::build(&fd);
    let cover = setcover::solve(g, &instance, cfg.mu, sim_cfg).map_err(PipelineError::SetCover)?;

    let traces = StageTraces { peel: decomp.peel_trace, orient: decomp.orient_trace, setcover: cover.trace.clone() };
    let rounds = StageRounds {
        peel: traces.peel.rounds_executed,
        orient: traces.orient.rounds_executed,
        instance: 0,
        setcover: traces.setcover.rounds_executed,
    };
    let result = MdsResult {
        dominating_set: cover.chosen.clone(),
        size: cover.size,
        threshold: fd.threshold,
        forests: fd.forest_count,
        levels: fd.max_level(),
        frequency: instance.frequency,
        max_set_size: instance.max_set_size,
        setcover_phases: cover.phases,
        total_rounds: rounds.total(),
        rounds,
        max_message_bits: traces.all().iter().map(|t| t.max_bits).max().unwrap_or(0),
        budget_bits: budget(g.node_count(), cfg.bandwidth_factor),
    };
    Ok(PipelineOutcome { result, decomposition: fd, instance, cover, traces })
}

/// One `run` record: the result plus the comparison against an exact
/// optimum when one is available.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub graph_id: String,
    pub n: usize,
    pub m: usize,
    pub alpha: u32,
    pub mode: Mode,
    pub valid: bool,
    pub opt: Option<usize>,
    pub ratio: Option<f64>,
    pub certified_bound: Option<f64>,
    pub result: MdsResult,
}

impl RunReport {
    pub fn new(
        graph_id: &str,
        g: &Graph,
        cfg: &PipelineConfig,
        result: MdsResult,
        valid: bool,
        opt: Option<usize>,
    ) -> Self {
        let ratio = opt.map(|o| if o == 0 { 1.0 } else { result.size as f64 / o as f64 });
        let certified_bound = (cfg.mode == Mode::Standard)
            .then(|| certified_ratio_bound(cfg.alpha, cfg.epsilon, cfg.mu).to_f64().unwrap_or(f64::INFINITY));
        RunReport {
            graph_id: graph_id.to_string(),
            n: g.node_count(),
            m: g.edge_count(),
            alpha: cfg.alpha,
            mode: cfg.mode,
            valid,
            opt,
            ratio,
            certified_bound,
            result,
        }
    }

    pub const CSV_HEADER: [&'static str; 10] =
        ["graph_id", "n", "m", "alpha", "mode", "size", "opt", "ratio", "rounds", "max_bits"];

    pub fn csv_record(&self) -> [String; 10] {
        [
            self.graph_id.clone(),
            self.n.to_string(),
            self.m.to_string(),
            self.alpha.to_string(),
            self.mode.as_str().to_string(),
            self.result.size.to_string(),
            self.opt.map(|o| o.to_string()).unwrap_or_default(),
            self.ratio.map(|r| format!("{r:.4}")).unwrap_or_default(),
            self.result.total_rounds.to_string(),
            self.result.max_message_bits.to_string(),
        ]
    }

    /// Header line plus this record.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(Self::CSV_HEADER).expect("in-memory write");
        w.write_record(self.csv_record()).expect("in-memory write");
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, GraphSpec};
    use crate::oracle::{exact_mds, is_dominating, OracleBudget};

    fn gen(spec: GraphSpec) -> Graph {
        generate(&spec).unwrap().graph
    }

    #[test]
    fn certified_bounds() {
        let two = Ratio::from_integer(2);
        let one = Ratio::one();
        assert_eq!(certified_ratio_bound(1, one, two), Ratio::from_integer(32));
        assert_eq!(certified_ratio_bound(2, one, two), Ratio::from_integer(98));
        assert_eq!(certified_ratio_bound(3, one, two), Ratio::from_integer(200));
        // quadratic growth in alpha
        for alpha in 1..50u32 {
            let b = certified_ratio_bound(alpha, one, two).to_integer();
            let a = u64::from(alpha);
            assert!(b >= 18 * a * a && b <= 32 * a * a, "{alpha}: {b}");
        }
    }

    #[test]
    fn fast_thresholds() {
        assert_eq!(fast_threshold(16, 1), 3);
        assert_eq!(fast_threshold(1 << 16, 1), 4);
        assert_eq!(fast_threshold(1 << 17, 1), 5);
        assert_eq!(fast_threshold(4096, 2), 5);
        assert_eq!(fast_threshold(2, 1), 3);
    }

    #[test]
    fn star_gives_center() {
        let g = gen(GraphSpec::Star { n: 6 });
        let out = run_pipeline(&g, &PipelineConfig::new(1)).unwrap();
        assert_eq!(out.result.dominating_set, vec![0]);
        assert_eq!(out.result.rounds.instance, 0);
        assert_eq!(
            out.result.total_rounds,
            out.result.rounds.peel + out.result.rounds.orient + out.result.rounds.setcover
        );
    }

    #[test]
    fn edgeless_takes_everything() {
        let g = Graph::edgeless(7);
        for alpha in 1..4 {
            let out = run_pipeline(&g, &PipelineConfig::new(alpha)).unwrap();
            assert_eq!(out.result.dominating_set, (0..7).collect::<Vec<_>>());
            assert_eq!(out.result.total_rounds, 0);
        }
    }

    #[test]
    fn forest_union_18() {
        let g = gen(GraphSpec::ForestUnion { n: 18, alpha: 2, seed: 11 });
        let out = run_pipeline(&g, &PipelineConfig::new(2)).unwrap();
        assert!(is_dominating(&g, &out.result.dominating_set).unwrap());
        let opt = exact_mds(&g, &OracleBudget::default()).unwrap().len();
        assert!(out.result.size >= opt);
        assert!(out.result.size <= 98 * opt);
    }

    #[test]
    fn promise_violation_maps_to_exit_code_3() {
        let g = gen(GraphSpec::Complete { n: 5 });
        let err = run_pipeline(&g, &PipelineConfig::new(1)).unwrap_err();
        assert_eq!(err.stage(), "decomposition");
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn round_cap_and_bandwidth_exit_codes() {
        let g = gen(GraphSpec::ForestUnion { n: 300, alpha: 2, seed: 1 });
        let mut cfg = PipelineConfig::new(2);
        cfg.round_cap = 1;
        let err = run_pipeline(&g, &cfg).unwrap_err();
        assert_eq!(err.exit_code(), 4, "{err}");
        let mut cfg = PipelineConfig::new(2);
        cfg.bandwidth_factor = 0;
        let err = run_pipeline(&g, &cfg).unwrap_err();
        assert_eq!(err.exit_code(), 5, "{err}");
    }

    #[test]
    fn config_validation() {
        let g = Graph::edgeless(1);
        assert!(matches!(run_pipeline(&g, &PipelineConfig::new(0)), Err(PipelineError::Config(_))));
        let fast = PipelineConfig::new(1).with_mode(Mode::Fast);
        assert!(matches!(run_pipeline(&g, &fast), Err(PipelineError::Config(_))));
        let mut low_mu = PipelineConfig::new(1);
        low_mu.mu = Ratio::one();
        assert!(matches!(run_pipeline(&g, &low_mu), Err(PipelineError::Config(_))));
    }

    #[test]
    fn fast_mode_is_valid() {
        let g = gen(GraphSpec::ForestUnion { n: 2000, alpha: 2, seed: 3 });
        let out = run_pipeline(&g, &PipelineConfig::new(2).with_mode(Mode::Fast)).unwrap();
        assert!(is_dominating(&g, &out.result.dominating_set).unwrap());
        assert!(out.result.forests <= fast_threshold(2000, 2));
        out.decomposition.validate(&g).unwrap();
    }

    #[test]
    fn config_json_defaults() {
        let cfg: PipelineConfig = serde_json::from_str(r#"{"alpha": 2, "epsilon": "1/2", "mu": 3}"#).unwrap();
        assert_eq!(cfg.epsilon, Ratio::new(1, 2));
        assert_eq!(cfg.mu, Ratio::from_integer(3));
        assert_eq!(cfg.mode, Mode::Standard);
        assert_eq!(cfg.bandwidth_factor, 4);
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains(r#""epsilon":"1/2""#), "{text}");
    }

    #[test]
    fn report_csv() {
        let g = gen(GraphSpec::Star { n: 6 });
        let cfg = PipelineConfig::new(1);
        let out = run_pipeline(&g, &cfg).unwrap();
        let report = RunReport::new("star-6", &g, &cfg, out.result, true, Some(1));
        let csv = report.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("graph_id,n,m,alpha,mode,size,opt,ratio,rounds,max_bits"));
        assert!(lines.next().unwrap().starts_with("star-6,6,5,1,standard,1,1,1.0000,"));
        assert_eq!(report.certified_bound, Some(32.0));
    }
}
