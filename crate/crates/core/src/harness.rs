//! Batch experiments: scaling tables over many fixtures and the full
//! check suite on a single graph.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cover::SetSystem;
use crate::graph::{generate, Graph, GraphSpec, NodeId};
use crate::oracle::{exact_mds, exact_setcover, existence_bound_check, is_dominating, OracleBudget, OracleCache};
use crate::pipeline::{
    certified_ratio_bound, run_pipeline, Mode, PipelineConfig, PipelineError, PipelineOutcome, RunReport,
};
use crate::setcover::{audit, solve_set_system};

fn default_modes() -> Vec<Mode> {
    vec![Mode::Standard]
}

fn default_true() -> bool {
    true
}

fn default_oracle_nodes() -> usize {
    OracleBudget::default().max_nodes
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OutputPaths {
    #[serde(default)]
    pub csv: Option<String>,
    #[serde(default)]
    pub json: Option<String>,
}

/// Everything a bench run depends on. Serializing it and running it again
/// reproduces the same table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub specs: Vec<GraphSpec>,
    pub pipeline: PipelineConfig,
    /// Use each fixture's certified arboricity instead of `pipeline.alpha`.
    #[serde(default = "default_true")]
    pub alpha_from_certificate: bool,
    #[serde(default = "default_modes")]
    pub modes: Vec<Mode>,
    #[serde(default)]
    pub oracle: bool,
    #[serde(default = "default_oracle_nodes")]
    pub oracle_max_nodes: usize,
    #[serde(default)]
    pub outputs: OutputPaths,
}

impl ExperimentConfig {
    pub fn new(specs: Vec<GraphSpec>, pipeline: PipelineConfig) -> Self {
        ExperimentConfig {
            specs,
            pipeline,
            alpha_from_certificate: true,
            modes: default_modes(),
            oracle: false,
            oracle_max_nodes: default_oracle_nodes(),
            outputs: OutputPaths::default(),
        }
    }

    pub fn oracle_budget(&self) -> OracleBudget {
        OracleBudget {
            max_nodes: self.oracle_max_nodes,
            max_universe: self.oracle_max_nodes,
            ..OracleBudget::default()
        }
    }
}

/// Exact optimum if the graph is within budget. Uses the cache directory
/// from the environment when set.
pub fn optimum(g: &Graph, budget: &OracleBudget) -> Option<Vec<NodeId>> {
    if g.node_count() > budget.max_nodes {
        return None;
    }
    match OracleCache::from_env() {
        Some(cache) => cache.exact_mds(g, budget).ok(),
        None => exact_mds(g, budget).ok(),
    }
}

/// Runs the pipeline and builds its report. With an oracle budget the
/// report includes the exact optimum when the graph fits.
pub fn run_and_report(
    graph_id: &str,
    g: &Graph,
    cfg: &PipelineConfig,
    oracle: Option<&OracleBudget>,
) -> Result<(RunReport, PipelineOutcome), PipelineError> {
    let outcome = run_pipeline(g, cfg)?;
    let valid = is_dominating(g, &outcome.result.dominating_set).unwrap_or(false);
    let opt = oracle.and_then(|b| optimum(g, b)).map(|m| m.len());
    let report = RunReport::new(graph_id, g, cfg, outcome.result.clone(), valid, opt);
    Ok((report, outcome))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub graph_id: String,
    pub kind: String,
    pub n: usize,
    pub m: usize,
    pub alpha: u32,
    pub mode: Mode,
    pub size: Option<usize>,
    pub valid: Option<bool>,
    pub opt: Option<usize>,
    pub ratio: Option<f64>,
    pub certified_bound: Option<f64>,
    pub rounds: Option<u32>,
    pub rounds_per_log2n: Option<f64>,
    pub levels: Option<u32>,
    pub forests: Option<u32>,
    pub max_bits: Option<u32>,
    pub budget_bits: Option<u32>,
    pub exit_code: i32,
    pub error: String,
}

impl BenchRow {
    pub const HEADER: [&'static str; 19] = [
        "graph_id",
        "kind",
        "n",
        "m",
        "alpha",
        "mode",
        "size",
        "valid",
        "opt",
        "ratio",
        "certified_bound",
        "rounds",
        "rounds_per_log2n",
        "levels",
        "forests",
        "max_bits",
        "budget_bits",
        "exit_code",
        "error",
    ];

    fn record(&self) -> Vec<String> {
        fn opt<T: ToString>(v: &Option<T>) -> String {
            v.as_ref().map(ToString::to_string).unwrap_or_default()
        }
        fn float(v: Option<f64>) -> String {
            v.map(|x| format!("{x:.4}")).unwrap_or_default()
        }
        vec![
            self.graph_id.clone(),
            self.kind.clone(),
            self.n.to_string(),
            self.m.to_string(),
            self.alpha.to_string(),
            self.mode.as_str().to_string(),
            opt(&self.size),
            opt(&self.valid),
            opt(&self.opt),
            float(self.ratio),
            float(self.certified_bound),
            opt(&self.rounds),
            float(self.rounds_per_log2n),
            opt(&self.levels),
            opt(&self.forests),
            opt(&self.max_bits),
            opt(&self.budget_bits),
            self.exit_code.to_string(),
            self.error.clone(),
        ]
    }

    fn sort_key(&self) -> (usize, &str, Mode) {
        (self.n, &self.graph_id, self.mode)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchTable {
    pub rows: Vec<BenchRow>,
}

impl BenchTable {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(BenchRow::HEADER).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.record()).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    /// Largest `rounds / log2 n` among successful rows.
    pub fn max_rounds_per_log2n(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.rounds_per_log2n).reduce(f64::max)
    }

    pub fn failures(&self) -> impl Iterator<Item = &BenchRow> {
        self.rows.iter().filter(|r| r.exit_code != 0)
    }
}

fn bench_one(spec: &GraphSpec, mode: Mode, exp: &ExperimentConfig) -> BenchRow {
    let mut row = BenchRow {
        graph_id: spec.id(),
        kind: spec.kind().to_string(),
        n: 0,
        m: 0,
        alpha: exp.pipeline.alpha,
        mode,
        size: None,
        valid: None,
        opt: None,
        ratio: None,
        certified_bound: None,
        rounds: None,
        rounds_per_log2n: None,
        levels: None,
        forests: None,
        max_bits: None,
        budget_bits: None,
        exit_code: 0,
        error: String::new(),
    };
    let generated = match generate(spec) {
        Ok(g) => g,
        Err(e) => {
            row.exit_code = 2;
            row.error = e.to_string();
            return row;
        }
    };
    let g = &generated.graph;
    row.n = g.node_count();
    row.m = g.edge_count();
    let mut cfg = exp.pipeline.clone().with_mode(mode);
    if exp.alpha_from_certificate {
        cfg.alpha = (generated.certificate.bound() as u32).max(1);
    }
    row.alpha = cfg.alpha;
    let budget = exp.oracle_budget();
    match run_and_report(&row.graph_id, g, &cfg, exp.oracle.then_some(&budget)) {
        Ok((report, _)) => {
            let r = &report.result;
            row.size = Some(r.size);
            row.valid = Some(report.valid);
            row.opt = report.opt;
            row.ratio = report.ratio;
            row.certified_bound = report.certified_bound;
            row.rounds = Some(r.total_rounds);
            row.rounds_per_log2n = (row.n >= 2).then(|| f64::from(r.total_rounds) / (row.n as f64).log2());
            row.levels = Some(r.levels);
            row.forests = Some(r.forests);
            row.max_bits = Some(r.max_message_bits);
            row.budget_bits = Some(r.budget_bits);
        }
        Err(e) => {
            row.exit_code = e.exit_code();
            row.error = e.to_string();
        }
    }
    row
}

/// One row per (spec, mode). Fixtures run in parallel; rows come out
/// sorted by node count, then graph id, then mode. A failing fixture
/// becomes a row with its exit code and message.
pub fn bench(exp: &ExperimentConfig) -> BenchTable {
    let jobs: Vec<(&GraphSpec, Mode)> = exp.specs.iter().flat_map(|s| exp.modes.iter().map(move |&m| (s, m))).collect();
    let mut rows: Vec<BenchRow> = jobs.into_par_iter().map(|(s, m)| bench_one(s, m, exp)).collect();
    rows.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    rows.dedup_by(|a, b| a.sort_key() == b.sort_key());
    BenchTable { rows }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.to_string(), passed, detail: detail.into() });
    }
}

/// Runs the pipeline twice on `g` and checks every structural invariant
/// of the result. Oracle comparisons are added when the graph is within
/// `budget`. Pipeline failure is returned as an error.
pub fn verify(g: &Graph, cfg: &PipelineConfig, budget: &OracleBudget) -> Result<VerifyReport, PipelineError> {
    let out = run_pipeline(g, cfg)?;
    let again = run_pipeline(g, cfg)?;
    let r = &out.result;
    let fd = &out.decomposition;
    let mut report = VerifyReport { checks: Vec::new() };

    let dominating = is_dominating(g, &r.dominating_set).unwrap_or(false);
    report.push("dominating", dominating, format!("size {}", r.size));

    let decomp = fd.validate(g);
    report.push(
        "forest-decomposition",
        decomp.is_ok(),
        decomp.err().unwrap_or_else(|| format!("{} forests", fd.forest_count)),
    );
    report.push(
        "forest-count",
        fd.forest_count <= fd.threshold,
        format!("{} forests, threshold {}", fd.forest_count, fd.threshold),
    );
    report.push(
        "frequency",
        r.frequency <= fd.forest_count as usize + 1,
        format!("frequency {}, forests {}", r.frequency, fd.forest_count),
    );

    let over: Vec<String> = out
        .traces
        .all()
        .iter()
        .filter(|t| !t.within_budget())
        .map(|t| format!("{} > {}", t.max_bits, t.budget_bits))
        .collect();
    report.push(
        "bandwidth",
        over.is_empty(),
        format!("max {} of {} bits {}", r.max_message_bits, r.budget_bits, over.join(", ")),
    );

    let sys = out.instance.to_set_system();
    let dual = audit(&sys, &out.cover, cfg.mu);
    report.push("dual-audit", dual.holds(), format!("{dual:?}"));

    let same = again.result == out.result && again.traces == out.traces;
    report.push("determinism", same, "two runs compared");

    if let Some(mds) = optimum(g, budget) {
        let opt = mds.len();
        let existence = existence_bound_check(g, fd, &mds);
        report.push(
            "existence-bound",
            existence.passed(),
            format!("witness {} for optimum {}", existence.witness.len(), existence.mds_size),
        );
        if cfg.mode == Mode::Standard {
            let bound = certified_ratio_bound(cfg.alpha, cfg.epsilon, cfg.mu);
            let ok = num_rational::Ratio::from_integer(r.size as u64)
                <= bound * num_rational::Ratio::from_integer(opt as u64);
            report.push("approximation", ok, format!("{} vs optimum {} (bound {})", r.size, opt, bound));
        }
        report.push("weak-duality", dual.weak_duality(cfg.mu, opt), format!("optimum {opt}"));
        setcover_checks(&mut report, &sys, cfg, budget, r.frequency);
    }
    Ok(report)
}

fn setcover_checks(
    report: &mut VerifyReport,
    sys: &SetSystem,
    cfg: &PipelineConfig,
    budget: &OracleBudget,
    freq: usize,
) {
    let Ok(exact) = exact_setcover(sys, budget) else {
        return;
    };
    let sim = cfg.sim_config();
    match solve_set_system(sys, cfg.mu, sim) {
        Ok(res) => report.push(
            "setcover-guarantee",
            res.size <= 2 * freq * exact.size,
            format!("{} vs exact {} (frequency {})", res.size, exact.size, freq),
        ),
        Err(e) => report.push("setcover-guarantee", false, e.to_string()),
    }
}
