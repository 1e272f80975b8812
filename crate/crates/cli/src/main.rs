use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use congest_mds::cover::SetSystem;
use congest_mds::graph::{generate, read_graph, write_graph, Graph, GraphSpec};
use congest_mds::harness::{bench, run_and_report, verify, ExperimentConfig};
use congest_mds::oracle::{exact_mds, exact_setcover, OracleBudget, OracleCache, CACHE_ENV};
use congest_mds::params::parse_ratio;
use congest_mds::pipeline::{Mode, PipelineConfig, PipelineError};

/// Deterministic CONGEST simulation of a dominating-set approximation
/// for graphs of bounded arboricity.
///
/// Exit codes: 0 success, 1 other failure, 2 unreadable input or config,
/// 3 arboricity promise violated, 4 round cap reached, 5 bandwidth
/// exceeded.
#[derive(Parser)]
#[command(name = "congest-mds", version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a fixture graph as an edge list.
    Generate(GenerateArgs),
    /// Run the pipeline on a graph file and print the result as JSON.
    Run(RunArgs),
    /// Run every fixture of an experiment config and emit a CSV table.
    Bench(BenchArgs),
    /// Run the invariant and oracle checks on a graph file.
    Verify(VerifyArgs),
    /// Exact minimum dominating set or set cover of a small input.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Path,
    Cycle,
    Star,
    Tree,
    Grid,
    Complete,
    SubdividedClique,
    ForestUnion,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long)]
    alpha: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (stdout when omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Also write the arboricity certificate as JSON.
    #[arg(long)]
    certificate: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    /// JSON pipeline config; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Declared arboricity bound.
    #[arg(long)]
    alpha: Option<u32>,
    /// Peeling slack, e.g. 1, 1/2 or 0.5.
    #[arg(long)]
    epsilon: Option<String>,
    /// Dual growth factor, greater than 1.
    #[arg(long)]
    mu: Option<String>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
    /// Round cap applied to each stage.
    #[arg(long)]
    round_cap: Option<u32>,
    #[arg(long)]
    bandwidth_factor: Option<u32>,
    /// Execute node steps on a thread pool (same results).
    #[arg(long)]
    parallel: bool,
}

#[derive(Args)]
struct RunArgs {
    graph: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Compare against the exact optimum when the graph is small enough.
    #[arg(long)]
    oracle: bool,
    /// Graph id used in the report (defaults to the file stem).
    #[arg(long)]
    id: Option<String>,
    /// Write the result JSON here instead of stdout.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Write a CSV header and row.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write the forest decomposition as text.
    #[arg(long)]
    decomposition: Option<PathBuf>,
    /// Write the set-cover instance as JSON.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Write the per-stage round traces as JSON.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment config (JSON).
    config: PathBuf,
    /// CSV output path; overrides the config's path, stdout if neither.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    graph: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long, default_value_t = 22)]
    max_nodes: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleProblem {
    Mds,
    Setcover,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(value_enum)]
    problem: OracleProblem,
    /// Graph file for `mds`; JSON `{"universe": .., "sets": [..]}` for `setcover`.
    input: PathBuf,
    #[arg(long, default_value_t = 22)]
    max_nodes: usize,
    #[arg(long, default_value_t = 60)]
    time_cap_secs: u64,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }

    fn parse(message: impl Into<String>) -> Self {
        Failure::new(2, message)
    }

    fn io(path: &Path, err: std::io::Error) -> Self {
        Failure::new(1, format!("{}: {err}", path.display()))
    }
}

type CliResult = Result<(), Failure>;

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> CliResult {
    fs::write(path, text).map_err(|e| Failure::io(path, e))
}

fn emit(path: Option<&Path>, text: &str) -> CliResult {
    match path {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_graph(path: &Path) -> Result<Graph, Failure> {
    let text = read_text(path)?;
    read_graph(&text).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    text
}

fn require(value: Option<usize>, name: &str) -> Result<usize, Failure> {
    value.ok_or_else(|| Failure::parse(format!("--{name} is required for this kind")))
}

fn cmd_generate(args: GenerateArgs) -> CliResult {
    let spec = match args.kind {
        Kind::Path => GraphSpec::Path { n: require(args.n, "n")? },
        Kind::Cycle => GraphSpec::Cycle { n: require(args.n, "n")? },
        Kind::Star => GraphSpec::Star { n: require(args.n, "n")? },
        Kind::Tree => GraphSpec::Tree { n: require(args.n, "n")?, seed: args.seed },
        Kind::Grid => GraphSpec::Grid { rows: require(args.rows, "rows")?, cols: require(args.cols, "cols")? },
        Kind::Complete => GraphSpec::Complete { n: require(args.n, "n")? },
        Kind::SubdividedClique => GraphSpec::SubdividedClique { k: require(args.k, "k")? },
        Kind::ForestUnion => {
            GraphSpec::ForestUnion { n: require(args.n, "n")?, alpha: require(args.alpha, "alpha")?, seed: args.seed }
        }
    };
    let generated = generate(&spec).map_err(|e| Failure::parse(e.to_string()))?;
    emit(args.output.as_deref(), &write_graph(&generated.graph))?;
    if let Some(path) = args.certificate {
        write_text(&path, &to_json(&generated.certificate))?;
    }
    Ok(())
}

fn pipeline_config(args: &PipelineArgs) -> Result<PipelineConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => {
            serde_json::from_str(&read_text(path)?).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))?
        }
        None => PipelineConfig::new(args.alpha.ok_or_else(|| Failure::parse("--alpha or --config is required"))?),
    };
    if let Some(alpha) = args.alpha {
        cfg.alpha = alpha;
    }
    if let Some(eps) = &args.epsilon {
        cfg.epsilon = parse_ratio(eps).map_err(Failure::parse)?;
    }
    if let Some(mu) = &args.mu {
        cfg.mu = parse_ratio(mu).map_err(Failure::parse)?;
    }
    if let Some(mode) = args.mode {
        cfg.mode = mode;
    }
    if let Some(cap) = args.round_cap {
        cfg.round_cap = cap;
    }
    if let Some(b) = args.bandwidth_factor {
        cfg.bandwidth_factor = b;
    }
    cfg.parallel |= args.parallel;
    Ok(cfg)
}

fn pipeline_failure(err: PipelineError) -> Failure {
    Failure::new(err.exit_code().clamp(1, 255) as u8, err.to_string())
}

fn cmd_run(args: RunArgs) -> CliResult {
    let g = load_graph(&args.graph)?;
    let cfg = pipeline_config(&args.pipeline)?;
    let id = args
        .id
        .clone()
        .unwrap_or_else(|| args.graph.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
    let budget = OracleBudget::default();
    let (report, outcome) = run_and_report(&id, &g, &cfg, args.oracle.then_some(&budget)).map_err(pipeline_failure)?;
    if let Some(path) = &args.decomposition {
        write_text(path, &outcome.decomposition.to_text())?;
    }
    if let Some(path) = &args.instance {
        write_text(path, &to_json(&outcome.instance))?;
    }
    if let Some(path) = &args.trace {
        write_text(path, &to_json(&outcome.traces))?;
    }
    if let Some(path) = &args.csv {
        write_text(path, &report.to_csv())?;
    }
    emit(args.json.as_deref(), &to_json(&report))
}

fn cmd_bench(args: BenchArgs) -> CliResult {
    let text = read_text(&args.config)?;
    let exp: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| Failure::parse(format!("{}: {e}", args.config.display())))?;
    let table = bench(&exp);
    if let Some(path) = &exp.outputs.json {
        write_text(Path::new(path), &to_json(&table))?;
    }
    let csv_path = args.output.or_else(|| exp.outputs.csv.as_ref().map(PathBuf::from));
    emit(csv_path.as_deref(), &table.to_csv())?;
    for row in table.failures() {
        eprintln!("{} ({}): exit {}: {}", row.graph_id, row.mode.as_str(), row.exit_code, row.error);
    }
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> CliResult {
    let g = load_graph(&args.graph)?;
    let cfg = pipeline_config(&args.pipeline)?;
    let budget = OracleBudget { max_nodes: args.max_nodes, max_universe: args.max_nodes, ..OracleBudget::default() };
    let report = verify(&g, &cfg, &budget).map_err(pipeline_failure)?;
    print!("{}", to_json(&report));
    if report.passed() {
        Ok(())
    } else {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        Err(Failure::new(1, format!("failed checks: {}", failed.join(", "))))
    }
}

fn cmd_oracle(args: OracleArgs) -> CliResult {
    let budget = OracleBudget {
        max_nodes: args.max_nodes,
        max_universe: args.max_nodes,
        time_cap: std::time::Duration::from_secs(args.time_cap_secs),
    };
    let oracle_failure = |e: congest_mds::oracle::OracleError| Failure::new(1, e.to_string());
    match args.problem {
        OracleProblem::Mds => {
            let g = load_graph(&args.input)?;
            let mds = match std::env::var_os(CACHE_ENV) {
                Some(dir) => OracleCache::new(dir).exact_mds(&g, &budget),
                None => exact_mds(&g, &budget),
            }
            .map_err(oracle_failure)?;
            print!("{}", to_json(&serde_json::json!({ "size": mds.len(), "dominating_set": mds })));
        }
        OracleProblem::Setcover => {
            let text = read_text(&args.input)?;
            let raw: SetSystem =
                serde_json::from_str(&text).map_err(|e| Failure::parse(format!("{}: {e}", args.input.display())))?;
            let sys = SetSystem::new(raw.universe, raw.sets).map_err(|e| Failure::parse(e.to_string()))?;
            let cover = exact_setcover(&sys, &budget).map_err(oracle_failure)?;
            print!("{}", to_json(&serde_json::json!({ "size": cover.size, "chosen": cover.chosen })));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Run(a) => cmd_run(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Oracle(a) => cmd_oracle(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
