use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod config;
mod run;

use config::{Algorithm, RunConfig, Tracking};
use run::CliError;

/// Greedy edge rewiring for group fairness in PageRank.
#[derive(Parser)]
#[command(name = "fairrank", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan a budget of edge rewirings that raise the group's PageRank mass.
    Rewire(RewireArgs),
    /// Report the group's PageRank mass and whether it falls below the threshold.
    Audit(AuditArgs),
    /// Correlate exact gains with their tau-free scores over random rewirings.
    Correlate(CorrelateArgs),
    /// Dump per-node root frequencies of sampled forests as CSV.
    SampleDebug(SampleDebugArgs),
    /// Per-round Wasserstein distance between in-group and out-group personalized mass.
    PprEval(PprEvalArgs),
    /// Run a TOML configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// Edge list: `src dst [weight]` per line.
    #[arg(long)]
    graph: PathBuf,
    /// One node label per line.
    #[arg(long)]
    group: PathBuf,
    /// Treat every edge as a pair of opposite arcs.
    #[arg(long)]
    symmetrize: bool,
    /// Fairness threshold; defaults to |S|/n.
    #[arg(long)]
    phi: Option<f64>,
    #[arg(long, default_value_t = config::DEFAULT_ALPHA)]
    alpha: f64,
    /// Largest node count for dense computations.
    #[arg(long)]
    dense_cap: Option<usize>,
    /// Worker threads; results depend on this count.
    #[arg(long, env = "FAIRRANK_WORKERS")]
    workers: Option<usize>,
    /// Generated and printed when a randomized command runs without one.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct Sampling {
    /// Forests per estimate.
    #[arg(long, conflicts_with_all = ["eps", "delta"])]
    psi: Option<usize>,
    /// Additive accuracy of each estimate; needs --delta.
    #[arg(long, requires = "delta")]
    eps: Option<f64>,
    /// Failure probability of each estimate; needs --eps.
    #[arg(long, requires = "eps")]
    delta: Option<f64>,
}

#[derive(Args)]
struct RewireArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    sampling: Sampling,
    #[arg(long, value_parser = parse_rewiring_algo)]
    algo: Algorithm,
    #[arg(long, default_value_t = config::DEFAULT_BUDGET)]
    budget: usize,
    /// Source node label for exactv and fastv.
    #[arg(long)]
    source: Option<String>,
    #[arg(long, value_enum, default_value_t = Tracking::Auto)]
    tracking: Tracking,
    #[arg(long)]
    out_plan: Option<PathBuf>,
    #[arg(long)]
    out_summary: Option<PathBuf>,
    #[arg(long)]
    results: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    common: Common,
    /// Forests sampled when the graph exceeds the dense cap.
    #[command(flatten)]
    sampling: Sampling,
    #[arg(long)]
    out_report: Option<PathBuf>,
    /// Directory for `pi.csv` and `aux.csv`.
    #[arg(long)]
    dump_pi: Option<PathBuf>,
}

#[derive(Args)]
struct CorrelateArgs {
    #[command(flatten)]
    common: Common,
    /// Number of sampled rewirings.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    out_report: Option<PathBuf>,
    #[arg(long)]
    results: Option<PathBuf>,
}

#[derive(Args)]
struct SampleDebugArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    sampling: Sampling,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PprEvalArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    sampling: Sampling,
    #[arg(long, value_parser = parse_personalized_algo, default_value = "exactv")]
    algo: Algorithm,
    #[arg(long, default_value_t = config::DEFAULT_BUDGET)]
    budget: usize,
    /// Share of nodes sampled as sources.
    #[arg(long, default_value_t = config::DEFAULT_SOURCE_FRACTION)]
    fraction: f64,
    #[arg(long, value_enum, default_value_t = Tracking::Auto)]
    tracking: Tracking,
    #[arg(long)]
    results: Option<PathBuf>,
    #[arg(long)]
    out_summary: Option<PathBuf>,
}

fn parse_rewiring_algo(s: &str) -> Result<Algorithm, String> {
    match <Algorithm as clap::ValueEnum>::from_str(s, false) {
        Ok(a) if a.is_rewiring() => Ok(a),
        _ => Err("expected one of exact, exactv, fast, fastv, random".into()),
    }
}

fn parse_personalized_algo(s: &str) -> Result<Algorithm, String> {
    match <Algorithm as clap::ValueEnum>::from_str(s, false) {
        Ok(a) if a.is_personalized() => Ok(a),
        _ => Err("expected exactv or fastv".into()),
    }
}

impl Common {
    fn into_config(self, algorithm: Algorithm) -> RunConfig {
        let mut c = RunConfig::new(self.graph, self.group, algorithm);
        c.symmetrize = self.symmetrize;
        c.phi = self.phi;
        c.alpha = self.alpha;
        c.dense_cap = self.dense_cap;
        c.workers = self.workers;
        c.seed = self.seed;
        c
    }
}

impl Sampling {
    fn apply(self, c: &mut RunConfig) {
        c.psi = self.psi;
        c.eps = self.eps;
        c.delta = self.delta;
    }
}

fn build_config(command: Command) -> Result<RunConfig, CliError> {
    Ok(match command {
        Command::Rewire(a) => {
            let mut c = a.common.into_config(a.algo);
            a.sampling.apply(&mut c);
            c.budget = a.budget;
            c.source = a.source;
            c.tracking = a.tracking;
            c.outputs.plan = a.out_plan;
            c.outputs.summary = a.out_summary;
            c.outputs.results = a.results;
            c
        }
        Command::Audit(a) => {
            let mut c = a.common.into_config(Algorithm::Audit);
            a.sampling.apply(&mut c);
            c.outputs.report = a.out_report;
            c.outputs.dump_dir = a.dump_pi;
            c
        }
        Command::Correlate(a) => {
            let mut c = a.common.into_config(Algorithm::Correlate);
            c.sample_size = a.samples;
            c.outputs.report = a.out_report;
            c.outputs.results = a.results;
            c
        }
        Command::SampleDebug(a) => {
            let mut c = a.common.into_config(Algorithm::SampleDebug);
            a.sampling.apply(&mut c);
            c.outputs.report = a.out;
            c
        }
        Command::PprEval(a) => {
            let mut c = a.common.into_config(Algorithm::PprEval);
            a.sampling.apply(&mut c);
            c.strategy = Some(a.algo);
            c.budget = a.budget;
            c.source_fraction = Some(a.fraction);
            c.tracking = a.tracking;
            c.outputs.results = a.results;
            c.outputs.summary = a.out_summary;
            c
        }
        Command::Run { config } => {
            let text = std::fs::read_to_string(&config).map_err(|e| {
                CliError::Config(format!("cannot read config {}: {e}", config.display()))
            })?;
            toml::from_str(&text)
                .map_err(|e| CliError::Config(format!("invalid config {}: {e}", config.display())))?
        }
    })
}

/// Fills in the seed and worker count so the echoed config reproduces the run.
fn resolve(mut config: RunConfig) -> RunConfig {
    if config.seed.is_none() && config.algorithm.is_randomized() {
        let seed: u64 = rand::random();
        eprintln!("generated seed {seed}");
        config.seed = Some(seed);
    }
    if config.workers.is_none() {
        config.workers = Some(
            std::env::var("FAIRRANK_WORKERS")
                .ok()
                .and_then(|v| v.parse().ok())
                .unwrap_or(1),
        );
    }
    config
}

fn execute(command: Command) -> Result<String, CliError> {
    let config = build_config(command)?;
    config.validate().map_err(CliError::Config)?;
    let config = resolve(config);
    let workers = config.workers.unwrap_or(1);
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .map_err(|e| CliError::Output(format!("cannot start worker pool: {e}")))?;
    run::run(&config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let report = serde_json::json!({
                "error": { "category": e.category(), "message": e.to_string() }
            });
            eprintln!("{report}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
