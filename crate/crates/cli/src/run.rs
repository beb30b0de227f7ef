//! Executes a validated [`RunConfig`] and writes its artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use fairrank::dense::{compute_pi, organic_mass, pagerank_vector, ppr_mass, DEFAULT_DENSE_CAP};
use fairrank::eval::{
    fairness_audit, gain_pairs, pearson, plan_rows, ppr_wasserstein_protocol, results_csv,
    spearman, AuditOptions, CorrelationReport, ResultRow,
};
use fairrank::forest::{estimate_aux, root_frequencies, SamplingPlan, WalkGraph};
use fairrank::{
    load_graph, DirectedGraph, ErrorCategory, GroupPartition, StrategyParams, StrategyRegistry,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{Algorithm, Manifest, Resolved, RunConfig, DEFAULT_CORRELATION_SAMPLES,
    DEFAULT_SOURCE_FRACTION};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(fairrank::Error),
    Output(String),
}

impl CliError {
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Core(e) => match e.category() {
                ErrorCategory::Config => "config",
                ErrorCategory::Data => "data",
                ErrorCategory::Algorithm => "algorithm",
                ErrorCategory::Internal => "internal",
            },
            CliError::Output(_) => "internal",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "config" => 2,
            "data" => 3,
            "algorithm" => 4,
            _ => 5,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) | CliError::Output(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<fairrank::Error> for CliError {
    fn from(e: fairrank::Error) -> Self {
        CliError::Core(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

struct Inputs {
    graph: DirectedGraph,
    group: GroupPartition,
}

fn read_input(path: &Path, what: &str) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        CliError::Core(fairrank::Error::Io(std::io::Error::new(
            e.kind(),
            format!("cannot read {what} {}: {e}", path.display()),
        )))
    })
}

fn load_inputs(config: &RunConfig) -> Result<Inputs> {
    let graph = load_graph(&read_input(&config.graph, "graph")?, config.symmetrize)?;
    let group = GroupPartition::parse(&read_input(&config.group, "group")?, &graph, config.phi)?;
    Ok(Inputs { graph, group })
}

fn write_output(path: &Path, body: &str) -> Result<()> {
    fs::write(path, body)
        .map_err(|e| CliError::Output(format!("cannot write {}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| CliError::Output(format!("cannot serialize output: {e}")))
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    manifest: &'a Manifest,
    #[serde(flatten)]
    body: T,
}

/// Runs `config`, whose seed and worker count must already be resolved, and
/// returns the JSON document printed on stdout.
pub fn run(config: &RunConfig) -> Result<String> {
    config.validate().map_err(CliError::Config)?;
    let inputs = load_inputs(config)?;
    let source_id = match &config.source {
        Some(label) => Some(inputs.graph.node_id(label).ok_or_else(|| {
            CliError::Config(format!("source node {label:?} is not in the graph"))
        })?),
        None => None,
    };
    let psi = config.resolved_psi().map_err(CliError::Config)?;
    let dense_cap = config.dense_cap.unwrap_or(DEFAULT_DENSE_CAP);
    let sampled = match config.algorithm {
        Algorithm::Audit => inputs.graph.node_count() > dense_cap,
        _ => config.uses_samples(),
    };
    let manifest = Manifest {
        tool: concat!("fairrank ", env!("CARGO_PKG_VERSION")).into(),
        config: config.clone(),
        resolved: Resolved {
            psi: sampled.then_some(psi),
            source_id,
            nodes: inputs.graph.node_count(),
            arcs: inputs.graph.edge_count(),
            group_size: inputs.group.size(),
            threshold: inputs.group.threshold(),
            in_group_source_mass: (config.algorithm == Algorithm::PprEval)
                .then(|| "organic".to_owned()),
        },
    };
    let seed = config.seed.unwrap_or(0);
    let workers = config.workers.unwrap_or(1);
    let params = StrategyParams {
        alpha: config.alpha,
        budget: config.budget,
        source: source_id,
        samples: psi,
        seed,
        workers,
        dense_cap,
        tracking: config.tracking.into(),
    };
    let Inputs { graph, group } = inputs;
    let out = &config.outputs;

    match config.algorithm {
        a if a.is_rewiring() => {
            let registry = StrategyRegistry::default();
            let plan = registry.get(a.as_str())?.plan(&graph, &group, &params)?;
            if let Some(p) = &out.plan {
                write_output(p, &plan.to_labelled_csv(&graph))?;
            }
            if let Some(p) = &out.results {
                write_output(p, &results_csv(&plan_rows(&plan, seed)))?;
            }
            let doc = to_json(&Document {
                manifest: &manifest,
                body: Summary {
                    summary: plan.summary(),
                },
            })?;
            if let Some(p) = &out.summary {
                write_output(p, &doc)?;
            }
            Ok(doc)
        }
        Algorithm::Audit => {
            let options = AuditOptions {
                dense_cap,
                fallback_samples: Some(psi),
                seed,
                workers,
            };
            let report = fairness_audit(&graph, &group, config.alpha, options)?;
            if let Some(dir) = &out.dump_dir {
                dump_pi(dir, &graph, &group, config.alpha, dense_cap)?;
            }
            let doc = to_json(&Document {
                manifest: &manifest,
                body: Audit { audit: report },
            })?;
            if let Some(p) = &out.report {
                write_output(p, &doc)?;
            }
            Ok(doc)
        }
        Algorithm::Correlate => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let size = config.sample_size.unwrap_or(DEFAULT_CORRELATION_SAMPLES);
            let pairs = gain_pairs(&graph, &group, config.alpha, size, dense_cap, &mut rng)?;
            let (exact, scaled): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let report = CorrelationReport {
                pearson: pearson(&exact, &scaled)?,
                spearman: spearman(&exact, &scaled)?,
                samples: exact.len(),
            };
            if let Some(p) = &out.results {
                let row = |metric: &str, value| ResultRow {
                    round: 0,
                    algorithm: "correlate".into(),
                    metric: metric.into(),
                    value,
                    seed,
                };
                let rows = [row("pearson", report.pearson), row("spearman", report.spearman)];
                write_output(p, &results_csv(&rows))?;
            }
            let doc = to_json(&Document {
                manifest: &manifest,
                body: Correlation {
                    correlation: report,
                },
            })?;
            if let Some(p) = &out.report {
                write_output(p, &doc)?;
            }
            Ok(doc)
        }
        Algorithm::SampleDebug => {
            let walk = WalkGraph::new(&graph, config.alpha)?;
            let plan = SamplingPlan::new(seed).with_workers(workers);
            let counts = root_frequencies(&walk, psi, plan)?;
            let est = estimate_aux(&walk, psi, &group, None, plan)?;
            let mut csv = String::from("node,label,root_count,root_frequency,sigma,eta\n");
            for (u, &c) in counts.iter().enumerate() {
                let _ = writeln!(
                    csv,
                    "{u},{},{c},{},{},{}",
                    graph.label(u),
                    c as f64 / psi as f64,
                    est.sigma[u],
                    est.eta[u]
                );
            }
            let Some(path) = &out.report else {
                return Ok(csv);
            };
            write_output(path, &csv)?;
            to_json(&Document {
                manifest: &manifest,
                body: SampleDebug {
                    samples: psi,
                    mean_walk_steps: est.mean_walk_steps(),
                    estimated_group_mass: est.group_mass(),
                },
            })
        }
        Algorithm::PprEval => {
            let registry = StrategyRegistry::default();
            let strategy = registry.get(config.ppr_strategy().as_str())?;
            let fraction = config.source_fraction.unwrap_or(DEFAULT_SOURCE_FRACTION);
            let rows = ppr_wasserstein_protocol(&graph, &group, strategy, &params, fraction)?;
            if let Some(p) = &out.results {
                write_output(p, &results_csv(&rows))?;
            }
            let doc = to_json(&Document {
                manifest: &manifest,
                body: PprEval {
                    wasserstein: rows.iter().map(|r| r.value).collect(),
                },
            })?;
            if let Some(p) = &out.summary {
                write_output(p, &doc)?;
            }
            Ok(doc)
        }
        _ => unreachable!("every algorithm is handled above"),
    }
}

#[derive(Serialize)]
struct Summary {
    summary: fairrank::plan::PlanSummary,
}

#[derive(Serialize)]
struct Audit {
    audit: fairrank::eval::AuditReport,
}

#[derive(Serialize)]
struct Correlation {
    correlation: CorrelationReport,
}

#[derive(Serialize)]
struct SampleDebug {
    samples: usize,
    mean_walk_steps: f64,
    estimated_group_mass: f64,
}

#[derive(Serialize)]
struct PprEval {
    /// Distance per round, starting with round 0.
    wasserstein: Vec<f64>,
}

/// Writes `pi.csv` (dense `Pi`, one row per line) and `aux.csv` into `dir`.
fn dump_pi(
    dir: &Path,
    graph: &DirectedGraph,
    group: &GroupPartition,
    alpha: f64,
    dense_cap: usize,
) -> Result<()> {
    let pi = compute_pi(graph, alpha, dense_cap)?;
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Output(format!("cannot create {}: {e}", dir.display())))?;
    let n = graph.node_count();
    let mut matrix = String::new();
    for u in 0..n {
        let row: Vec<String> = (0..n).map(|v| pi.get(u, v).to_string()).collect();
        matrix.push_str(&row.join(","));
        matrix.push('\n');
    }
    write_output(&dir.join("pi.csv"), &matrix)?;
    let sigma = pagerank_vector(&pi);
    let eta = pi.group_proximity(group);
    let mut aux = String::from("node,label,sigma,eta,organic_ppr_mass\n");
    for u in 0..n {
        let organic = organic_mass(ppr_mass(&pi, u, group), alpha, group.contains(u));
        let _ = writeln!(
            aux,
            "{u},{},{},{},{organic}",
            graph.label(u),
            sigma[u],
            eta[u]
        );
    }
    write_output(&dir.join("aux.csv"), &aux)
}
