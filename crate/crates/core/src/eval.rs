//! Fairness audits and evaluation metrics.

use std::fmt::Write as _;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::{
    compute_pi, organic_mass, pagerank_vector, ppr_mass, AuxVectors, DEFAULT_DENSE_CAP,
};
use crate::error::{Error, Result};
use crate::forest::{estimate_aux, SamplingPlan, WalkGraph};
use crate::graph::{DirectedGraph, GroupPartition, NodeId};
use crate::plan::{FairnessSource, RewiringPlan};
use crate::strategy::random::sample_legal_rewiring;
use crate::strategy::{RewiringStrategy, StrategyParams};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditReport {
    pub alpha: f64,
    pub node_count: usize,
    pub group_size: usize,
    /// `pi(S)`.
    pub group_mass: f64,
    /// `|S| / n`.
    pub ratio: f64,
    pub threshold: f64,
    pub unfair: bool,
    /// Organic personalized mass `pi_bar_v(S)` of every node `v`.
    pub organic_ppr_mass: Vec<f64>,
    pub method: FairnessSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Seconds since the Unix epoch.
    pub generated_at: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct AuditOptions {
    pub dense_cap: usize,
    /// Forests to sample when the graph exceeds the dense cap; `None` makes that an error.
    pub fallback_samples: Option<usize>,
    pub seed: u64,
    pub workers: usize,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self {
            dense_cap: DEFAULT_DENSE_CAP,
            fallback_samples: None,
            seed: 0,
            workers: 1,
        }
    }
}

/// `pi(S) < phi`, ignoring differences at the level of a few ulps.
pub fn is_unfair(group_mass: f64, threshold: f64) -> bool {
    group_mass < threshold - 4.0 * f64::EPSILON * threshold.max(1.0)
}

pub fn fairness_audit(
    graph: &DirectedGraph,
    group: &GroupPartition,
    alpha: f64,
    options: AuditOptions,
) -> Result<AuditReport> {
    let n = graph.node_count();
    let (group_mass, raw, method, samples) = if n <= options.dense_cap {
        let pi = compute_pi(graph, alpha, options.dense_cap)?;
        let mass = crate::dense::group_mass(&pagerank_vector(&pi), group);
        let raw: Vec<f64> = (0..n).map(|v| ppr_mass(&pi, v, group)).collect();
        (mass, raw, FairnessSource::Exact, None)
    } else {
        let psi = options
            .fallback_samples
            .ok_or(Error::TooLarge {
                nodes: n,
                cap: options.dense_cap,
            })?;
        let walk = WalkGraph::new(graph, alpha)?;
        let plan = SamplingPlan::new(options.seed).with_workers(options.workers);
        let est = estimate_aux(&walk, psi, group, None, plan)?;
        (est.group_mass(), est.eta.clone(), FairnessSource::Estimated, Some(psi))
    };
    let organic = raw
        .iter()
        .enumerate()
        .map(|(v, &m)| organic_mass(m, alpha, group.contains(v)))
        .collect();
    let generated_at = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    Ok(AuditReport {
        alpha,
        node_count: n,
        group_size: group.size(),
        group_mass,
        ratio: group.ratio(),
        threshold: group.threshold(),
        unfair: is_unfair(group_mass, group.threshold()),
        organic_ppr_mass: organic,
        method,
        samples,
        generated_at,
    })
}

/// Exact 1-D Wasserstein-1 distance between two empirical distributions:
/// the integral of `|F_a - F_b|` over the real line.
pub fn wasserstein_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidParameter(
            "Wasserstein distance needs two non-empty samples".into(),
        ));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("samples must be finite".into()));
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut total = 0.0;
    let mut prev = xs[0].min(ys[0]);
    while i < xs.len() || j < ys.len() {
        let next = match (xs.get(i), ys.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        total += (i as f64 / na - j as f64 / nb).abs() * (next - prev);
        while i < xs.len() && xs[i] == next {
            i += 1;
        }
        while j < ys.len() && ys[j] == next {
            j += 1;
        }
        prev = next;
    }
    Ok(total)
}

/// `|approx - exact| / exact`, in percent.
pub fn relative_error(approx: f64, exact: f64) -> Result<f64> {
    if !(exact > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "reference value must be positive, got {exact}"
        )));
    }
    Ok((approx - exact).abs() / exact * 100.0)
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InsufficientData(
            "correlation needs two equally long series of at least two values".into(),
        ));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::InsufficientData("a series has zero variance".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x[order[end]] == x[order[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = avg;
        }
        start = end;
    }
    ranks
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    pearson(&average_ranks(x), &average_ranks(y))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub pearson: f64,
    pub spearman: f64,
    pub samples: usize,
}

/// Exact gain and tau-scaled gain for `sample_size` uniformly drawn legal rewirings.
pub fn gain_pairs<R: Rng + ?Sized>(
    graph: &DirectedGraph,
    group: &GroupPartition,
    alpha: f64,
    sample_size: usize,
    dense_cap: usize,
    rng: &mut R,
) -> Result<Vec<(f64, f64)>> {
    let n = graph.node_count();
    let legal: u64 = (0..n)
        .map(|i| (graph.out_count(i) * graph.legal_targets_per_arc(i)) as u64)
        .sum();
    if legal < 3 {
        return Err(Error::InsufficientData(format!(
            "only {legal} legal rewirings exist"
        )));
    }
    let pi = compute_pi(graph, alpha, dense_cap)?;
    let aux = AuxVectors::new(&pi, group, None);
    let mut out = Vec::with_capacity(sample_size);
    for _ in 0..sample_size {
        let r = sample_legal_rewiring(graph, rng).ok_or_else(|| {
            Error::Internal("legal rewiring count and sampler disagree".into())
        })?;
        let gain = crate::dense::gain_pr(&aux, &pi, graph, &r);
        out.push((gain, gain * pi.tau(graph, &r)));
    }
    Ok(out)
}

pub fn gain_correlation<R: Rng + ?Sized>(
    graph: &DirectedGraph,
    group: &GroupPartition,
    alpha: f64,
    sample_size: usize,
    rng: &mut R,
) -> Result<CorrelationReport> {
    let pairs = gain_pairs(graph, group, alpha, sample_size, DEFAULT_DENSE_CAP, rng)?;
    let (exact, scaled): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    Ok(CorrelationReport {
        pearson: pearson(&exact, &scaled)?,
        spearman: spearman(&exact, &scaled)?,
        samples: exact.len(),
    })
}

/// One line of the results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub round: usize,
    pub algorithm: String,
    pub metric: String,
    pub value: f64,
    pub seed: u64,
}

pub fn results_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from("round,algorithm,metric,value,seed\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{}", r.round, r.algorithm, r.metric, r.value, r.seed);
    }
    out
}

/// Per-round fairness and gain rows for a plan; round 0 is the starting state.
pub fn plan_rows(plan: &RewiringPlan, seed: u64) -> Vec<ResultRow> {
    let row = |round, metric: &str, value| ResultRow {
        round,
        algorithm: plan.algorithm.clone(),
        metric: metric.to_owned(),
        value,
        seed,
    };
    let mut rows = vec![row(0, "fairness", plan.initial_fairness)];
    for (t, s) in plan.steps.iter().enumerate() {
        rows.push(row(t + 1, "fairness", s.fairness_after));
        rows.push(row(t + 1, "gain", s.gain));
    }
    rows
}

/// Personalized-fairness evaluation over a seeded sample of source nodes.
///
/// Every sampled source gets its own plan. After each round the organic mass
/// of sources in `S` is compared with the raw mass of sources outside `S`
/// by their Wasserstein distance.
pub fn ppr_wasserstein_protocol(
    graph: &DirectedGraph,
    group: &GroupPartition,
    strategy: &dyn RewiringStrategy,
    params: &StrategyParams,
    fraction: f64,
) -> Result<Vec<ResultRow>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "source fraction must lie in (0, 1], got {fraction}"
        )));
    }
    if !strategy.needs_source() {
        return Err(Error::InvalidParameter(format!(
            "strategy {:?} does not optimize a personalized objective",
            strategy.name()
        )));
    }
    let n = graph.node_count();
    let count = ((n as f64 * fraction).round() as usize).clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut sources: Vec<NodeId> = sample_indices(&mut rng, n, count).into_vec();
    sources.sort_unstable();
    if sources.iter().all(|&v| group.contains(v)) || sources.iter().all(|&v| !group.contains(v)) {
        return Err(Error::InsufficientData(
            "sampled sources do not cover both groups".into(),
        ));
    }
    let mut inside: Vec<Vec<f64>> = vec![Vec::new(); params.budget + 1];
    let mut outside: Vec<Vec<f64>> = vec![Vec::new(); params.budget + 1];
    for &v in &sources {
        let p = StrategyParams {
            source: Some(v),
            ..params.clone()
        };
        let plan = strategy.plan(graph, group, &p)?;
        let trajectory = std::iter::once(plan.initial_fairness)
            .chain(plan.steps.iter().map(|s| s.fairness_after));
        for (t, mass) in trajectory.enumerate() {
            if group.contains(v) {
                inside[t].push(organic_mass(mass, params.alpha, true));
            } else {
                outside[t].push(mass);
            }
        }
    }
    (0..=params.budget)
        .map(|t| {
            Ok(ResultRow {
                round: t,
                algorithm: strategy.name().to_owned(),
                metric: "wasserstein".into(),
                value: wasserstein_1d(&inside[t], &outside[t])?,
                seed: params.seed,
            })
        })
        .collect()
}
