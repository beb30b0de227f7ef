//! Sampling-based greedy rewiring.
//!
//! Each round estimates centrality and group proximity from fresh random
//! forests, restricts rewiring targets to the nodes closest to the group,
//! and scores candidates without the Sherman-Morrison denominator:
//! `(1 - alpha) p_ij w_i (eta_k - eta_j)`.

use rayon::prelude::*;

use super::exact::ExactTracker;
use super::{FairnessTracking, RewiringStrategy, ScoredRewiring, StrategyParams};
use crate::error::{Error, Result};
use crate::forest::{estimate_aux, SamplingPlan, WalkGraph};
use crate::graph::{DirectedGraph, GroupPartition, NodeId, Rewiring};
use crate::plan::{FairnessSource, Objective, PlanParams, PlanStep, RewiringPlan};

/// Extra slots above the maximum out-degree when sizing the target set.
pub const CANDIDATE_SLACK: usize = 2;

pub struct FastStrategy {
    pub personalized: bool,
}

impl RewiringStrategy for FastStrategy {
    fn name(&self) -> &'static str {
        if self.personalized {
            "fastv"
        } else {
            "fast"
        }
    }

    fn needs_source(&self) -> bool {
        self.personalized
    }

    fn is_randomized(&self) -> bool {
        true
    }

    fn plan(
        &self,
        graph: &DirectedGraph,
        group: &GroupPartition,
        params: &StrategyParams,
    ) -> Result<RewiringPlan> {
        params.validate(graph, group)?;
        if params.samples == 0 {
            return Err(Error::InvalidParameter("sample count must be at least 1".into()));
        }
        let source = if self.personalized {
            Some(params.require_source(self.name())?)
        } else {
            None
        };
        fast_greedy(self.name(), graph, group, source, params)
    }
}

pub fn fast_rewire(
    graph: &DirectedGraph,
    budget: usize,
    group: &GroupPartition,
    samples: usize,
    alpha: f64,
    seed: u64,
) -> Result<RewiringPlan> {
    let params = StrategyParams {
        alpha,
        budget,
        samples,
        seed,
        ..StrategyParams::default()
    };
    FastStrategy { personalized: false }.plan(graph, group, &params)
}

pub fn fastv_rewire(
    graph: &DirectedGraph,
    budget: usize,
    group: &GroupPartition,
    source: NodeId,
    samples: usize,
    alpha: f64,
    seed: u64,
) -> Result<RewiringPlan> {
    let params = StrategyParams {
        alpha,
        budget,
        source: Some(source),
        samples,
        seed,
        ..StrategyParams::default()
    };
    FastStrategy { personalized: true }.plan(graph, group, &params)
}

/// Restricted rewiring targets, ranked by group proximity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    pub nodes: Vec<NodeId>,
    /// Size before on-demand extension.
    pub base_size: usize,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Top `max_out_count + 2` nodes by `eta` (ties by id), extended so every
/// arc source has a legal target when one exists.
pub fn candidate_targets(eta: &[f64], graph: &DirectedGraph) -> CandidateSet {
    candidate_targets_with(eta, graph, CANDIDATE_SLACK)
}

pub fn candidate_targets_with(eta: &[f64], graph: &DirectedGraph, slack: usize) -> CandidateSet {
    let n = graph.node_count();
    let mut ranking: Vec<NodeId> = (0..n).collect();
    ranking.sort_by(|&a, &b| eta[b].total_cmp(&eta[a]).then(a.cmp(&b)));
    let base_size = (graph.max_out_count() + slack).min(n);
    let mut size = base_size;
    for i in 0..n {
        // With more slots than N(i) plus i itself, a legal target is guaranteed.
        if size > graph.out_count(i) + 1 {
            continue;
        }
        let legal = |k: NodeId| k != i && !graph.has_edge(i, k);
        if ranking[..size].iter().any(|&k| legal(k)) {
            continue;
        }
        while size < n {
            size += 1;
            if legal(ranking[size - 1]) {
                break;
            }
        }
    }
    ranking.truncate(size);
    CandidateSet {
        nodes: ranking,
        base_size,
    }
}

/// `(1 - alpha) p_ij w_i (eta_k - eta_j)`.
pub fn approx_gain(p_ij: f64, weight_i: f64, eta_j: f64, eta_k: f64, alpha: f64) -> f64 {
    (1.0 - alpha) * p_ij * weight_i * (eta_k - eta_j)
}

/// Best tau-free score over arcs `(i, j)` and targets in `targets`.
pub fn best_restricted_rewiring(
    graph: &DirectedGraph,
    weights: &[f64],
    eta: &[f64],
    targets: &[NodeId],
    alpha: f64,
) -> Option<ScoredRewiring> {
    let n = graph.node_count();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let legal: Vec<NodeId> = targets
                .iter()
                .copied()
                .filter(|&k| k != i && !graph.has_edge(i, k))
                .collect();
            if legal.is_empty() {
                return None;
            }
            let d = graph.out_degree(i);
            let mut best: Option<ScoredRewiring> = None;
            for arc in graph.out_arcs(i) {
                let j = arc.target;
                for &k in &legal {
                    let cand = ScoredRewiring {
                        rewiring: Rewiring::new(i, j, k),
                        score: approx_gain(arc.weight / d, weights[i], eta[j], eta[k], alpha),
                    };
                    if best.is_none_or(|b| cand.beats(&b)) {
                        best = Some(cand);
                    }
                }
            }
            best
        })
        .reduce(|| None, ScoredRewiring::pick)
}

fn fast_greedy(
    name: &str,
    graph: &DirectedGraph,
    group: &GroupPartition,
    source: Option<NodeId>,
    params: &StrategyParams,
) -> Result<RewiringPlan> {
    let alpha = params.alpha;
    let exact_tracking = match params.tracking {
        FairnessTracking::Exact => true,
        FairnessTracking::Estimated => false,
        FairnessTracking::Auto => graph.node_count() <= params.dense_cap,
    };
    let mut g = graph.clone();
    let mut tracker = if exact_tracking {
        Some(ExactTracker::new(&g, alpha, params.dense_cap)?)
    } else {
        None
    };
    let mut plan = RewiringPlan::new(
        name,
        PlanParams {
            alpha,
            budget: params.budget,
            source,
            samples: Some(params.samples),
            seed: Some(params.seed),
        },
        if source.is_some() {
            Objective::SourceMass
        } else {
            Objective::GroupMass
        },
        if exact_tracking {
            FairnessSource::Exact
        } else {
            FairnessSource::Estimated
        },
    );
    if let Some(t) = &tracker {
        plan.initial_fairness = t.objective(group, source);
    }
    let batch = |g: &DirectedGraph, round: usize| {
        let walk = WalkGraph::new(g, alpha)?;
        let sampling = SamplingPlan::new(params.seed)
            .with_stream(round as u64)
            .with_workers(params.workers);
        estimate_aux(&walk, params.samples, group, source, sampling)
    };
    let estimated_objective = |est: &crate::forest::EstimatorSet| match source {
        Some(v) => est.eta[v],
        None => est.group_mass(),
    };

    for round in 1..=params.budget {
        let est = batch(&g, round - 1)?;
        if tracker.is_none() {
            let value = estimated_objective(&est);
            match plan.steps.last_mut() {
                Some(prev) => prev.fairness_after = value,
                None => plan.initial_fairness = value,
            }
        }
        let weights = match source {
            Some(_) => est.sigma_tilde.as_deref().unwrap_or(&est.sigma),
            None => &est.sigma,
        };
        let targets = candidate_targets(&est.eta, &g);
        let best = best_restricted_rewiring(&g, weights, &est.eta, &targets.nodes, alpha).ok_or(
            Error::NoLegalRewiring {
                round,
                completed: round - 1,
            },
        )?;
        let before = g.clone();
        g.apply_rewiring(&best.rewiring)?;
        let fairness_after = match tracker.as_mut() {
            Some(t) => {
                t.apply(&before, &best.rewiring, &g)?;
                t.objective(group, source)
            }
            None => f64::NAN,
        };
        plan.steps.push(PlanStep {
            rewiring: best.rewiring,
            gain: best.score,
            fairness_after,
            candidates: Some(targets.len()),
        });
    }
    if tracker.is_none() {
        let est = batch(&g, params.budget)?;
        if let Some(last) = plan.steps.last_mut() {
            last.fairness_after = estimated_objective(&est);
        }
    }
    Ok(plan)
}
