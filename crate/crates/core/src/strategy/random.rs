//! Uniformly random legal rewirings, as a baseline.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::exact::ExactTracker;
use super::{RewiringStrategy, StrategyParams};
use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, GroupPartition, NodeId, Rewiring};
use crate::plan::{FairnessSource, Objective, PlanParams, PlanStep, RewiringPlan};

pub struct RandomStrategy;

impl RewiringStrategy for RandomStrategy {
    fn name(&self) -> &'static str {
        "random"
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
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        random_plan(graph, group, params, &mut rng)
    }
}

/// `budget` uniformly random legal rewirings with exact objective tracking.
pub fn random_baseline<R: Rng + ?Sized>(
    graph: &DirectedGraph,
    budget: usize,
    group: &GroupPartition,
    alpha: f64,
    rng: &mut R,
) -> Result<RewiringPlan> {
    let params = StrategyParams {
        alpha,
        budget,
        ..StrategyParams::default()
    };
    params.validate(graph, group)?;
    random_plan(graph, group, &params, rng)
}

/// Draws one legal rewiring uniformly from all `(i, j, k)` triples.
pub fn sample_legal_rewiring<R: Rng + ?Sized>(graph: &DirectedGraph, rng: &mut R) -> Option<Rewiring> {
    let n = graph.node_count();
    let total: u64 = (0..n)
        .map(|i| (graph.out_count(i) * graph.legal_targets_per_arc(i)) as u64)
        .sum();
    if total == 0 {
        return None;
    }
    let mut ticket = rng.random_range(0..total);
    for i in 0..n {
        let per_arc = graph.legal_targets_per_arc(i) as u64;
        let here = graph.out_count(i) as u64 * per_arc;
        if ticket >= here {
            ticket -= here;
            continue;
        }
        let j = graph.out_arcs(i)[(ticket / per_arc) as usize].target;
        let mut rank = ticket % per_arc;
        for k in 0..n {
            if k == i || graph.has_edge(i, k) {
                continue;
            }
            if rank == 0 {
                return Some(Rewiring::new(i, j, k));
            }
            rank -= 1;
        }
    }
    None
}

fn random_plan<R: Rng + ?Sized>(
    graph: &DirectedGraph,
    group: &GroupPartition,
    params: &StrategyParams,
    rng: &mut R,
) -> Result<RewiringPlan> {
    let source: Option<NodeId> = params.source;
    let mut g = graph.clone();
    let mut tracker = ExactTracker::new(&g, params.alpha, params.dense_cap)?;
    let mut plan = RewiringPlan::new(
        "random",
        PlanParams {
            alpha: params.alpha,
            budget: params.budget,
            source,
            samples: None,
            seed: Some(params.seed),
        },
        if source.is_some() {
            Objective::SourceMass
        } else {
            Objective::GroupMass
        },
        FairnessSource::Exact,
    );
    plan.initial_fairness = tracker.objective(group, source);
    for round in 1..=params.budget {
        let r = sample_legal_rewiring(&g, rng).ok_or(Error::NoLegalRewiring {
            round,
            completed: round - 1,
        })?;
        let before_value = tracker.objective(group, source);
        let before = g.clone();
        g.apply_rewiring(&r)?;
        tracker.apply(&before, &r, &g)?;
        let after_value = tracker.objective(group, source);
        plan.steps.push(PlanStep {
            rewiring: r,
            gain: after_value - before_value,
            fairness_after: after_value,
            candidates: None,
        });
    }
    Ok(plan)
}
