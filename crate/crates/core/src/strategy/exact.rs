//! Exhaustive greedy rewiring with closed-form gains over a dense `Pi`.

use rayon::prelude::*;

use super::{RewiringStrategy, ScoredRewiring, StrategyParams};
use crate::dense::{compute_pi, pagerank_vector, ppr_mass, PiMatrix, DRIFT_REFRESH};
use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, GroupPartition, NodeId, Rewiring};
use crate::plan::{FairnessSource, Objective, PlanParams, PlanStep, RewiringPlan};

pub struct ExactStrategy {
    pub personalized: bool,
}

impl RewiringStrategy for ExactStrategy {
    fn name(&self) -> &'static str {
        if self.personalized {
            "exactv"
        } else {
            "exact"
        }
    }

    fn needs_source(&self) -> bool {
        self.personalized
    }

    fn plan(
        &self,
        graph: &DirectedGraph,
        group: &GroupPartition,
        params: &StrategyParams,
    ) -> Result<RewiringPlan> {
        params.validate(graph, group)?;
        let source = if self.personalized {
            Some(params.require_source(self.name())?)
        } else {
            None
        };
        exact_greedy(self.name(), graph, params.budget, group, params.alpha, source, params.dense_cap)
    }
}

pub fn exact_rewire(
    graph: &DirectedGraph,
    budget: usize,
    group: &GroupPartition,
    alpha: f64,
) -> Result<RewiringPlan> {
    let params = StrategyParams {
        alpha,
        budget,
        ..StrategyParams::default()
    };
    ExactStrategy { personalized: false }.plan(graph, group, &params)
}

pub fn exactv_rewire(
    graph: &DirectedGraph,
    budget: usize,
    group: &GroupPartition,
    source: NodeId,
    alpha: f64,
) -> Result<RewiringPlan> {
    let params = StrategyParams {
        alpha,
        budget,
        source: Some(source),
        ..StrategyParams::default()
    };
    ExactStrategy { personalized: true }.plan(graph, group, &params)
}

/// Dense `Pi` kept in sync with a graph under rewiring, for exact objective tracking.
pub(crate) struct ExactTracker {
    pub pi: PiMatrix,
    cap: usize,
}

impl ExactTracker {
    pub fn new(graph: &DirectedGraph, alpha: f64, cap: usize) -> Result<Self> {
        Ok(Self {
            pi: compute_pi(graph, alpha, cap)?,
            cap,
        })
    }

    pub fn objective(&self, group: &GroupPartition, source: Option<NodeId>) -> f64 {
        match source {
            Some(v) => ppr_mass(&self.pi, v, group),
            None => group.members().map(|s| column_weighted(&self.pi, s)).sum(),
        }
    }

    /// `graph` is the state before `r`; `after` the state after it.
    pub fn apply(&mut self, graph: &DirectedGraph, r: &Rewiring, after: &DirectedGraph) -> Result<()> {
        self.pi.update_in_place(graph, r);
        if self.pi.max_row_sum_drift() > DRIFT_REFRESH {
            self.pi = compute_pi(after, self.pi.alpha(), self.cap)?;
        }
        Ok(())
    }
}

fn column_weighted(pi: &PiMatrix, col: NodeId) -> f64 {
    pi.jump()
        .iter()
        .enumerate()
        .map(|(u, &v)| v * pi.get(u, col))
        .sum()
}

/// Highest closed-form gain over every legal rewiring; `weights` is `sigma`
/// for the PageRank objective or a row of `Pi` for a personalized one.
pub fn best_exact_rewiring(
    graph: &DirectedGraph,
    pi: &PiMatrix,
    weights: &[f64],
    eta: &[f64],
) -> Option<ScoredRewiring> {
    let n = graph.node_count();
    let alpha = pi.alpha();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let arcs = graph.out_arcs(i);
            if arcs.len() + 1 >= n {
                return None;
            }
            let col_i = pi.matrix().column(i);
            let d = graph.out_degree(i);
            let mut best: Option<ScoredRewiring> = None;
            for arc in arcs {
                let j = arc.target;
                let p = arc.weight / d;
                let pref = (1.0 - alpha) * p * weights[i];
                let pi_ji = col_i[j];
                let mut next_arc = 0;
                for k in 0..n {
                    while next_arc < arcs.len() && arcs[next_arc].target < k {
                        next_arc += 1;
                    }
                    if k == i || (next_arc < arcs.len() && arcs[next_arc].target == k) {
                        continue;
                    }
                    let tau = alpha + (1.0 - alpha) * p * (pi_ji - col_i[k]);
                    let cand = ScoredRewiring {
                        rewiring: Rewiring::new(i, j, k),
                        score: pref * (eta[k] - eta[j]) / tau,
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

fn exact_greedy(
    name: &str,
    graph: &DirectedGraph,
    budget: usize,
    group: &GroupPartition,
    alpha: f64,
    source: Option<NodeId>,
    cap: usize,
) -> Result<RewiringPlan> {
    let mut g = graph.clone();
    let mut tracker = ExactTracker::new(&g, alpha, cap)?;
    let mut plan = RewiringPlan::new(
        name,
        PlanParams {
            alpha,
            budget,
            source,
            samples: None,
            seed: None,
        },
        if source.is_some() {
            Objective::SourceMass
        } else {
            Objective::GroupMass
        },
        FairnessSource::Exact,
    );
    plan.initial_fairness = tracker.objective(group, source);
    for round in 1..=budget {
        let eta = tracker.pi.group_proximity(group);
        let weights = match source {
            Some(v) => tracker.pi.row(v),
            None => pagerank_vector(&tracker.pi),
        };
        let best = best_exact_rewiring(&g, &tracker.pi, &weights, &eta).ok_or(
            Error::NoLegalRewiring {
                round,
                completed: round - 1,
            },
        )?;
        let before = g.clone();
        g.apply_rewiring(&best.rewiring)?;
        tracker.apply(&before, &best.rewiring, &g)?;
        plan.steps.push(PlanStep {
            rewiring: best.rewiring,
            gain: best.score,
            fairness_after: tracker.objective(group, source),
            candidates: None,
        });
    }
    Ok(plan)
}
