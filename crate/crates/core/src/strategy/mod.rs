//! Greedy rewiring strategies behind a common trait, looked up by name.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dense::DEFAULT_DENSE_CAP;
use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, GroupPartition, NodeId, Rewiring};
use crate::plan::RewiringPlan;

pub mod exact;
pub mod fast;
pub mod random;

pub use exact::{exact_rewire, exactv_rewire, ExactStrategy};
pub use fast::{
    approx_gain, candidate_targets, candidate_targets_with, fast_rewire, fastv_rewire,
    CandidateSet, FastStrategy,
};
pub use random::{random_baseline, RandomStrategy};

/// How sampling strategies track the objective after each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FairnessTracking {
    /// Exact when the graph fits under the dense cap, estimated otherwise.
    #[default]
    Auto,
    Exact,
    Estimated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyParams {
    pub alpha: f64,
    pub budget: usize,
    pub source: Option<NodeId>,
    /// Forests per round for sampling strategies.
    pub samples: usize,
    pub seed: u64,
    pub workers: usize,
    pub dense_cap: usize,
    pub tracking: FairnessTracking,
}

impl Default for StrategyParams {
    fn default() -> Self {
        Self {
            alpha: 0.15,
            budget: 50,
            source: None,
            samples: 1000,
            seed: 0,
            workers: 1,
            dense_cap: DEFAULT_DENSE_CAP,
            tracking: FairnessTracking::Auto,
        }
    }
}

impl StrategyParams {
    pub(crate) fn validate(&self, graph: &DirectedGraph, group: &GroupPartition) -> Result<()> {
        crate::graph::check_alpha(self.alpha)?;
        if self.budget == 0 {
            return Err(Error::InvalidParameter("budget must be at least 1".into()));
        }
        if group.node_count() != graph.node_count() {
            return Err(Error::InvalidGroup(format!(
                "group covers {} nodes, graph has {}",
                group.node_count(),
                graph.node_count()
            )));
        }
        if let Some(v) = self.source {
            if v >= graph.node_count() {
                return Err(Error::InvalidParameter(format!(
                    "source {v} outside 0..{}",
                    graph.node_count()
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn require_source(&self, strategy: &str) -> Result<NodeId> {
        self.source.ok_or_else(|| {
            Error::InvalidParameter(format!("strategy {strategy:?} needs a source node"))
        })
    }
}

/// A budgeted rewiring algorithm.
pub trait RewiringStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    /// Whether the strategy optimizes a personalized objective and needs a source.
    fn needs_source(&self) -> bool {
        false
    }

    fn is_randomized(&self) -> bool {
        false
    }

    fn plan(
        &self,
        graph: &DirectedGraph,
        group: &GroupPartition,
        params: &StrategyParams,
    ) -> Result<RewiringPlan>;
}

pub struct StrategyRegistry {
    entries: BTreeMap<&'static str, Box<dyn RewiringStrategy>>,
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, strategy: Box<dyn RewiringStrategy>) {
        self.entries.insert(strategy.name(), strategy);
    }

    pub fn get(&self, name: &str) -> Result<&dyn RewiringStrategy> {
        self.entries.get(name).map(|b| b.as_ref()).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "unknown strategy {name:?}; available: {}",
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(ExactStrategy { personalized: false }));
        r.register(Box::new(ExactStrategy { personalized: true }));
        r.register(Box::new(FastStrategy { personalized: false }));
        r.register(Box::new(FastStrategy { personalized: true }));
        r.register(Box::new(RandomStrategy));
        r
    }
}

/// A scored rewiring; ordering prefers higher scores, then the lexicographically smaller triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredRewiring {
    pub rewiring: Rewiring,
    pub score: f64,
}

impl ScoredRewiring {
    pub fn beats(&self, other: &ScoredRewiring) -> bool {
        self.score > other.score
            || (self.score == other.score && self.rewiring < other.rewiring)
    }

    pub(crate) fn pick(a: Option<Self>, b: Option<Self>) -> Option<Self> {
        match (a, b) {
            (Some(x), Some(y)) => Some(if y.beats(&x) { y } else { x }),
            (x, None) => x,
            (None, y) => y,
        }
    }
}
