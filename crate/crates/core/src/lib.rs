//! Group fairness of PageRank and personalized PageRank under budgeted edge rewiring.
//!
//! Two families of greedy planners are provided. The exact planners keep the
//! dense matrix `Pi = alpha (I - (1 - alpha) P)^{-1}` and score every legal
//! rewiring with closed-form rank-one gains. The fast planners estimate the
//! needed vectors from random rooted spanning forests of a reweighted graph,
//! which runs in time linear in the graph size per round.
//!
//! Planners implement [`strategy::RewiringStrategy`] and are looked up by name
//! in a [`strategy::StrategyRegistry`].

pub mod dense;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod forest;
pub mod graph;
pub mod plan;
pub mod strategy;

pub use error::{Error, ErrorCategory, Result};
pub use graph::{build_reweighted, load_graph, DirectedGraph, GroupPartition, NodeId, Rewiring};
pub use plan::{RewiringPlan, PlanStep};
pub use strategy::{RewiringStrategy, StrategyParams, StrategyRegistry};
