//! Rewiring plans and their CSV / JSON forms.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, NodeId, Rewiring};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanStep {
    pub rewiring: Rewiring,
    /// Score used for selection: the exact gain for exact strategies, the
    /// sampled tau-free score for sampling strategies.
    pub gain: f64,
    /// Tracked objective after applying this step.
    pub fairness_after: f64,
    /// Size of the rewiring target set, for strategies that restrict it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidates: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanParams {
    pub alpha: f64,
    pub budget: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<NodeId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// How `fairness_after` was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FairnessSource {
    Exact,
    Estimated,
}

/// What the tracked fairness value measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// `pi(S)` under the jump vector.
    GroupMass,
    /// `pi_v(S)` for the plan's source node.
    SourceMass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewiringPlan {
    pub algorithm: String,
    pub params: PlanParams,
    pub objective: Objective,
    pub fairness_source: FairnessSource,
    pub initial_fairness: f64,
    pub steps: Vec<PlanStep>,
}

impl RewiringPlan {
    pub fn new(algorithm: &str, params: PlanParams, objective: Objective, source: FairnessSource) -> Self {
        Self {
            algorithm: algorithm.to_owned(),
            params,
            objective,
            fairness_source: source,
            initial_fairness: f64::NAN,
            steps: Vec::new(),
        }
    }

    pub fn rewirings(&self) -> impl Iterator<Item = &Rewiring> {
        self.steps.iter().map(|s| &s.rewiring)
    }

    pub fn final_fairness(&self) -> f64 {
        self.steps
            .last()
            .map_or(self.initial_fairness, |s| s.fairness_after)
    }

    pub fn gains(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.gain).collect()
    }

    /// 1-based rounds whose selected score was not positive.
    pub fn nonpositive_rounds(&self) -> Vec<usize> {
        self.steps
            .iter()
            .enumerate()
            .filter(|(_, s)| s.gain <= 0.0)
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// Applies every step to a copy of `graph`, validating each against the state it meets.
    pub fn replay(&self, graph: &DirectedGraph) -> Result<DirectedGraph> {
        let mut g = graph.clone();
        for step in &self.steps {
            g.apply_rewiring(&step.rewiring)?;
        }
        Ok(g)
    }

    /// `step,i,j,k,gain,fairness_after[,candidates]` over dense ids.
    pub fn to_csv(&self) -> String {
        self.csv_with(|v| v.to_string())
    }

    /// Same as [`to_csv`](Self::to_csv) with node labels of `graph` in place of ids.
    pub fn to_labelled_csv(&self, graph: &DirectedGraph) -> String {
        self.csv_with(|v| graph.label(v).to_owned())
    }

    fn csv_with(&self, name: impl Fn(NodeId) -> String) -> String {
        let with_k = self.steps.iter().any(|s| s.candidates.is_some());
        let mut out = String::from("step,i,j,k,gain,fairness_after");
        if with_k {
            out.push_str(",candidates");
        }
        out.push('\n');
        for (t, s) in self.steps.iter().enumerate() {
            let (i, j, k) = s.rewiring.as_tuple();
            let _ = write!(
                out,
                "{},{},{},{},{},{}",
                t + 1,
                name(i),
                name(j),
                name(k),
                s.gain,
                s.fairness_after
            );
            if with_k {
                let _ = write!(out, ",{}", s.candidates.unwrap_or(0));
            }
            out.push('\n');
        }
        out
    }

    /// Reads the plan CSV back into steps.
    pub fn steps_from_csv(text: &str) -> Result<Vec<PlanStep>> {
        let mut lines = text.lines().enumerate();
        let header = lines
            .next()
            .map(|(_, h)| h.trim())
            .ok_or_else(|| Error::Parse {
                line: 1,
                message: "empty plan file".into(),
            })?;
        let columns: Vec<&str> = header.split(',').collect();
        if columns.len() < 6 || columns[..6] != ["step", "i", "j", "k", "gain", "fairness_after"] {
            return Err(Error::Parse {
                line: 1,
                message: format!("unexpected header {header:?}"),
            });
        }
        let mut steps = Vec::new();
        for (lineno, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let err = |m: String| Error::Parse {
                line: lineno + 1,
                message: m,
            };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != columns.len() {
                return Err(err(format!("expected {} fields", columns.len())));
            }
            let id = |s: &str| s.parse::<NodeId>().map_err(|_| err(format!("bad node id {s:?}")));
            let real = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad number {s:?}")));
            steps.push(PlanStep {
                rewiring: Rewiring::new(id(f[1])?, id(f[2])?, id(f[3])?),
                gain: real(f[4])?,
                fairness_after: real(f[5])?,
                candidates: if columns.len() > 6 {
                    Some(f[6].parse().map_err(|_| err(format!("bad count {:?}", f[6])))?)
                } else {
                    None
                },
            });
        }
        Ok(steps)
    }

    pub fn summary(&self) -> PlanSummary {
        PlanSummary {
            algorithm: self.algorithm.clone(),
            params: self.params.clone(),
            objective: self.objective,
            fairness_source: self.fairness_source,
            initial_fairness: self.initial_fairness,
            final_fairness: self.final_fairness(),
            per_round_gains: self.gains(),
            nonpositive_rounds: self.nonpositive_rounds(),
        }
    }
}

/// JSON summary written next to the plan CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSummary {
    pub algorithm: String,
    pub params: PlanParams,
    pub objective: Objective,
    pub fairness_source: FairnessSource,
    pub initial_fairness: f64,
    pub final_fairness: f64,
    pub per_round_gains: Vec<f64>,
    pub nonpositive_rounds: Vec<usize>,
}
