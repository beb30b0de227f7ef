//! Declarative run configuration shared by the subcommands and `run --config`.

use std::path::PathBuf;

use clap::ValueEnum;
use fairrank::forest::required_samples;
use fairrank::strategy::FairnessTracking;
use serde::{Deserialize, Serialize};

pub const DEFAULT_ALPHA: f64 = 0.15;
pub const DEFAULT_BUDGET: usize = 50;
pub const DEFAULT_SAMPLES: usize = 1000;
pub const DEFAULT_CORRELATION_SAMPLES: usize = 5000;
pub const DEFAULT_SOURCE_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Exact,
    Exactv,
    Fast,
    Fastv,
    Random,
    Audit,
    Correlate,
    SampleDebug,
    PprEval,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Exact => "exact",
            Algorithm::Exactv => "exactv",
            Algorithm::Fast => "fast",
            Algorithm::Fastv => "fastv",
            Algorithm::Random => "random",
            Algorithm::Audit => "audit",
            Algorithm::Correlate => "correlate",
            Algorithm::SampleDebug => "sample-debug",
            Algorithm::PprEval => "ppr-eval",
        }
    }

    pub fn is_rewiring(self) -> bool {
        matches!(
            self,
            Algorithm::Exact | Algorithm::Exactv | Algorithm::Fast | Algorithm::Fastv | Algorithm::Random
        )
    }

    pub fn is_personalized(self) -> bool {
        matches!(self, Algorithm::Exactv | Algorithm::Fastv)
    }

    pub fn is_sampling(self) -> bool {
        matches!(self, Algorithm::Fast | Algorithm::Fastv | Algorithm::SampleDebug)
    }

    pub fn is_randomized(self) -> bool {
        matches!(
            self,
            Algorithm::Fast
                | Algorithm::Fastv
                | Algorithm::Random
                | Algorithm::Correlate
                | Algorithm::SampleDebug
                | Algorithm::PprEval
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "snake_case")]
pub enum Tracking {
    #[default]
    Auto,
    Exact,
    Estimated,
}

impl From<Tracking> for FairnessTracking {
    fn from(t: Tracking) -> Self {
        match t {
            Tracking::Auto => FairnessTracking::Auto,
            Tracking::Exact => FairnessTracking::Exact,
            Tracking::Estimated => FairnessTracking::Estimated,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    /// Rewiring plan CSV.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<PathBuf>,
    /// JSON summary of a rewiring run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<PathBuf>,
    /// Results CSV, `round,algorithm,metric,value,seed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub results: Option<PathBuf>,
    /// Audit or correlation JSON report, or the root-frequency CSV of `sample-debug`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    /// Directory receiving `pi.csv` and `aux.csv` from an audit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dump_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub graph: PathBuf,
    pub group: PathBuf,
    pub algorithm: Algorithm,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Source node label for personalized algorithms.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub symmetrize: bool,
    /// Fairness threshold; defaults to `|S| / n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dense_cap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default)]
    pub tracking: Tracking,
    /// Rewirings sampled by `correlate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_size: Option<usize>,
    /// Personalized strategy driven by `ppr-eval`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<Algorithm>,
    /// Share of nodes sampled as sources by `ppr-eval`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_fraction: Option<f64>,
    #[serde(default)]
    pub outputs: Outputs,
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

fn default_budget() -> usize {
    DEFAULT_BUDGET
}

impl RunConfig {
    pub fn new(graph: PathBuf, group: PathBuf, algorithm: Algorithm) -> Self {
        Self {
            graph,
            group,
            algorithm,
            alpha: DEFAULT_ALPHA,
            budget: DEFAULT_BUDGET,
            psi: None,
            eps: None,
            delta: None,
            source: None,
            seed: None,
            symmetrize: false,
            phi: None,
            dense_cap: None,
            workers: None,
            tracking: Tracking::Auto,
            sample_size: None,
            strategy: None,
            source_fraction: None,
            outputs: Outputs::default(),
        }
    }

    /// Checks the invariants that do not need the input files.
    pub fn validate(&self) -> Result<(), String> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if (self.algorithm.is_rewiring() || self.algorithm == Algorithm::PprEval) && self.budget == 0 {
            return Err("budget must be at least 1".into());
        }
        if self.psi.is_some() && (self.eps.is_some() || self.delta.is_some()) {
            return Err("give either psi or eps/delta, not both".into());
        }
        if self.eps.is_some() != self.delta.is_some() {
            return Err("eps and delta must be given together".into());
        }
        if self.psi == Some(0) {
            return Err("psi must be at least 1".into());
        }
        if self.algorithm.is_personalized() && self.source.is_none() {
            return Err(format!("algorithm {} needs a source node", self.algorithm.as_str()));
        }
        if !self.algorithm.is_personalized() && self.source.is_some() {
            return Err(format!(
                "a source node only applies to exactv and fastv, not {}",
                self.algorithm.as_str()
            ));
        }
        if let Some(phi) = self.phi {
            if !(phi > 0.0 && phi <= 1.0) {
                return Err(format!("phi must lie in (0, 1], got {phi}"));
            }
        }
        if self.dense_cap == Some(0) {
            return Err("dense cap must be at least 1".into());
        }
        if self.workers == Some(0) {
            return Err("workers must be at least 1".into());
        }
        if self.sample_size.is_some() && self.algorithm != Algorithm::Correlate {
            return Err("sample_size only applies to correlate".into());
        }
        if self.sample_size == Some(0) {
            return Err("sample_size must be at least 1".into());
        }
        match (self.algorithm, self.strategy) {
            (Algorithm::PprEval, Some(s)) if !s.is_personalized() => {
                return Err(format!(
                    "ppr-eval drives exactv or fastv, not {}",
                    s.as_str()
                ));
            }
            (Algorithm::PprEval, _) => {}
            (_, Some(_)) => return Err("strategy only applies to ppr-eval".into()),
            _ => {}
        }
        if let Some(f) = self.source_fraction {
            if self.algorithm != Algorithm::PprEval {
                return Err("source_fraction only applies to ppr-eval".into());
            }
            if !(f > 0.0 && f <= 1.0) {
                return Err(format!("source_fraction must lie in (0, 1], got {f}"));
            }
        }
        Ok(())
    }

    /// Forests per round: explicit `psi`, else the Hoeffding count for `eps`/`delta`, else the default.
    pub fn resolved_psi(&self) -> Result<usize, String> {
        match (self.psi, self.eps, self.delta) {
            (Some(psi), _, _) => Ok(psi),
            (None, Some(eps), Some(delta)) => {
                required_samples(eps, delta).map_err(|e| e.to_string())
            }
            _ => Ok(DEFAULT_SAMPLES),
        }
    }

    /// The personalized strategy run by `ppr-eval`.
    pub fn ppr_strategy(&self) -> Algorithm {
        self.strategy.unwrap_or(Algorithm::Exactv)
    }

    /// Whether forests are sampled, so that `psi` matters. Audits sample
    /// only above the dense cap.
    pub fn uses_samples(&self) -> bool {
        self.algorithm.is_sampling()
            || (self.algorithm == Algorithm::PprEval && self.ppr_strategy() == Algorithm::Fastv)
    }
}

/// Values derived while running, echoed next to the configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_id: Option<usize>,
    pub nodes: usize,
    pub arcs: usize,
    pub group_size: usize,
    pub threshold: f64,
    /// Mass reported for sources inside the group by `ppr-eval`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_group_source_mass: Option<String>,
}

/// Echoed into every JSON output; `config` alone reproduces the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub config: RunConfig,
    pub resolved: Resolved,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(algorithm: Algorithm) -> RunConfig {
        RunConfig::new("g.txt".into(), "s.txt".into(), algorithm)
    }

    #[test]
    fn eps_delta_resolve_to_hoeffding_count() {
        let mut c = base(Algorithm::Fast);
        c.eps = Some(0.05);
        c.delta = Some(0.01);
        c.validate().unwrap();
        assert_eq!(c.resolved_psi().unwrap(), 1060);
    }

    #[test]
    fn psi_and_eps_conflict() {
        let mut c = base(Algorithm::Fast);
        c.psi = Some(10);
        c.eps = Some(0.05);
        c.delta = Some(0.01);
        assert!(c.validate().is_err());
    }

    #[test]
    fn source_iff_personalized() {
        assert!(base(Algorithm::Fastv).validate().is_err());
        let mut c = base(Algorithm::Exact);
        c.source = Some("1".into());
        assert!(c.validate().is_err());
        let mut c = base(Algorithm::Exactv);
        c.source = Some("1".into());
        assert!(c.validate().is_ok());
    }

    #[test]
    fn toml_round_trip() {
        let mut c = base(Algorithm::Fastv);
        c.source = Some("7".into());
        c.eps = Some(0.1);
        c.delta = Some(0.05);
        c.seed = Some(42);
        c.outputs.plan = Some("plan.csv".into());
        let text = toml::to_string(&c).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn defaults_fill_in() {
        let c: RunConfig = toml::from_str(
            "graph = \"g\"\ngroup = \"s\"\nalgorithm = \"sample-debug\"\n",
        )
        .unwrap();
        assert_eq!(c.alpha, 0.15);
        assert_eq!(c.budget, 50);
        assert_eq!(c.algorithm, Algorithm::SampleDebug);
        assert_eq!(c.resolved_psi().unwrap(), 1000);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let r: Result<RunConfig, _> =
            toml::from_str("graph = \"g\"\ngroup = \"s\"\nalgorithm = \"exact\"\nbudgett = 3\n");
        assert!(r.is_err());
    }
}
