//! Experiment configuration (JSON) and the named presets.
//!
//! ```json
//! {
//!   "graph": { "random": { "n": 10, "extra_edge_prob": 0.15, "seed": 1 } },
//!   "objective": { "logistic": { "n": 10, "m": 10, "p": 3, "beta": 1.0, "seed": 1 } },
//!   "algorithm": "proposed",
//!   "alpha": 0.008,
//!   "push_step": 1.0,
//!   "max_iters": 5000,
//!   "record_every": 1,
//!   "out": "out"
//! }
//! ```
//!
//! `graph` is either `{"file": "graph.json"}` or `{"random": {...}}`;
//! `objective` is `{"file": "manifest.json"}`, `{"logistic": {...}}` or
//! `{"quadratic": {"n", "p", "seed"}}`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{io_context, CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSource {
    File(PathBuf),
    Random { n: usize, extra_edge_prob: f64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveSource {
    /// Dataset manifest written by `LogisticData::save`.
    File(PathBuf),
    Logistic { n: usize, m: usize, p: usize, beta: f64, seed: u64 },
    Quadratic { n: usize, p: usize, seed: u64 },
}

impl ObjectiveSource {
    fn set_seed(&mut self, new_seed: u64) {
        match self {
            ObjectiveSource::File(_) => {}
            ObjectiveSource::Logistic { seed, .. } | ObjectiveSource::Quadratic { seed, .. } => *seed = new_seed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Proposed,
    CentralizedGd,
    SubgradientPush,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Proposed, Algorithm::CentralizedGd, Algorithm::SubgradientPush];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Proposed => "proposed",
            Algorithm::CentralizedGd => "centralized_gd",
            Algorithm::SubgradientPush => "subgradient_push",
        }
    }

    /// Whether the algorithm runs with the constant step `alpha` (as opposed
    /// to the diminishing step `push_step / sqrt(k)`).
    pub fn constant_step(self) -> bool {
        !matches!(self, Algorithm::SubgradientPush)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| CliError::Usage(format!("unknown algorithm {s:?}")))
    }
}

fn default_push_step() -> f64 {
    1.0
}

fn default_record_every() -> usize {
    1
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graph: GraphSource,
    pub objective: ObjectiveSource,
    pub algorithm: Algorithm,
    pub alpha: f64,
    /// Constant `a` of the diminishing step `a / sqrt(k)`.
    #[serde(default = "default_push_step")]
    pub push_step: f64,
    pub max_iters: usize,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

pub const PRESETS: [&str; 2] = ["paper-logistic", "quadratic"];

impl ExperimentConfig {
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "paper-logistic" => Ok(Self {
                graph: GraphSource::Random { n: 10, extra_edge_prob: 0.15, seed: 1 },
                objective: ObjectiveSource::Logistic { n: 10, m: 10, p: 3, beta: 1.0, seed: 1 },
                algorithm: Algorithm::Proposed,
                alpha: 0.008,
                push_step: 1.0,
                max_iters: 5000,
                record_every: 1,
                out: default_out(),
            }),
            "quadratic" => Ok(Self {
                graph: GraphSource::Random { n: 5, extra_edge_prob: 0.25, seed: 1 },
                objective: ObjectiveSource::Quadratic { n: 5, p: 2, seed: 1 },
                algorithm: Algorithm::Proposed,
                alpha: 0.01,
                push_step: 1.0,
                max_iters: 2000,
                record_every: 1,
                out: default_out(),
            }),
            other => Err(CliError::UnknownPreset(other.to_string())),
        }
    }

    /// Reads a JSON config; relative paths inside it, including `out`, are
    /// resolved against the config file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(io_context(format!("reading {}", path.display())))?;
        let mut config: Self = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let GraphSource::File(p) = &mut config.graph {
            *p = base.join(&*p);
        }
        if let ObjectiveSource::File(p) = &mut config.objective {
            *p = base.join(&*p);
        }
        config.out = base.join(&config.out);
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Overrides the data-generation seed (no effect for file objectives).
    pub fn set_seed(&mut self, seed: u64) {
        self.objective.set_seed(seed);
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(CliError::Config("max_iters must be at least 1".into()));
        }
        if self.record_every == 0 {
            return Err(CliError::Config("record_every must be at least 1".into()));
        }
        let step = if self.algorithm.constant_step() { ("alpha", self.alpha) } else { ("push_step", self.push_step) };
        if !(step.1 > 0.0 && step.1.is_finite()) {
            return Err(CliError::Config(format!("{} must be positive, got {}", step.0, step.1)));
        }
        if let GraphSource::Random { n, extra_edge_prob, .. } = self.graph {
            if n == 0 || !(0.0..=1.0).contains(&extra_edge_prob) {
                return Err(CliError::Config(format!("bad random graph parameters n={n} p={extra_edge_prob}")));
            }
        }
        match self.objective {
            ObjectiveSource::Logistic { n, m, p, beta, .. } => {
                if n == 0 || m == 0 || p == 0 || beta.is_nan() || beta <= 0.0 {
                    return Err(CliError::Config("logistic generator needs n, m, p >= 1 and beta > 0".into()));
                }
            }
            ObjectiveSource::Quadratic { n, p, .. } => {
                if n == 0 || p == 0 {
                    return Err(CliError::Config("quadratic generator needs n, p >= 1".into()));
                }
            }
            ObjectiveSource::File(_) => {}
        }
        Ok(())
    }
}
