//! Run configuration and its validation.

use std::path::{Path, PathBuf};

use combwalk::graph::{Metric, ProfileFamily, TeethProfile};
use combwalk::kernels::Normalization;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Build,
    Resistance,
    Kernel,
    Walk,
    Collide,
    Percolation,
    Experiment,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Build => "build",
            Command::Resistance => "resistance",
            Command::Kernel => "kernel",
            Command::Walk => "walk",
            Command::Collide => "collide",
            Command::Percolation => "percolation",
            Command::Experiment => "experiment",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GraphConfig {
    ZSegment {
        n: u64,
    },
    Z2Box {
        n: u64,
    },
    Gasket {
        level: u32,
    },
    /// Largest cluster of bond percolation on `{-n..n}²`, conditioned on
    /// containing the origin. Samples are drawn with the master seed and its
    /// successors.
    #[serde(rename_all = "camelCase")]
    Percolation {
        n: u64,
        p: f64,
        #[serde(default = "default_attempts")]
        max_attempts: usize,
    },
    /// Edge-list text file; relative paths resolve against the config file.
    File {
        path: PathBuf,
    },
}

fn default_attempts() -> usize {
    100
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub family: ProfileFamily,
    pub gamma: f64,
    #[serde(default = "default_metric")]
    pub metric: Metric,
}

fn default_metric() -> Metric {
    Metric::GraphDistance
}

impl ProfileConfig {
    pub fn teeth(&self) -> TeethProfile {
        TeethProfile { family: self.family, gamma: self.gamma, metric: self.metric, origin: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub master_seed: u64,
    pub graph: GraphConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gammas: Option<Vec<f64>>,
    /// Base vertex the walks start from; defaults to the origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<Normalization>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exit_radius: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kmax: Option<u64>,
    /// Number of percolation samples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn invalid(field: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("invalid config field `{field}`: {reason}"))
}

fn required<T: Copy>(field: &str, v: Option<T>) -> Result<T, CliError> {
    v.ok_or_else(|| invalid(field, "required by this command"))
}

fn positive(field: &str, v: Option<u64>) -> Result<u64, CliError> {
    match required(field, v)? {
        0 => Err(invalid(field, "must be positive")),
        x => Ok(x),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        if let GraphConfig::File { path: p } = &mut cfg.graph {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn horizon(&self) -> Result<u64, CliError> {
        positive("horizon", self.horizon)
    }

    pub fn trials(&self) -> Result<usize, CliError> {
        positive("trials", self.trials.map(|t| t as u64)).map(|t| t as usize)
    }

    pub fn profile(&self) -> Result<ProfileConfig, CliError> {
        required("profile", self.profile)
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization.unwrap_or(Normalization::DegreeNormalized)
    }

    /// Checks field ranges and that the command has what it needs.
    pub fn validate(&self) -> Result<(), CliError> {
        match &self.graph {
            GraphConfig::ZSegment { n } | GraphConfig::Z2Box { n } if *n == 0 => {
                return Err(invalid("graph.n", "must be positive"))
            }
            GraphConfig::Percolation { n, p, max_attempts } => {
                if *n == 0 {
                    return Err(invalid("graph.n", "must be positive"));
                }
                if !(0.0..=1.0).contains(p) {
                    return Err(invalid("graph.p", "must lie in [0, 1]"));
                }
                if *max_attempts == 0 {
                    return Err(invalid("graph.maxAttempts", "must be positive"));
                }
            }
            _ => {}
        }
        if let Some(p) = &self.profile {
            if !(p.gamma > 0.0 && p.gamma.is_finite()) {
                return Err(invalid("profile.gamma", "must be positive and finite"));
            }
        }
        match self.command {
            Command::Build => {}
            Command::Resistance => match &self.radii {
                Some(r) if r.is_empty() => return Err(invalid("radii", "empty list")),
                Some(r) if r.contains(&0) => return Err(invalid("radii", "radii must be positive")),
                Some(_) => {}
                None => return Err(invalid("radii", "required by this command")),
            },
            Command::Kernel => {
                self.horizon()?;
            }
            Command::Walk => {
                self.profile()?;
                self.trials()?;
                match (self.horizon, self.exit_radius) {
                    (Some(_), Some(_)) => return Err(invalid("exitRadius", "give either horizon or exitRadius")),
                    (None, None) => return Err(invalid("horizon", "walk needs horizon or exitRadius")),
                    (Some(_), None) => {
                        self.horizon()?;
                    }
                    (None, Some(_)) => {
                        positive("exitRadius", self.exit_radius)?;
                    }
                }
            }
            Command::Collide => {
                self.profile()?;
                self.horizon()?;
                self.trials()?;
            }
            Command::Percolation => {
                if !matches!(self.graph, GraphConfig::Percolation { .. }) {
                    return Err(invalid("graph.kind", "percolation command needs a percolation graph"));
                }
                positive("samples", self.samples.map(|s| s as u64))?;
            }
            Command::Experiment => {
                self.profile()?;
                self.horizon()?;
                self.trials()?;
                match &self.gammas {
                    Some(g) if g.is_empty() => return Err(invalid("gammas", "empty list")),
                    Some(g) if g.iter().any(|x| !(*x > 0.0 && x.is_finite())) => {
                        return Err(invalid("gammas", "exponents must be positive and finite"))
                    }
                    Some(_) => {}
                    None => return Err(invalid("gammas", "required by this command")),
                }
            }
        }
        Ok(())
    }
}
