//! Experiment configuration: a JSON document with a pinned schema. Unknown
//! keys are rejected so that typos fail loudly instead of silently running a
//! different experiment.

use std::path::Path;

use serde::Deserialize;

use rumorwave::awareness::{AwarenessDistribution, DistributionKind};
use rumorwave::limits::LimitInitialCondition;

use crate::CliError;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: String,
    pub distribution: Option<DistributionSpec>,
    pub initial: Option<InitialSpec>,
    pub grid: Option<GridSpec>,
    pub populations: Option<Vec<u64>>,
    pub seeds: Option<SeedsSpec>,
    pub tolerances: Option<TolerancesSpec>,
    pub sweep: Option<SweepSpec>,
    pub report_listeners: Option<u32>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase", deny_unknown_fields)]
pub enum DistributionSpec {
    Poisson { lambda: f64 },
    Zeta { s: f64 },
    Uniform { k: u32 },
    Dirac { k: u32 },
    Custom { p: Vec<f64> },
}

impl DistributionSpec {
    pub fn build(&self) -> Result<AwarenessDistribution, CliError> {
        let kind = match self {
            Self::Poisson { lambda } => DistributionKind::Poisson { lambda: *lambda },
            Self::Zeta { s } => DistributionKind::Zeta { s: *s },
            Self::Uniform { k } => DistributionKind::Uniform { k: *k },
            Self::Dirac { k } => DistributionKind::Dirac { k: *k },
            Self::Custom { p } => DistributionKind::Custom { p: p.clone() },
        };
        AwarenessDistribution::new(kind).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn kind_label(&self) -> &'static str {
        match self {
            Self::Poisson { .. } => "poisson",
            Self::Zeta { .. } => "zeta",
            Self::Uniform { .. } => "uniform",
            Self::Dirac { .. } => "dirac",
            Self::Custom { .. } => "custom",
        }
    }

    pub fn params_label(&self) -> String {
        match self {
            Self::Poisson { lambda } => format!("lambda={lambda}"),
            Self::Zeta { s } => format!("s={s}"),
            Self::Uniform { k } => format!("k={k}"),
            Self::Dirac { k } => format!("k={k}"),
            Self::Custom { p } => {
                let entries: Vec<String> = p.iter().map(|v| v.to_string()).collect();
                format!("p=[{}]", entries.join(" "))
            }
        }
    }

    /// Rebuild this spec with a new scalar parameter (used by sweeps).
    pub fn with_param(&self, value: f64) -> Result<Self, CliError> {
        Ok(match self {
            Self::Poisson { .. } => Self::Poisson { lambda: value },
            Self::Zeta { .. } => Self::Zeta { s: value },
            Self::Uniform { .. } => Self::Uniform { k: value.round() as u32 },
            Self::Dirac { .. } => Self::Dirac { k: value.round() as u32 },
            Self::Custom { .. } => {
                return Err(CliError::Config(
                    "sweeps need a one-parameter family, not a custom vector".into(),
                ))
            }
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum InitialSpec {
    Named(String),
    Explicit {
        #[serde(default)]
        y0: f64,
        x0: Vec<f64>,
    },
}

impl InitialSpec {
    pub fn build(&self) -> Result<LimitInitialCondition, CliError> {
        match self {
            Self::Named(name) if name == "standard" => Ok(LimitInitialCondition::standard()),
            Self::Named(other) => {
                Err(CliError::Config(format!("unknown initial condition '{other}'")))
            }
            Self::Explicit { y0, x0 } => LimitInitialCondition::new(*y0, x0.clone())
                .map_err(|e| CliError::Config(e.to_string())),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default)]
    pub start: f64,
    pub stop: Option<f64>,
    pub step: f64,
}

impl GridSpec {
    /// Arithmetic grid `start, start+step, …` up to and including `stop`
    /// (within a half-step of rounding). Empty when `stop < start`.
    pub fn points(&self, stop_default: f64) -> Result<Vec<f64>, CliError> {
        if self.step <= 0.0 || !self.step.is_finite() {
            return Err(CliError::Config(format!("grid step must be positive, got {}", self.step)));
        }
        let stop = self.stop.unwrap_or(stop_default);
        let mut out = Vec::new();
        let mut i = 0u64;
        loop {
            let z = self.start + i as f64 * self.step;
            if z > stop + self.step * 1e-9 {
                break;
            }
            out.push(z);
            i += 1;
            if i > 50_000_000 {
                return Err(CliError::Config("grid has more than 5e7 points".into()));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SeedsSpec {
    List(Vec<u64>),
    Stream { base: u64, count: u32 },
}

impl SeedsSpec {
    /// Materialize the seed list; `--seed-base` replaces the stream base (or
    /// re-derives an explicit list of the same length).
    pub fn resolve(&self, seed_base: Option<u64>) -> Vec<u64> {
        match (self, seed_base) {
            (Self::List(seeds), None) => seeds.clone(),
            (Self::List(seeds), Some(base)) => {
                (0..seeds.len() as u64).map(|k| rumorwave::ddpm::stream_seed(base, k)).collect()
            }
            (Self::Stream { base, count }, override_base) => {
                let base = override_base.unwrap_or(*base);
                (0..u64::from(*count)).map(|k| rumorwave::ddpm::stream_seed(base, k)).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesSpec {
    pub cell: Option<f64>,
    pub heavy_tail: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SweepSpec {
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        if self.step <= 0.0 || !self.step.is_finite() {
            return Err(CliError::Config(format!(
                "sweep step must be positive, got {}",
                self.step
            )));
        }
        let mut out = Vec::new();
        let mut i = 0u64;
        loop {
            let v = self.start + i as f64 * self.step;
            if v > self.stop + self.step * 1e-9 {
                break;
            }
            out.push(v);
            i += 1;
            if i > 10_000_000 {
                return Err(CliError::Config("sweep has more than 1e7 points".into()));
            }
        }
        if out.is_empty() {
            return Err(CliError::Config("sweep grid is empty".into()));
        }
        Ok(out)
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let config: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))?;
        if config.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported schema_version '{}', expected '{SCHEMA_VERSION}'",
                config.schema_version
            )));
        }
        Ok(config)
    }

    pub fn distribution(&self) -> Result<&DistributionSpec, CliError> {
        self.distribution
            .as_ref()
            .ok_or_else(|| CliError::Config("config needs a 'distribution' entry".into()))
    }

    pub fn initial(&self) -> Result<LimitInitialCondition, CliError> {
        match &self.initial {
            None => Ok(LimitInitialCondition::standard()),
            Some(spec) => spec.build(),
        }
    }

    pub fn report_listeners(&self) -> u32 {
        self.report_listeners.unwrap_or(3).max(1)
    }
}
