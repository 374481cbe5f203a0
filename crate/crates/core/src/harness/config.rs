//! Experiment configuration.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::metrics::ErrorNorm;
use crate::error::{Error, Result};
use crate::poly_basis::BasisFamily;
use crate::sr_lasso::{CsConfig, CsSampling, LambdaPolicy, DEFAULT_BUDGET};
use crate::test_functions::Target;
use crate::weighted_ls::{AlsConfig, AlsSampling, Noise, Scaling};

pub const DEFAULT_TRIALS: usize = 50;
pub const DEFAULT_GRID_SIZE: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Als,
    Cs,
    CsChristoffel,
}

impl Method {
    pub fn id(self) -> &'static str {
        match self {
            Method::Als => "als",
            Method::Cs => "cs",
            Method::CsChristoffel => "cs-christoffel",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "als" => Ok(Method::Als),
            "cs" => Ok(Method::Cs),
            "cs-christoffel" => Ok(Method::CsChristoffel),
            _ => Err(Error::InvalidConfig(format!("unknown method `{s}`"))),
        }
    }
}

/// Everything that determines the rows of an experiment.
///
/// `threads`, `cache_dir` and `output` affect only how the run is executed
/// and where it is written, so they are not part of the serialized echo.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Target id as accepted by [`Target::parse`].
    pub function: String,
    pub dim: usize,
    pub family: BasisFamily,
    /// Sampling for ALS; CS sampling follows `method`.
    pub sampling: AlsSampling,
    pub method: Method,
    pub scaling: Scaling,
    pub beta: f64,
    /// ALS stops before any step that would need more samples.
    pub max_m: Option<usize>,
    pub max_steps: Option<usize>,
    pub anchored_growth: bool,
    /// Sample counts visited by CS, one row per entry.
    pub m_schedule: Vec<usize>,
    pub cs_budget: usize,
    pub lambda_policy: LambdaPolicy,
    pub noise: Noise,
    pub trials: usize,
    pub grid_size: usize,
    /// Norm used by summaries; rows carry both.
    pub error_norm: ErrorNorm,
    pub seed: u64,
    /// Separate evaluation grid; errors use the sampling grid when unset.
    pub error_grid_seed: Option<u64>,
    /// Record wall-clock time; rows carry 0 otherwise.
    pub timing: bool,
    #[serde(skip)]
    pub threads: Option<usize>,
    #[serde(skip)]
    pub cache_dir: Option<PathBuf>,
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    /// An ALS experiment up to `max_m` samples per step.
    pub fn als(function: &str, dim: usize, sampling: AlsSampling, max_m: usize) -> Self {
        Self {
            function: function.to_string(),
            dim,
            family: BasisFamily::Legendre,
            sampling,
            method: Method::Als,
            scaling: Scaling::Loglinear,
            beta: 0.5,
            max_m: Some(max_m),
            max_steps: None,
            anchored_growth: false,
            m_schedule: Vec::new(),
            cs_budget: DEFAULT_BUDGET,
            lambda_policy: LambdaPolicy::Table,
            noise: Noise::None,
            trials: DEFAULT_TRIALS,
            grid_size: DEFAULT_GRID_SIZE,
            error_norm: ErrorNorm::L2,
            seed: 0,
            error_grid_seed: None,
            timing: false,
            threads: None,
            cache_dir: None,
            output: None,
        }
    }

    /// A CS experiment over the given sample counts.
    pub fn cs(function: &str, dim: usize, method: Method, m_schedule: Vec<usize>) -> Self {
        Self {
            method,
            max_m: None,
            m_schedule,
            ..Self::als(function, dim, AlsSampling::MonteCarlo, 0)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.dim == 0 {
            return bad("dimension must be at least 1".into());
        }
        if self.grid_size == 0 {
            return bad("grid size must be at least 1".into());
        }
        if self.threads == Some(0) {
            return bad("thread count must be at least 1".into());
        }
        Target::parse(&self.function, self.dim)?;
        match self.method {
            Method::Als => {
                self.als_config().validate()?;
                if let Some(m) = self.max_m {
                    if m > self.grid_size {
                        return bad(format!("max m = {m} exceeds grid size {}", self.grid_size));
                    }
                }
            }
            Method::Cs | Method::CsChristoffel => {
                if self.m_schedule.is_empty() {
                    return bad("CS needs a non-empty m schedule".into());
                }
                if let Some(&m) = self.m_schedule.iter().find(|&&m| m == 0 || m > self.grid_size) {
                    return bad(format!("schedule entry m = {m} outside 1..={}", self.grid_size));
                }
                if self.cs_budget == 0 {
                    return bad("CS index budget must be at least 1".into());
                }
            }
        }
        Ok(())
    }

    /// Largest sample count any step may use.
    pub fn largest_m(&self) -> Option<usize> {
        match self.method {
            Method::Als => self.max_m,
            _ => self.m_schedule.iter().copied().max(),
        }
    }

    pub fn als_config(&self) -> AlsConfig {
        AlsConfig {
            beta: self.beta,
            max_m: self.max_m,
            max_steps: self.max_steps,
            anchored_growth: self.anchored_growth,
            noise: self.noise,
            ..AlsConfig::new(self.family, self.sampling, self.scaling)
        }
    }

    /// `None` for ALS.
    pub fn cs_config(&self) -> Option<CsConfig> {
        let sampling = match self.method {
            Method::Als => return None,
            Method::Cs => CsSampling::MonteCarlo,
            Method::CsChristoffel => CsSampling::Christoffel,
        };
        Some(CsConfig {
            budget: self.cs_budget,
            lambda_policy: self.lambda_policy,
            noise: self.noise,
            ..CsConfig::new(self.family, sampling)
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
