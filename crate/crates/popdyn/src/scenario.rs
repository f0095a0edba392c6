//! Scenario configuration: JSON schema, validation with key-level
//! error reporting, and a content hash for provenance.

use crate::model::{InfluencerParams, JumpFamily, SystemParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;
use thiserror::Error;

#[derive(Error, Debug)]
pub enum ScenarioError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid value for `{key}`: {reason}")]
    InvalidKey { key: String, reason: String },
}

fn invalid(key: impl Into<String>, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::InvalidKey {
        key: key.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSection {
    pub gamma: f64,
    pub theta: f64,
    pub epsilon: f64,
    pub mu: f64,
    /// Mean of the exogenous jump W; only used when `mu > 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_mean: Option<f64>,
    /// Coefficient of variation of W.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_cv: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSection {
    pub horizon_days: f64,
    pub burnin_frac: f64,
    pub replicas: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSection {
    pub ymin: f64,
    pub ymax: f64,
    pub nodes: usize,
    pub tol: f64,
    pub max_iter: usize,
}

/// Full scenario: system parameters, influencer roster, run controls,
/// and an optional solver grid (auto-sized when absent).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub system: SystemSection,
    pub influencers: Vec<InfluencerParams>,
    pub run: RunSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSection>,
}

impl Scenario {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let sc: Scenario = serde_json::from_str(text)?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.system_params()?;
        if self.influencers.is_empty() {
            return Err(invalid("influencers", "at least one influencer required"));
        }
        for (i, inf) in self.influencers.iter().enumerate() {
            inf.validate()
                .map_err(|e| invalid(format!("influencers[{i}]"), e.to_string()))?;
        }
        if !(self.run.horizon_days > 0.0) {
            return Err(invalid("run.horizon_days", "must be > 0"));
        }
        if !(0.0..1.0).contains(&self.run.burnin_frac) {
            return Err(invalid("run.burnin_frac", "must lie in [0, 1)"));
        }
        if self.run.replicas == 0 {
            return Err(invalid("run.replicas", "must be >= 1"));
        }
        if let Some(s) = &self.solver {
            if !(s.ymin > 0.0 && s.ymax > s.ymin) {
                return Err(invalid("solver.ymin/ymax", "need 0 < ymin < ymax"));
            }
            if s.nodes < 64 {
                return Err(invalid("solver.nodes", "must be >= 64"));
            }
            if !(s.tol > 0.0) {
                return Err(invalid("solver.tol", "must be > 0"));
            }
            if s.max_iter == 0 {
                return Err(invalid("solver.max_iter", "must be >= 1"));
            }
        }
        Ok(())
    }

    /// Converts the system section into validated [`SystemParams`],
    /// applying the optional exogenous-jump distribution.
    pub fn system_params(&self) -> Result<SystemParams, ScenarioError> {
        let s = &self.system;
        let mut sys = SystemParams::new(s.gamma, s.theta, s.epsilon, s.mu)
            .map_err(|e| invalid("system", e.to_string()))?;
        if let (Some(mean), cv) = (s.w_mean, s.w_cv.unwrap_or(1.0)) {
            sys.w_dist = crate::model::JumpDistribution::lognormal_with_mean(mean, cv)
                .map_err(|e| invalid("system.w_mean/w_cv", e.to_string()))?;
        }
        Ok(sys)
    }

    /// SHA-256 of the canonical JSON serialization, for provenance.
    pub fn config_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("scenario serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn burnin_days(&self) -> f64 {
        self.run.horizon_days * self.run.burnin_frac
    }
}

/// Reference five-influencer scenario: `beta_i = 0.9^{i-1}`,
/// `gamma = 1/64`, `theta = 0.6`, `epsilon = 0.01`, `lambda0 = 4`,
/// constant posting, lognormal jumps with CV 4.
pub fn reference_scenario() -> Scenario {
    Scenario {
        system: SystemSection {
            gamma: 1.0 / 64.0,
            theta: 0.6,
            epsilon: 0.01,
            mu: 0.0,
            w_mean: None,
            w_cv: None,
        },
        influencers: (0..5)
            .map(|i| InfluencerParams {
                beta: 0.9f64.powi(i),
                lambda0: 4.0,
                lambda1: 0.0,
                phi: 0.0,
                cv: 4.0,
                v_family: JumpFamily::Lognormal,
            })
            .collect(),
        run: RunSection {
            horizon_days: 2e5,
            burnin_frac: 0.1,
            replicas: 8,
            seed: 20240,
        },
        solver: None,
    }
}
