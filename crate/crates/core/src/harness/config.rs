// Copyright 2026 The dpcusum Authors
// SPDX-License-Identifier: Apache-2.0

use super::estimate::arl_horizon;
use crate::detect::DetectorSpec;
use crate::error::{Error, Result};
use crate::model::ModelPair;
use serde::{Deserialize, Serialize};

fn default_trials() -> u64 {
    10_000
}

/// Experiment description, as read from a JSON config file.
///
/// ```
/// use dpcusum::harness::ExperimentConfig;
///
/// let cfg = ExperimentConfig::from_json(r#"{
///     "model": {"kind": "laplace_shift", "mu": 0.2},
///     "detectors": [{"variant": "cusum"}, {"variant": "dp_cusum", "epsilon": 0.8}],
///     "thresholds": [4, 6, 8],
///     "trials": 2000,
///     "horizon": 1000000,
///     "seed": 7
/// }"#).unwrap();
/// assert_eq!(cfg.detectors.len(), 2);
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelPair>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub detectors: Vec<DetectorSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub thresholds: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Common ARL values for matched-delay comparisons.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arl_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heatmap: Option<HeatmapSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<AuditSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatmapSection {
    pub mu: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditSection {
    /// Stream bits as 0/1.
    pub stream: Vec<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neighbor_index: Option<usize>,
    pub epsilon: f64,
    pub b: f64,
    pub noise_draws: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: None,
            detectors: Vec::new(),
            thresholds: Vec::new(),
            gamma: None,
            trials: default_trials(),
            horizon: None,
            seed: None,
            arl_grid: None,
            heatmap: None,
            audit: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.horizon == Some(0) {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if let Some(g) = self.gamma {
            if !(g.is_finite() && g >= 1.0) {
                return Err(Error::Config(format!("gamma must be ≥ 1, got {g}")));
            }
        }
        if self.thresholds.iter().any(|b| b.is_nan()) {
            return Err(Error::Config("thresholds must not be NaN".into()));
        }
        if let Some(model) = &self.model {
            // Resolve each detector once so configuration errors surface early.
            for d in &self.detectors {
                d.resolve(model, 1.0)?;
            }
        } else if !self.detectors.is_empty() {
            return Err(Error::Config("detectors given without a model".into()));
        }
        if let Some(a) = &self.audit {
            if a.stream.iter().any(|&b| b > 1) {
                return Err(Error::Config("audit stream must contain only 0 and 1".into()));
            }
        }
        Ok(())
    }

    pub fn require_model(&self) -> Result<ModelPair> {
        self.model
            .ok_or_else(|| Error::Config("config has no `model`".into()))
    }

    /// Horizon in effect: the configured one, else the ARL censoring rule.
    pub fn effective_horizon(&self) -> u64 {
        self.horizon
            .unwrap_or_else(|| arl_horizon(self.gamma.unwrap_or(1.0)))
    }
}
