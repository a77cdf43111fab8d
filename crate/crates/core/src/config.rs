//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "seed": 7,
//!   "theta": 0.5,
//!   "sensors": [{"h": 1.0, "tau": null, "pe": 0.0, "noise": {"type": "gaussian", "scale": 1.0}}],
//!   "replicate": 30,
//!   "trials": 100000,
//!   "statistics": ["rao", "glrt"],
//!   "pfa_grid": [0.01, 0.05, 0.1],
//!   "pfa_target": 0.1,
//!   "k_sweep": [10, 20, 30],
//!   "pe_sweep": [0.0, 0.2],
//!   "snr": {"mean_snr_db": 0.0, "h_law": "uniform", "unit_noise_power": true}
//! }
//! ```
//!
//! Only `theta` and `sensors` are required. A null `tau` is filled in by the
//! threshold designer. `replicate` repeats the sensor list that many times.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::StatisticKind;
use crate::network::check_pe;
use crate::noise::NoiseModel;

/// A sensor as written in a config file; `tau: None` means "design it".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    #[serde(default = "one")]
    pub h: f64,
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub pe: f64,
    pub noise: NoiseModel,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HLaw {
    /// Every `h_k` set so that `Γ_k = Γ̄`.
    Fixed,
    /// `h_k ~ U(0, a)`, drawn once per experiment.
    Uniform,
}

/// SNR-driven gain construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnrSpec {
    pub mean_snr_db: f64,
    pub h_law: HLaw,
    #[serde(default = "yes")]
    pub unit_noise_power: bool,
}

fn yes() -> bool {
    true
}

pub const DEFAULT_TRIALS: usize = 100_000;
pub const DEFAULT_PFA_TARGET: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    pub theta: f64,
    pub sensors: Vec<SensorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicate: Option<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_statistics")]
    pub statistics: Vec<StatisticKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pfa_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pfa_target: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_sweep: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pe_sweep: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr: Option<SnrSpec>,
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

fn default_statistics() -> Vec<StatisticKind> {
    vec![StatisticKind::Rao, StatisticKind::Glrt]
}

impl ExperimentConfig {
    /// A config with defaults for everything but `theta` and `sensors`.
    pub fn new(theta: f64, sensors: Vec<SensorConfig>) -> Self {
        Self {
            seed: None,
            theta,
            sensors,
            replicate: None,
            trials: DEFAULT_TRIALS,
            statistics: default_statistics(),
            pfa_grid: None,
            pfa_target: None,
            k_sweep: None,
            pe_sweep: None,
            snr: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// The sensor list with `replicate` expanded.
    pub fn expanded_sensors(&self) -> Vec<SensorConfig> {
        let n = self.replicate.unwrap_or(1);
        let mut out = Vec::with_capacity(self.sensors.len() * n);
        for _ in 0..n {
            out.extend_from_slice(&self.sensors);
        }
        out
    }

    pub fn pfa_target(&self) -> f64 {
        self.pfa_target.unwrap_or(DEFAULT_PFA_TARGET)
    }

    /// The ROC grid: `pfa_grid` if given, else 0.01, 0.02, …, 0.99.
    pub fn pfa_grid(&self) -> Vec<f64> {
        self.pfa_grid
            .clone()
            .unwrap_or_else(|| (1..100).map(|i| i as f64 / 100.0).collect())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !self.theta.is_finite() {
            return bad(format!("theta must be finite, got {}", self.theta));
        }
        if self.sensors.is_empty() {
            return bad("sensors must be non-empty".into());
        }
        if self.replicate == Some(0) {
            return bad("replicate must be at least 1".into());
        }
        for (i, s) in self.sensors.iter().enumerate() {
            let ctx = |e: Error| Error::Config(format!("sensor {i}: {e}"));
            if !s.h.is_finite() {
                return bad(format!("sensor {i}: h must be finite"));
            }
            if let Some(t) = s.tau {
                if !t.is_finite() {
                    return bad(format!("sensor {i}: tau must be finite"));
                }
            }
            check_pe(s.pe).map_err(ctx)?;
            s.noise.validated().map_err(ctx)?;
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.statistics.is_empty() {
            return bad("statistics must be non-empty".into());
        }
        let in_unit = |p: &f64| *p > 0.0 && *p < 1.0;
        if let Some(g) = &self.pfa_grid {
            if g.is_empty() || !g.iter().all(in_unit) {
                return bad("pfa_grid values must lie in (0, 1)".into());
            }
        }
        if let Some(p) = self.pfa_target {
            if !in_unit(&p) {
                return bad(format!("pfa_target must lie in (0, 1), got {p}"));
            }
        }
        if let Some(ks) = &self.k_sweep {
            if ks.is_empty() || ks.contains(&0) {
                return bad("k_sweep entries must be at least 1".into());
            }
        }
        if let Some(pes) = &self.pe_sweep {
            for &pe in pes {
                check_pe(pe).map_err(|e| Error::Config(format!("pe_sweep: {e}")))?;
            }
        }
        if let Some(snr) = &self.snr {
            if !snr.mean_snr_db.is_finite() {
                return bad("mean_snr_db must be finite".into());
            }
            if self.theta == 0.0 {
                return bad("an SNR block needs theta != 0".into());
            }
        }
        Ok(())
    }
}
