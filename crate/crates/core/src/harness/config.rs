use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corral::{EtaRule, MasterConstants, ScheduledCorralConfig, SmoothCorralConfig};
use crate::error::{Error, Result};
use crate::plusplus::{NormBound, PlusPlusConfig};
use crate::policies::LinUcbParams;

/// Registered algorithms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "linucb++")]
    LinUcbPlusPlus,
    #[serde(rename = "linucb")]
    LinUcb,
    /// LinUCB restricted to the first `d_star` coordinates.
    #[serde(rename = "oracle")]
    Oracle,
    #[serde(rename = "smooth-corral")]
    SmoothCorral,
    /// LinUCB++ schedule with a corral of LinUCB and UCB-over-mixtures per iteration.
    #[serde(rename = "corral-schedule")]
    CorralSchedule,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::LinUcbPlusPlus,
        Algorithm::LinUcb,
        Algorithm::Oracle,
        Algorithm::SmoothCorral,
        Algorithm::CorralSchedule,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::LinUcbPlusPlus => "linucb++",
            Algorithm::LinUcb => "linucb",
            Algorithm::Oracle => "oracle",
            Algorithm::SmoothCorral => "smooth-corral",
            Algorithm::CorralSchedule => "corral-schedule",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm {s:?}")))
    }
}

/// One intrinsic dimension or a grid of them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DStar {
    One(usize),
    Many(Vec<usize>),
}

impl DStar {
    pub fn values(&self) -> Vec<usize> {
        match self {
            DStar::One(v) => vec![*v],
            DStar::Many(v) => v.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedRule {
    /// `1 / sqrt(ceil(log2 d) T)`.
    LogDim,
    /// `T^(-beta)`.
    HorizonPower,
    /// `2 ln T` for the lifted parameter norm.
    Log,
    /// `1 + (i - 1)` in iteration `i`.
    Iteration,
}

/// A named rule or a literal value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RuleOrValue {
    Value(f64),
    Named(NamedRule),
}

/// Flat experiment description; every key of a config file maps to a field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// `T`.
    pub horizon: usize,
    /// `K`.
    pub arms: usize,
    /// Ambient `d`.
    pub dim: usize,
    pub d_star: DStar,
    pub noise_std: f64,
    pub lambda: f64,
    pub beta: f64,
    pub eta_rule: RuleOrValue,
    pub trials: usize,
    pub seed: u64,
    pub algorithms: Vec<Algorithm>,
    /// Close the sampled arms under truncation and run LinUCB++ in expressive mode.
    pub expressive: bool,
    pub output: Option<PathBuf>,
    pub width_scale: f64,
    pub noise_scaled: bool,
    pub norm_bound: RuleOrValue,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            horizon: 2500,
            arms: 1000,
            dim: 500,
            d_star: DStar::One(12),
            noise_std: 0.1,
            lambda: 0.1,
            beta: 0.5,
            eta_rule: RuleOrValue::Named(NamedRule::LogDim),
            trials: 20,
            seed: 0,
            algorithms: vec![
                Algorithm::LinUcbPlusPlus,
                Algorithm::LinUcb,
                Algorithm::Oracle,
                Algorithm::SmoothCorral,
            ],
            expressive: false,
            output: None,
            width_scale: 1.0,
            noise_scaled: true,
            norm_bound: RuleOrValue::Named(NamedRule::Iteration),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.horizon < 2 {
            return bad(format!("horizon {} < 2", self.horizon));
        }
        if self.arms == 0 || self.dim == 0 {
            return bad("arms and dim must be positive".into());
        }
        let ds = self.d_star.values();
        if ds.is_empty() {
            return bad("d_star grid is empty".into());
        }
        if let Some(&bad_ds) = ds.iter().find(|&&v| v == 0 || v > self.dim) {
            return bad(format!("d_star {bad_ds} outside 1..={}", self.dim));
        }
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        if self.algorithms.is_empty() {
            return bad("no algorithms configured".into());
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return bad(format!("noise_std {} must be >= 0", self.noise_std));
        }
        if !(0.5..1.0).contains(&self.beta) {
            return bad(format!("beta {} outside [1/2, 1)", self.beta));
        }
        match self.eta_rule {
            RuleOrValue::Named(NamedRule::LogDim | NamedRule::HorizonPower) => {}
            RuleOrValue::Value(v) if v > 0.0 && v.is_finite() => {}
            other => return bad(format!("eta_rule {other:?} is not a learning-rate rule")),
        }
        match self.norm_bound {
            RuleOrValue::Named(NamedRule::Log | NamedRule::Iteration) => {}
            RuleOrValue::Value(v) if v >= 0.0 && v.is_finite() => {}
            other => return bad(format!("norm_bound {other:?} is not a norm rule")),
        }
        self.linucb().validate().map_err(|e| Error::Config(e.to_string()))
    }

    pub fn linucb(&self) -> LinUcbParams {
        LinUcbParams {
            lambda: self.lambda,
            delta: None,
            width_scale: self.width_scale,
            noise_scaled: self.noise_scaled,
        }
    }

    pub fn plus_plus(&self) -> PlusPlusConfig {
        PlusPlusConfig {
            beta: self.beta,
            linucb: self.linucb(),
            norm_bound: match self.norm_bound {
                RuleOrValue::Named(NamedRule::Log) => NormBound::Log,
                RuleOrValue::Value(v) => NormBound::Fixed(v),
                _ => NormBound::Iteration,
            },
            expressive: self.expressive,
        }
    }

    pub fn smooth_corral(&self) -> SmoothCorralConfig {
        SmoothCorralConfig {
            base_dims: None,
            eta: match self.eta_rule {
                RuleOrValue::Named(NamedRule::HorizonPower) => EtaRule::PowerOfHorizon(self.beta),
                RuleOrValue::Value(v) => EtaRule::Fixed(v),
                _ => EtaRule::LogDim,
            },
            master: MasterConstants::default(),
            linucb: self.linucb(),
        }
    }

    pub fn corral_schedule(&self) -> ScheduledCorralConfig {
        ScheduledCorralConfig {
            beta: self.beta,
            master: MasterConstants::default(),
            linucb: self.linucb(),
        }
    }

    /// SHA-256 of the canonical JSON form, hex encoded. The output path is
    /// excluded so moving results does not change their identity.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = None;
        let json = serde_json::to_string(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}
