//! Experiment configuration, loaded from TOML. Every table and field is
//! optional; missing entries take the defaults of the full-scale setup.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::BenchmarkConfig;
use crate::channel::RadioConfig;
use crate::env::{EnvConfig, Environment};
use crate::error::{Error, Result};
use crate::policy::PolicyKind;
use crate::trainer::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Scenario {
    /// UEs never move.
    StaticUe,
    /// Group random-waypoint mobility at `env.ue_speed_mps`.
    MovingUe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PolicyName {
    DualAttention,
    SaPpo,
    Centralized,
    Random,
}

impl PolicyName {
    pub const ALL: [PolicyName; 4] = [PolicyName::DualAttention, PolicyName::SaPpo, PolicyName::Centralized, PolicyName::Random];

    /// The network architecture behind a learned policy.
    pub fn learned_kind(self) -> Option<PolicyKind> {
        match self {
            PolicyName::DualAttention => Some(PolicyKind::DualAttention),
            PolicyName::SaPpo => Some(PolicyKind::SaPpo),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyName::DualAttention => "DUAL_ATTENTION",
            PolicyName::SaPpo => "SA_PPO",
            PolicyName::Centralized => "CENTRALIZED",
            PolicyName::Random => "RANDOM",
        }
    }
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::StaticUe => "STATIC_UE",
            Scenario::MovingUe => "MOVING_UE",
        }
    }
}

impl fmt::Display for PolicyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == up)
            .ok_or_else(|| Error::Config(format!("unknown policy {s:?}; expected one of DUAL_ATTENTION, SA_PPO, CENTRALIZED, RANDOM")))
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().replace('-', "_").as_str() {
            "STATIC_UE" => Ok(Scenario::StaticUe),
            "MOVING_UE" => Ok(Scenario::MovingUe),
            _ => Err(Error::Config(format!("unknown scenario {s:?}; expected STATIC_UE or MOVING_UE"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub num_deployments: usize,
    /// Scenario used by `train` and `eval`.
    pub scenario: Scenario,
    /// Evaluation episode length in slots.
    pub horizon: usize,
    /// Policy trained or evaluated by `train` / `eval`.
    pub policy: PolicyName,
    /// Clustering periods swept for the centralized benchmark. When empty,
    /// `bench.tau_c` is used alone.
    pub tau_c: Vec<usize>,
    /// Policies and scenarios compared by `bench`.
    pub bench_policies: Vec<PolicyName>,
    pub bench_scenarios: Vec<Scenario>,
    pub out_dir: PathBuf,
    /// Checkpoint for the learned policy; defaults to
    /// `<out_dir>/<policy>.ckpt`.
    pub checkpoint: Option<PathBuf>,
    pub env: EnvConfig,
    pub radio: RadioConfig,
    pub train: TrainConfig,
    pub bench: BenchmarkConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            num_deployments: 50,
            scenario: Scenario::MovingUe,
            horizon: 200,
            policy: PolicyName::DualAttention,
            tau_c: vec![1, 10, 30, 200],
            bench_policies: PolicyName::ALL.to_vec(),
            bench_scenarios: vec![Scenario::StaticUe, Scenario::MovingUe],
            out_dir: PathBuf::from("out"),
            checkpoint: None,
            env: EnvConfig::default(),
            radio: RadioConfig::default(),
            train: TrainConfig::default(),
            bench: BenchmarkConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::ConfigParse { path: origin.to_path_buf(), message: e.to_string() })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, path)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.radio.validate()?;
        self.train.validate()?;
        self.bench.validate()?;
        if self.num_deployments == 0 {
            return Err(Error::Config("num_deployments must be >= 1".into()));
        }
        if self.tau_c.contains(&0) {
            return Err(Error::Config("every tau_c must be >= 1".into()));
        }
        Ok(())
    }

    /// The environment config with the scenario applied.
    pub fn scenario_env(&self, scenario: Scenario) -> EnvConfig {
        let mut env = self.env.clone();
        if scenario == Scenario::StaticUe {
            env.ue_speed_mps = 0.0;
        }
        env
    }

    pub fn build_env(&self, scenario: Scenario) -> Result<Environment> {
        Environment::new(self.scenario_env(scenario), self.radio.clone())
    }

    pub fn tau_c_list(&self) -> Vec<usize> {
        if self.tau_c.is_empty() {
            vec![self.bench.tau_c]
        } else {
            self.tau_c.clone()
        }
    }

    /// Training config for one learned policy.
    pub fn train_config(&self, kind: PolicyKind) -> TrainConfig {
        TrainConfig { policy_kind: kind, ..self.train.clone() }
    }

    /// Where the checkpoint of `policy` lives. An explicit `checkpoint`
    /// applies to the selected `policy` only.
    pub fn checkpoint_path(&self, policy: PolicyName) -> PathBuf {
        match &self.checkpoint {
            Some(p) if policy == self.policy => p.clone(),
            _ => self.out_dir.join(format!("{}.ckpt", policy.as_str().to_ascii_lowercase())),
        }
    }
}
