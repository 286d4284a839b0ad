//! The JSON configuration document. Every section is optional and falls
//! back to the `iter_hybrid` scenario; unknown keys are rejected.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::env::{ActionSpec, ControlChannel, EnvConfig, ObservationSpec, RewardSpec};
use crate::error::ConfigError;
use crate::iter_hybrid::{self, build_iter_hybrid_env};
use crate::policies::{PIGains, ReferenceTrajectory};
use crate::series::Breakpoints;
use crate::sim::{ProfileSet, SimConfig, SubstepMode};
use crate::tuning::GridSpec;

pub const BUILTIN_NAME: &str = "iter_hybrid";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvSection {
    pub initial_profiles: ProfileSet,
    pub horizon_steps: usize,
    pub control_interval_s: f64,
    pub substep_mode: SubstepMode,
    pub k_fixed: Option<usize>,
    pub uncontrolled_series: BTreeMap<ControlChannel, Breakpoints>,
    pub gamma: f64,
}

impl Default for EnvSection {
    fn default() -> Self {
        let e = build_iter_hybrid_env();
        Self {
            initial_profiles: e.initial_profiles,
            horizon_steps: e.horizon_steps,
            control_interval_s: e.control_interval_s,
            substep_mode: e.substep_mode,
            k_fixed: e.k_fixed,
            uncontrolled_series: e.uncontrolled_series,
            gamma: e.gamma,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoliciesSection {
    pub reference: ReferenceTrajectory,
    /// Absent: `compare` tunes the gains first and `run` uses the
    /// published gains.
    pub pi_gains: Option<PIGains>,
    pub random_episodes: usize,
    pub seed: u64,
}

impl Default for PoliciesSection {
    fn default() -> Self {
        Self {
            reference: ReferenceTrajectory::iter_hybrid(),
            pi_gains: None,
            random_episodes: 10,
            seed: 0,
        }
    }
}

fn default_actions() -> ActionSpec {
    iter_hybrid::action_spec()
}

fn default_observations() -> ObservationSpec {
    iter_hybrid::full_observation()
}

fn default_reward() -> RewardSpec {
    build_iter_hybrid_env().reward
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub env: EnvSection,
    #[serde(default = "default_actions")]
    pub actions: ActionSpec,
    #[serde(default = "default_observations")]
    pub observations: ObservationSpec,
    #[serde(default = "default_reward")]
    pub reward: RewardSpec,
    #[serde(default)]
    pub policies: PoliciesSection,
    #[serde(default)]
    pub tuning: GridSpec,
}

impl Default for ConfigFile {
    fn default() -> Self {
        Self::iter_hybrid()
    }
}

impl ConfigFile {
    pub fn iter_hybrid() -> Self {
        Self {
            sim: SimConfig::iter_like(),
            env: EnvSection::default(),
            actions: default_actions(),
            observations: default_observations(),
            reward: default_reward(),
            policies: PoliciesSection::default(),
            tuning: GridSpec::default(),
        }
    }

    /// Parses and validates.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| ConfigError::single(format!("parse: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn env_config(&self) -> EnvConfig {
        EnvConfig {
            sim: self.sim.clone(),
            initial_profiles: self.env.initial_profiles.clone(),
            horizon_steps: self.env.horizon_steps,
            control_interval_s: self.env.control_interval_s,
            substep_mode: self.env.substep_mode,
            k_fixed: self.env.k_fixed,
            action_spec: self.actions.clone(),
            observation_spec: self.observations.clone(),
            uncontrolled_series: self.env.uncontrolled_series.clone(),
            reward: self.reward.clone(),
            gamma: self.env.gamma,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut p = match self.env_config().validate() {
            Ok(()) => Vec::new(),
            Err(e) => e.problems,
        };
        p.extend(self.policies.reference.problems(&self.actions));
        if let Some(g) = self.policies.pi_gains {
            if !(g.k_p.is_finite() && g.k_i.is_finite()) {
                p.push("policies.pi_gains must be finite".into());
            }
        }
        if self.policies.random_episodes == 0 {
            p.push("policies.random_episodes must be >= 1".into());
        }
        p.extend(self.tuning.problems());
        ConfigError::check(p)
    }
}
