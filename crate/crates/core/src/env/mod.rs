//! Episodic control environment around the transport surrogate.
//!
//! An [`Environment`] owns one episode: it clips the agent's action, merges
//! it with the prescribed series for uncontrolled inputs, advances the
//! simulator over one control interval and scores the resulting state.
//! A solver failure ends the episode with [`TERMINATION_REWARD`].

mod action;
mod observation;
mod trajectory;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use action::{clip_action, ActionChannel, ActionSpec, ActionVector, ClippedAction, ControlChannel};
pub use observation::{normalize_observation, ObservationSpec, ObservedField, ObservedQuantity};
pub use trajectory::{RecordBuffer, TrajectoryRecord, TrajectorySink};

use crate::error::{ConfigError, EnvError};
use crate::iter_hybrid::IterHybridReward;
use crate::series::Breakpoints;
use crate::sim::{
    advance, compute_derived, init_state, Controls, DerivedQuantities, PlasmaState, ProfileSet,
    SimConfig, SimError, SubstepMode,
};

/// Reward returned on the step where the simulation fails.
pub const TERMINATION_REWARD: f64 = -1000.0;

/// What the reward hook sees after a successful transition.
#[derive(Debug, Clone, Copy)]
pub struct RewardContext<'a> {
    pub state: &'a PlasmaState,
    pub derived: &'a DerivedQuantities,
    pub controls: &'a Controls,
    pub applied: &'a ActionVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RewardSpec {
    IterHybrid(IterHybridReward),
    /// Same reward on every non-terminal step.
    Constant { value: f64 },
}

impl RewardSpec {
    pub fn reward(&self, ctx: &RewardContext<'_>) -> f64 {
        match self {
            RewardSpec::IterHybrid(r) => r.reward(ctx.derived),
            RewardSpec::Constant { value } => *value,
        }
    }

    pub fn problems(&self) -> Vec<String> {
        match self {
            RewardSpec::IterHybrid(r) => r.problems(),
            RewardSpec::Constant { value } if !value.is_finite() => {
                vec!["reward.value must be finite".into()]
            }
            RewardSpec::Constant { .. } => Vec::new(),
        }
    }
}

/// Complete MDP definition: simulator, initial state, horizon, spaces,
/// prescribed inputs, reward and discount.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub sim: SimConfig,
    pub initial_profiles: ProfileSet,
    pub horizon_steps: usize,
    pub control_interval_s: f64,
    pub substep_mode: SubstepMode,
    #[serde(default)]
    pub k_fixed: Option<usize>,
    pub action_spec: ActionSpec,
    pub observation_spec: ObservationSpec,
    /// Time series for every input the agent does not control.
    #[serde(default)]
    pub uncontrolled_series: BTreeMap<ControlChannel, Breakpoints>,
    pub reward: RewardSpec,
    pub gamma: f64,
}

impl EnvConfig {
    /// Collects every violated invariant, including whether `s_0` can be
    /// built from the initial profiles.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut p = self.sim.problems();
        if self.horizon_steps == 0 {
            p.push("env.horizon_steps must be >= 1".into());
        }
        if !(self.control_interval_s.is_finite() && self.control_interval_s > 0.0) {
            p.push(format!(
                "env.control_interval_s must be > 0, got {}",
                self.control_interval_s
            ));
        }
        if self.substep_mode == SubstepMode::Fixed && self.k_fixed == Some(0) {
            p.push("env.k_fixed must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            p.push(format!("env.gamma must lie in [0, 1], got {}", self.gamma));
        }
        p.extend(self.action_spec.problems());
        p.extend(self.observation_spec.problems());
        p.extend(self.reward.problems());
        for ch in ControlChannel::ALL {
            let controlled = self.action_spec.index_of(ch).is_some();
            let prescribed = self.uncontrolled_series.contains_key(&ch);
            match (controlled, prescribed) {
                (true, true) => p.push(format!(
                    "{} is both an action and an uncontrolled series",
                    ch.name()
                )),
                (false, false) => p.push(format!(
                    "{} is neither an action nor an uncontrolled series",
                    ch.name()
                )),
                _ => {}
            }
        }
        for (ch, series) in &self.uncontrolled_series {
            let name = format!("env.uncontrolled_series.{}", ch.name());
            p.extend(series.problems(&name));
            if series.values().any(|v| v < 0.0) {
                p.push(format!("{name} must be >= 0"));
            }
        }
        if p.is_empty() {
            if let Err(e) = self.initial_state() {
                p.push(format!("initial state: {e}"));
            }
        }
        ConfigError::check(p)
    }

    /// Controls in force before the first action: the initial current plus
    /// prescribed values at `t = 0`, zero for unprescribed powers.
    pub fn initial_controls(&self) -> Controls {
        let mut c = Controls {
            i_p: self.initial_profiles.i_p_ma,
            p_nbi: 0.0,
            p_ecrh: 0.0,
        };
        for (ch, series) in &self.uncontrolled_series {
            ch.set(&mut c, series.sample(0.0));
        }
        c
    }

    fn initial_state(&self) -> Result<(PlasmaState, DerivedQuantities), SimError> {
        let s0 = init_state(&self.sim, &self.initial_profiles.resolve(&self.sim.grid))?;
        let d0 = compute_derived(&s0, &self.initial_controls(), &self.sim)?;
        Ok((s0, d0))
    }

    /// Agent actions merged with the prescribed inputs sampled at `t`.
    pub fn controls_at(&self, applied: &ActionVector, t: f64) -> Controls {
        let mut c = self.initial_controls();
        for (ch, v) in self.action_spec.channels.iter().zip(applied.values()) {
            ch.channel.set(&mut c, *v);
        }
        for (ch, series) in &self.uncontrolled_series {
            ch.set(&mut c, series.sample(t));
        }
        c
    }
}

/// Diagnostics attached to every step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub action_clipped: bool,
    pub ramp_limited: bool,
    pub n_substeps: usize,
    pub dt_used_s: Vec<f64>,
    /// State after the step (the last valid state if it terminated).
    pub state: PlasmaState,
    pub derived: Option<DerivedQuantities>,
    pub applied: ActionVector,
    /// Why the episode terminated, if it did.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub info: StepInfo,
    pub record: TrajectoryRecord,
}

pub struct Environment {
    config: EnvConfig,
    initial: (PlasmaState, DerivedQuantities),
    state: PlasmaState,
    derived: DerivedQuantities,
    controls: Controls,
    previous: ActionVector,
    steps: usize,
    done: bool,
    sink: Option<Box<dyn TrajectorySink>>,
}

impl std::fmt::Debug for Environment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Environment")
            .field("t", &self.state.t)
            .field("steps", &self.steps)
            .field("done", &self.done)
            .finish_non_exhaustive()
    }
}

impl Environment {
    /// Validates `config` and places the environment at `s_0`.
    pub fn new(config: EnvConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let initial = config
            .initial_state()
            .map_err(|e| ConfigError::single(format!("initial state: {e}")))?;
        let controls = config.initial_controls();
        let previous = ActionVector(
            config
                .action_spec
                .channels
                .iter()
                .map(|c| c.channel.get(&controls))
                .collect(),
        );
        Ok(Self {
            state: initial.0.clone(),
            derived: initial.1.clone(),
            initial,
            controls,
            previous,
            steps: 0,
            done: false,
            sink: None,
            config,
        })
    }

    pub fn attach_sink(&mut self, sink: Box<dyn TrajectorySink>) {
        self.sink = Some(sink);
    }

    pub fn detach_sink(&mut self) -> Option<Box<dyn TrajectorySink>> {
        self.sink.take()
    }

    /// Returns to `s_0` and the initial controls.
    pub fn reset(&mut self) -> (Vec<f64>, StepInfo) {
        self.state = self.initial.0.clone();
        self.derived = self.initial.1.clone();
        self.controls = self.config.initial_controls();
        self.previous = ActionVector(
            self.config
                .action_spec
                .channels
                .iter()
                .map(|c| c.channel.get(&self.controls))
                .collect(),
        );
        self.steps = 0;
        self.done = false;
        let info = StepInfo {
            action_clipped: false,
            ramp_limited: false,
            n_substeps: 0,
            dt_used_s: Vec::new(),
            state: self.state.clone(),
            derived: Some(self.derived.clone()),
            applied: self.previous.clone(),
            failure: None,
        };
        (self.observation(), info)
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn state(&self) -> &PlasmaState {
        &self.state
    }

    pub fn derived(&self) -> &DerivedQuantities {
        &self.derived
    }

    pub fn time(&self) -> f64 {
        self.state.t
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// The action applied on the previous step (initial controls before the
    /// first step).
    pub fn previous_action(&self) -> &ActionVector {
        &self.previous
    }

    pub fn observation(&self) -> Vec<f64> {
        normalize_observation(
            &self.state,
            &self.derived,
            &self.controls,
            self.state.t,
            &self.config.observation_spec,
        )
    }

    pub fn step(&mut self, requested: &ActionVector) -> Result<StepResult, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeOver);
        }
        let expected = self.config.action_spec.len();
        if requested.len() != expected {
            return Err(EnvError::ActionMismatch {
                expected,
                found: requested.len(),
            });
        }
        if let Some(index) = requested.values().iter().position(|v| !v.is_finite()) {
            return Err(EnvError::NonFiniteAction { index });
        }
        let t = self.state.t;
        let clip = clip_action(requested, &self.config.action_spec, &self.previous);
        let controls = self.config.controls_at(&clip.applied, t);
        let cfg = &self.config;
        let outcome = advance(
            &self.state,
            &controls,
            cfg.control_interval_s,
            cfg.substep_mode,
            cfg.k_fixed,
            &cfg.sim,
        )
        .map_err(|e| (e.source, e.stats))
        .and_then(|(state, stats)| match compute_derived(&state, &controls, &cfg.sim) {
            Ok(derived) => Ok((state, derived, stats)),
            Err(e) => Err((e, stats)),
        });
        self.steps += 1;
        let (reward, terminated, failure, stats) = match outcome {
            Ok((state, derived, stats)) => {
                let reward = cfg.reward.reward(&RewardContext {
                    state: &state,
                    derived: &derived,
                    controls: &controls,
                    applied: &clip.applied,
                });
                self.state = state;
                self.derived = derived;
                self.controls = controls;
                (reward, false, None, stats)
            }
            Err((e, stats)) => (TERMINATION_REWARD, true, Some(e.to_string()), stats),
        };
        let truncated = !terminated && self.steps >= cfg.horizon_steps;
        self.done = terminated || truncated;
        self.previous = clip.applied.clone();

        let healthy = !terminated;
        let pick = |v: f64| healthy.then_some(v);
        let record = TrajectoryRecord {
            step: self.steps - 1,
            t,
            requested: requested.0.clone(),
            applied: clip.applied.0.clone(),
            reward,
            terminated,
            truncated,
            clipped: clip.clipped,
            ramp_limited: clip.ramp_limited,
            n_substeps: stats.n_substeps,
            j0: pick(self.state.central_current_density()),
            q_min: pick(self.derived.q_min),
            q95: pick(self.derived.q95),
            beta: pick(self.derived.beta),
            q_fusion_gain: pick(self.derived.q_fusion_gain),
            h98: pick(self.derived.h98),
        };
        if let Some(sink) = self.sink.as_mut() {
            sink.record(&record);
        }
        let info = StepInfo {
            action_clipped: clip.clipped,
            ramp_limited: clip.ramp_limited,
            n_substeps: stats.n_substeps,
            dt_used_s: stats.dt_used_s,
            state: self.state.clone(),
            derived: healthy.then(|| self.derived.clone()),
            applied: clip.applied,
            failure,
        };
        Ok(StepResult {
            observation: self.observation(),
            reward,
            terminated,
            truncated,
            info,
            record,
        })
    }
}

/// Discounted return `sum_t gamma^t r_t`.
pub fn compute_return(rewards: &[f64], gamma: f64) -> f64 {
    // Horner form, evaluated from the last reward backwards
    rewards.iter().rev().fold(0.0, |acc, r| r + gamma * acc)
}
