//! Baseline policies: the open-loop reference, uniform random actions, and
//! a PI controller tracking a linear ramp of the central current density.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{ActionSpec, ActionVector, ControlChannel, Environment, TrajectoryRecord};
use crate::error::EnvError;
use crate::series::Breakpoints;
use crate::sim::PlasmaState;

pub const J0_START: f64 = 0.6;
pub const J0_END: f64 = 2.0;
pub const RAMP_END_S: f64 = 100.0;

/// Per-channel action breakpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReferenceTrajectory(pub BTreeMap<ControlChannel, Breakpoints>);

impl ReferenceTrajectory {
    /// Current 3 to 15 MA over the first 100 s, NBI up to 33 MW between 80
    /// and 95 s, ECRH switched to 10 MW at 20 s.
    pub fn iter_hybrid() -> Self {
        let mut m = BTreeMap::new();
        m.insert(
            ControlChannel::PlasmaCurrent,
            Breakpoints(vec![(0.0, 3.0), (RAMP_END_S, 15.0)]),
        );
        m.insert(
            ControlChannel::NbiPower,
            Breakpoints(vec![(0.0, 0.0), (80.0, 0.0), (95.0, 33.0)]),
        );
        m.insert(
            ControlChannel::EcrhPower,
            Breakpoints(vec![(0.0, 0.0), (19.0, 0.0), (20.0, 10.0)]),
        );
        Self(m)
    }

    pub fn sample(&self, channel: ControlChannel, t: f64) -> Option<f64> {
        self.0.get(&channel).map(|b| b.sample(t))
    }

    pub fn problems(&self, spec: &ActionSpec) -> Vec<String> {
        let mut out = Vec::new();
        for ch in &spec.channels {
            let name = ch.channel.name();
            match self.0.get(&ch.channel) {
                None => out.push(format!("policies.reference has no {name} channel")),
                Some(b) => {
                    out.extend(b.problems(&format!("policies.reference.{name}")));
                    if b.values().any(|v| v < ch.lower || v > ch.upper) {
                        out.push(format!(
                            "policies.reference.{name} leaves the action bounds [{}, {}]",
                            ch.lower, ch.upper
                        ));
                    }
                }
            }
        }
        for ch in self.0.keys() {
            if spec.index_of(*ch).is_none() {
                out.push(format!("policies.reference.{} is not an action channel", ch.name()));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PIGains {
    /// MA per MA/m².
    pub k_p: f64,
    /// MA per MA s/m².
    pub k_i: f64,
}

impl PIGains {
    pub const PUBLISHED: PIGains = PIGains { k_p: 0.700, k_i: 34.257 };
}

impl Default for PIGains {
    fn default() -> Self {
        Self::PUBLISHED
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PIState {
    /// MA s/m².
    pub integral: f64,
    pub last_action: ActionVector,
    pub hold_active: bool,
}

impl PIState {
    pub fn new(initial_action: ActionVector) -> Self {
        Self {
            integral: 0.0,
            last_action: initial_action,
            hold_active: false,
        }
    }
}

/// The reference action at `t`, in `spec` channel order. Channels missing
/// from the reference sit at their lower bound.
pub fn open_loop_policy(t: f64, reference: &ReferenceTrajectory, spec: &ActionSpec) -> ActionVector {
    ActionVector(
        spec.channels
            .iter()
            .map(|c| reference.sample(c.channel, t).unwrap_or(c.lower))
            .collect(),
    )
}

/// One independent uniform draw per channel.
pub fn random_policy(rng: &mut ChaCha8Rng, spec: &ActionSpec) -> ActionVector {
    ActionVector(
        spec.channels
            .iter()
            .map(|c| {
                if c.lower == c.upper {
                    c.lower
                } else {
                    rng.gen_range(c.lower..=c.upper)
                }
            })
            .collect(),
    )
}

/// Central current density target in MA/m².
pub fn j0_target(t: f64) -> f64 {
    J0_START + (J0_END - J0_START) * t.clamp(0.0, RAMP_END_S) / RAMP_END_S
}

pub fn pi_policy(
    t: f64,
    measured_j0: f64,
    gains: PIGains,
    state: &PIState,
    dt: f64,
    reference: &ReferenceTrajectory,
    spec: &ActionSpec,
) -> (ActionVector, PIState) {
    if t >= RAMP_END_S {
        let mut held = state.clone();
        held.hold_active = true;
        return (state.last_action.clone(), held);
    }
    let e = j0_target(t) - measured_j0;
    let integral = state.integral + e * dt;
    let command = gains.k_p * e + gains.k_i * integral;
    let mut action = open_loop_policy(t, reference, spec);
    if let Some(i) = spec.index_of(ControlChannel::PlasmaCurrent) {
        let ch = &spec.channels[i];
        action.0[i] = if command.is_nan() { ch.lower } else { command.clamp(ch.lower, ch.upper) };
    }
    let next = PIState {
        integral,
        last_action: action.clone(),
        hold_active: false,
    };
    (action, next)
}

/// What a policy sees before choosing the action for one control interval.
#[derive(Debug, Clone, Copy)]
pub struct PolicyContext<'a> {
    pub t: f64,
    pub step: usize,
    pub state: &'a PlasmaState,
    pub previous: &'a ActionVector,
    pub spec: &'a ActionSpec,
    pub dt: f64,
}

pub trait Policy: Send {
    fn name(&self) -> &str;
    fn is_stochastic(&self) -> bool;
    /// Clears internal state; `seed` drives stochastic policies.
    fn reset(&mut self, seed: u64);
    fn act(&mut self, ctx: &PolicyContext<'_>) -> ActionVector;
}

#[derive(Debug, Clone)]
pub struct OpenLoop {
    pub reference: ReferenceTrajectory,
}

impl Policy for OpenLoop {
    fn name(&self) -> &str {
        "open_loop"
    }

    fn is_stochastic(&self) -> bool {
        false
    }

    fn reset(&mut self, _seed: u64) {}

    fn act(&mut self, ctx: &PolicyContext<'_>) -> ActionVector {
        open_loop_policy(ctx.t, &self.reference, ctx.spec)
    }
}

#[derive(Debug, Clone)]
pub struct UniformRandom {
    rng: ChaCha8Rng,
}

impl UniformRandom {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Policy for UniformRandom {
    fn name(&self) -> &str {
        "random"
    }

    fn is_stochastic(&self) -> bool {
        true
    }

    fn reset(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    fn act(&mut self, ctx: &PolicyContext<'_>) -> ActionVector {
        random_policy(&mut self.rng, ctx.spec)
    }
}

#[derive(Debug, Clone)]
pub struct PiController {
    pub gains: PIGains,
    pub reference: ReferenceTrajectory,
    state: Option<PIState>,
}

impl PiController {
    pub fn new(gains: PIGains, reference: ReferenceTrajectory) -> Self {
        Self { gains, reference, state: None }
    }

    pub fn state(&self) -> Option<&PIState> {
        self.state.as_ref()
    }
}

impl Policy for PiController {
    fn name(&self) -> &str {
        "pi"
    }

    fn is_stochastic(&self) -> bool {
        false
    }

    fn reset(&mut self, _seed: u64) {
        self.state = None;
    }

    fn act(&mut self, ctx: &PolicyContext<'_>) -> ActionVector {
        let state = self
            .state
            .take()
            .unwrap_or_else(|| PIState::new(ctx.previous.clone()));
        let (action, next) = pi_policy(
            ctx.t,
            ctx.state.central_current_density(),
            self.gains,
            &state,
            ctx.dt,
            &self.reference,
            ctx.spec,
        );
        self.state = Some(next);
        action
    }
}

/// Outcome of one complete episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub rewards: Vec<f64>,
    pub records: Vec<TrajectoryRecord>,
    pub terminated: bool,
}

/// Resets `env` and `policy`, then steps until the episode ends.
pub fn run_episode(env: &mut Environment, policy: &mut dyn Policy, seed: u64) -> Result<Episode, EnvError> {
    env.reset();
    policy.reset(seed);
    let dt = env.config().control_interval_s;
    let mut rewards = Vec::with_capacity(env.config().horizon_steps);
    let mut records = Vec::with_capacity(env.config().horizon_steps);
    loop {
        let action = policy.act(&PolicyContext {
            t: env.time(),
            step: env.steps_taken(),
            state: env.state(),
            previous: env.previous_action(),
            spec: &env.config().action_spec,
            dt,
        });
        let r = env.step(&action)?;
        rewards.push(r.reward);
        records.push(r.record);
        if r.terminated || r.truncated {
            return Ok(Episode { rewards, records, terminated: r.terminated });
        }
    }
}
