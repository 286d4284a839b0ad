//! Policy evaluation and grid search over PI gains.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{compute_return, EnvConfig, Environment};
use crate::error::{ConfigError, EvalError};
use crate::policies::{run_episode, PIGains, PiController, Policy, ReferenceTrajectory};

/// Seeds for `n` episodes, derived from one seed.
pub fn episode_seeds(seed: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.next_u64()).collect()
}

/// Return of each of `n_episodes` episodes.
pub fn episode_returns(
    policy: &mut dyn Policy,
    env_config: &EnvConfig,
    n_episodes: usize,
    seed: u64,
) -> Result<Vec<f64>, EvalError> {
    if n_episodes == 0 {
        return Err(EvalError::NoEpisodes);
    }
    if !policy.is_stochastic() && n_episodes != 1 {
        return Err(EvalError::DeterministicRepeat {
            policy: policy.name().to_string(),
            n_episodes,
        });
    }
    let mut env = Environment::new(env_config.clone())?;
    episode_seeds(seed, n_episodes)
        .into_iter()
        .map(|s| {
            let ep = run_episode(&mut env, policy, s)?;
            Ok(compute_return(&ep.rewards, env_config.gamma))
        })
        .collect()
}

/// Mean return over `n_episodes`. Deterministic policies take exactly one.
pub fn evaluate_policy(
    policy: &mut dyn Policy,
    env_config: &EnvConfig,
    n_episodes: usize,
    seed: u64,
) -> Result<f64, EvalError> {
    let returns = episode_returns(policy, env_config, n_episodes, seed)?;
    Ok(returns.iter().sum::<f64>() / returns.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub kp_range: (f64, f64),
    pub ki_range: (f64, f64),
    pub n: usize,
    pub m: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            kp_range: (0.0, 2.0),
            ki_range: (0.0, 60.0),
            n: 20,
            m: 60,
        }
    }
}

/// `count` evenly spaced values from `lo` to `hi` inclusive; a single value
/// is `lo`.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (count - 1) as f64;
            (0..count)
                .map(|i| if i == count - 1 { hi } else { lo + step * i as f64 })
                .collect()
        }
    }
}

impl GridSpec {
    pub fn kp_values(&self) -> Vec<f64> {
        linspace(self.kp_range.0, self.kp_range.1, self.n)
    }

    pub fn ki_values(&self) -> Vec<f64> {
        linspace(self.ki_range.0, self.ki_range.1, self.m)
    }

    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, (lo, hi)) in [("kp_range", self.kp_range), ("ki_range", self.ki_range)] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                out.push(format!("tuning.{name} must be finite with min < max, got ({lo}, {hi})"));
            }
        }
        if self.n == 0 {
            out.push("tuning.n must be >= 1".into());
        }
        if self.m == 0 {
            out.push("tuning.m must be >= 1".into());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSurface {
    pub kp_values: Vec<f64>,
    pub ki_values: Vec<f64>,
    /// `j_values[i][j]` is the return at `(kp_values[i], ki_values[j])`.
    pub j_values: Vec<Vec<f64>>,
    pub best_index: (usize, usize),
    pub best_gains: PIGains,
    pub best_return: f64,
}

impl ReturnSurface {
    fn from_matrix(kp_values: Vec<f64>, ki_values: Vec<f64>, j_values: Vec<Vec<f64>>) -> Self {
        let mut best_index = (0, 0);
        let mut best_return = f64::NEG_INFINITY;
        for (i, row) in j_values.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v > best_return {
                    best_return = v;
                    best_index = (i, j);
                }
            }
        }
        if best_return == f64::NEG_INFINITY {
            best_return = j_values[0][0];
        }
        Self {
            best_gains: PIGains {
                k_p: kp_values[best_index.0],
                k_i: ki_values[best_index.1],
            },
            kp_values,
            ki_values,
            j_values,
            best_index,
            best_return,
        }
    }
}

fn pi_return(gains: PIGains, env_config: &EnvConfig, reference: &ReferenceTrajectory) -> Result<f64, EvalError> {
    let mut policy = PiController::new(gains, reference.clone());
    evaluate_policy(&mut policy, env_config, 1, 0)
}

fn sweep(
    grid: &GridSpec,
    env_config: &EnvConfig,
    reference: &ReferenceTrajectory,
    parallel: bool,
) -> Result<ReturnSurface, EvalError> {
    ConfigError::check(grid.problems())?;
    env_config.validate()?;
    let (kp, ki) = (grid.kp_values(), grid.ki_values());
    let m = ki.len();
    let eval = |idx: usize| pi_return(PIGains { k_p: kp[idx / m], k_i: ki[idx % m] }, env_config, reference);
    let flat: Vec<f64> = if parallel {
        (0..kp.len() * m).into_par_iter().map(eval).collect::<Result<_, _>>()?
    } else {
        (0..kp.len() * m).map(eval).collect::<Result<_, _>>()?
    };
    let rows = flat.chunks(m).map(<[f64]>::to_vec).collect();
    Ok(ReturnSurface::from_matrix(kp, ki, rows))
}

/// Evaluates the PI policy at every gain pair, in parallel. Ties go to the
/// smallest `k_p` index, then the smallest `k_i` index.
pub fn grid_search(
    grid: &GridSpec,
    env_config: &EnvConfig,
    reference: &ReferenceTrajectory,
) -> Result<ReturnSurface, EvalError> {
    sweep(grid, env_config, reference, true)
}

/// Same as [`grid_search`] on the calling thread.
pub fn grid_search_sequential(
    grid: &GridSpec,
    env_config: &EnvConfig,
    reference: &ReferenceTrajectory,
) -> Result<ReturnSurface, EvalError> {
    sweep(grid, env_config, reference, false)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceRow {
    pub kp: f64,
    pub ki: f64,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "J_clipped")]
    pub j_clipped: f64,
}

/// One row per gain pair, `k_p`-major. With a floor, `j_clipped` is
/// `max(J, floor)`.
pub fn export_surface(surface: &ReturnSurface, clip_floor: Option<f64>) -> Vec<SurfaceRow> {
    let mut out = Vec::with_capacity(surface.kp_values.len() * surface.ki_values.len());
    for (i, &kp) in surface.kp_values.iter().enumerate() {
        for (j, &ki) in surface.ki_values.iter().enumerate() {
            let v = surface.j_values[i][j];
            out.push(SurfaceRow {
                kp,
                ki,
                j: v,
                j_clipped: clip_floor.map_or(v, |f| v.max(f)),
            });
        }
    }
    out
}
