//! WebAssembly bindings for the browser demo. Every export returns a JSON
//! string; the plain functions behind them are usable natively.

use rampup_core::config::ConfigFile;
use rampup_core::env::{compute_return, Environment};
use rampup_core::policies::{OpenLoop, PIGains, PiController, Policy, UniformRandom};
use rampup_core::report::PolicyKind;
use rampup_core::tuning::{grid_search_sequential, GridSpec};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest grid side the page may request.
pub const MAX_GRID_SIDE: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profiles {
    pub t: f64,
    pub t_e: Vec<f64>,
    pub t_i: Vec<f64>,
    pub n_e: Vec<f64>,
    pub j: Vec<f64>,
    pub q: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeView {
    pub policy: String,
    #[serde(rename = "J")]
    pub j_return: f64,
    pub terminated: bool,
    pub rho: Vec<f64>,
    pub t: Vec<f64>,
    pub i_p: Vec<f64>,
    pub p_nbi: Vec<f64>,
    pub p_ecrh: Vec<f64>,
    pub j0: Vec<Option<f64>>,
    pub j0_target: Vec<f64>,
    pub q_min: Vec<Option<f64>>,
    pub q95: Vec<Option<f64>>,
    pub h98: Vec<Option<f64>>,
    #[serde(rename = "Q")]
    pub q_fusion_gain: Vec<Option<f64>>,
    pub reward: Vec<f64>,
    /// Profiles after each step, index 0 being the initial state.
    pub profiles: Vec<Profiles>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceView {
    pub kp: Vec<f64>,
    pub ki: Vec<f64>,
    #[serde(rename = "J")]
    pub j_values: Vec<Vec<f64>>,
    pub best_kp: f64,
    pub best_ki: f64,
    #[serde(rename = "best_J")]
    pub best_return: f64,
}

fn profiles(env: &Environment) -> Profiles {
    let s = env.state();
    Profiles {
        t: s.t,
        t_e: s.t_e.clone(),
        t_i: s.t_i.clone(),
        n_e: s.n_e.clone(),
        j: s.j.clone(),
        q: env.derived().q_profile.clone(),
    }
}

/// Runs one episode of `policy` (`open_loop`, `random` or `pi`) and
/// collects the traces the page plots.
pub fn episode(policy: &str, k_p: f64, k_i: f64, seed: u64) -> Result<EpisodeView, String> {
    let kind = PolicyKind::parse(policy).ok_or_else(|| format!("unknown policy {policy:?}"))?;
    let cfg = ConfigFile::iter_hybrid();
    let reference = cfg.policies.reference.clone();
    let mut p: Box<dyn Policy> = match kind {
        PolicyKind::OpenLoop => Box::new(OpenLoop { reference }),
        PolicyKind::Random => Box::new(UniformRandom::new(seed)),
        PolicyKind::Pi => {
            if !(k_p.is_finite() && k_i.is_finite()) {
                return Err("gains must be finite".into());
            }
            Box::new(PiController::new(PIGains { k_p, k_i }, reference))
        }
    };
    let env_config = cfg.env_config();
    let gamma = env_config.gamma;
    let mut env = Environment::new(env_config).map_err(|e| e.to_string())?;
    env.reset();
    let mut snapshots = vec![profiles(&env)];
    let rho = env.config().sim.grid.rho().to_vec();

    // step manually so profiles can be captured after every interval
    let mut records = Vec::new();
    p.reset(seed);
    let spec = cfg.actions.clone();
    let mut terminated = false;
    while !env.is_done() {
        let ctx = rampup_core::policies::PolicyContext {
            t: env.time(),
            step: env.steps_taken(),
            state: env.state(),
            previous: env.previous_action(),
            spec: &spec,
            dt: cfg.env.control_interval_s,
        };
        let a = p.act(&ctx);
        let r = env.step(&a).map_err(|e| e.to_string())?;
        terminated |= r.terminated;
        if !r.terminated {
            snapshots.push(profiles(&env));
        }
        records.push(r.record);
    }
    let rewards: Vec<f64> = records.iter().map(|r| r.reward).collect();
    let column = |i: usize| records.iter().map(|r| r.applied[i]).collect::<Vec<_>>();
    Ok(EpisodeView {
        policy: kind.name().into(),
        j_return: compute_return(&rewards, gamma),
        terminated,
        rho,
        t: records.iter().map(|r| r.t + cfg.env.control_interval_s).collect(),
        i_p: column(0),
        p_nbi: column(1),
        p_ecrh: column(2),
        j0: records.iter().map(|r| r.j0).collect(),
        j0_target: records
            .iter()
            .map(|r| rampup_core::policies::j0_target(r.t + cfg.env.control_interval_s))
            .collect(),
        q_min: records.iter().map(|r| r.q_min).collect(),
        q95: records.iter().map(|r| r.q95).collect(),
        h98: records.iter().map(|r| r.h98).collect(),
        q_fusion_gain: records.iter().map(|r| r.q_fusion_gain).collect(),
        reward: rewards,
        profiles: snapshots,
    })
}

/// PI return surface on an `n` x `m` grid over the default gain ranges.
pub fn surface(n: usize, m: usize) -> Result<SurfaceView, String> {
    if n == 0 || m == 0 || n > MAX_GRID_SIDE || m > MAX_GRID_SIDE {
        return Err(format!("grid sides must be in 1..={MAX_GRID_SIDE}"));
    }
    let cfg = ConfigFile::iter_hybrid();
    let grid = GridSpec { n, m, ..cfg.tuning.clone() };
    let s = grid_search_sequential(&grid, &cfg.env_config(), &cfg.policies.reference).map_err(|e| e.to_string())?;
    Ok(SurfaceView {
        best_kp: s.best_gains.k_p,
        best_ki: s.best_gains.k_i,
        best_return: s.best_return,
        kp: s.kp_values,
        ki: s.ki_values,
        j_values: s.j_values,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = runEpisode)]
pub fn run_episode_js(policy: &str, k_p: f64, k_i: f64, seed: u32) -> Result<String, JsValue> {
    to_js(episode(policy, k_p, k_i, u64::from(seed)))
}

#[wasm_bindgen(js_name = returnSurface)]
pub fn return_surface_js(n: usize, m: usize) -> Result<String, JsValue> {
    to_js(surface(n, m))
}

#[wasm_bindgen(js_name = publishedGains)]
pub fn published_gains_js() -> Vec<f64> {
    vec![PIGains::PUBLISHED.k_p, PIGains::PUBLISHED.k_i]
}
