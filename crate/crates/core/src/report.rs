//! Episode drivers and the text encodings written by the command line:
//! newline-delimited trajectory records, CSV tables and JSON summaries.
//! Floats are rounded to 9 significant digits so output is reproducible
//! byte for byte.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::config::ConfigFile;
use crate::env::{compute_return, Environment, TrajectoryRecord};
use crate::error::EvalError;
use crate::policies::{run_episode, OpenLoop, PIGains, PiController, Policy, UniformRandom};
use crate::tuning::{episode_seeds, export_surface, grid_search, GridSpec, ReturnSurface, SurfaceRow};

/// `x` rounded to 9 significant digits.
pub fn round9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

fn round_all(v: &[f64]) -> Vec<f64> {
    v.iter().copied().map(round9).collect()
}

pub fn rounded_record(r: &TrajectoryRecord) -> TrajectoryRecord {
    let opt = |x: Option<f64>| x.map(round9);
    TrajectoryRecord {
        t: round9(r.t),
        requested: round_all(&r.requested),
        applied: round_all(&r.applied),
        reward: round9(r.reward),
        j0: opt(r.j0),
        q_min: opt(r.q_min),
        q95: opt(r.q95),
        beta: opt(r.beta),
        q_fusion_gain: opt(r.q_fusion_gain),
        h98: opt(r.h98),
        ..r.clone()
    }
}

/// One JSON object per line, rounded.
pub fn trajectory_jsonl(records: &[TrajectoryRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(&rounded_record(r)).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_trajectory_jsonl(text: &str) -> Result<Vec<TrajectoryRecord>, serde_json::Error> {
    text.lines().filter(|l| !l.is_empty()).map(serde_json::from_str).collect()
}

pub const SURFACE_HEADER: &str = "kp,ki,J,J_clipped";

pub fn surface_csv(rows: &[SurfaceRow]) -> String {
    let mut out = String::from(SURFACE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", round9(r.kp), round9(r.ki), round9(r.j), round9(r.j_clipped));
    }
    out
}

pub fn parse_surface_csv(text: &str) -> Result<Vec<SurfaceRow>, String> {
    let mut lines = text.lines();
    if lines.next() != Some(SURFACE_HEADER) {
        return Err(format!("expected header {SURFACE_HEADER}"));
    }
    lines
        .map(|l| {
            let v: Vec<f64> = l
                .split(',')
                .map(|x| x.parse::<f64>().map_err(|e| format!("{l}: {e}")))
                .collect::<Result<_, _>>()?;
            match v[..] {
                [kp, ki, j, j_clipped] => Ok(SurfaceRow { kp, ki, j, j_clipped }),
                _ => Err(format!("{l}: expected 4 columns")),
            }
        })
        .collect()
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    OpenLoop,
    Random,
    Pi,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::OpenLoop => "open_loop",
            PolicyKind::Random => "random",
            PolicyKind::Pi => "pi",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "open_loop" => Some(PolicyKind::OpenLoop),
            "random" => Some(PolicyKind::Random),
            "pi" => Some(PolicyKind::Pi),
            _ => None,
        }
    }

    /// The PI policy uses `gains`, falling back to the config's gains and
    /// then the published gains.
    pub fn build(self, cfg: &ConfigFile, gains: Option<PIGains>) -> Box<dyn Policy> {
        let reference = cfg.policies.reference.clone();
        match self {
            PolicyKind::OpenLoop => Box::new(OpenLoop { reference }),
            PolicyKind::Random => Box::new(UniformRandom::new(0)),
            PolicyKind::Pi => Box::new(PiController::new(
                gains.or(cfg.policies.pi_gains).unwrap_or(PIGains::PUBLISHED),
                reference,
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub episode: usize,
    pub seed: u64,
    #[serde(rename = "J")]
    pub j: f64,
    pub steps: usize,
    pub terminated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub policy: String,
    pub seed: u64,
    pub gamma: f64,
    pub episodes: Vec<EpisodeSummary>,
    #[serde(rename = "mean_J")]
    pub mean_j: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub trajectories: Vec<Vec<TrajectoryRecord>>,
}

/// Runs `episodes` episodes of `kind`. Deterministic policies reject more
/// than one episode.
pub fn run_policy(
    cfg: &ConfigFile,
    kind: PolicyKind,
    gains: Option<PIGains>,
    episodes: usize,
    seed: u64,
) -> Result<RunOutcome, EvalError> {
    let mut policy = kind.build(cfg, gains);
    if episodes == 0 {
        return Err(EvalError::NoEpisodes);
    }
    if !policy.is_stochastic() && episodes != 1 {
        return Err(EvalError::DeterministicRepeat {
            policy: kind.name().into(),
            n_episodes: episodes,
        });
    }
    let env_config = cfg.env_config();
    let gamma = env_config.gamma;
    let mut env = Environment::new(env_config)?;
    let mut summaries = Vec::with_capacity(episodes);
    let mut trajectories = Vec::with_capacity(episodes);
    for (k, s) in episode_seeds(seed, episodes).into_iter().enumerate() {
        let ep = run_episode(&mut env, policy.as_mut(), s)?;
        summaries.push(EpisodeSummary {
            episode: k,
            seed: s,
            j: round9(compute_return(&ep.rewards, gamma)),
            steps: ep.records.len(),
            terminated: ep.terminated,
        });
        trajectories.push(ep.records);
    }
    let mean = summaries.iter().map(|e| e.j).sum::<f64>() / summaries.len() as f64;
    Ok(RunOutcome {
        summary: RunSummary {
            policy: kind.name().into(),
            seed,
            gamma,
            episodes: summaries,
            mean_j: round9(mean),
        },
        trajectories,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestGains {
    pub k_p: f64,
    pub k_i: f64,
    #[serde(rename = "J")]
    pub j: f64,
    pub best_index: (usize, usize),
    pub grid: GridSpec,
}

impl BestGains {
    pub fn from_surface(s: &ReturnSurface, grid: &GridSpec) -> Self {
        Self {
            k_p: round9(s.best_gains.k_p),
            k_i: round9(s.best_gains.k_i),
            j: round9(s.best_return),
            best_index: s.best_index,
            grid: grid.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TuneOutcome {
    pub surface: ReturnSurface,
    pub csv: String,
    pub best: BestGains,
}

pub fn run_tune(cfg: &ConfigFile, grid: &GridSpec, clip_floor: Option<f64>) -> Result<TuneOutcome, EvalError> {
    let surface = grid_search(grid, &cfg.env_config(), &cfg.policies.reference)?;
    let csv = surface_csv(&export_surface(&surface, clip_floor));
    let best = BestGains::from_surface(&surface, grid);
    Ok(TuneOutcome { surface, csv, best })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub policy: String,
    #[serde(rename = "J")]
    pub j: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareSummary {
    pub seed: u64,
    pub gamma: f64,
    pub rows: Vec<CompareRow>,
    pub pi_gains: PIGains,
    pub pi_gains_tuned: bool,
    pub random_episodes: Vec<EpisodeSummary>,
}

#[derive(Debug, Clone)]
pub struct CompareOutcome {
    pub summary: CompareSummary,
    /// `policy,J` with rows pi_OL, pi_R, pi_PI.
    pub table_csv: String,
    /// Applied plasma current per step for each policy (first random
    /// episode).
    pub ip_csv: String,
    pub tune: Option<TuneOutcome>,
}

/// Table of the three baselines. PI gains come from the config, or from a
/// fresh grid search when the config leaves them unset.
pub fn run_compare(cfg: &ConfigFile, seed: u64) -> Result<CompareOutcome, EvalError> {
    let tune = match cfg.policies.pi_gains {
        Some(_) => None,
        None => Some(run_tune(cfg, &cfg.tuning, None)?),
    };
    let gains = tune
        .as_ref()
        .map(|t| t.surface.best_gains)
        .or(cfg.policies.pi_gains)
        .expect("gains from config or tuning");
    let ol = run_policy(cfg, PolicyKind::OpenLoop, None, 1, seed)?;
    let rnd = run_policy(cfg, PolicyKind::Random, None, cfg.policies.random_episodes, seed)?;
    let pi = run_policy(cfg, PolicyKind::Pi, Some(gains), 1, seed)?;

    let rows = vec![
        CompareRow { policy: "pi_OL".into(), j: ol.summary.mean_j },
        CompareRow { policy: "pi_R".into(), j: rnd.summary.mean_j },
        CompareRow { policy: "pi_PI".into(), j: pi.summary.mean_j },
    ];
    let mut table_csv = String::from("policy,J\n");
    for r in &rows {
        let _ = writeln!(table_csv, "{},{}", r.policy, r.j);
    }
    let mut ip_csv = String::from("step,t,pi_OL,pi_R,pi_PI\n");
    let trajs = [&ol.trajectories[0], &rnd.trajectories[0], &pi.trajectories[0]];
    let len = trajs.iter().map(|t| t.len()).max().unwrap_or(0);
    for k in 0..len {
        let t = trajs.iter().find_map(|tr| tr.get(k)).map_or(f64::NAN, |r| r.t);
        let _ = write!(ip_csv, "{k},{}", round9(t));
        for tr in trajs {
            match tr.get(k) {
                Some(r) => {
                    let _ = write!(ip_csv, ",{}", round9(r.applied.first().copied().unwrap_or(f64::NAN)));
                }
                None => ip_csv.push(','),
            }
        }
        ip_csv.push('\n');
    }
    Ok(CompareOutcome {
        summary: CompareSummary {
            seed,
            gamma: cfg.env.gamma,
            rows,
            pi_gains: PIGains { k_p: round9(gains.k_p), k_i: round9(gains.k_i) },
            pi_gains_tuned: tune.is_some(),
            random_episodes: rnd.summary.episodes,
        },
        table_csv,
        ip_csv,
        tune,
    })
}
