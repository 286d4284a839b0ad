//! Acceptance suite: one pass/fail line per criterion.
//!
//! Run with `cargo test -p rampup-cli --test acceptance`.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rampup_core::config::ConfigFile;
use rampup_core::env::{compute_return, ActionVector, Environment, TERMINATION_REWARD};
use rampup_core::error::EnvError;
use rampup_core::policies::{
    j0_target, open_loop_policy, run_episode, OpenLoop, PIGains, PiController, Policy, UniformRandom,
};
use rampup_core::sim::{
    advance, compute_derived, init_state, Controls, InitialProfiles, PlasmaState, ProfileSpec, SimConfig,
    SubstepMode, MU0,
};
use rampup_core::tuning::{evaluate_policy, grid_search, GridSpec, ReturnSurface};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Default-config 20x60 sweep, shared by the criteria that need tuned gains.
struct Sweep {
    surface: ReturnSurface,
    elapsed: Duration,
}

fn sweep() -> &'static Sweep {
    static SWEEP: OnceLock<Sweep> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let cfg = ConfigFile::iter_hybrid();
        let start = Instant::now();
        let surface = grid_search(&GridSpec::default(), &cfg.env_config(), &cfg.policies.reference).unwrap();
        Sweep { surface, elapsed: start.elapsed() }
    })
}

fn policy_ordering() -> Outcome {
    let start = Instant::now();
    let cfg = ConfigFile::iter_hybrid();
    let env = cfg.env_config();
    let reference = cfg.policies.reference.clone();
    let s = sweep();
    let j_ol = evaluate_policy(&mut OpenLoop { reference: reference.clone() }, &env, 1, 0).unwrap();
    let j_r = evaluate_policy(&mut UniformRandom::new(0), &env, 10, 0).unwrap();
    let j_pi = evaluate_policy(&mut PiController::new(s.surface.best_gains, reference), &env, 1, 0).unwrap();
    let elapsed = start.elapsed().max(s.elapsed);
    check(
        env.gamma == 1.0 && j_pi >= j_ol && j_ol > j_r && elapsed < Duration::from_secs(300),
        format!(
            "J(PI)={j_pi:.4} (gains {:.3}, {:.3}) >= J(OL)={j_ol:.4} > mean J(R)={j_r:.4}, {:.1?}",
            s.surface.best_gains.k_p, s.surface.best_gains.k_i, elapsed
        ),
    )
}

fn grid_argmax_oracle() -> Outcome {
    let start = Instant::now();
    let cfg = ConfigFile::iter_hybrid();
    let env = cfg.env_config();
    let grid = GridSpec { n: 4, m: 4, ..GridSpec::default() };
    let surface = grid_search(&grid, &env, &cfg.policies.reference).unwrap();
    let mut best = f64::NEG_INFINITY;
    for i in 0..4 {
        for j in 0..4 {
            let gains = PIGains {
                k_p: grid.kp_range.0 + (grid.kp_range.1 - grid.kp_range.0) * i as f64 / 3.0,
                k_i: grid.ki_range.0 + (grid.ki_range.1 - grid.ki_range.0) * j as f64 / 3.0,
            };
            let mut p = PiController::new(gains, cfg.policies.reference.clone());
            best = best.max(evaluate_policy(&mut p, &env, 1, 0).unwrap());
        }
    }
    let elapsed = start.elapsed();
    check(
        surface.best_return.to_bits() == best.to_bits() && elapsed < Duration::from_secs(30),
        format!("grid_search {} vs exhaustive {best}, {elapsed:.1?}", surface.best_return),
    )
}

fn return_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let len = rng.gen_range(1..=150);
        let mut rewards: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..0.03)).collect();
        if rng.gen_bool(0.1) {
            *rewards.last_mut().unwrap() = TERMINATION_REWARD;
        }
        for gamma in [0.0f64, 0.5, 1.0] {
            let brute: f64 = rewards
                .iter()
                .enumerate()
                .map(|(t, r)| if t == 0 { *r } else { gamma.powi(t as i32) * r })
                .sum();
            let j = compute_return(&rewards, gamma);
            let rel = (j - brute).abs() / brute.abs().max(f64::MIN_POSITIVE);
            worst = worst.max(rel);
        }
    }
    check(worst < 1e-12, format!("worst relative error {worst:.2e} over 300 cases"))
}

/// Cell volumes computed from the geometry, independent of the grid type.
fn cell_volumes(n: usize, a: f64, r0: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let (lo, hi) = (i as f64 / n as f64, (i + 1) as f64 / n as f64);
            2.0 * PI * r0 * PI * a * a * (hi * hi - lo * lo)
        })
        .collect()
}

fn thermal_energy(s: &PlasmaState, cfg: &SimConfig) -> f64 {
    let v = cell_volumes(s.t_e.len(), 2.0, 6.2);
    let dil = (cfg.impurity_charge - cfg.z_eff) / (cfg.impurity_charge - 1.0);
    (0..v.len())
        .map(|i| 1.5 * v[i] * s.n_e[i] * (s.t_e[i] + dil * s.t_i[i]))
        .sum()
}

fn conservation() -> Outcome {
    let cfg = SimConfig::iter_like().conservative();
    let grid = &cfg.grid;
    let profiles = InitialProfiles {
        t_i: ProfileSpec::Parabolic { core: 3.0, edge: 0.5, exponent: 1.0 }.evaluate(grid),
        t_e: ProfileSpec::Parabolic { core: 5.0, edge: 0.3, exponent: 2.0 }.evaluate(grid),
        n_e: ProfileSpec::Parabolic { core: 8.0, edge: 3.0, exponent: 1.0 }.evaluate(grid),
        j: ProfileSpec::Parabolic { core: 1.0, edge: 0.1, exponent: 1.5 }.evaluate(grid),
        i_p_ma: 10.0,
    };
    let mut s = init_state(&cfg, &profiles).unwrap();
    let c = Controls { i_p: 10.0, p_nbi: 0.0, p_ecrh: 0.0 };
    let w0 = thermal_energy(&s, &cfg);
    for _ in 0..150 {
        s = advance(&s, &c, 1.0, SubstepMode::Fixed, Some(5), &cfg).unwrap().0;
    }
    let drift = ((thermal_energy(&s, &cfg) - w0) / w0).abs();
    check(drift < 1e-6, format!("relative drift {drift:.2e} over 150 steps"))
}

fn area_integral(j: &[f64]) -> f64 {
    let n = j.len();
    (0..n)
        .map(|i| {
            let (lo, hi) = (i as f64 / n as f64, (i + 1) as f64 / n as f64);
            j[i] * PI * 4.0 * (hi * hi - lo * lo)
        })
        .sum()
}

fn current_pinning() -> Outcome {
    let cfg = ConfigFile::iter_hybrid();
    let mut env = Environment::new(cfg.env_config()).unwrap();
    env.reset();
    let spec = cfg.actions.clone();
    let mut worst = 0.0f64;
    let mut steps = 0;
    loop {
        let a = open_loop_policy(env.time(), &cfg.policies.reference, &spec);
        let r = env.step(&a).unwrap();
        let i_p = r.info.applied.0[0];
        worst = worst.max((area_integral(&r.info.state.j) - i_p).abs() / i_p);
        steps += 1;
        if r.terminated || r.truncated {
            break;
        }
    }
    check(steps == 150 && worst < 1e-9, format!("worst relative mismatch {worst:.2e} over {steps} steps"))
}

fn ramp_rate_safety() -> Outcome {
    let cfg = ConfigFile::iter_hybrid();
    let mut env = Environment::new(cfg.env_config()).unwrap();
    let mut policy = UniformRandom::new(0);
    let (mut worst, mut flag_errors, mut pairs) = (0.0f64, 0, 0);
    for seed in 0..100 {
        env.reset();
        policy.reset(seed);
        let mut prev_ip = env.previous_action().0[0];
        loop {
            let a = policy.act(&rampup_core::policies::PolicyContext {
                t: env.time(),
                step: env.steps_taken(),
                state: env.state(),
                previous: env.previous_action(),
                spec: &cfg.actions,
                dt: 1.0,
            });
            let r = env.step(&a).unwrap();
            let ip = r.info.applied.0[0];
            worst = worst.max((ip - prev_ip).abs());
            pairs += 1;
            prev_ip = ip;
            let differs = a != r.info.applied;
            if (r.info.action_clipped || r.info.ramp_limited) != differs
                || r.record.clipped != r.info.action_clipped
                || r.record.ramp_limited != r.info.ramp_limited
            {
                flag_errors += 1;
            }
            if r.terminated || r.truncated {
                break;
            }
        }
    }
    check(
        worst <= 0.2 + 1e-12 && flag_errors == 0,
        format!("max |di_p| {worst:.15} MA over {pairs} pairs, {flag_errors} flag mismatches"),
    )
}

fn termination_semantics() -> Outcome {
    let cfg = ConfigFile::from_json(
        r#"{"sim": {"chi_i": {"l_mode": 1e-6, "h_mode": 1e-6}, "chi_e": {"l_mode": 1e-6, "h_mode": 1e-6}}}"#,
    )
    .unwrap();
    let mut env = Environment::new(cfg.env_config()).unwrap();
    env.reset();
    let full = ActionVector(vec![15.0, 33.0, 20.0]);
    let last = loop {
        let r = env.step(&full).unwrap();
        if r.terminated || r.truncated {
            break r;
        }
    };
    let again = env.step(&full);
    check(
        last.terminated
            && !last.truncated
            && last.reward == -1000.0
            && last.info.failure.as_deref().is_some_and(|f| f.contains("blowup") || f.contains("exceeds") || f.contains("ceiling"))
            && matches!(again, Err(EnvError::EpisodeOver)),
        format!(
            "terminated at step {} with reward {}, failure {:?}, next step {:?}",
            last.record.step,
            last.reward,
            last.info.failure,
            again.as_ref().map(|_| ()).map_err(|e| e.to_string())
        ),
    )
}

fn substep_accounting() -> Outcome {
    let cfg = ConfigFile::iter_hybrid();
    let reference = cfg.policies.reference.clone();
    let mut env = Environment::new(cfg.env_config()).unwrap();
    let ep = run_episode(&mut env, &mut OpenLoop { reference: reference.clone() }, 0).unwrap();
    let fixed_ok = ep.records.len() == 150 && ep.records.iter().all(|r| r.n_substeps == 5);

    let mut auto = cfg.clone();
    auto.env.substep_mode = SubstepMode::Auto;
    auto.env.k_fixed = None;
    let (lo, hi) = (auto.sim.dt_min_s, auto.sim.dt_max_s);
    let mut env = Environment::new(auto.env_config()).unwrap();
    env.reset();
    let (mut worst_sum, mut bad_sizes, mut counts) = (0.0f64, 0, Vec::new());
    loop {
        let a = open_loop_policy(env.time(), &reference, &cfg.actions);
        let r = env.step(&a).unwrap();
        let dts = &r.info.dt_used_s;
        counts.push(dts.len());
        worst_sum = worst_sum.max((dts.iter().sum::<f64>() - 1.0).abs());
        bad_sizes += dts[..dts.len() - 1].iter().filter(|d| **d < lo || **d > hi).count();
        bad_sizes += usize::from(dts[dts.len() - 1] > hi);
        if r.terminated || r.truncated {
            break;
        }
    }
    let (cmin, cmax) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
    check(
        fixed_ok && worst_sum < 1e-9 && bad_sizes == 0,
        format!(
            "fixed K=5 on all steps: {fixed_ok}; auto {cmin}..{cmax} substeps/step, {bad_sizes} out-of-range, worst sum error {worst_sum:.1e}"
        ),
    )
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_rampup"))
            .args(["compare", "--seed", "7", "--out"])
            .arg(&out)
            .output()
            .unwrap();
        if !status.status.success() {
            return Err(format!("compare failed: {}", String::from_utf8_lossy(&status.stderr)));
        }
        outputs.push(read_dir_sorted(&out));
    }
    let names: Vec<&str> = outputs[0].iter().map(|(n, _)| n.as_str()).collect();
    check(
        outputs[0] == outputs[1] && names.len() >= 3,
        format!("{} files compared: {}", names.len(), names.join(", ")),
    )
}

fn q95_fine_oracle(i_p: f64, factor: f64) -> f64 {
    let (a, r0, b0) = (2.0, 6.2, 5.3);
    let n = 250;
    let d = 1.0 / n as f64;
    let (mut total, mut inside) = (0.0, 0.0);
    for i in 0..n {
        let r = (i as f64 + 0.5) * d;
        let di = (1.0 - r * r) * 2.0 * PI * a * a * r * d;
        total += di;
        if r < 0.95 {
            inside += di;
        }
    }
    factor * 2.0 * PI * 0.95 * 0.95 * a * a * b0 / (MU0 * r0 * inside * i_p / total * 1e6)
}

fn q_profile_oracle() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for shaped in [false, true] {
        let mut cfg = SimConfig::iter_like();
        if !shaped {
            cfg.shaping = None;
        }
        let grid = &cfg.grid;
        let profiles = InitialProfiles {
            t_i: vec![5.0; 25],
            t_e: vec![5.0; 25],
            n_e: vec![8.0; 25],
            j: ProfileSpec::Parabolic { core: 1.0, edge: 0.0, exponent: 1.0 }.evaluate(grid),
            i_p_ma: 15.0,
        };
        let s = init_state(&cfg, &profiles).unwrap();
        let d = compute_derived(&s, &Controls { i_p: 15.0, p_nbi: 33.0, p_ecrh: 10.0 }, &cfg).unwrap();
        let factor = cfg.shaping.map_or(1.0, |sh| {
            let (k, t, e) = (sh.elongation, sh.triangularity, 2.0f64 / 6.2);
            (1.0 + k * k * (1.0 + 2.0 * t * t - 1.2 * t.powi(3))) / 2.0 * (1.17 - 0.65 * e) / (1.0 - e * e).powi(2)
        });
        let oracle = q95_fine_oracle(15.0, factor);
        let rel = ((d.q95 - oracle) / oracle).abs();
        ok &= rel < 0.02;
        lines.push(format!("{} q95 {:.4} vs {:.4} ({:.2}%)", if shaped { "shaped" } else { "cylinder" }, d.q95, oracle, 100.0 * rel));
    }
    check(ok, lines.join("; "))
}

fn pi_tracking() -> Outcome {
    let cfg = ConfigFile::iter_hybrid();
    let gains = sweep().surface.best_gains;
    let mut env = Environment::new(cfg.env_config()).unwrap();
    let ep = run_episode(&mut env, &mut PiController::new(gains, cfg.policies.reference.clone()), 0).unwrap();
    // j0 is reported at the end of each interval
    let errors: Vec<f64> = ep
        .records
        .iter()
        .filter(|r| r.t + 1.0 <= 100.0)
        .map(|r| (r.j0.unwrap() - j0_target(r.t + 1.0)).abs())
        .collect();
    let mae = errors.iter().sum::<f64>() / errors.len() as f64;
    check(
        errors.len() == 100 && mae < 0.2 * 1.4,
        format!("MAE {mae:.4} MA/m^2 over {} samples (limit 0.28)", errors.len()),
    )
}

fn performance() -> Outcome {
    let cfg = ConfigFile::iter_hybrid();
    let mut env = Environment::new(cfg.env_config()).unwrap();
    let start = Instant::now();
    run_episode(&mut env, &mut OpenLoop { reference: cfg.policies.reference.clone() }, 0).unwrap();
    let episode = start.elapsed();
    let sweep_time = sweep().elapsed;
    check(
        episode < Duration::from_secs(1) && sweep_time < Duration::from_secs(300),
        format!("episode {episode:.1?}, 20x60 sweep {sweep_time:.1?} on {} thread(s)", rayon_threads()),
    )
}

fn rayon_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("policy ordering", policy_ordering),
        ("grid-search argmax oracle", grid_argmax_oracle),
        ("return-computation oracle", return_oracle),
        ("conservation", conservation),
        ("current pinning", current_pinning),
        ("ramp-rate safety", ramp_rate_safety),
        ("termination semantics", termination_semantics),
        ("substep accounting", substep_accounting),
        ("determinism", determinism),
        ("q-profile oracle", q_profile_oracle),
        ("PI tracking quality", pi_tracking),
        ("performance", performance),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", k + 1)
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
