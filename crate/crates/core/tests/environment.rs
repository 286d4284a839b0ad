use rampup_core::config::ConfigFile;
use rampup_core::env::{ActionVector, Environment, RecordBuffer};
use rampup_core::error::EnvError;
use rampup_core::policies::{run_episode, OpenLoop, UniformRandom};

fn env() -> (ConfigFile, Environment) {
    let cfg = ConfigFile::iter_hybrid();
    let env = Environment::new(cfg.env_config()).unwrap();
    (cfg, env)
}

#[test]
fn open_loop_episode_runs_to_the_horizon() {
    let (cfg, mut env) = env();
    let ep = run_episode(&mut env, &mut OpenLoop { reference: cfg.policies.reference }, 0).unwrap();
    assert_eq!(ep.rewards.len(), 150);
    assert!(!ep.terminated);
    assert!(ep.records.last().unwrap().truncated);
    assert!(ep.records[..149].iter().all(|r| !r.truncated && !r.terminated));
    assert!(ep.rewards.iter().all(|r| (0.0..=0.03).contains(r)));
    assert_eq!(ep.records[0].t, 0.0);
    assert_eq!(ep.records[149].t, 149.0);
}

#[test]
fn stepping_after_the_horizon_fails() {
    let (_, mut env) = env();
    env.reset();
    let a = env.previous_action().clone();
    for _ in 0..150 {
        env.step(&a).unwrap();
    }
    assert!(env.is_done());
    assert!(matches!(env.step(&a), Err(EnvError::EpisodeOver)));
    env.reset();
    assert!(env.step(&a).is_ok());
}

#[test]
fn malformed_actions_are_rejected_without_advancing() {
    let (_, mut env) = env();
    env.reset();
    assert!(matches!(
        env.step(&ActionVector(vec![3.0, 0.0])),
        Err(EnvError::ActionMismatch { expected: 3, found: 2 })
    ));
    assert!(matches!(
        env.step(&ActionVector(vec![3.0, f64::NAN, 0.0])),
        Err(EnvError::NonFiniteAction { index: 1 })
    ));
    assert_eq!(env.steps_taken(), 0);
    assert_eq!(env.time(), 0.0);
}

#[test]
fn reset_restores_the_initial_state() {
    let (_, mut env) = env();
    let (obs0, info0) = env.reset();
    let a = ActionVector(vec![3.2, 10.0, 5.0]);
    for _ in 0..5 {
        env.step(&a).unwrap();
    }
    let (obs1, info1) = env.reset();
    assert_eq!(obs0, obs1);
    assert_eq!(info0, info1);
    assert_eq!(env.steps_taken(), 0);
}

#[test]
fn out_of_bounds_requests_are_clipped_and_flagged() {
    let (_, mut env) = env();
    env.reset();
    let r = env.step(&ActionVector(vec![30.0, -5.0, 100.0])).unwrap();
    assert_eq!(r.info.applied.0, vec![3.2, 0.0, 20.0]);
    assert!(r.info.action_clipped);
    assert!(r.info.ramp_limited);
    let r = env.step(&ActionVector(vec![3.3, 1.0, 1.0])).unwrap();
    assert!(!r.info.action_clipped && !r.info.ramp_limited);
    assert_eq!(r.info.applied.0, vec![3.3, 1.0, 1.0]);
}

#[test]
fn observations_are_normalized() {
    let (cfg, mut env) = env();
    let (obs, _) = env.reset();
    assert_eq!(obs.len(), cfg.observations.len(25));
    let mut policy = UniformRandom::new(3);
    let ep = run_episode(&mut env, &mut policy, 3).unwrap();
    assert_eq!(ep.records.len(), 150);
    assert!(env.observation().iter().all(|v| v.is_finite()));
}

#[test]
fn sink_receives_every_record() {
    let (cfg, mut env) = env();
    let buffer = RecordBuffer::new();
    env.attach_sink(Box::new(buffer.clone()));
    let ep = run_episode(&mut env, &mut OpenLoop { reference: cfg.policies.reference }, 0).unwrap();
    assert_eq!(buffer.take(), ep.records);
    assert!(env.detach_sink().is_some());
}

#[test]
fn episodes_are_reproducible() {
    let (_, mut env) = env();
    let a = run_episode(&mut env, &mut UniformRandom::new(0), 11).unwrap();
    let b = run_episode(&mut env, &mut UniformRandom::new(99), 11).unwrap();
    assert_eq!(a.records, b.records);
    let c = run_episode(&mut env, &mut UniformRandom::new(0), 12).unwrap();
    assert_ne!(a.records, c.records);
}
