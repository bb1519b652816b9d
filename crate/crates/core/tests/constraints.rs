//! Feasibility of every state reached under random actions.

mod common;

use common::suites::{check_feasible, random_walk};
use dualmap::channel::RadioConfig;
use dualmap::env::{Action, EnvConfig, Environment};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn reference_network_never_violates_constraints() {
    random_walk(EnvConfig::default(), 1, 10_000);
}

#[test]
fn tight_capacity_never_violates_constraints() {
    // Few connections per MAP and crowded UEs so the cap actually binds.
    let cfg = EnvConfig { max_connections: 2, num_ues: 40, centroid_radius_m: 10.0, ..EnvConfig::default() };
    random_walk(cfg, 2, 10_000);
}

#[test]
fn pushing_into_the_boundary_stays_inside() {
    let env = Environment::new(EnvConfig::default(), RadioConfig::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut state = env.reset(&mut rng);
    for action in [Action::Up, Action::Down, Action::Left, Action::Right, Action::Forward, Action::Backward] {
        for _ in 0..60 {
            let prev = state.clone();
            let actions = vec![action; state.maps.len()];
            env.step(&mut state, &actions, &mut rng).unwrap();
            check_feasible(&env, &prev, &state);
        }
    }
}

#[test]
fn wrong_action_count_is_rejected() {
    let env = Environment::new(EnvConfig::default(), RadioConfig::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut state = env.reset(&mut rng);
    assert!(env.step(&mut state, &[Action::Hover], &mut rng).is_err());
}
