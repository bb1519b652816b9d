//! Reference controllers: the centralized cluster-and-plan benchmark, a
//! uniform random policy, and the single-attention PPO variant.

pub mod grid;

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{Action, Environment, NetworkState};
use crate::error::{Error, Result};
use crate::policy::PolicyKind;
use crate::trainer::targets::{CentroidTracker, ClusterAssignment};
use crate::trainer::train::{altitude_rule, Controller, TrainConfig};
pub use grid::{bfs_hops, dijkstra, GridGraph, GridPath};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    /// Clustering period in slots.
    pub tau_c: usize,
    /// Lattice spacing; defaults to the MAP step size.
    pub grid_resolution_m: f64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self { tau_c: 10, grid_resolution_m: 5.0 }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau_c == 0 {
            return Err(Error::Config("tau_c must be >= 1".into()));
        }
        if !(self.grid_resolution_m > 0.0) {
            return Err(Error::Config("grid_resolution_m must be > 0".into()));
        }
        Ok(())
    }
}

/// Centralized benchmark. Every `tau_c` slots it reclusters the UEs, lifts
/// the centers with the altitude rule, matches them to MAPs and plans a
/// lattice path for each MAP. In between it keeps following the old paths.
#[derive(Debug, Clone)]
pub struct CentralizedController {
    pub config: BenchmarkConfig,
    grid: GridGraph,
    tracker: Option<CentroidTracker>,
    paths: Vec<VecDeque<Action>>,
    assignment: Option<ClusterAssignment>,
    slot: usize,
}

impl CentralizedController {
    pub fn new(env: &Environment, config: BenchmarkConfig) -> Result<Self> {
        config.validate()?;
        let grid = GridGraph::new(&env.config, config.grid_resolution_m)?;
        Ok(Self { config, grid, tracker: None, paths: Vec::new(), assignment: None, slot: 0 })
    }

    /// Targets from the most recent clustering.
    pub fn assignment(&self) -> Option<&ClusterAssignment> {
        self.assignment.as_ref()
    }

    fn replan(&mut self, env: &Environment, state: &NetworkState, rng: &mut ChaCha8Rng) {
        let ues = state.ue_locations();
        let maps = state.map_locations();
        let assignment = match self.tracker.as_mut() {
            Some(t) => t.update(&ues, &maps, rng),
            None => {
                let mut t = CentroidTracker::new(state.maps.len(), altitude_rule(env));
                let a = t.recluster(&ues, &maps, rng);
                self.tracker = Some(t);
                a
            }
        };
        self.paths = maps
            .iter()
            .enumerate()
            .map(|(i, loc)| {
                let source = self.grid.nearest_node(loc);
                let target = self.grid.nearest_node(&assignment.target_of(i));
                dijkstra(&self.grid, source, target).actions.into()
            })
            .collect();
        self.assignment = Some(assignment);
    }
}

impl Controller for CentralizedController {
    fn name(&self) -> String {
        "CENTRALIZED".into()
    }

    fn reset(&mut self, _env: &Environment, _state: &NetworkState, _rng: &mut ChaCha8Rng) {
        self.tracker = None;
        self.paths.clear();
        self.assignment = None;
        self.slot = 0;
    }

    fn act(&mut self, env: &Environment, state: &NetworkState, rng: &mut ChaCha8Rng) -> Vec<Action> {
        if self.slot % self.config.tau_c == 0 || self.paths.len() != state.maps.len() {
            self.replan(env, state, rng);
        }
        self.slot += 1;
        self.paths.iter_mut().map(|p| p.pop_front().unwrap_or(Action::Hover)).collect()
    }
}

/// One uniformly random action per MAP.
pub fn random_policy(state: &NetworkState, rng: &mut ChaCha8Rng) -> Vec<Action> {
    state.maps.iter().map(|_| Action::from_index(rng.random_range(0..Action::COUNT))).collect()
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RandomController;

impl Controller for RandomController {
    fn name(&self) -> String {
        "RANDOM".into()
    }

    fn act(&mut self, _env: &Environment, state: &NetworkState, rng: &mut ChaCha8Rng) -> Vec<Action> {
        random_policy(state, rng)
    }
}

/// The same training setup with the MAP attention branch removed.
pub fn sa_ppo_builder(config: &TrainConfig) -> TrainConfig {
    TrainConfig { policy_kind: PolicyKind::SaPpo, ..config.clone() }
}
