//! Multi-agent training loop and greedy evaluation loop.
//!
//! Training: every run deploys a fresh network, rolls out one episode with
//! centroid targets recomputed each slot, scores it, and runs one PPO update
//! per policy. Evaluation: no clustering and no reward, agents act on
//! messages alone and the network sum-rate is recorded every slot.

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ppo::{normalize, ppo_update, returns_and_advantages, PpoConfig, Sample, TrajectoryBuffer, Transition};
use super::reward::{reward, RewardConfig, RewardScale, RunningMean};
use super::targets::{AltitudeRule, CentroidTracker};
use crate::encoder::{MessageSet, Normalizer};
use crate::env::{Action, ChannelDraw, EntityClass, Environment, NetworkState};
use crate::error::{Error, Result};
use crate::nn::{greedy_action, sample_action, AdamState};
use crate::policy::{Observation, PolicyConfig, PolicyKind, PolicyNet};
use crate::rng::stream_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub runs: usize,
    pub policy_kind: PolicyKind,
    pub policy: PolicyConfig,
    pub ppo: PpoConfig,
    pub reward: RewardConfig,
    /// One parameter set for all agents instead of one per agent.
    pub shared_policy: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            runs: 2000,
            policy_kind: PolicyKind::DualAttention,
            policy: PolicyConfig::default(),
            ppo: PpoConfig::default(),
            reward: RewardConfig::default(),
            shared_policy: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.ppo.validate()?;
        self.reward.validate()?;
        if self.policy.embed_dim == 0 {
            return Err(Error::Config("policy.embed_dim must be >= 1".into()));
        }
        Ok(())
    }
}

/// One learning-curve row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRecord {
    pub run: usize,
    pub agent_id: usize,
    pub mean_reward: f64,
    pub loss: f64,
    pub entropy: f64,
    pub mean_sum_rate_bps: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    /// A single entry when the policy is shared.
    pub policies: Vec<PolicyNet>,
    pub curve: Vec<CurveRecord>,
}

impl TrainOutput {
    /// Mean over agents of the per-run mean reward, one value per run.
    pub fn run_rewards(&self) -> Vec<f64> {
        let runs = self.curve.iter().map(|c| c.run + 1).max().unwrap_or(0);
        let mut sums = vec![(0.0, 0usize); runs];
        for c in &self.curve {
            sums[c.run].0 += c.mean_reward;
            sums[c.run].1 += 1;
        }
        sums.into_iter().map(|(s, n)| s / n.max(1) as f64).collect()
    }
}

pub fn normalizer(env: &Environment) -> Normalizer {
    Normalizer { area_x_m: env.config.area_x_m, area_y_m: env.config.area_y_m, z_max_m: env.config.z_max_m }
}

/// Messages received by MAP `agent` from its UE and MAP neighborhoods.
pub fn observe(env: &Environment, state: &NetworkState, agent: usize, norm: &Normalizer) -> Observation {
    let own = state.maps[agent].loc;
    let ues = env.neighborhood(state, agent, EntityClass::Ue);
    let maps = env.neighborhood(state, agent, EntityClass::Map);
    Observation {
        ue: MessageSet::from_locations(EntityClass::Ue, &own, &ues, norm),
        map: MessageSet::from_locations(EntityClass::Map, &own, &maps, norm),
    }
}

pub fn altitude_rule(env: &Environment) -> AltitudeRule {
    AltitudeRule {
        aperture_deg: env.radio.map.aperture_angle_deg,
        z_min: env.config.z_min_m,
        z_max: env.config.z_max_m,
    }
}

struct Episode {
    buffer: TrajectoryBuffer,
    distances: Vec<Vec<f64>>,
    sum_rates: Vec<f64>,
}

fn rollout(env: &Environment, policies: &[PolicyNet], rng: &mut ChaCha8Rng) -> Result<Episode> {
    let m = env.config.num_maps;
    let norm = normalizer(env);
    let mut state = env.reset(rng);
    let mut tracker = CentroidTracker::new(m, altitude_rule(env));
    tracker.recluster(&state.ue_locations(), &state.map_locations(), rng);

    let mut buffer = TrajectoryBuffer::new(m);
    let mut distances = vec![Vec::with_capacity(env.config.episode_len); m];
    let mut sum_rates = Vec::with_capacity(env.config.episode_len);
    for t in 0..env.config.episode_len {
        let mut actions = Vec::with_capacity(m);
        for agent in 0..m {
            let policy = &policies[agent % policies.len()];
            let observation = observe(env, &state, agent, &norm);
            let (out, _) = policy.forward(&observation);
            let (action, log_prob) = sample_action(&out.action_probs, rng);
            actions.push(action);
            buffer.agents[agent].push(Transition {
                observation,
                action: action.index(),
                log_prob,
                reward: 0.0,
                value: out.value,
                done: t + 1 == env.config.episode_len,
            });
        }
        env.step(&mut state, &actions, rng)?;
        sum_rates.push(env.sum_rate(&state, ChannelDraw::Sampled, rng));
        let targets = tracker.update(&state.ue_locations(), &state.map_locations(), rng);
        for (agent, d) in distances.iter_mut().enumerate() {
            d.push(state.maps[agent].loc.distance(&targets.target_of(agent)));
        }
    }
    Ok(Episode { buffer, distances, sum_rates })
}

/// Trains agent policies from scratch. Fully determined by `seed`.
pub fn train(env: &Environment, config: &TrainConfig, seed: u64) -> Result<TrainOutput> {
    train_with_progress(env, config, seed, |_, _| {})
}

/// As [`train`], calling `progress(run, mean_reward)` after every run.
pub fn train_with_progress<F: FnMut(usize, f64)>(
    env: &Environment,
    config: &TrainConfig,
    seed: u64,
    mut progress: F,
) -> Result<TrainOutput> {
    config.validate()?;
    let m = env.config.num_maps;
    let mut init_rng = stream_rng(seed, u64::MAX);
    let count = if config.shared_policy { 1 } else { m };
    let mut policies: Vec<PolicyNet> = (0..count)
        .map(|_| PolicyNet::new(config.policy_kind, &config.policy, &mut init_rng))
        .collect();
    let mut adams: Vec<AdamState> = policies
        .iter()
        .map(|p| AdamState::new(config.ppo.adam(), &p.tensor_sizes()))
        .collect();

    let scale_d = config.reward.d_max_m.unwrap_or_else(|| env.config.area_diagonal_m());
    let mut rate_mean = RunningMean::new(config.reward.r_avg_window);
    let mut curve = Vec::with_capacity(config.runs * m);

    for run in 0..config.runs {
        let mut rng = stream_rng(seed, run as u64);
        let mut episode = rollout(env, &policies, &mut rng)?;

        let n_steps = episode.sum_rates.len().max(1) as f64;
        rate_mean.push(episode.sum_rates.iter().sum::<f64>() / n_steps);
        // Guard the normalizer against an episode with no traffic at all.
        let scale = RewardScale { d_max_m: scale_d, r_avg_bps: rate_mean.mean().unwrap_or(1.0).max(1.0) };
        let mut mean_rewards = vec![0.0; m];
        for agent in 0..m {
            for (t, tr) in episode.buffer.agents[agent].iter_mut().enumerate() {
                tr.reward = reward(episode.distances[agent][t], episode.sum_rates[t], scale, &config.reward);
                mean_rewards[agent] += tr.reward;
            }
            mean_rewards[agent] /= n_steps;
            if !mean_rewards[agent].is_finite() {
                return Err(Error::NonFiniteLoss { run, detail: format!("reward of agent {agent} is not finite") });
            }
        }

        if config.ppo.anneal_lr {
            let frac = 1.0 - run as f64 / config.runs as f64;
            for adam in adams.iter_mut() {
                adam.config.lr = config.ppo.learning_rate * frac;
            }
        }
        let mut stats = Vec::with_capacity(count);
        for (p, (policy, adam)) in policies.iter_mut().zip(adams.iter_mut()).enumerate() {
            let agents: Vec<usize> = (0..m).filter(|a| a % count == p).collect();
            let mut samples: Vec<Sample<'_>> = Vec::new();
            let mut advantages = Vec::new();
            for &a in &agents {
                let traj = &episode.buffer.agents[a];
                let rewards: Vec<f64> = traj.iter().map(|t| t.reward).collect();
                let values: Vec<f64> = traj.iter().map(|t| t.value).collect();
                let dones: Vec<bool> = traj.iter().map(|t| t.done).collect();
                let (returns, adv) = returns_and_advantages(&rewards, &values, &dones, config.ppo.gamma);
                for (i, tr) in traj.iter().enumerate() {
                    samples.push(Sample {
                        observation: &tr.observation,
                        action: tr.action,
                        old_log_prob: tr.log_prob,
                        ret: returns[i],
                        advantage: 0.0,
                    });
                }
                advantages.extend(adv);
            }
            normalize(&mut advantages);
            for (s, a) in samples.iter_mut().zip(advantages) {
                s.advantage = a;
            }
            stats.push(ppo_update(policy, adam, &samples, &config.ppo, run, &mut rng)?);
        }

        let mean_rate = episode.sum_rates.iter().sum::<f64>() / n_steps;
        for (agent, &mean_reward) in mean_rewards.iter().enumerate() {
            let s = stats[agent % count];
            curve.push(CurveRecord {
                run,
                agent_id: agent,
                mean_reward,
                loss: s.loss,
                entropy: s.entropy,
                mean_sum_rate_bps: mean_rate,
            });
        }
        let run_mean = mean_rewards.iter().sum::<f64>() / m as f64;
        log::debug!("run {run}: mean reward {run_mean:.4}, loss {:.4}", stats[0].loss);
        progress(run, run_mean);
        episode.buffer.agents.clear();
    }
    Ok(TrainOutput { policies, curve })
}

/// Anything that picks one action per MAP each slot.
pub trait Controller {
    fn name(&self) -> String;

    /// Called once on a fresh deployment before the first slot.
    fn reset(&mut self, _env: &Environment, _state: &NetworkState, _rng: &mut ChaCha8Rng) {}

    fn act(&mut self, env: &Environment, state: &NetworkState, rng: &mut ChaCha8Rng) -> Vec<Action>;
}

/// Trained agents acting on messages only.
#[derive(Debug, Clone)]
pub struct PolicyController {
    pub policies: Vec<PolicyNet>,
    /// Argmax actions instead of sampling.
    pub greedy: bool,
}

impl Controller for PolicyController {
    fn name(&self) -> String {
        match self.policies.first().map(|p| p.kind) {
            Some(PolicyKind::SaPpo) => "SA_PPO".into(),
            _ => "DUAL_ATTENTION".into(),
        }
    }

    fn act(&mut self, env: &Environment, state: &NetworkState, rng: &mut ChaCha8Rng) -> Vec<Action> {
        let norm = normalizer(env);
        (0..state.maps.len())
            .map(|agent| {
                let policy = &self.policies[agent % self.policies.len()];
                let (out, _) = policy.forward(&observe(env, state, agent, &norm));
                if self.greedy {
                    greedy_action(&out.action_probs)
                } else {
                    sample_action(&out.action_probs, rng).0
                }
            })
            .collect()
    }
}

/// Per-deployment traces from [`evaluate`].
#[derive(Debug, Clone, PartialEq)]
pub struct DeploymentTrace {
    pub deployment: usize,
    /// `R(t)` for `t = 1..=horizon`.
    pub sum_rate_bps: Vec<f64>,
    /// `load[t][i]` is the fraction of UEs on MAP `i` after slot `t`.
    pub load: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub controller: String,
    pub traces: Vec<DeploymentTrace>,
}

impl EvalResult {
    pub fn horizon(&self) -> usize {
        self.traces.first().map_or(0, |t| t.sum_rate_bps.len())
    }

    /// `E[R(t)]` across deployments.
    pub fn mean_trace(&self) -> Vec<f64> {
        let n = self.traces.len().max(1) as f64;
        (0..self.horizon())
            .map(|t| self.traces.iter().map(|d| d.sum_rate_bps[t]).sum::<f64>() / n)
            .collect()
    }

    /// Mean over deployments of the per-MAP load, per slot.
    pub fn mean_load_trace(&self) -> Vec<Vec<f64>> {
        let n = self.traces.len().max(1) as f64;
        (0..self.horizon())
            .map(|t| {
                let maps = self.traces[0].load[t].len();
                (0..maps)
                    .map(|i| self.traces.iter().map(|d| d.load[t][i]).sum::<f64>() / n)
                    .collect()
            })
            .collect()
    }

    /// Mean sum-rate over every slot and deployment (0 for an empty run).
    pub fn mean_sum_rate(&self) -> f64 {
        let trace = self.mean_trace();
        if trace.is_empty() {
            0.0
        } else {
            trace.iter().sum::<f64>() / trace.len() as f64
        }
    }

    /// Mean sum-rate over the final `window` slots.
    pub fn tail_mean_sum_rate(&self, window: usize) -> f64 {
        let trace = self.mean_trace();
        let tail = &trace[trace.len().saturating_sub(window)..];
        if tail.is_empty() {
            0.0
        } else {
            tail.iter().sum::<f64>() / tail.len() as f64
        }
    }
}

/// Greedy evaluation over `deployments` random deployments in parallel.
///
/// Deployment `d` draws its network from its own stream of `seed`, and the
/// controller gets a separate stream, so every controller faces the same
/// deployments, mobility, traffic and fading.
pub fn evaluate<C, F>(env: &Environment, make_controller: F, deployments: usize, horizon: usize, seed: u64) -> Result<EvalResult>
where
    C: Controller,
    F: Fn(usize) -> C + Sync,
{
    let name = make_controller(0).name();
    let traces: Result<Vec<DeploymentTrace>> = (0..deployments)
        .into_par_iter()
        .map(|d| {
            let mut env_rng = stream_rng(seed, 2 * d as u64);
            let mut ctl_rng = stream_rng(seed, 2 * d as u64 + 1);
            let mut controller = make_controller(d);
            let mut state = env.reset(&mut env_rng);
            controller.reset(env, &state, &mut ctl_rng);
            let mut sum_rate_bps = Vec::with_capacity(horizon);
            let mut load = Vec::with_capacity(horizon);
            for _ in 0..horizon {
                let actions = controller.act(env, &state, &mut ctl_rng);
                env.step(&mut state, &actions, &mut env_rng)?;
                sum_rate_bps.push(env.sum_rate(&state, ChannelDraw::Sampled, &mut env_rng));
                load.push(env.network_load(&state).per_map);
            }
            Ok(DeploymentTrace { deployment: d, sum_rate_bps, load })
        })
        .collect();
    Ok(EvalResult { controller: name, traces: traces? })
}
