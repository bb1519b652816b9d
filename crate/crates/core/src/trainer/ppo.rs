//! Dual-clip PPO: discounted returns, the clipped surrogate, and the
//! minibatch Adam update over the end-to-end policy.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{entropy, AdamConfig, AdamState};
use crate::policy::{Observation, PolicyNet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub gamma: f64,
    /// Ratio clip half-width.
    pub eps1: f64,
    /// Negative-advantage floor is `(1 + eps2) A`.
    pub eps2: f64,
    pub epochs_per_update: usize,
    pub minibatch_size: usize,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub learning_rate: f64,
    /// Rescale each minibatch gradient to at most this global L2 norm.
    #[serde(default)]
    pub max_grad_norm: Option<f64>,
    /// Decay the learning rate linearly to zero over the training runs.
    #[serde(default)]
    pub anneal_lr: bool,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.6,
            eps1: 0.01,
            eps2: 0.5,
            epochs_per_update: 4,
            minibatch_size: 256,
            entropy_coef: 0.01,
            value_coef: 0.5,
            learning_rate: 1e-4,
            max_grad_norm: None,
            anneal_lr: false,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = (0.0..1.0).contains(&self.gamma)
            && self.eps1 > 0.0
            && self.eps2 > 0.0
            && self.minibatch_size > 0
            && self.learning_rate >= 0.0
            && self.max_grad_norm.is_none_or(|m| m > 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::Config("ppo: need gamma in [0,1), eps1, eps2 > 0, minibatch_size > 0, lr >= 0".into()))
        }
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig { lr: self.learning_rate, ..AdamConfig::default() }
    }
}

/// One agent-step of experience.
#[derive(Debug, Clone)]
pub struct Transition {
    pub observation: Observation,
    pub action: usize,
    pub log_prob: f64,
    pub reward: f64,
    pub value: f64,
    pub done: bool,
}

/// Rollout storage, one trajectory per agent.
#[derive(Debug, Clone, Default)]
pub struct TrajectoryBuffer {
    pub agents: Vec<Vec<Transition>>,
}

impl TrajectoryBuffer {
    pub fn new(num_agents: usize) -> Self {
        Self { agents: vec![Vec::new(); num_agents] }
    }

    pub fn len(&self) -> usize {
        self.agents.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Discounted returns `G_t = r_t + gamma G_{t+1}` (zero after `done`) and
/// raw advantages `G_t - V_t`.
pub fn returns_and_advantages(rewards: &[f64], values: &[f64], dones: &[bool], gamma: f64) -> (Vec<f64>, Vec<f64>) {
    let mut returns = vec![0.0; rewards.len()];
    let mut next = 0.0;
    for t in (0..rewards.len()).rev() {
        if dones[t] {
            next = 0.0;
        }
        next = rewards[t] + gamma * next;
        returns[t] = next;
    }
    let adv = returns.iter().zip(values).map(|(g, v)| g - v).collect();
    (returns, adv)
}

/// Rescale to zero mean and unit variance. A constant batch maps to zeros.
pub fn normalize(values: &mut [f64]) {
    if values.is_empty() {
        return;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    for v in values.iter_mut() {
        *v = if std > 1e-12 { (*v - mean) / std } else { 0.0 };
    }
}

/// Dual-clip surrogate and its derivative with respect to the new
/// log-probability.
///
/// `s = min(rho A, clip(rho, 1-eps1, 1+eps1) A)`, and for `A < 0` the
/// result is floored at `(1 + eps2) A`.
pub fn dual_clip_surrogate(log_prob_new: f64, log_prob_old: f64, advantage: f64, eps1: f64, eps2: f64) -> (f64, f64) {
    let ratio = (log_prob_new - log_prob_old).exp();
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - eps1, 1.0 + eps1) * advantage;
    // The unclipped branch carries the gradient only when it is the min.
    let (mut s, mut grad) = if unclipped <= clipped { (unclipped, unclipped) } else { (clipped, 0.0) };
    if advantage < 0.0 {
        let floor = (1.0 + eps2) * advantage;
        if floor > s {
            s = floor;
            grad = 0.0;
        }
    }
    (s, grad)
}

/// Per-sample policy loss `-s`.
pub fn dual_clip_loss(log_prob_new: f64, log_prob_old: f64, advantage: f64, eps1: f64, eps2: f64) -> f64 {
    -dual_clip_surrogate(log_prob_new, log_prob_old, advantage, eps1, eps2).0
}

/// Everything the update needs about one transition.
#[derive(Debug, Clone)]
pub struct Sample<'a> {
    pub observation: &'a Observation,
    pub action: usize,
    pub old_log_prob: f64,
    pub ret: f64,
    pub advantage: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    pub loss: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub minibatches: usize,
}

/// Loss on a minibatch and its gradient, accumulated into `grads` (already
/// divided by the batch size). Returns (total, policy, value, entropy).
pub fn minibatch_loss_and_grad(
    policy: &PolicyNet,
    batch: &[Sample<'_>],
    config: &PpoConfig,
    grads: &mut PolicyNet,
) -> (f64, f64, f64, f64) {
    let scale = 1.0 / batch.len() as f64;
    let (mut total, mut pl, mut vl, mut ent) = (0.0, 0.0, 0.0, 0.0);
    for s in batch {
        let (out, cache) = policy.forward(s.observation);
        let p = &out.action_probs;
        let log_p = p[s.action].ln();
        let (surr, d_surr) = dual_clip_surrogate(log_p, s.old_log_prob, s.advantage, config.eps1, config.eps2);
        let h = entropy(p);
        let v_err = out.value - s.ret;
        pl += -surr;
        vl += v_err * v_err;
        ent += h;
        total += -surr + config.value_coef * v_err * v_err - config.entropy_coef * h;

        // d(-s)/dz_k = -ds/dlogp (1[k=a] - p_k); d(-c H)/dz_k = c p_k (ln p_k + H).
        let d_logits: Vec<f64> = (0..p.len())
            .map(|k| {
                let onehot = if k == s.action { 1.0 } else { 0.0 };
                let policy_term = -d_surr * (onehot - p[k]);
                let entropy_term = if p[k] > 0.0 { config.entropy_coef * p[k] * (p[k].ln() + h) } else { 0.0 };
                (policy_term + entropy_term) * scale
            })
            .collect();
        let d_value = 2.0 * config.value_coef * v_err * scale;
        policy.backward(s.observation, &cache, &out, &d_logits, d_value, grads);
    }
    (total * scale, pl * scale, vl * scale, ent * scale)
}

/// Runs `epochs_per_update` shuffled passes of minibatch Adam steps.
pub fn ppo_update<R: Rng + ?Sized>(
    policy: &mut PolicyNet,
    adam: &mut AdamState,
    samples: &[Sample<'_>],
    config: &PpoConfig,
    run: usize,
    rng: &mut R,
) -> Result<UpdateStats> {
    let mut stats = UpdateStats::default();
    if samples.is_empty() {
        return Ok(stats);
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    for _ in 0..config.epochs_per_update {
        order.shuffle(rng);
        for chunk in order.chunks(config.minibatch_size) {
            let batch: Vec<Sample<'_>> = chunk.iter().map(|&i| samples[i].clone()).collect();
            let mut grads = policy.zeros_like();
            let (loss, pl, vl, ent) = minibatch_loss_and_grad(policy, &batch, config, &mut grads);
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    run,
                    detail: format!("policy {pl}, value {vl}, entropy {ent}"),
                });
            }
            if let Some(max) = config.max_grad_norm {
                let norm = grads.tensors_mut().iter().flat_map(|t| t.iter()).map(|g| g * g).sum::<f64>().sqrt();
                if norm > max {
                    for t in grads.tensors_mut() {
                        t.iter_mut().for_each(|g| *g *= max / norm);
                    }
                }
            }
            let grad_views: Vec<&[f64]> = grads.named_tensors().into_iter().map(|(_, _, d)| d).collect();
            adam.step(&mut policy.tensors_mut(), &grad_views);
            stats.loss += loss;
            stats.policy_loss += pl;
            stats.value_loss += vl;
            stats.entropy += ent;
            stats.minibatches += 1;
        }
    }
    let k = stats.minibatches as f64;
    stats.loss /= k;
    stats.policy_loss /= k;
    stats.value_loss /= k;
    stats.entropy /= k;
    Ok(stats)
}
