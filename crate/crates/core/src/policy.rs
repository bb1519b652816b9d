//! End-to-end agent policy: per-class attention encoders feeding the
//! actor-critic block.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::encoder::{encode_backward, encode_with_cache, EncoderCache, EncoderParams, MessageSet};
use crate::nn::{ActorCriticCache, ActorCriticParams, PolicyOutput};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// UE and MAP attention branches.
    DualAttention,
    /// UE branch only; the MAP half of the actor-critic input is zero.
    SaPpo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    /// Embedding width `n` of each attention branch.
    pub embed_dim: usize,
    /// Give the critic its own trunk instead of sharing the actor's.
    pub split_critic: bool,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self { embed_dim: 128, split_critic: false }
    }
}

/// What one agent observes in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub ue: MessageSet,
    pub map: MessageSet,
}

/// The dual embedding `(phi_ue, phi_map)`, each of length `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateRepresentation {
    pub phi_ue: Vec<f64>,
    pub phi_map: Vec<f64>,
}

impl StateRepresentation {
    pub fn concat(&self) -> Vec<f64> {
        let mut v = self.phi_ue.clone();
        v.extend_from_slice(&self.phi_map);
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyNet {
    pub kind: PolicyKind,
    pub ue_encoder: EncoderParams,
    pub map_encoder: Option<EncoderParams>,
    pub actor_critic: ActorCriticParams,
}

#[derive(Debug, Clone)]
pub struct PolicyCache {
    ue: EncoderCache,
    map: Option<EncoderCache>,
    ac: ActorCriticCache,
}

impl PolicyNet {
    pub fn new<R: Rng + ?Sized>(kind: PolicyKind, config: &PolicyConfig, rng: &mut R) -> Self {
        let n = config.embed_dim;
        let ue_encoder = EncoderParams::init(n, rng);
        let map_encoder = (kind == PolicyKind::DualAttention).then(|| EncoderParams::init(n, rng));
        let actor_critic = ActorCriticParams::init(2 * n, config.split_critic, rng);
        Self { kind, ue_encoder, map_encoder, actor_critic }
    }

    /// Same architecture, every parameter zero. Used as a gradient buffer.
    pub fn zeros_like(&self) -> Self {
        let n = self.embed_dim();
        Self {
            kind: self.kind,
            ue_encoder: EncoderParams::zeros(n),
            map_encoder: self.map_encoder.as_ref().map(|_| EncoderParams::zeros(n)),
            actor_critic: self.actor_critic.zeros_like(),
        }
    }

    pub fn embed_dim(&self) -> usize {
        self.ue_encoder.embed_dim()
    }

    fn represent_with_cache(&self, obs: &Observation) -> (StateRepresentation, EncoderCache, Option<EncoderCache>) {
        let (phi_ue, ue_cache) = encode_with_cache(&self.ue_encoder, &obs.ue);
        let (phi_map, map_cache) = match &self.map_encoder {
            Some(enc) => {
                let (phi, cache) = encode_with_cache(enc, &obs.map);
                (phi, Some(cache))
            }
            None => (vec![0.0; self.embed_dim()], None),
        };
        (StateRepresentation { phi_ue, phi_map }, ue_cache, map_cache)
    }

    pub fn represent(&self, obs: &Observation) -> StateRepresentation {
        self.represent_with_cache(obs).0
    }

    pub fn forward(&self, obs: &Observation) -> (PolicyOutput, PolicyCache) {
        let (rep, ue, map) = self.represent_with_cache(obs);
        let (out, ac) = self.actor_critic.forward(&rep.concat());
        (out, PolicyCache { ue, map, ac })
    }

    pub fn forward_representation(&self, rep: &StateRepresentation) -> PolicyOutput {
        self.actor_critic.forward(&rep.concat()).0
    }

    /// Backpropagates output gradients through heads, trunk and encoders,
    /// accumulating into `grads` (a buffer from [`PolicyNet::zeros_like`]).
    pub fn backward(
        &self,
        obs: &Observation,
        cache: &PolicyCache,
        output: &PolicyOutput,
        d_logits: &[f64],
        d_value: f64,
        grads: &mut PolicyNet,
    ) {
        let d_input = self
            .actor_critic
            .backward(&cache.ac, output, d_logits, d_value, &mut grads.actor_critic);
        let n = self.embed_dim();
        encode_backward(&self.ue_encoder, &obs.ue, &cache.ue, &d_input[..n], &mut grads.ue_encoder);
        if let (Some(enc), Some(c), Some(g)) = (&self.map_encoder, &cache.map, grads.map_encoder.as_mut()) {
            encode_backward(enc, &obs.map, c, &d_input[n..], g);
        }
    }

    /// Mutable views of all parameter tensors in checkpoint order.
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = self.ue_encoder.tensors_mut().into_iter().collect();
        if let Some(enc) = self.map_encoder.as_mut() {
            out.extend(enc.tensors_mut());
        }
        out.extend(self.actor_critic.tensors_mut());
        out
    }

    /// `(name, shape, data)` of all parameter tensors in checkpoint order.
    pub fn named_tensors(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        let mut out = Vec::new();
        let branches = std::iter::once(("ue", &self.ue_encoder)).chain(self.map_encoder.as_ref().map(|e| ("map", e)));
        for (prefix, enc) in branches {
            for (name, m) in enc.tensors() {
                out.push((format!("encoder.{prefix}.{name}"), vec![m.rows, m.cols], &m.data[..]));
            }
        }
        for (name, shape, data) in self.actor_critic.named_tensors() {
            out.push((format!("actor_critic.{name}"), shape, data));
        }
        out
    }

    pub fn tensor_sizes(&self) -> Vec<usize> {
        self.named_tensors().iter().map(|(_, _, d)| d.len()).collect()
    }

    pub fn num_params(&self) -> usize {
        self.tensor_sizes().iter().sum()
    }
}
