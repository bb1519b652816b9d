//! Attention message encoder.
//!
//! An agent at `own` receives the locations of neighboring entities of one
//! class. For each neighbor `j` the relative offset `own - l_j` is projected
//! to a key and a value; the agent's own location is projected to a query.
//! The output is the softmax-weighted sum of the values, a fixed-size
//! vector whatever the number or order of neighbors.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::Location3D;
use crate::env::EntityClass;
use crate::nn::{dot, softmax, Matrix};

/// Maps meters into `[-1, 1]^3`: x and y over the deployment area, z over
/// `[0, z_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub area_x_m: f64,
    pub area_y_m: f64,
    pub z_max_m: f64,
}

impl Normalizer {
    pub fn apply(&self, loc: &Location3D) -> [f64; 3] {
        [
            2.0 * loc.x / self.area_x_m - 1.0,
            2.0 * loc.y / self.area_y_m - 1.0,
            2.0 * loc.z / self.z_max_m - 1.0,
        ]
    }
}

/// Messages one agent received from one entity class, in normalized
/// coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageSet {
    pub class: EntityClass,
    pub own: [f64; 3],
    pub neighbors: Vec<[f64; 3]>,
}

impl MessageSet {
    pub fn from_locations(class: EntityClass, own: &Location3D, neighbors: &[Location3D], norm: &Normalizer) -> Self {
        Self {
            class,
            own: norm.apply(own),
            neighbors: neighbors.iter().map(|l| norm.apply(l)).collect(),
        }
    }

    fn relative(&self) -> Vec<[f64; 3]> {
        self.neighbors
            .iter()
            .map(|n| [self.own[0] - n[0], self.own[1] - n[1], self.own[2] - n[2]])
            .collect()
    }
}

/// Key, value and query projections (`n x 3` each) of one entity class.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub w_k: Matrix,
    pub w_v: Matrix,
    pub w_q: Matrix,
}

impl EncoderParams {
    /// Entries uniform in `±1/sqrt(3)`.
    pub fn init<R: Rng + ?Sized>(embed_dim: usize, rng: &mut R) -> Self {
        let bound = 1.0 / 3f64.sqrt();
        Self {
            w_k: Matrix::uniform(embed_dim, 3, bound, rng),
            w_v: Matrix::uniform(embed_dim, 3, bound, rng),
            w_q: Matrix::uniform(embed_dim, 3, bound, rng),
        }
    }

    pub fn zeros(embed_dim: usize) -> Self {
        Self {
            w_k: Matrix::zeros(embed_dim, 3),
            w_v: Matrix::zeros(embed_dim, 3),
            w_q: Matrix::zeros(embed_dim, 3),
        }
    }

    pub fn embed_dim(&self) -> usize {
        self.w_k.rows
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 3] {
        [&mut self.w_k.data, &mut self.w_v.data, &mut self.w_q.data]
    }

    pub fn tensors(&self) -> [(&'static str, &Matrix); 3] {
        [("w_k", &self.w_k), ("w_v", &self.w_v), ("w_q", &self.w_q)]
    }

    pub fn num_params(&self) -> usize {
        self.w_k.data.len() + self.w_v.data.len() + self.w_q.data.len()
    }
}

/// Softmax over scaled dot products `q . k_p / sqrt(n)`.
///
/// Returns `None` for an empty key list; the encoder then outputs zeros.
pub fn attention_weights(query: &[f64], keys: &[Vec<f64>]) -> Option<Vec<f64>> {
    if keys.is_empty() {
        return None;
    }
    let scale = (query.len() as f64).sqrt();
    let logits: Vec<f64> = keys.iter().map(|k| dot(query, k) / scale).collect();
    Some(softmax(&logits))
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct EncoderCache {
    pub relative: Vec<[f64; 3]>,
    pub query: Vec<f64>,
    pub keys: Vec<Vec<f64>>,
    pub values: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

pub fn encode_with_cache(params: &EncoderParams, messages: &MessageSet) -> (Vec<f64>, EncoderCache) {
    let n = params.embed_dim();
    let relative = messages.relative();
    let query = params.w_q.matvec(&messages.own);
    let keys: Vec<Vec<f64>> = relative.iter().map(|r| params.w_k.matvec(r)).collect();
    let values: Vec<Vec<f64>> = relative.iter().map(|r| params.w_v.matvec(r)).collect();
    let mut phi = vec![0.0; n];
    let weights = attention_weights(&query, &keys).unwrap_or_default();
    for (a, v) in weights.iter().zip(&values) {
        for (p, x) in phi.iter_mut().zip(v) {
            *p += a * x;
        }
    }
    (phi, EncoderCache { relative, query, keys, values, weights })
}

/// Fixed-size representation of one message set.
pub fn encode(params: &EncoderParams, messages: &MessageSet) -> Vec<f64> {
    encode_with_cache(params, messages).0
}

/// Gradients of `upstream . phi` with respect to `w_k`, `w_v` and `w_q`,
/// accumulated into `grads`.
pub fn encode_backward(
    params: &EncoderParams,
    messages: &MessageSet,
    cache: &EncoderCache,
    upstream: &[f64],
    grads: &mut EncoderParams,
) {
    if cache.weights.is_empty() {
        return;
    }
    let scale = (params.embed_dim() as f64).sqrt();
    // d phi / d alpha_j = v_j, so dL/d alpha_j = g . v_j.
    let d_alpha: Vec<f64> = cache.values.iter().map(|v| dot(upstream, v)).collect();
    let mean: f64 = cache.weights.iter().zip(&d_alpha).map(|(a, d)| a * d).sum();
    // Softmax Jacobian.
    let d_logit: Vec<f64> = cache.weights.iter().zip(&d_alpha).map(|(a, d)| a * (d - mean)).collect();

    let mut d_query = vec![0.0; params.embed_dim()];
    let mut rel_weighted = [0.0; 3];
    for j in 0..cache.weights.len() {
        grads.w_v.add_outer(upstream, &cache.relative[j], cache.weights[j]);
        let s = d_logit[j] / scale;
        for (dq, k) in d_query.iter_mut().zip(&cache.keys[j]) {
            *dq += s * k;
        }
        for (acc, r) in rel_weighted.iter_mut().zip(&cache.relative[j]) {
            *acc += s * r;
        }
    }
    // dL/dW_k = sum_j (d_logit_j / sqrt n) q rel_j^T
    grads.w_k.add_outer(&cache.query, &rel_weighted, 1.0);
    grads.w_q.add_outer(&d_query, &messages.own, 1.0);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_messages<R: Rng>(count: usize, rng: &mut R) -> MessageSet {
        let mut p = || [rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0];
        let own = p();
        MessageSet { class: EntityClass::Ue, own, neighbors: (0..count).map(|_| p()).collect() }
    }

    #[test]
    fn attention_weight_examples() {
        assert_eq!(attention_weights(&[1.0, 2.0], &[vec![3.0, 4.0]]), Some(vec![1.0]));
        let w = attention_weights(&[1.0, 2.0], &[vec![3.0, 4.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(w, vec![0.5, 0.5]);
        // n = 4 so sqrt(n) = 2; logits (1, 0).
        let w = attention_weights(&[1.0, 1.0, 0.0, 0.0], &[vec![1.0, 1.0, 0.0, 0.0], vec![0.0; 4]]).unwrap();
        assert!((w[0] - 0.7311).abs() < 1e-4 && (w[1] - 0.2689).abs() < 1e-4);
        assert_eq!(attention_weights(&[1.0], &[]), None);
    }

    #[test]
    fn coincident_neighbors_give_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let params = EncoderParams::init(16, &mut rng);
        let own = [0.1, -0.3, 0.5];
        let msgs = MessageSet { class: EntityClass::Map, own, neighbors: vec![own; 4] };
        assert!(encode(&params, &msgs).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn single_neighbor_is_its_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let params = EncoderParams::init(8, &mut rng);
        let msgs = random_messages(1, &mut rng);
        let rel = msgs.relative()[0];
        assert_eq!(encode(&params, &msgs), params.w_v.matvec(&rel));
    }

    #[test]
    fn empty_neighborhood() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params = EncoderParams::init(8, &mut rng);
        let msgs = random_messages(0, &mut rng);
        let (phi, cache) = encode_with_cache(&params, &msgs);
        assert_eq!(phi, vec![0.0; 8]);
        let mut g = EncoderParams::zeros(8);
        encode_backward(&params, &msgs, &cache, &[1.0; 8], &mut g);
        assert_eq!(g, EncoderParams::zeros(8));
    }

    #[test]
    fn zero_upstream_gives_zero_grads() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let params = EncoderParams::init(8, &mut rng);
        let msgs = random_messages(5, &mut rng);
        let (_, cache) = encode_with_cache(&params, &msgs);
        let mut g = EncoderParams::zeros(8);
        encode_backward(&params, &msgs, &cache, &[0.0; 8], &mut g);
        assert_eq!(g, EncoderParams::zeros(8));
    }

    #[test]
    fn output_size_is_fixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = EncoderParams::init(32, &mut rng);
        for k in 0..=15 {
            assert_eq!(encode(&params, &random_messages(k, &mut rng)).len(), 32);
        }
    }

    #[test]
    fn normalizer_bounds() {
        let n = Normalizer { area_x_m: 200.0, area_y_m: 100.0, z_max_m: 150.0 };
        assert_eq!(n.apply(&Location3D::new(0.0, 0.0, 0.0)), [-1.0, -1.0, -1.0]);
        assert_eq!(n.apply(&Location3D::new(200.0, 100.0, 150.0)), [1.0, 1.0, 1.0]);
        assert_eq!(n.apply(&Location3D::new(100.0, 50.0, 75.0)), [0.0, 0.0, 0.0]);
    }
}
