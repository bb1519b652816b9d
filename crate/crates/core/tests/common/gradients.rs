//! Analytic gradients against central finite differences.

use dualmap::encoder::{encode, encode_backward, encode_with_cache, EncoderParams, MessageSet};
use dualmap::env::EntityClass;
use dualmap::nn::{Activation, ActorCriticParams, DenseLayer};
use dualmap::policy::{Observation, PolicyConfig, PolicyKind, PolicyNet};
use dualmap::trainer::ppo::{minibatch_loss_and_grad, PpoConfig, Sample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-5;
const TOL: f64 = 1e-4;
const INSTANCES: usize = 100;
const COORDS_PER_TENSOR: usize = 6;

fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

fn point<R: Rng>(rng: &mut R) -> [f64; 3] {
    [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]
}

fn messages<R: Rng>(class: EntityClass, own: [f64; 3], max: usize, rng: &mut R) -> MessageSet {
    let count = rng.random_range(1..=max);
    MessageSet { class, own, neighbors: (0..count).map(|_| point(rng)).collect() }
}

fn random_vec<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Checks a handful of coordinates of every tensor. `loss` reads the
/// perturbed parameters; `analytic` lists the gradients in tensor order.
fn check_tensors<P: Clone>(
    params: &P,
    tensors: fn(&mut P) -> Vec<&mut [f64]>,
    analytic: &[Vec<f64>],
    loss: &dyn Fn(&P) -> f64,
    rng: &mut ChaCha8Rng,
    what: &str,
) {
    let mut probe = params.clone();
    let count = tensors(&mut probe).len();
    assert_eq!(count, analytic.len());
    for t in 0..count {
        let len = analytic[t].len();
        for _ in 0..COORDS_PER_TENSOR.min(len) {
            let i = rng.random_range(0..len);
            let orig = tensors(&mut probe)[t][i];
            tensors(&mut probe)[t][i] = orig + H;
            let up = loss(&probe);
            tensors(&mut probe)[t][i] = orig - H;
            let down = loss(&probe);
            tensors(&mut probe)[t][i] = orig;
            let numeric = (up - down) / (2.0 * H);
            let e = rel_err(analytic[t][i], numeric);
            assert!(e < TOL, "{what}: tensor {t} entry {i}: analytic {} numeric {numeric} rel {e}", analytic[t][i]);
        }
    }
}

fn encoder_tensors(p: &mut EncoderParams) -> Vec<&mut [f64]> {
    p.tensors_mut().into_iter().collect()
}

fn dense_tensors(p: &mut DenseLayer) -> Vec<&mut [f64]> {
    vec![&mut p.weights.data, &mut p.bias]
}

fn ac_tensors(p: &mut ActorCriticParams) -> Vec<&mut [f64]> {
    p.tensors_mut()
}

fn policy_tensors(p: &mut PolicyNet) -> Vec<&mut [f64]> {
    p.tensors_mut()
}

fn snapshot(mut tensors: Vec<&mut [f64]>) -> Vec<Vec<f64>> {
    tensors.iter_mut().map(|t| t.to_vec()).collect()
}

pub fn encoder_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..INSTANCES {
        let n = rng.random_range(2..=12);
        let params = EncoderParams::init(n, &mut rng);
        let msgs = messages(EntityClass::Ue, point(&mut rng), 15, &mut rng);
        let upstream = random_vec(n, &mut rng);
        let (_, cache) = encode_with_cache(&params, &msgs);
        let mut grads = EncoderParams::zeros(n);
        encode_backward(&params, &msgs, &cache, &upstream, &mut grads);
        let loss = |p: &EncoderParams| encode(p, &msgs).iter().zip(&upstream).map(|(a, b)| a * b).sum::<f64>();
        check_tensors(&params, encoder_tensors, &snapshot(grads.tensors_mut().into_iter().collect()), &loss, &mut rng, "encoder");
    }
}

pub fn dense_layer_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for k in 0..INSTANCES {
        let (i, o) = (rng.random_range(1..10), rng.random_range(1..10));
        let act = if k % 2 == 0 { Activation::Tanh } else { Activation::Identity };
        let layer = DenseLayer::init(i, o, act, 1.0, &mut rng);
        let mut layer = layer;
        layer.bias = random_vec(o, &mut rng);
        let x = random_vec(i, &mut rng);
        let g = random_vec(o, &mut rng);
        let y = layer.forward(&x);
        let mut grads = layer.zeros_like();
        let gx = layer.backward(&x, &y, &g, &mut grads);
        let loss = |l: &DenseLayer| l.forward(&x).iter().zip(&g).map(|(a, b)| a * b).sum::<f64>();
        check_tensors(&layer, dense_tensors, &snapshot(dense_tensors(&mut grads)), &loss, &mut rng, "dense");

        for j in 0..i {
            let mut xp = x.clone();
            xp[j] += H;
            let mut xm = x.clone();
            xm[j] -= H;
            let f = |v: &[f64]| layer.forward(v).iter().zip(&g).map(|(a, b)| a * b).sum::<f64>();
            let numeric = (f(&xp) - f(&xm)) / (2.0 * H);
            assert!(rel_err(gx[j], numeric) < TOL);
        }
    }
}

pub fn actor_critic_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for k in 0..INSTANCES {
        let input = 2 * rng.random_range(1..8);
        let params = ActorCriticParams::init(input, k % 2 == 1, &mut rng);
        let x = random_vec(input, &mut rng);
        let d_logits = random_vec(7, &mut rng);
        let d_value = rng.random_range(-1.0..1.0);
        let (out, cache) = params.forward(&x);
        let mut grads = params.zeros_like();
        let gx = params.backward(&cache, &out, &d_logits, d_value, &mut grads);
        let loss = |p: &ActorCriticParams| {
            let (o, _) = p.forward(&x);
            o.logits.iter().zip(&d_logits).map(|(a, b)| a * b).sum::<f64>() + d_value * o.value
        };
        check_tensors(&params, ac_tensors, &snapshot(grads.tensors_mut()), &loss, &mut rng, "actor-critic");
        for j in 0..input {
            let mut xp = x.clone();
            xp[j] += H;
            let mut xm = x.clone();
            xm[j] -= H;
            let f = |v: &[f64]| {
                let (o, _) = params.forward(v);
                o.logits.iter().zip(&d_logits).map(|(a, b)| a * b).sum::<f64>() + d_value * o.value
            };
            let numeric = (f(&xp) - f(&xm)) / (2.0 * H);
            assert!(rel_err(gx[j], numeric) < TOL, "input {j}: {} vs {numeric}", gx[j]);
        }
    }
}

fn observation<R: Rng>(rng: &mut R) -> Observation {
    let own = point(rng);
    Observation {
        ue: messages(EntityClass::Ue, own, 15, rng),
        map: messages(EntityClass::Map, own, 3, rng),
    }
}

pub fn end_to_end_ppo_loss_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    for k in 0..INSTANCES {
        let kind = if k % 3 == 2 { PolicyKind::SaPpo } else { PolicyKind::DualAttention };
        let cfg = PolicyConfig { embed_dim: rng.random_range(2..=8), split_critic: k % 2 == 0 };
        let net = PolicyNet::new(kind, &cfg, &mut rng);
        let ppo = PpoConfig::default();
        let observations: Vec<Observation> = (0..3).map(|_| observation(&mut rng)).collect();
        let batch: Vec<Sample<'_>> = observations
            .iter()
            .map(|o| {
                let probs = net.forward(o).0.action_probs;
                let action = rng.random_range(0..7);
                // Old log-probability near the current one so every branch
                // of the clip gets exercised across instances.
                let old = probs[action].ln() + rng.random_range(-0.02..0.02);
                Sample { observation: o, action, old_log_prob: old, ret: rng.random_range(-1.0..1.0), advantage: rng.random_range(-2.0..2.0) }
            })
            .collect();
        let mut grads = net.zeros_like();
        minibatch_loss_and_grad(&net, &batch, &ppo, &mut grads);
        let loss = |p: &PolicyNet| {
            let mut scratch = p.zeros_like();
            minibatch_loss_and_grad(p, &batch, &ppo, &mut scratch).0
        };
        check_tensors(&net, policy_tensors, &snapshot(grads.tensors_mut()), &loss, &mut rng, "end-to-end");
    }
}
