//! Small dense-network toolkit: row-major matrices, tanh/identity layers, an
//! actor-critic block with hand-written backward passes, categorical
//! sampling and Adam. All arithmetic is `f64`.

use rand::Rng;

use crate::env::Action;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    /// Row-major.
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    /// Entries uniform in `[-bound, bound]`.
    pub fn uniform<R: Rng + ?Sized>(rows: usize, cols: usize, bound: f64, rng: &mut R) -> Self {
        let data = (0..rows * cols).map(|_| (rng.random::<f64>() * 2.0 - 1.0) * bound).collect();
        Self { rows, cols, data }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|r| dot(self.row(r), x)).collect()
    }

    /// `self^T y`.
    pub fn t_matvec(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, &yr) in y.iter().enumerate() {
            if yr == 0.0 {
                continue;
            }
            for (o, &w) in out.iter_mut().zip(self.row(r)) {
                *o += w * yr;
            }
        }
        out
    }

    /// `self += scale * a b^T`.
    pub fn add_outer(&mut self, a: &[f64], b: &[f64], scale: f64) {
        debug_assert_eq!(a.len(), self.rows);
        debug_assert_eq!(b.len(), self.cols);
        for (r, &ar) in a.iter().enumerate() {
            let s = ar * scale;
            if s == 0.0 {
                continue;
            }
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            for (w, &bc) in row.iter_mut().zip(b) {
                *w += s * bc;
            }
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Numerically stable softmax (max subtraction).
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
    logits.iter().map(|&z| z - lse).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Identity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `out x in`.
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    /// Weights uniform in `±scale/sqrt(fan_in)`, zero bias.
    pub fn init<R: Rng + ?Sized>(input: usize, output: usize, activation: Activation, scale: f64, rng: &mut R) -> Self {
        let bound = scale / (input as f64).sqrt();
        Self {
            weights: Matrix::uniform(output, input, bound, rng),
            bias: vec![0.0; output],
            activation,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            weights: Matrix::zeros(self.weights.rows, self.weights.cols),
            bias: vec![0.0; self.bias.len()],
            activation: self.activation,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weights.cols
    }

    pub fn output_dim(&self) -> usize {
        self.weights.rows
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.weights.matvec(x);
        for (v, b) in y.iter_mut().zip(&self.bias) {
            *v += b;
            if self.activation == Activation::Tanh {
                *v = v.tanh();
            }
        }
        y
    }

    /// Accumulates parameter gradients into `grads` and returns the gradient
    /// with respect to the input. `y` is this layer's forward output.
    pub fn backward(&self, x: &[f64], y: &[f64], grad_y: &[f64], grads: &mut DenseLayer) -> Vec<f64> {
        let pre: Vec<f64> = match self.activation {
            Activation::Tanh => grad_y.iter().zip(y).map(|(g, t)| g * (1.0 - t * t)).collect(),
            Activation::Identity => grad_y.to_vec(),
        };
        grads.weights.add_outer(&pre, x, 1.0);
        for (gb, p) in grads.bias.iter_mut().zip(&pre) {
            *gb += p;
        }
        self.weights.t_matvec(&pre)
    }
}

/// Action distribution and value estimate of one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOutput {
    pub logits: Vec<f64>,
    pub action_probs: Vec<f64>,
    pub value: f64,
}

/// Shared tanh trunk feeding a 7-way actor head and a scalar critic head.
/// With `critic_trunk` set the critic gets its own trunk.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorCriticParams {
    pub trunk: DenseLayer,
    pub critic_trunk: Option<DenseLayer>,
    pub actor_head: DenseLayer,
    pub critic_head: DenseLayer,
}

/// Activations kept from the forward pass.
#[derive(Debug, Clone)]
pub struct ActorCriticCache {
    pub input: Vec<f64>,
    pub hidden: Vec<f64>,
    pub critic_hidden: Option<Vec<f64>>,
}

impl ActorCriticParams {
    pub fn init<R: Rng + ?Sized>(input: usize, split_critic: bool, rng: &mut R) -> Self {
        let hidden = input;
        let trunk = DenseLayer::init(input, hidden, Activation::Tanh, 1.0, rng);
        let critic_trunk = split_critic.then(|| DenseLayer::init(input, hidden, Activation::Tanh, 1.0, rng));
        // Small actor weights start the policy close to uniform.
        let actor_head = DenseLayer::init(hidden, Action::COUNT, Activation::Identity, 0.01, rng);
        let critic_head = DenseLayer::init(hidden, 1, Activation::Identity, 1.0, rng);
        Self { trunk, critic_trunk, actor_head, critic_head }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            trunk: self.trunk.zeros_like(),
            critic_trunk: self.critic_trunk.as_ref().map(DenseLayer::zeros_like),
            actor_head: self.actor_head.zeros_like(),
            critic_head: self.critic_head.zeros_like(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.trunk.input_dim()
    }

    pub fn forward(&self, input: &[f64]) -> (PolicyOutput, ActorCriticCache) {
        let hidden = self.trunk.forward(input);
        let logits = self.actor_head.forward(&hidden);
        let critic_hidden = self.critic_trunk.as_ref().map(|t| t.forward(input));
        let value = self.critic_head.forward(critic_hidden.as_ref().unwrap_or(&hidden))[0];
        let action_probs = softmax(&logits);
        (
            PolicyOutput { logits, action_probs, value },
            ActorCriticCache { input: input.to_vec(), hidden, critic_hidden },
        )
    }

    /// Backpropagates `d_logits` and `d_value`, accumulating into `grads`.
    /// Returns the gradient with respect to the input vector.
    pub fn backward(
        &self,
        cache: &ActorCriticCache,
        output: &PolicyOutput,
        d_logits: &[f64],
        d_value: f64,
        grads: &mut ActorCriticParams,
    ) -> Vec<f64> {
        let mut d_hidden = self.actor_head.backward(&cache.hidden, &output.logits, d_logits, &mut grads.actor_head);
        let mut d_input = vec![0.0; cache.input.len()];
        match (&self.critic_trunk, &cache.critic_hidden) {
            (Some(ct), Some(ch)) => {
                let d_ch = self.critic_head.backward(ch, &[output.value], &[d_value], &mut grads.critic_head);
                let g = grads.critic_trunk.as_mut().expect("grad container mirrors params");
                let d = ct.backward(&cache.input, ch, &d_ch, g);
                for (a, b) in d_input.iter_mut().zip(d) {
                    *a += b;
                }
            }
            _ => {
                let d_h = self.critic_head.backward(&cache.hidden, &[output.value], &[d_value], &mut grads.critic_head);
                for (a, b) in d_hidden.iter_mut().zip(d_h) {
                    *a += b;
                }
            }
        }
        let d = self.trunk.backward(&cache.input, &cache.hidden, &d_hidden, &mut grads.trunk);
        for (a, b) in d_input.iter_mut().zip(d) {
            *a += b;
        }
        d_input
    }

    /// Mutable views of every parameter tensor in a fixed order.
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![&mut self.trunk.weights.data, &mut self.trunk.bias];
        if let Some(ct) = self.critic_trunk.as_mut() {
            out.push(&mut ct.weights.data);
            out.push(&mut ct.bias);
        }
        out.push(&mut self.actor_head.weights.data);
        out.push(&mut self.actor_head.bias);
        out.push(&mut self.critic_head.weights.data);
        out.push(&mut self.critic_head.bias);
        out
    }

    /// `(name, shape, data)` for every tensor, same order as `tensors_mut`.
    pub fn named_tensors(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        fn layer<'a>(name: &str, l: &'a DenseLayer) -> [(String, Vec<usize>, &'a [f64]); 2] {
            [
                (format!("{name}.weight"), vec![l.weights.rows, l.weights.cols], &l.weights.data),
                (format!("{name}.bias"), vec![l.bias.len()], &l.bias),
            ]
        }
        let mut out = Vec::new();
        out.extend(layer("trunk", &self.trunk));
        if let Some(ct) = &self.critic_trunk {
            out.extend(layer("critic_trunk", ct));
        }
        out.extend(layer("actor_head", &self.actor_head));
        out.extend(layer("critic_head", &self.critic_head));
        out
    }
}

/// Draws an action from `probs`; returns it with its log-probability.
pub fn sample_action<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> (Action, f64) {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut chosen = probs.len() - 1;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            chosen = i;
            break;
        }
    }
    // Guard against landing on a zero-probability tail through rounding.
    while probs[chosen] == 0.0 && chosen > 0 {
        chosen -= 1;
    }
    (Action::from_index(chosen), probs[chosen].ln())
}

/// Evaluation rule: the most probable action, lowest index on ties.
pub fn greedy_action(probs: &[f64]) -> Action {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    Action::from_index(best)
}

pub fn entropy(probs: &[f64]) -> f64 {
    -probs.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-4, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Adam moments for a fixed list of parameter tensors.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(config: AdamConfig, shapes: &[usize]) -> Self {
        Self {
            config,
            step: 0,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    /// One bias-corrected Adam update of `params` along `grads`.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) {
        assert_eq!(params.len(), self.m.len(), "tensor count");
        assert_eq!(grads.len(), self.m.len(), "tensor count");
        self.step += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let bc1 = 1.0 - beta1.powi(self.step as i32);
        let bc2 = 1.0 - beta2.powi(self.step as i32);
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            assert_eq!(p.len(), g.len(), "tensor shape");
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}
