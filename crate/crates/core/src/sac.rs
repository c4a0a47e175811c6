//! Discrete soft actor-critic training: replay storage, bootstrapped targets,
//! twin critics with soft-updated target copies, and an entropy temperature.
//!
//! The actor is abstract ([`SoftActor`]) so the same trainer drives the
//! diffusion actor and a plain softmax policy.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::diffusion::{sample_categorical, softmax, ChainTrace, DiffusionActor};
use crate::error::{Error, Result};
use crate::nn::{AdamState, ForwardCache, MlpParams};
use crate::rng::SimRng;
use crate::sim::{Action, Observation};

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Observation,
    /// Latent the actor started its chain from; empty for latent-free policies.
    pub latent: Vec<f64>,
    pub action: Action,
    pub reward: f64,
    pub next_obs: Observation,
    pub next_latent: Vec<f64>,
    pub done: bool,
}

/// Fixed-capacity FIFO of transitions.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    items: VecDeque<Transition>,
    capacity: usize,
    inserted: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            items: VecDeque::with_capacity(capacity),
            capacity,
            inserted: 0,
        }
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
        self.inserted += 1;
    }

    /// Uniform draw of `k` items with replacement.
    pub fn sample(&self, k: usize, rng: &mut impl Rng) -> Result<Vec<&Transition>> {
        if self.items.len() < k || self.items.is_empty() {
            return Err(Error::InsufficientData {
                needed: k.max(1),
                available: self.items.len(),
            });
        }
        Ok((0..k)
            .map(|_| &self.items[rng.random_range(0..self.items.len())])
            .collect())
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Total pushes since creation, including evicted items.
    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }
}

/// `-sum p ln p`, with `0 ln 0 = 0`.
pub fn entropy(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetStyle {
    /// `r + gamma * (pi(a') * min_j Q~_j(s', a') + alpha * H)` with `a'` sampled.
    #[default]
    Sampled,
    /// `r + gamma * (sum_a pi(a) * min_j Q~_j(s', a) + alpha * H)`.
    Expectation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActorStyle {
    /// `mean_k (-alpha H - pi(a_k) Q_eval)^2` on the stored action.
    #[default]
    Squared,
    /// Discrete SAC: `mean_k sum_a pi(a) (alpha ln pi(a) - min_j Q_j(s, a))`.
    Standard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub gamma: f64,
    pub tau: f64,
    pub alpha: f64,
    pub alpha_min: f64,
    pub target_entropy: f64,
    pub batch_size: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub alpha_lr: f64,
    pub buffer_capacity: usize,
    /// Training starts once the buffer holds strictly more than this.
    pub warmup: usize,
    pub hidden: Vec<usize>,
    pub target_style: TargetStyle,
    pub actor_style: ActorStyle,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            gamma: 0.95,
            tau: 0.005,
            alpha: 0.05,
            alpha_min: 1e-4,
            target_entropy: -1.0,
            batch_size: 64,
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            alpha_lr: 3e-4,
            buffer_capacity: 1000,
            warmup: 300,
            hidden: vec![20, 20],
            target_style: TargetStyle::Sampled,
            actor_style: ActorStyle::Squared,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!("gamma {} not in (0, 1)", self.gamma)));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::Config(format!("tau {} not in (0, 1]", self.tau)));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::Config("alpha must be positive".into()));
        }
        if self.batch_size == 0 || self.buffer_capacity == 0 {
            return Err(Error::Config("batch size and buffer capacity must be >= 1".into()));
        }
        if self.hidden.contains(&0) {
            return Err(Error::Config("hidden widths must be >= 1".into()));
        }
        Ok(())
    }
}

/// Policy whose logits are differentiable in its parameters.
pub trait SoftActor: Clone {
    type Trace;

    fn logits(&self, obs: &[f64], latent: &[f64], rng: &mut SimRng) -> Result<Vec<f64>>;

    fn logits_traced(&self, obs: &[f64], latent: &[f64], rng: &mut SimRng) -> Result<(Vec<f64>, Self::Trace)>;

    /// Accumulates parameter gradients for `grad_logits` into `grads`.
    fn backward(&self, trace: &Self::Trace, grad_logits: &[f64], grads: &mut MlpParams) -> Result<()>;

    fn params(&self) -> &MlpParams;

    fn params_mut(&mut self) -> &mut MlpParams;
}

impl SoftActor for DiffusionActor {
    type Trace = ChainTrace;

    fn logits(&self, obs: &[f64], latent: &[f64], rng: &mut SimRng) -> Result<Vec<f64>> {
        self.sample_x0(latent, obs, rng)
    }

    fn logits_traced(&self, obs: &[f64], latent: &[f64], rng: &mut SimRng) -> Result<(Vec<f64>, ChainTrace)> {
        let trace = self.reverse_chain(latent, obs, rng)?;
        Ok((trace.x0.clone(), trace))
    }

    fn backward(&self, trace: &ChainTrace, grad_logits: &[f64], grads: &mut MlpParams) -> Result<()> {
        self.backward_chain(trace, grad_logits, grads).map(|_| ())
    }

    fn params(&self) -> &MlpParams {
        &self.net
    }

    fn params_mut(&mut self) -> &mut MlpParams {
        &mut self.net
    }
}

/// Observation-only softmax policy (the plain SAC actor).
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxActor {
    pub net: MlpParams,
}

impl SoftActor for SoftmaxActor {
    type Trace = ForwardCache;

    fn logits(&self, obs: &[f64], _latent: &[f64], _rng: &mut SimRng) -> Result<Vec<f64>> {
        self.net.predict(obs)
    }

    fn logits_traced(&self, obs: &[f64], _latent: &[f64], _rng: &mut SimRng) -> Result<(Vec<f64>, ForwardCache)> {
        self.net.forward(obs)
    }

    fn backward(&self, trace: &ForwardCache, grad_logits: &[f64], grads: &mut MlpParams) -> Result<()> {
        self.net.backward_into(trace, grad_logits, grads).map(|_| ())
    }

    fn params(&self) -> &MlpParams {
        &self.net
    }

    fn params_mut(&mut self) -> &mut MlpParams {
        &mut self.net
    }
}

/// Critic input: observation followed by the action one-hot.
pub fn critic_input(obs: &[f64], action: usize, actions: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(obs.len() + actions);
    v.extend_from_slice(obs);
    v.extend((0..actions).map(|a| if a == action { 1.0 } else { 0.0 }));
    v
}

pub fn q_value(critic: &MlpParams, obs: &[f64], action: usize, actions: usize) -> Result<f64> {
    Ok(critic.predict(&critic_input(obs, action, actions))?[0])
}

fn min_q(critics: &[MlpParams; 2], obs: &[f64], action: usize, actions: usize) -> Result<f64> {
    Ok(q_value(&critics[0], obs, action, actions)?.min(q_value(&critics[1], obs, action, actions)?))
}

/// Bootstrapped regression targets for a batch, using the current actor on
/// the next state and the target critics.
pub fn q_target<A: SoftActor>(
    batch: &[&Transition],
    actor: &A,
    targets: &[MlpParams; 2],
    hp: &Hyperparams,
    alpha: f64,
    rng: &mut SimRng,
) -> Result<Vec<f64>> {
    batch
        .iter()
        .map(|t| {
            if t.done {
                return Ok(t.reward);
            }
            let actions = t.action.nodes();
            let logits = actor.logits(&t.next_obs.normalized, &t.next_latent, rng)?;
            let probs = softmax(&logits);
            let h = entropy(&probs);
            let soft_value = match hp.target_style {
                TargetStyle::Sampled => {
                    let a = sample_categorical(&probs, rng);
                    probs[a] * min_q(targets, &t.next_obs.normalized, a, actions)?
                }
                TargetStyle::Expectation => {
                    let mut v = 0.0;
                    for (a, p) in probs.iter().enumerate() {
                        v += p * min_q(targets, &t.next_obs.normalized, a, actions)?;
                    }
                    v
                }
            };
            Ok(t.reward + hp.gamma * (soft_value + alpha * h))
        })
        .collect()
}

/// Mean squared error of one critic against fixed targets, and its gradient.
pub fn critic_loss(batch: &[&Transition], critic: &MlpParams, targets: &[f64]) -> Result<(f64, MlpParams)> {
    if batch.len() != targets.len() {
        return Err(Error::shape("critic targets", batch.len(), targets.len()));
    }
    let k = batch.len() as f64;
    let mut grads = critic.zeros_like();
    let mut loss = 0.0;
    for (t, &y) in batch.iter().zip(targets) {
        let input = critic_input(&t.obs.normalized, t.action.index(), t.action.nodes());
        let (q, cache) = critic.forward(&input)?;
        let diff = q[0] - y;
        loss += diff * diff / k;
        critic.backward_into(&cache, &[2.0 * diff / k], &mut grads)?;
    }
    Ok((loss, grads))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActorLoss {
    pub loss: f64,
    pub grads: MlpParams,
    pub mean_entropy: f64,
}

/// `dH/dz_k = -p_k (ln p_k + H)` for softmax probabilities `p` of logits `z`.
fn entropy_logit_grad(probs: &[f64], h: f64) -> Vec<f64> {
    probs
        .iter()
        .map(|&p| if p > 0.0 { -p * (p.ln() + h) } else { 0.0 })
        .collect()
}

/// Actor objective on a batch with the critics held fixed.
pub fn actor_loss<A: SoftActor>(
    batch: &[&Transition],
    actor: &A,
    critics: &[MlpParams; 2],
    hp: &Hyperparams,
    alpha: f64,
    rng: &mut SimRng,
) -> Result<ActorLoss> {
    let k = batch.len() as f64;
    let mut grads = actor.params().zeros_like();
    let mut loss = 0.0;
    let mut h_sum = 0.0;
    for t in batch {
        let actions = t.action.nodes();
        let obs = &t.obs.normalized;
        let (logits, trace) = actor.logits_traced(obs, &t.latent, rng)?;
        let probs = softmax(&logits);
        let h = entropy(&probs);
        h_sum += h;
        let dh = entropy_logit_grad(&probs, h);
        let grad_logits: Vec<f64> = match hp.actor_style {
            ActorStyle::Squared => {
                let a = t.action.index();
                let q_eval = min_q(critics, obs, a, actions)?;
                let residual = -alpha * h - probs[a] * q_eval;
                loss += residual * residual / k;
                let scale = 2.0 * residual / k;
                (0..actions)
                    .map(|j| {
                        let dpa = probs[a] * (if j == a { 1.0 } else { 0.0 } - probs[j]);
                        scale * (-alpha * dh[j] - q_eval * dpa)
                    })
                    .collect()
            }
            ActorStyle::Standard => {
                let q: Vec<f64> = (0..actions)
                    .map(|a| min_q(critics, obs, a, actions))
                    .collect::<Result<_>>()?;
                let v: f64 = probs.iter().zip(&q).map(|(p, q)| p * q).sum();
                loss += (-alpha * h - v) / k;
                (0..actions)
                    .map(|j| (-alpha * dh[j] - probs[j] * (q[j] - v)) / k)
                    .collect()
            }
        };
        actor.backward(&trace, &grad_logits, &mut grads)?;
    }
    Ok(ActorLoss {
        loss,
        grads,
        mean_entropy: h_sum / k,
    })
}

/// One gradient step on `(-H - H_target) * alpha`, clamped below.
pub fn alpha_update(alpha: f64, mean_entropy: f64, hp: &Hyperparams) -> f64 {
    let grad = -mean_entropy - hp.target_entropy;
    (alpha - hp.alpha_lr * grad).max(hp.alpha_min)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainMetrics {
    pub critic_loss: [f64; 2],
    pub actor_loss: f64,
    pub alpha: f64,
    pub entropy: f64,
}

/// Per-station learner: training actor, serving copy, twin critics with
/// targets, optimizers, temperature and replay.
#[derive(Debug, Clone)]
pub struct SacLearner<A: SoftActor> {
    pub actor: A,
    pub serving: A,
    pub critics: [MlpParams; 2],
    pub targets: [MlpParams; 2],
    actor_opt: AdamState,
    critic_opts: [AdamState; 2],
    pub alpha: f64,
    pub buffer: ReplayBuffer,
    pub hp: Hyperparams,
    rng: SimRng,
}

impl<A: SoftActor> SacLearner<A> {
    /// Critics take `obs_dim + actions` inputs and start with their targets
    /// equal to them.
    pub fn new(actor: A, obs_dim: usize, actions: usize, hp: Hyperparams, rng: &mut SimRng) -> Result<Self> {
        hp.validate()?;
        let mut dims = vec![obs_dim + actions];
        dims.extend_from_slice(&hp.hidden);
        dims.push(1);
        let critics = [MlpParams::init(&dims, rng)?, MlpParams::init(&dims, rng)?];
        let trainer_rng = SimRng::from_rng(rng);
        Ok(Self {
            serving: actor.clone(),
            actor_opt: AdamState::new(actor.params(), hp.actor_lr),
            critic_opts: [
                AdamState::new(&critics[0], hp.critic_lr),
                AdamState::new(&critics[1], hp.critic_lr),
            ],
            targets: critics.clone(),
            critics,
            actor,
            alpha: hp.alpha,
            buffer: ReplayBuffer::new(hp.buffer_capacity),
            hp,
            rng: trainer_rng,
        })
    }

    pub fn push(&mut self, t: Transition) {
        self.buffer.push(t);
    }

    /// Sample, fit critics, fit actor, adapt alpha, soft-update targets, then
    /// copy the actor into the serving policy. No-op until the buffer holds
    /// more than `warmup` transitions.
    pub fn train_step(&mut self) -> Result<Option<TrainMetrics>> {
        if self.buffer.len() <= self.hp.warmup {
            return Ok(None);
        }
        let batch = self.buffer.sample(self.hp.batch_size, &mut self.rng)?;
        let y = q_target(&batch, &self.actor, &self.targets, &self.hp, self.alpha, &mut self.rng)?;

        let mut critic_losses = [0.0; 2];
        for j in 0..2 {
            let (loss, grads) = critic_loss(&batch, &self.critics[j], &y)?;
            critic_losses[j] = loss;
            self.critic_opts[j].step(&mut self.critics[j], &grads)?;
        }

        let al = actor_loss(&batch, &self.actor, &self.critics, &self.hp, self.alpha, &mut self.rng)?;
        self.actor_opt.step(self.actor.params_mut(), &al.grads)?;

        self.alpha = alpha_update(self.alpha, al.mean_entropy, &self.hp);

        for j in 0..2 {
            self.targets[j].soft_update(&self.critics[j], self.hp.tau)?;
        }
        self.serving = self.actor.clone();

        Ok(Some(TrainMetrics {
            critic_loss: critic_losses,
            actor_loss: al.loss,
            alpha: self.alpha,
            entropy: al.mean_entropy,
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_rng;

    fn obs(v: &[f64]) -> Observation {
        Observation {
            raw: v.to_vec(),
            normalized: v.to_vec(),
        }
    }

    fn transition(reward: f64, action: usize, done: bool) -> Transition {
        Transition {
            obs: obs(&[0.1, 0.2]),
            latent: vec![],
            action: Action::new(action, 2).unwrap(),
            reward,
            next_obs: obs(&[0.3, 0.4]),
            next_latent: vec![],
            done,
        }
    }

    #[test]
    fn buffer_evicts_oldest() {
        let mut b = ReplayBuffer::new(1000);
        for i in 0..1001 {
            b.push(transition(i as f64, 0, false));
        }
        assert_eq!(b.len(), 1000);
        assert_eq!(b.inserted(), 1001);
        assert_eq!(b.iter().next().unwrap().reward, 1.0);
    }

    #[test]
    fn sample_single_and_insufficient() {
        let mut b = ReplayBuffer::new(10);
        let mut rng = derive_rng(0, &[]);
        assert!(matches!(b.sample(1, &mut rng), Err(Error::InsufficientData { .. })));
        b.push(transition(-3.0, 1, false));
        assert_eq!(b.sample(1, &mut rng).unwrap()[0].reward, -3.0);
        assert!(b.sample(2, &mut rng).is_err());
    }

    #[test]
    fn sample_is_deterministic() {
        let mut b = ReplayBuffer::new(100);
        for i in 0..50 {
            b.push(transition(i as f64, 0, false));
        }
        let a: Vec<f64> = b.sample(20, &mut derive_rng(4, &[])).unwrap().iter().map(|t| t.reward).collect();
        let c: Vec<f64> = b.sample(20, &mut derive_rng(4, &[])).unwrap().iter().map(|t| t.reward).collect();
        assert_eq!(a, c);
    }

    #[test]
    fn entropy_examples() {
        assert!((entropy(&[0.05; 20]) - 20f64.ln()).abs() < 1e-12);
        assert_eq!(entropy(&[0.0, 1.0, 0.0]), 0.0);
        assert!((entropy(&[0.5, 0.5]) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn alpha_update_examples() {
        let hp = Hyperparams::default();
        assert_eq!(alpha_update(0.05, 1.0, &hp), 0.05);
        let a = alpha_update(0.05, 0.5, &hp);
        assert!((a - (0.05 - 0.5 * hp.alpha_lr)).abs() < 1e-18);
        let mut alpha = 1e-4;
        for _ in 0..10_000 {
            alpha = alpha_update(alpha, 5.0, &hp);
            assert!(alpha >= hp.alpha_min);
        }
    }

    #[test]
    fn critic_loss_examples() {
        let mut critic = MlpParams::zeros(&[4, 1]).unwrap();
        critic.layers[0].bias[0] = 1.0;
        let t = transition(0.0, 0, false);
        let (loss, _) = critic_loss(&[&t], &critic, &[3.0]).unwrap();
        assert_eq!(loss, 4.0);
        let (loss, g) = critic_loss(&[&t, &t], &critic, &[1.0, 1.0]).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn q_target_terminal_and_myopic() {
        let mut rng = derive_rng(1, &[]);
        let actor = SoftmaxActor {
            net: MlpParams::init(&[2, 4, 2], &mut rng).unwrap(),
        };
        let targets = [
            MlpParams::init(&[4, 4, 1], &mut rng).unwrap(),
            MlpParams::init(&[4, 4, 1], &mut rng).unwrap(),
        ];
        let hp = Hyperparams::default();
        let t = transition(-2.0, 0, true);
        assert_eq!(q_target(&[&t], &actor, &targets, &hp, 0.05, &mut rng).unwrap(), vec![-2.0]);

        let myopic = Hyperparams {
            gamma: 0.0,
            ..Hyperparams::default()
        };
        let live = [transition(-1.5, 1, false), transition(-0.5, 0, false)];
        let refs: Vec<&Transition> = live.iter().collect();
        let y = q_target(&refs, &actor, &targets, &myopic, 0.05, &mut rng).unwrap();
        assert_eq!(y, vec![-1.5, -0.5]);
    }

    #[test]
    fn actor_loss_direct_substitution() {
        // Zero-weight actor gives pi = (0.5, 0.5); critics output 2.
        let actor = SoftmaxActor {
            net: MlpParams::zeros(&[2, 2]).unwrap(),
        };
        let mut c = MlpParams::zeros(&[4, 1]).unwrap();
        c.layers[0].bias[0] = 2.0;
        let critics = [c.clone(), c];
        let hp = Hyperparams::default();
        let t = transition(0.0, 0, false);
        let out = actor_loss(&[&t], &actor, &critics, &hp, 0.0, &mut derive_rng(0, &[])).unwrap();
        assert!((out.loss - 1.0).abs() < 1e-15);

        // Residual -alpha H - pi Q is zero when Q = -alpha H / pi.
        let alpha = 0.3;
        let h = 2f64.ln();
        let mut c = MlpParams::zeros(&[4, 1]).unwrap();
        c.layers[0].bias[0] = -alpha * h / 0.5;
        let critics = [c.clone(), c];
        let out = actor_loss(&[&t], &actor, &critics, &hp, alpha, &mut derive_rng(0, &[])).unwrap();
        assert!(out.loss.abs() < 1e-24);
    }
}
