//! Schedulers behind one interface: the latent diffusion actor, its
//! fresh-noise variant, plain discrete SAC, DQN and the per-task delay
//! oracle.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::diffusion::{action_probs, argmax, select_action, DiffusionActor, DiffusionConfig, LatentArray, SelectMode};
use crate::error::{Error, Result};
use crate::nn::{AdamState, MlpParams};
use crate::rng::SimRng;
use crate::sac::{Hyperparams, ReplayBuffer, SacLearner, SoftActor, SoftmaxActor, TrainMetrics, Transition};
use crate::sim::{Action, Environment, Observation, Task};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[serde(rename = "lad_ts", alias = "lad")]
    Lad,
    Dqn,
    Sac,
    D2sac,
    Opt,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Lad, Method::D2sac, Method::Sac, Method::Dqn, Method::Opt];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Lad => "lad_ts",
            Method::Dqn => "dqn",
            Method::Sac => "sac",
            Method::D2sac => "d2sac",
            Method::Opt => "opt",
        }
    }

    pub fn learns(self) -> bool {
        self != Method::Opt
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lad" | "lad_ts" | "lad-ts" => Ok(Method::Lad),
            "dqn" => Ok(Method::Dqn),
            "sac" => Ok(Method::Sac),
            "d2sac" => Ok(Method::D2sac),
            "opt" => Ok(Method::Opt),
            other => Err(Error::Config(format!("unknown method {other:?}"))),
        }
    }
}

/// What a scheduler sees for one arriving task. The environment reference is
/// only read by the oracle.
pub struct DecisionContext<'a> {
    pub env: &'a Environment,
    pub task: &'a Task,
    pub obs: &'a Observation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub action: Action,
    /// Latent the decision started from (empty when unused).
    pub latent: Vec<f64>,
}

pub trait Scheduler {
    fn method(&self) -> Method;

    fn select(&mut self, ctx: &DecisionContext<'_>) -> Result<Decision>;

    fn learn(&mut self, t: Transition);

    /// Called once per slot after the station's tasks are decided.
    fn train(&mut self) -> Result<Option<TrainMetrics>>;

    /// Argmax selection instead of exploration.
    fn set_greedy(&mut self, greedy: bool);

    /// Networks by role name, for checkpointing.
    fn networks(&self) -> Vec<(&'static str, &MlpParams)>;

    fn load_network(&mut self, role: &str, params: MlpParams) -> Result<()>;

    fn boxed_clone(&self) -> Box<dyn Scheduler>;
}

/// Per-task delay oracle: the node with the smallest true service delay,
/// lowest index on ties.
pub fn opt_select(task: &Task, env: &Environment) -> Action {
    let nodes = env.nodes().len();
    let mut best = 0;
    let mut best_delay = env.delay_if(task, 0);
    for b in 1..nodes {
        let d = env.delay_if(task, b);
        if d < best_delay {
            best = b;
            best_delay = d;
        }
    }
    Action::new(best, nodes).expect("index below node count")
}

#[derive(Debug, Clone, Default)]
pub struct OptScheduler;

impl Scheduler for OptScheduler {
    fn method(&self) -> Method {
        Method::Opt
    }

    fn select(&mut self, ctx: &DecisionContext<'_>) -> Result<Decision> {
        Ok(Decision {
            action: opt_select(ctx.task, ctx.env),
            latent: Vec::new(),
        })
    }

    fn learn(&mut self, _t: Transition) {}

    fn train(&mut self) -> Result<Option<TrainMetrics>> {
        Ok(None)
    }

    fn set_greedy(&mut self, _greedy: bool) {}

    fn networks(&self) -> Vec<(&'static str, &MlpParams)> {
        Vec::new()
    }

    fn load_network(&mut self, role: &str, _params: MlpParams) -> Result<()> {
        Err(Error::Config(format!("oracle has no network {role:?}")))
    }

    fn boxed_clone(&self) -> Box<dyn Scheduler> {
        Box::new(self.clone())
    }
}

/// Where the diffusion chain starts.
#[derive(Debug, Clone, PartialEq)]
pub enum LatentSource {
    /// Reuse the previous output for the same arrival position.
    Stored(LatentArray),
    /// Fresh standard normal draw per decision.
    Fresh,
}

fn sac_networks<A: SoftActor>(l: &SacLearner<A>) -> Vec<(&'static str, &MlpParams)> {
    vec![
        ("actor", l.actor.params()),
        ("serving", l.serving.params()),
        ("critic1", &l.critics[0]),
        ("critic2", &l.critics[1]),
        ("target1", &l.targets[0]),
        ("target2", &l.targets[1]),
    ]
}

fn load_sac_network<A: SoftActor>(l: &mut SacLearner<A>, role: &str, params: MlpParams) -> Result<()> {
    let slot = match role {
        "actor" => l.actor.params_mut(),
        "serving" => l.serving.params_mut(),
        "critic1" => &mut l.critics[0],
        "critic2" => &mut l.critics[1],
        "target1" => &mut l.targets[0],
        "target2" => &mut l.targets[1],
        other => return Err(Error::Config(format!("unknown network role {other:?}"))),
    };
    if !slot.same_shape(&params) {
        return Err(Error::shape("checkpoint", slot.num_params(), params.num_params()));
    }
    *slot = params;
    Ok(())
}

/// Diffusion-actor scheduler. With [`LatentSource::Stored`] this is the
/// latent-action variant; with [`LatentSource::Fresh`] it starts every chain
/// from Gaussian noise.
#[derive(Debug, Clone)]
pub struct DiffusionScheduler {
    pub learner: SacLearner<DiffusionActor>,
    pub latents: LatentSource,
    rng: SimRng,
    greedy: bool,
}

impl DiffusionScheduler {
    pub fn new(learner: SacLearner<DiffusionActor>, latents: LatentSource, rng: SimRng) -> Self {
        Self {
            learner,
            latents,
            rng,
            greedy: false,
        }
    }

    fn draw_fresh(&mut self) -> Vec<f64> {
        let dim = self.learner.serving.action_dim();
        (0..dim).map(|_| self.rng.sample(StandardNormal)).collect()
    }
}

impl Scheduler for DiffusionScheduler {
    fn method(&self) -> Method {
        match self.latents {
            LatentSource::Stored(_) => Method::Lad,
            LatentSource::Fresh => Method::D2sac,
        }
    }

    fn select(&mut self, ctx: &DecisionContext<'_>) -> Result<Decision> {
        let n = ctx.task.arrival_index;
        let x_start = match &self.latents {
            LatentSource::Stored(arr) => arr.get(n)?.to_vec(),
            LatentSource::Fresh => self.draw_fresh(),
        };
        let x0 = self.learner.serving.sample_x0(&x_start, &ctx.obs.normalized, &mut self.rng)?;
        let dist = action_probs(&x0)?;
        let mode = if self.greedy { SelectMode::Argmax } else { SelectMode::Sample };
        let action = select_action(&dist, mode, &mut self.rng);
        if let LatentSource::Stored(arr) = &mut self.latents {
            arr.set(n, &x0)?;
        }
        Ok(Decision {
            action,
            latent: x_start,
        })
    }

    fn learn(&mut self, t: Transition) {
        self.learner.push(t);
    }

    fn train(&mut self) -> Result<Option<TrainMetrics>> {
        self.learner.train_step()
    }

    fn set_greedy(&mut self, greedy: bool) {
        self.greedy = greedy;
    }

    fn networks(&self) -> Vec<(&'static str, &MlpParams)> {
        sac_networks(&self.learner)
    }

    fn load_network(&mut self, role: &str, params: MlpParams) -> Result<()> {
        load_sac_network(&mut self.learner, role, params)
    }

    fn boxed_clone(&self) -> Box<dyn Scheduler> {
        Box::new(self.clone())
    }
}

/// Discrete SAC with an observation-only softmax actor.
#[derive(Debug, Clone)]
pub struct SacScheduler {
    pub learner: SacLearner<SoftmaxActor>,
    rng: SimRng,
    greedy: bool,
}

impl SacScheduler {
    pub fn new(learner: SacLearner<SoftmaxActor>, rng: SimRng) -> Self {
        Self {
            learner,
            rng,
            greedy: false,
        }
    }

    pub fn distribution(&self, obs: &[f64]) -> Result<Vec<f64>> {
        Ok(action_probs(&self.learner.serving.net.predict(obs)?)?.probs)
    }
}

impl Scheduler for SacScheduler {
    fn method(&self) -> Method {
        Method::Sac
    }

    fn select(&mut self, ctx: &DecisionContext<'_>) -> Result<Decision> {
        let logits = self.learner.serving.net.predict(&ctx.obs.normalized)?;
        let dist = action_probs(&logits)?;
        let mode = if self.greedy { SelectMode::Argmax } else { SelectMode::Sample };
        Ok(Decision {
            action: select_action(&dist, mode, &mut self.rng),
            latent: Vec::new(),
        })
    }

    fn learn(&mut self, t: Transition) {
        self.learner.push(t);
    }

    fn train(&mut self) -> Result<Option<TrainMetrics>> {
        self.learner.train_step()
    }

    fn set_greedy(&mut self, greedy: bool) {
        self.greedy = greedy;
    }

    fn networks(&self) -> Vec<(&'static str, &MlpParams)> {
        sac_networks(&self.learner)
    }

    fn load_network(&mut self, role: &str, params: MlpParams) -> Result<()> {
        load_sac_network(&mut self.learner, role, params)
    }

    fn boxed_clone(&self) -> Box<dyn Scheduler> {
        Box::new(self.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DqnConfig {
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of all decisions over which epsilon decays linearly.
    pub decay_fraction: f64,
    /// Train steps between hard target copies.
    pub target_interval: u64,
}

impl Default for DqnConfig {
    fn default() -> Self {
        Self {
            epsilon_start: 1.0,
            epsilon_end: 0.01,
            decay_fraction: 0.5,
            target_interval: 200,
        }
    }
}

/// Epsilon-greedy over Q-values.
pub fn dqn_select(q: &MlpParams, obs: &[f64], epsilon: f64, rng: &mut impl Rng) -> Result<Action> {
    let values = q.predict(obs)?;
    let idx = if rng.random::<f64>() < epsilon {
        rng.random_range(0..values.len())
    } else {
        argmax(&values)
    };
    Action::new(idx, values.len())
}

/// Mean squared TD error on a batch with a frozen target network, and the
/// gradient with respect to the online network.
pub fn dqn_loss(batch: &[&Transition], q: &MlpParams, target: &MlpParams, gamma: f64) -> Result<(f64, MlpParams)> {
    let k = batch.len() as f64;
    let mut grads = q.zeros_like();
    let mut loss = 0.0;
    for t in batch {
        let y = if t.done {
            t.reward
        } else {
            let next = target.predict(&t.next_obs.normalized)?;
            t.reward + gamma * next.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        };
        let (values, cache) = q.forward(&t.obs.normalized)?;
        let a = t.action.index();
        let diff = values[a] - y;
        loss += diff * diff / k;
        let mut g = vec![0.0; values.len()];
        g[a] = 2.0 * diff / k;
        q.backward_into(&cache, &g, &mut grads)?;
    }
    Ok((loss, grads))
}

#[derive(Debug, Clone)]
pub struct DqnScheduler {
    pub q: MlpParams,
    pub target: MlpParams,
    opt: AdamState,
    pub buffer: ReplayBuffer,
    hp: Hyperparams,
    cfg: DqnConfig,
    decay_steps: u64,
    decisions: u64,
    train_steps: u64,
    rng: SimRng,
    greedy: bool,
}

impl DqnScheduler {
    /// `expected_decisions` sizes the epsilon decay window.
    pub fn new(
        obs_dim: usize,
        actions: usize,
        hp: Hyperparams,
        cfg: DqnConfig,
        expected_decisions: u64,
        rng: &mut SimRng,
    ) -> Result<Self> {
        hp.validate()?;
        let mut dims = vec![obs_dim];
        dims.extend_from_slice(&hp.hidden);
        dims.push(actions);
        let q = MlpParams::init(&dims, rng)?;
        let decay_steps = ((expected_decisions as f64) * cfg.decay_fraction).ceil().max(1.0) as u64;
        Ok(Self {
            target: q.clone(),
            opt: AdamState::new(&q, hp.critic_lr),
            buffer: ReplayBuffer::new(hp.buffer_capacity),
            q,
            hp,
            cfg,
            decay_steps,
            decisions: 0,
            train_steps: 0,
            rng: SimRng::from_rng(rng),
            greedy: false,
        })
    }

    pub fn epsilon(&self) -> f64 {
        if self.decisions >= self.decay_steps {
            return self.cfg.epsilon_end;
        }
        let frac = self.decisions as f64 / self.decay_steps as f64;
        self.cfg.epsilon_start + frac * (self.cfg.epsilon_end - self.cfg.epsilon_start)
    }

    /// One TD update on a sampled batch; copies the target every
    /// `target_interval` updates.
    pub fn dqn_learn(&mut self) -> Result<Option<f64>> {
        if self.buffer.len() <= self.hp.warmup {
            return Ok(None);
        }
        let batch = self.buffer.sample(self.hp.batch_size, &mut self.rng)?;
        let (loss, grads) = dqn_loss(&batch, &self.q, &self.target, self.hp.gamma)?;
        self.opt.step(&mut self.q, &grads)?;
        self.train_steps += 1;
        if self.train_steps.is_multiple_of(self.cfg.target_interval) {
            self.target = self.q.clone();
        }
        Ok(Some(loss))
    }
}

impl Scheduler for DqnScheduler {
    fn method(&self) -> Method {
        Method::Dqn
    }

    fn select(&mut self, ctx: &DecisionContext<'_>) -> Result<Decision> {
        let eps = if self.greedy { 0.0 } else { self.epsilon() };
        let action = dqn_select(&self.q, &ctx.obs.normalized, eps, &mut self.rng)?;
        if !self.greedy {
            self.decisions += 1;
        }
        Ok(Decision {
            action,
            latent: Vec::new(),
        })
    }

    fn learn(&mut self, t: Transition) {
        self.buffer.push(t);
    }

    fn train(&mut self) -> Result<Option<TrainMetrics>> {
        Ok(self.dqn_learn()?.map(|loss| TrainMetrics {
            critic_loss: [loss, loss],
            actor_loss: 0.0,
            alpha: 0.0,
            entropy: 0.0,
        }))
    }

    fn set_greedy(&mut self, greedy: bool) {
        self.greedy = greedy;
    }

    fn networks(&self) -> Vec<(&'static str, &MlpParams)> {
        vec![("qnet", &self.q), ("qtarget", &self.target)]
    }

    fn load_network(&mut self, role: &str, params: MlpParams) -> Result<()> {
        let slot = match role {
            "qnet" => &mut self.q,
            "qtarget" => &mut self.target,
            other => return Err(Error::Config(format!("unknown network role {other:?}"))),
        };
        if !slot.same_shape(&params) {
            return Err(Error::shape("checkpoint", slot.num_params(), params.num_params()));
        }
        *slot = params;
        Ok(())
    }

    fn boxed_clone(&self) -> Box<dyn Scheduler> {
        Box::new(self.clone())
    }
}

/// Everything needed to build one station's scheduler.
#[derive(Debug, Clone)]
pub struct AgentSpec {
    pub obs_dim: usize,
    pub actions: usize,
    /// Length of the per-station latent array (max arrivals per slot).
    pub latent_len: usize,
    pub hp: Hyperparams,
    pub diffusion: DiffusionConfig,
    pub dqn: DqnConfig,
    pub expected_decisions: u64,
}

pub fn build_scheduler(method: Method, spec: &AgentSpec, rng: &mut SimRng) -> Result<Box<dyn Scheduler>> {
    Ok(match method {
        Method::Opt => Box::new(OptScheduler),
        Method::Lad | Method::D2sac => {
            let dims = DiffusionActor::network_dims(spec.obs_dim, spec.actions, &spec.diffusion, &spec.hp.hidden);
            let net = MlpParams::init(&dims, rng)?;
            let actor = DiffusionActor::new(net, spec.obs_dim, spec.actions, &spec.diffusion)?;
            let learner = SacLearner::new(actor, spec.obs_dim, spec.actions, spec.hp.clone(), rng)?;
            let latents = if method == Method::Lad {
                LatentSource::Stored(LatentArray::gaussian(spec.latent_len, spec.actions, rng))
            } else {
                LatentSource::Fresh
            };
            Box::new(DiffusionScheduler::new(learner, latents, SimRng::from_rng(rng)))
        }
        Method::Sac => {
            let mut dims = vec![spec.obs_dim];
            dims.extend_from_slice(&spec.hp.hidden);
            dims.push(spec.actions);
            let actor = SoftmaxActor {
                net: MlpParams::init(&dims, rng)?,
            };
            let learner = SacLearner::new(actor, spec.obs_dim, spec.actions, spec.hp.clone(), rng)?;
            Box::new(SacScheduler::new(learner, SimRng::from_rng(rng)))
        }
        Method::Dqn => Box::new(DqnScheduler::new(
            spec.obs_dim,
            spec.actions,
            spec.hp.clone(),
            spec.dqn.clone(),
            spec.expected_decisions,
            rng,
        )?),
    })
}
