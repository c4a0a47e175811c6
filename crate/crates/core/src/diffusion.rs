//! Diffusion actor: a noise-predicting MLP run as a reverse denoising chain
//! over action logits, followed by a softmax.
//!
//! One denoising step maps `x_i` to
//!
//! ```text
//! x_{i-1} = (x_i - beta_i / sqrt(1 - lambda_bar_i) * eps(x_i, i, s)) / sqrt(lambda_i)
//!           + noise_scale(beta_tilde_i) * z
//! ```
//!
//! with `z ~ N(0, I)`. The chain keeps every step's activations so the
//! training code can backpropagate from `x_0` to the network parameters.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{ForwardCache, MlpParams};
use crate::sim::Action;

#[derive(Debug, Clone, PartialEq)]
pub struct BetaSchedule {
    steps: usize,
    pub beta_min: f64,
    pub beta_max: f64,
    beta: Vec<f64>,
    lambda: Vec<f64>,
    lambda_bar: Vec<f64>,
    beta_tilde: Vec<f64>,
}

impl BetaSchedule {
    /// `beta_i = 1 - exp(-beta_min / I - (2i - 1) / (2 I^2) * (beta_max - beta_min))`
    pub fn new(steps: usize, beta_min: f64, beta_max: f64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Config("denoising steps must be >= 1".into()));
        }
        if !(beta_min > 0.0 && beta_max > beta_min && beta_max.is_finite()) {
            return Err(Error::Config(format!(
                "beta endpoints must satisfy 0 < min < max, got ({beta_min}, {beta_max})"
            )));
        }
        let n = steps as f64;
        let beta: Vec<f64> = (1..=steps)
            .map(|i| {
                let i = i as f64;
                1.0 - (-beta_min / n - (2.0 * i - 1.0) / (2.0 * n * n) * (beta_max - beta_min)).exp()
            })
            .collect();
        let lambda: Vec<f64> = beta.iter().map(|b| 1.0 - b).collect();
        let mut lambda_bar = Vec::with_capacity(steps);
        let mut acc = 1.0;
        for l in &lambda {
            acc *= l;
            lambda_bar.push(acc);
        }
        let beta_tilde = (0..steps)
            .map(|k| {
                let prev = if k == 0 { 1.0 } else { lambda_bar[k - 1] };
                (1.0 - prev) / (1.0 - lambda_bar[k]) * beta[k]
            })
            .collect();
        Ok(Self {
            steps,
            beta_min,
            beta_max,
            beta,
            lambda,
            lambda_bar,
            beta_tilde,
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    // Accessors take the 1-based step index.
    pub fn beta(&self, i: usize) -> f64 {
        self.beta[i - 1]
    }

    pub fn lambda(&self, i: usize) -> f64 {
        self.lambda[i - 1]
    }

    pub fn lambda_bar(&self, i: usize) -> f64 {
        self.lambda_bar[i - 1]
    }

    pub fn beta_tilde(&self, i: usize) -> f64 {
        self.beta_tilde[i - 1]
    }

    fn check_step(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.steps {
            return Err(Error::Index {
                context: "denoising step",
                index: i,
                len: self.steps,
            });
        }
        Ok(())
    }
}

/// Scale applied to the injected Gaussian noise at each reverse step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseCoeff {
    /// `beta_tilde / 2`
    #[default]
    HalfVar,
    /// `sqrt(beta_tilde)`, the usual DDPM sampler.
    SqrtVar,
}

impl NoiseCoeff {
    pub fn scale(self, beta_tilde: f64) -> f64 {
        match self {
            NoiseCoeff::HalfVar => beta_tilde / 2.0,
            NoiseCoeff::SqrtVar => beta_tilde.sqrt(),
        }
    }
}

/// Transformer-style timestep embedding: `[sin(i w_0), cos(i w_0), sin(i w_1), ...]`
/// with `w_k = 10000^(-2k / dim)`.
pub fn sinusoidal_encode(i: usize, dim: usize) -> Result<Vec<f64>> {
    if !dim.is_multiple_of(2) {
        return Err(Error::Config(format!("embedding width {dim} must be even")));
    }
    let t = i as f64;
    let mut out = Vec::with_capacity(dim);
    for k in 0..dim / 2 {
        let freq = 10_000f64.powf(-((2 * k) as f64) / dim as f64);
        out.push((t * freq).sin());
        out.push((t * freq).cos());
    }
    Ok(out)
}

/// `x_i = sqrt(lambda_bar_i) x_0 + sqrt(1 - lambda_bar_i) eps`
pub fn forward_diffuse(x0: &[f64], i: usize, sched: &BetaSchedule, eps: &[f64]) -> Result<Vec<f64>> {
    sched.check_step(i)?;
    if eps.len() != x0.len() {
        return Err(Error::shape("forward_diffuse noise", x0.len(), eps.len()));
    }
    let a = sched.lambda_bar(i).sqrt();
    let b = (1.0 - sched.lambda_bar(i)).sqrt();
    Ok(x0.iter().zip(eps).map(|(x, e)| a * x + b * e).collect())
}

/// Mean of the reverse transition given a noise prediction.
pub fn posterior_mean(x_i: &[f64], i: usize, sched: &BetaSchedule, eps_pred: &[f64]) -> Result<Vec<f64>> {
    sched.check_step(i)?;
    if eps_pred.len() != x_i.len() {
        return Err(Error::shape("noise prediction", x_i.len(), eps_pred.len()));
    }
    let inv_sqrt_lambda = 1.0 / sched.lambda(i).sqrt();
    let c = sched.beta(i) / (1.0 - sched.lambda_bar(i)).sqrt();
    Ok(x_i
        .iter()
        .zip(eps_pred)
        .map(|(x, e)| inv_sqrt_lambda * (x - c * e))
        .collect())
}

#[derive(Debug, Clone)]
pub struct StepTrace {
    /// 1-based step index.
    pub step: usize,
    pub x_in: Vec<f64>,
    pub eps_pred: Vec<f64>,
    pub noise: Vec<f64>,
    /// Step output before clamping.
    pub pre_clamp: Vec<f64>,
    cache: ForwardCache,
}

#[derive(Debug, Clone)]
pub struct ChainTrace {
    pub x0: Vec<f64>,
    /// Steps in execution order, `I` down to 1.
    pub steps: Vec<StepTrace>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiffusionConfig {
    pub steps: usize,
    pub beta_min: f64,
    pub beta_max: f64,
    pub embed_dim: usize,
    pub noise_coeff: NoiseCoeff,
    /// Latent entries are clamped to `[-clamp, clamp]` after every step; 0 disables.
    pub clamp: f64,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        Self {
            steps: 5,
            beta_min: 0.1,
            beta_max: 10.0,
            embed_dim: 16,
            noise_coeff: NoiseCoeff::HalfVar,
            clamp: 5.0,
        }
    }
}

/// Noise-predicting network plus the fixed schedule that turns it into a
/// reverse chain over `action_dim` logits.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionActor {
    pub net: MlpParams,
    sched: BetaSchedule,
    obs_dim: usize,
    action_dim: usize,
    noise_coeff: NoiseCoeff,
    clamp: Option<f64>,
    embeddings: Vec<Vec<f64>>,
}

impl DiffusionActor {
    pub fn network_dims(obs_dim: usize, action_dim: usize, cfg: &DiffusionConfig, hidden: &[usize]) -> Vec<usize> {
        let mut dims = vec![obs_dim + action_dim + cfg.embed_dim];
        dims.extend_from_slice(hidden);
        dims.push(action_dim);
        dims
    }

    pub fn new(net: MlpParams, obs_dim: usize, action_dim: usize, cfg: &DiffusionConfig) -> Result<Self> {
        let sched = BetaSchedule::new(cfg.steps, cfg.beta_min, cfg.beta_max)?;
        let expected_in = obs_dim + action_dim + cfg.embed_dim;
        if net.input_dim() != expected_in {
            return Err(Error::shape("policy net input", expected_in, net.input_dim()));
        }
        if net.output_dim() != action_dim {
            return Err(Error::shape("policy net output", action_dim, net.output_dim()));
        }
        let embeddings = (1..=cfg.steps)
            .map(|i| sinusoidal_encode(i, cfg.embed_dim))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            net,
            sched,
            obs_dim,
            action_dim,
            noise_coeff: cfg.noise_coeff,
            clamp: (cfg.clamp > 0.0).then_some(cfg.clamp),
            embeddings,
        })
    }

    pub fn schedule(&self) -> &BetaSchedule {
        &self.sched
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    fn net_input(&self, obs: &[f64], x: &[f64], i: usize) -> Vec<f64> {
        let mut input = Vec::with_capacity(self.net.input_dim());
        input.extend_from_slice(obs);
        input.extend_from_slice(x);
        input.extend_from_slice(&self.embeddings[i - 1]);
        input
    }

    fn check_inputs(&self, x: &[f64], obs: &[f64]) -> Result<()> {
        if x.len() != self.action_dim {
            return Err(Error::shape("latent", self.action_dim, x.len()));
        }
        if obs.len() != self.obs_dim {
            return Err(Error::shape("observation", self.obs_dim, obs.len()));
        }
        Ok(())
    }

    fn step_output(&self, x: &[f64], i: usize, eps_pred: &[f64], noise: &[f64]) -> Vec<f64> {
        let inv_sqrt_lambda = 1.0 / self.sched.lambda(i).sqrt();
        let c = self.sched.beta(i) / (1.0 - self.sched.lambda_bar(i)).sqrt();
        let sigma = self.noise_coeff.scale(self.sched.beta_tilde(i));
        x.iter()
            .zip(eps_pred)
            .zip(noise)
            .map(|((x, e), z)| inv_sqrt_lambda * (x - c * e) + sigma * z)
            .collect()
    }

    fn clamp_in_place(&self, x: &mut [f64]) {
        if let Some(c) = self.clamp {
            for v in x {
                *v = v.clamp(-c, c);
            }
        }
    }

    /// One unclamped reverse step with caller-supplied noise.
    pub fn denoise_step(&self, x_i: &[f64], i: usize, obs: &[f64], noise: &[f64]) -> Result<Vec<f64>> {
        self.sched.check_step(i)?;
        self.check_inputs(x_i, obs)?;
        if noise.len() != self.action_dim {
            return Err(Error::shape("step noise", self.action_dim, noise.len()));
        }
        let eps_pred = self.net.predict(&self.net_input(obs, x_i, i))?;
        Ok(self.step_output(x_i, i, &eps_pred, noise))
    }

    /// Runs steps `I..=1` using `noises[k]` for the k-th executed step and
    /// keeps everything needed for backpropagation.
    pub fn reverse_chain_with_noise(&self, x_start: &[f64], obs: &[f64], noises: &[Vec<f64>]) -> Result<ChainTrace> {
        self.check_inputs(x_start, obs)?;
        if noises.len() != self.sched.steps() {
            return Err(Error::shape("noise sequence", self.sched.steps(), noises.len()));
        }
        let mut x = x_start.to_vec();
        let mut steps = Vec::with_capacity(self.sched.steps());
        for (k, i) in (1..=self.sched.steps()).rev().enumerate() {
            let noise = &noises[k];
            if noise.len() != self.action_dim {
                return Err(Error::shape("step noise", self.action_dim, noise.len()));
            }
            let (eps_pred, cache) = self.net.forward(&self.net_input(obs, &x, i))?;
            let pre_clamp = self.step_output(&x, i, &eps_pred, noise);
            let mut next = pre_clamp.clone();
            self.clamp_in_place(&mut next);
            steps.push(StepTrace {
                step: i,
                x_in: std::mem::replace(&mut x, next),
                eps_pred,
                noise: noise.clone(),
                pre_clamp,
                cache,
            });
        }
        Ok(ChainTrace { x0: x, steps })
    }

    pub fn draw_noise(&self, rng: &mut impl Rng) -> Vec<Vec<f64>> {
        (0..self.sched.steps())
            .map(|_| (0..self.action_dim).map(|_| rng.sample(StandardNormal)).collect())
            .collect()
    }

    pub fn reverse_chain(&self, x_start: &[f64], obs: &[f64], rng: &mut impl Rng) -> Result<ChainTrace> {
        let noises = self.draw_noise(rng);
        self.reverse_chain_with_noise(x_start, obs, &noises)
    }

    /// Same result as [`reverse_chain`](Self::reverse_chain) for the same rng
    /// state, without keeping the trace.
    pub fn sample_x0(&self, x_start: &[f64], obs: &[f64], rng: &mut impl Rng) -> Result<Vec<f64>> {
        self.check_inputs(x_start, obs)?;
        let noises = self.draw_noise(rng);
        let mut x = x_start.to_vec();
        for (k, i) in (1..=self.sched.steps()).rev().enumerate() {
            let eps_pred = self.net.predict(&self.net_input(obs, &x, i))?;
            x = self.step_output(&x, i, &eps_pred, &noises[k]);
            self.clamp_in_place(&mut x);
        }
        Ok(x)
    }

    /// Backpropagates `grad_x0` through the recorded chain, accumulating
    /// parameter gradients into `grads`. Returns the gradient with respect to
    /// the chain's starting latent.
    pub fn backward_chain(&self, trace: &ChainTrace, grad_x0: &[f64], grads: &mut MlpParams) -> Result<Vec<f64>> {
        if grad_x0.len() != self.action_dim {
            return Err(Error::shape("x0 gradient", self.action_dim, grad_x0.len()));
        }
        let mut g = grad_x0.to_vec();
        for st in trace.steps.iter().rev() {
            if let Some(c) = self.clamp {
                for (gi, &p) in g.iter_mut().zip(&st.pre_clamp) {
                    if p.abs() >= c {
                        *gi = 0.0;
                    }
                }
            }
            let i = st.step;
            let inv_sqrt_lambda = 1.0 / self.sched.lambda(i).sqrt();
            let c = self.sched.beta(i) / (1.0 - self.sched.lambda_bar(i)).sqrt();
            let g_eps: Vec<f64> = g.iter().map(|v| -inv_sqrt_lambda * c * v).collect();
            let g_input = self.net.backward_into(&st.cache, &g_eps, grads)?;
            let x_grad = &g_input[self.obs_dim..self.obs_dim + self.action_dim];
            for (gi, xg) in g.iter_mut().zip(x_grad) {
                *gi = inv_sqrt_lambda * *gi + xg;
            }
        }
        Ok(g)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionDistribution {
    pub probs: Vec<f64>,
    pub source_latent: Vec<f64>,
}

/// Max-shifted softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub fn action_probs(x0: &[f64]) -> Result<ActionDistribution> {
    if x0.is_empty() {
        return Err(Error::shape("action logits", 1, 0));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("action logits"));
    }
    Ok(ActionDistribution {
        probs: softmax(x0),
        source_latent: x0.to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectMode {
    Argmax,
    Sample,
}

/// First index of the maximum.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Inverse-CDF categorical draw.
pub fn sample_categorical(probs: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding left the cumulative sum short of u; fall back to the last
    // index with positive mass.
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1)
}

pub fn select_action(dist: &ActionDistribution, mode: SelectMode, rng: &mut impl Rng) -> Action {
    let idx = match mode {
        SelectMode::Argmax => argmax(&dist.probs),
        SelectMode::Sample => sample_categorical(&dist.probs, rng),
    };
    Action::new(idx, dist.probs.len()).expect("index drawn from the distribution support")
}

/// Historical action logits for one base station, one entry per arrival
/// position within a slot.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentArray {
    entries: Vec<Vec<f64>>,
}

impl LatentArray {
    /// Every entry drawn from a standard normal.
    pub fn gaussian(len: usize, dim: usize, rng: &mut impl Rng) -> Self {
        Self {
            entries: (0..len)
                .map(|_| (0..dim).map(|_| rng.sample(StandardNormal)).collect())
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, n: usize) -> Result<&[f64]> {
        self.entries.get(n).map(Vec::as_slice).ok_or(Error::Index {
            context: "latent array",
            index: n,
            len: self.entries.len(),
        })
    }

    pub fn set(&mut self, n: usize, x0: &[f64]) -> Result<()> {
        let len = self.entries.len();
        let slot = self.entries.get_mut(n).ok_or(Error::Index {
            context: "latent array",
            index: n,
            len,
        })?;
        if slot.len() != x0.len() {
            return Err(Error::shape("latent", slot.len(), x0.len()));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("latent"));
        }
        slot.copy_from_slice(x0);
        Ok(())
    }
}

/// One [`LatentArray`] per base station.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentStore {
    stations: Vec<LatentArray>,
}

impl LatentStore {
    pub fn new(stations: usize, len: usize, dim: usize, rng: &mut impl Rng) -> Self {
        Self {
            stations: (0..stations).map(|_| LatentArray::gaussian(len, dim, rng)).collect(),
        }
    }

    fn station(&self, b: usize) -> Result<&LatentArray> {
        self.stations.get(b).ok_or(Error::Index {
            context: "latent store station",
            index: b,
            len: self.stations.len(),
        })
    }

    pub fn fetch(&self, b: usize, n: usize) -> Result<&[f64]> {
        self.station(b)?.get(n)
    }

    pub fn update(&mut self, b: usize, n: usize, x0: &[f64]) -> Result<()> {
        let len = self.stations.len();
        self.stations
            .get_mut(b)
            .ok_or(Error::Index {
                context: "latent store station",
                index: b,
                len,
            })?
            .set(n, x0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_rng;

    #[test]
    fn schedule_first_beta_matches_closed_form() {
        let s = BetaSchedule::new(5, 0.1, 10.0).unwrap();
        // 0.1/5 = 0.02, (2*1-1)/(2*25) * 9.9 = 0.198
        let expected = 1.0 - (-0.218f64).exp();
        assert!((s.beta(1) - expected).abs() < 1e-15);
        assert!((s.beta(1) - 0.1959).abs() < 1e-4);
        assert_eq!(s.beta_tilde(1), 0.0);
    }

    #[test]
    fn schedule_degenerate_limit_is_flat() {
        let s = BetaSchedule::new(4, 0.1, 0.1 + 1e-12).unwrap();
        let flat = 1.0 - (-0.1f64 / 4.0).exp();
        for i in 1..=4 {
            assert!((s.beta(i) - flat).abs() < 1e-12);
        }
    }

    #[test]
    fn schedule_rejects_bad_endpoints() {
        assert!(BetaSchedule::new(0, 0.1, 10.0).is_err());
        assert!(BetaSchedule::new(5, 0.0, 10.0).is_err());
        assert!(BetaSchedule::new(5, 10.0, 0.1).is_err());
    }

    #[test]
    fn encoding_at_zero() {
        let e = sinusoidal_encode(0, 8).unwrap();
        for k in 0..4 {
            assert_eq!(e[2 * k], 0.0);
            assert_eq!(e[2 * k + 1], 1.0);
        }
        assert!(sinusoidal_encode(1, 7).is_err());
    }

    #[test]
    fn zero_net_step_rescales() {
        let cfg = DiffusionConfig::default();
        let net = MlpParams::zeros(&DiffusionActor::network_dims(4, 2, &cfg, &[20, 20])).unwrap();
        let actor = DiffusionActor::new(net, 4, 2, &cfg).unwrap();
        let x = [0.4, -1.2];
        let out = actor.denoise_step(&x, 3, &[0.0; 4], &[0.0; 2]).unwrap();
        let s = actor.schedule().lambda(3).sqrt();
        for (o, xi) in out.iter().zip(x) {
            assert!((o - xi / s).abs() < 1e-15);
        }
        assert!(actor.denoise_step(&x, 0, &[0.0; 4], &[0.0; 2]).is_err());
        assert!(actor.denoise_step(&x, 6, &[0.0; 4], &[0.0; 2]).is_err());
    }

    #[test]
    fn sample_x0_matches_traced_chain() {
        let cfg = DiffusionConfig::default();
        let mut rng = derive_rng(3, &[]);
        let net = MlpParams::init(&DiffusionActor::network_dims(5, 3, &cfg, &[20, 20]), &mut rng).unwrap();
        let actor = DiffusionActor::new(net, 5, 3, &cfg).unwrap();
        let obs = [0.1, 0.2, 0.3, 0.4, 0.5];
        let x = [0.3, -0.2, 1.0];
        let a = actor.sample_x0(&x, &obs, &mut derive_rng(9, &[])).unwrap();
        let b = actor.reverse_chain(&x, &obs, &mut derive_rng(9, &[])).unwrap();
        assert_eq!(a, b.x0);
        assert_eq!(b.steps.len(), 5);
        assert_eq!(b.steps[0].step, 5);
    }

    #[test]
    fn softmax_examples() {
        let d = action_probs(&[0.0; 4]).unwrap();
        assert_eq!(d.probs, vec![0.25; 4]);
        let d = action_probs(&[0.0, 50.0, -3.0]).unwrap();
        assert!(d.probs[1] > 1.0 - 1e-12);
        assert!(action_probs(&[f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn select_examples() {
        let mut rng = derive_rng(0, &[]);
        let dist = ActionDistribution {
            probs: vec![0.1, 0.7, 0.2],
            source_latent: vec![],
        };
        assert_eq!(select_action(&dist, SelectMode::Argmax, &mut rng).index(), 1);
        let hot = ActionDistribution {
            probs: vec![0.0, 0.0, 1.0],
            source_latent: vec![],
        };
        for _ in 0..1000 {
            assert_eq!(select_action(&hot, SelectMode::Sample, &mut rng).index(), 2);
        }
    }

    #[test]
    fn latent_store_contract() {
        let mut rng = derive_rng(1, &[]);
        let mut store = LatentStore::new(2, 4, 3, &mut rng);
        let init_b1 = store.fetch(1, 0).unwrap().to_vec();
        assert!(store.fetch(0, 0).unwrap().iter().all(|v| v.is_finite()));
        let before_next = store.fetch(0, 2).unwrap().to_vec();
        store.update(0, 1, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(store.fetch(0, 1).unwrap(), &[1.0, 2.0, 3.0]);
        assert_eq!(store.fetch(0, 2).unwrap(), before_next.as_slice());
        assert_eq!(store.fetch(1, 0).unwrap(), init_b1.as_slice());
        store.update(0, 1, &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(store.fetch(0, 1).unwrap(), &[4.0, 5.0, 6.0]);
        assert!(store.fetch(0, 4).is_err());
        assert!(store.update(2, 0, &[0.0; 3]).is_err());
    }
}
