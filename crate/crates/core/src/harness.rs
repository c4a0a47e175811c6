//! Experiment orchestration: the per-slot decision loop, training runs,
//! parameter sweeps and CSV output.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::baselines::{build_scheduler, AgentSpec, DecisionContext, DqnConfig, Method, Scheduler};
use crate::diffusion::{DiffusionConfig, NoiseCoeff};
use crate::error::{Error, Result};
use crate::nn::MlpParams;
use crate::rng::{derive_rng, stream};
use crate::sac::{ActorStyle, Hyperparams, TargetStyle, Transition};
use crate::sim::{Action, EnvConfig, Environment, IntSpan, Observation, Span};

pub const CSV_HEADER: &str = "method,seed,sweep_param,sweep_value,episode,mean_delay_s,convergence_episode,wall_ms";

/// Every knob of a run in one flat key/value table. Missing keys take the
/// defaults of [`EnvConfig`], [`Hyperparams`] and [`DiffusionConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub method: Method,
    pub seed: u64,
    /// Seeds per sweep point: `seed, seed + 1, ...`.
    pub seeds: u64,
    pub episodes: usize,

    pub nodes: usize,
    pub horizon: usize,
    pub slot_seconds: f64,
    pub tasks_min: u32,
    pub tasks_max: u32,
    pub data_mbits_min: f64,
    pub data_mbits_max: f64,
    pub result_mbits_min: f64,
    pub result_mbits_max: f64,
    pub quality_steps_min: u32,
    pub quality_steps_max: u32,
    pub cycles_per_step_min: f64,
    pub cycles_per_step_max: f64,
    pub cycles_unit: f64,
    pub link_mbps_min: f64,
    pub link_mbps_max: f64,
    pub capacity_ghz_min: f64,
    pub capacity_ghz_max: f64,

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
    pub warmup: usize,
    pub hidden: Vec<usize>,
    pub target_style: TargetStyle,
    pub actor_style: ActorStyle,

    pub denoise_steps: usize,
    pub beta_min: f64,
    pub beta_max: f64,
    pub embed_dim: usize,
    pub noise_coeff: NoiseCoeff,
    pub latent_clamp: f64,

    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_fraction: f64,
    pub target_interval: u64,

    /// Report each episode from a separate argmax pass instead of the
    /// exploring training pass.
    pub eval_greedy: bool,
    /// Fill `wall_ms`; off by default so reruns give identical bytes.
    pub record_wall_clock: bool,
    pub sweep_param: Option<String>,
    pub sweep_values: Vec<f64>,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let env = EnvConfig::default();
        let hp = Hyperparams::default();
        let diff = DiffusionConfig::default();
        let dqn = DqnConfig::default();
        Self {
            method: Method::Lad,
            seed: 0,
            seeds: 5,
            episodes: 60,
            nodes: env.nodes,
            horizon: env.horizon,
            slot_seconds: env.slot_seconds,
            tasks_min: env.tasks_per_slot.min,
            tasks_max: env.tasks_per_slot.max,
            data_mbits_min: env.data_mbits.min,
            data_mbits_max: env.data_mbits.max,
            result_mbits_min: env.result_mbits.min,
            result_mbits_max: env.result_mbits.max,
            quality_steps_min: env.quality_steps.min,
            quality_steps_max: env.quality_steps.max,
            cycles_per_step_min: env.cycles_per_step.min,
            cycles_per_step_max: env.cycles_per_step.max,
            cycles_unit: env.cycles_unit,
            link_mbps_min: env.link_mbps.min,
            link_mbps_max: env.link_mbps.max,
            capacity_ghz_min: env.capacity_ghz.min,
            capacity_ghz_max: env.capacity_ghz.max,
            gamma: hp.gamma,
            tau: hp.tau,
            alpha: hp.alpha,
            alpha_min: hp.alpha_min,
            target_entropy: hp.target_entropy,
            batch_size: hp.batch_size,
            actor_lr: hp.actor_lr,
            critic_lr: hp.critic_lr,
            alpha_lr: hp.alpha_lr,
            buffer_capacity: hp.buffer_capacity,
            warmup: hp.warmup,
            hidden: hp.hidden,
            target_style: hp.target_style,
            actor_style: hp.actor_style,
            denoise_steps: diff.steps,
            beta_min: diff.beta_min,
            beta_max: diff.beta_max,
            embed_dim: diff.embed_dim,
            noise_coeff: diff.noise_coeff,
            latent_clamp: diff.clamp,
            epsilon_start: dqn.epsilon_start,
            epsilon_end: dqn.epsilon_end,
            epsilon_decay_fraction: dqn.decay_fraction,
            target_interval: dqn.target_interval,
            eval_greedy: false,
            record_wall_clock: false,
            sweep_param: None,
            sweep_values: Vec::new(),
            out_dir: PathBuf::from("runs"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn env(&self) -> EnvConfig {
        EnvConfig {
            nodes: self.nodes,
            horizon: self.horizon,
            slot_seconds: self.slot_seconds,
            tasks_per_slot: IntSpan::new(self.tasks_min, self.tasks_max),
            data_mbits: Span::new(self.data_mbits_min, self.data_mbits_max),
            result_mbits: Span::new(self.result_mbits_min, self.result_mbits_max),
            quality_steps: IntSpan::new(self.quality_steps_min, self.quality_steps_max),
            cycles_per_step: Span::new(self.cycles_per_step_min, self.cycles_per_step_max),
            cycles_unit: self.cycles_unit,
            link_mbps: Span::new(self.link_mbps_min, self.link_mbps_max),
            capacity_ghz: Span::new(self.capacity_ghz_min, self.capacity_ghz_max),
        }
    }

    pub fn hyperparams(&self) -> Hyperparams {
        Hyperparams {
            gamma: self.gamma,
            tau: self.tau,
            alpha: self.alpha,
            alpha_min: self.alpha_min,
            target_entropy: self.target_entropy,
            batch_size: self.batch_size,
            actor_lr: self.actor_lr,
            critic_lr: self.critic_lr,
            alpha_lr: self.alpha_lr,
            buffer_capacity: self.buffer_capacity,
            warmup: self.warmup,
            hidden: self.hidden.clone(),
            target_style: self.target_style,
            actor_style: self.actor_style,
        }
    }

    pub fn diffusion(&self) -> DiffusionConfig {
        DiffusionConfig {
            steps: self.denoise_steps,
            beta_min: self.beta_min,
            beta_max: self.beta_max,
            embed_dim: self.embed_dim,
            noise_coeff: self.noise_coeff,
            clamp: self.latent_clamp,
        }
    }

    pub fn dqn(&self) -> DqnConfig {
        DqnConfig {
            epsilon_start: self.epsilon_start,
            epsilon_end: self.epsilon_end,
            decay_fraction: self.epsilon_decay_fraction,
            target_interval: self.target_interval,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(Error::Config("episodes must be >= 1".into()));
        }
        if self.seeds == 0 {
            return Err(Error::Config("seeds must be >= 1".into()));
        }
        if self.target_interval == 0 {
            return Err(Error::Config("target_interval must be >= 1".into()));
        }
        if !self.embed_dim.is_multiple_of(2) {
            return Err(Error::Config("embed_dim must be even".into()));
        }
        self.env().validate()?;
        self.hyperparams().validate()?;
        // Schedule bounds are checked when the actor is built.
        crate::diffusion::BetaSchedule::new(self.denoise_steps, self.beta_min, self.beta_max)?;
        Ok(())
    }

    /// Decisions one station makes over the whole run, on average.
    fn expected_decisions(&self) -> u64 {
        let mean_tasks = (self.tasks_min + self.tasks_max) as f64 / 2.0;
        (self.episodes as f64 * self.horizon as f64 * mean_tasks).round() as u64
    }

    fn agent_spec(&self) -> AgentSpec {
        AgentSpec {
            obs_dim: self.nodes + 2,
            actions: self.nodes,
            latent_len: self.tasks_max as usize,
            hp: self.hyperparams(),
            diffusion: self.diffusion(),
            dqn: self.dqn(),
            expected_decisions: self.expected_decisions(),
        }
    }
}

/// Parameters a sweep may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepParam {
    /// Upper bound of tasks per station per slot.
    TasksMax,
    /// Upper bound of node capacity in GHz.
    CapacityMax,
    /// Upper bound of quality steps per task.
    QualityMax,
    Nodes,
    DenoiseSteps,
    Alpha,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::TasksMax => "N_max",
            SweepParam::CapacityMax => "f_max",
            SweepParam::QualityMax => "z_max",
            SweepParam::Nodes => "B",
            SweepParam::DenoiseSteps => "I",
            SweepParam::Alpha => "alpha",
        }
    }

    /// Writes `value` into `cfg`. Integer parameters reject fractional values.
    pub fn apply(self, cfg: &mut ExperimentConfig, value: f64) -> Result<()> {
        let int = || -> Result<u32> {
            if value.fract() != 0.0 || !(1.0..=f64::from(u32::MAX)).contains(&value) {
                return Err(Error::Config(format!("{self} needs a positive integer, got {value}")));
            }
            Ok(value as u32)
        };
        match self {
            SweepParam::TasksMax => cfg.tasks_max = int()?,
            SweepParam::CapacityMax => cfg.capacity_ghz_max = value,
            SweepParam::QualityMax => cfg.quality_steps_max = int()?,
            SweepParam::Nodes => cfg.nodes = int()? as usize,
            SweepParam::DenoiseSteps => cfg.denoise_steps = int()? as usize,
            SweepParam::Alpha => cfg.alpha = value,
        }
        cfg.validate()
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "N_max" | "n_max" | "tasks_max" => Ok(SweepParam::TasksMax),
            "f_max" | "capacity_ghz_max" => Ok(SweepParam::CapacityMax),
            "z_max" | "quality_steps_max" => Ok(SweepParam::QualityMax),
            "B" | "nodes" => Ok(SweepParam::Nodes),
            "I" | "denoise_steps" => Ok(SweepParam::DenoiseSteps),
            "alpha" => Ok(SweepParam::Alpha),
            other => Err(Error::Config(format!("unknown sweep parameter {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub method: Method,
    pub seed: u64,
    pub sweep_param: Option<SweepParam>,
    pub sweep_value: Option<f64>,
    /// 1-based.
    pub episode: usize,
    pub mean_delay_s: f64,
    pub convergence_episode: usize,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceSummary {
    /// 1-based; equals the episode count when no earlier episode qualifies.
    pub convergence_episode: usize,
    /// Mean of the final (up to) 10 episodes.
    pub final_delay: f64,
}

pub const CONVERGENCE_WINDOW: usize = 5;
pub const FINAL_EPISODES: usize = 10;
pub const CONVERGENCE_TOLERANCE: f64 = 0.05;

/// First episode whose trailing moving average is within tolerance of the
/// final-episode mean. `None` for an empty curve.
pub fn convergence(curve: &[f64]) -> Option<ConvergenceSummary> {
    if curve.is_empty() {
        return None;
    }
    let tail = &curve[curve.len().saturating_sub(FINAL_EPISODES)..];
    let final_delay = tail.iter().sum::<f64>() / tail.len() as f64;
    let hit = (0..curve.len()).find(|&e| {
        let window = &curve[(e + 1).saturating_sub(CONVERGENCE_WINDOW)..=e];
        let ma = window.iter().sum::<f64>() / window.len() as f64;
        (ma - final_delay).abs() <= CONVERGENCE_TOLERANCE * final_delay.abs()
    });
    Some(ConvergenceSummary {
        convergence_episode: hit.map_or(curve.len(), |e| e + 1),
        final_delay,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EpisodeStats {
    pub mean_delay_s: f64,
    pub tasks: usize,
    pub total_reward: f64,
    pub train_steps: usize,
    /// Time spent inside `select` only.
    pub decision_time: Duration,
}

impl EpisodeStats {
    pub fn time_per_decision(&self) -> Duration {
        if self.tasks == 0 {
            Duration::ZERO
        } else {
            self.decision_time / self.tasks as u32
        }
    }
}

struct Pending {
    obs: Observation,
    latent: Vec<f64>,
    action: Action,
    reward: f64,
}

impl Pending {
    fn close(self, next_obs: Observation, next_latent: Vec<f64>, done: bool) -> Transition {
        Transition {
            obs: self.obs,
            latent: self.latent,
            action: self.action,
            reward: self.reward,
            next_obs,
            next_latent,
            done,
        }
    }
}

/// Runs one episode. Stations decide in index order within a slot; each
/// station's transition is completed by its next decision, and the last one
/// of the episode is stored as terminal. With `learn` set every station
/// takes one training step per slot.
pub fn run_episode(
    env: &mut Environment,
    schedulers: &mut [Box<dyn Scheduler>],
    episode: u64,
    learn: bool,
) -> Result<EpisodeStats> {
    let stations = env.config().nodes;
    if schedulers.len() != stations {
        return Err(Error::shape("schedulers", stations, schedulers.len()));
    }
    env.reset(episode)?;
    let mut pending: Vec<Option<Pending>> = (0..stations).map(|_| None).collect();
    let mut stats = EpisodeStats::default();
    let mut delay_sum = 0.0;
    loop {
        for (bs, sched) in schedulers.iter_mut().enumerate() {
            let tasks = env.tasks(bs).to_vec();
            for task in &tasks {
                let obs = env.observe(task);
                let started = Instant::now();
                let decision = sched.select(&DecisionContext { env, task, obs: &obs })?;
                stats.decision_time += started.elapsed();
                let outcome = env.apply(task, &decision.action);
                delay_sum += outcome.service_delay_s;
                stats.total_reward += outcome.reward;
                stats.tasks += 1;
                if learn {
                    if let Some(prev) = pending[bs].take() {
                        sched.learn(prev.close(obs.clone(), decision.latent.clone(), false));
                    }
                    pending[bs] = Some(Pending {
                        obs,
                        latent: decision.latent,
                        action: decision.action,
                        reward: outcome.reward,
                    });
                }
            }
            if learn && sched.train()?.is_some() {
                stats.train_steps += 1;
            }
        }
        if !env.advance_slot()? {
            break;
        }
    }
    if learn {
        for (sched, slot) in schedulers.iter_mut().zip(&mut pending) {
            if let Some(last) = slot.take() {
                let (obs, latent) = (last.obs.clone(), last.latent.clone());
                sched.learn(last.close(obs, latent, true));
            }
        }
    }
    if stats.tasks == 0 {
        return Err(Error::InsufficientData { needed: 1, available: 0 });
    }
    stats.mean_delay_s = delay_sum / stats.tasks as f64;
    Ok(stats)
}

/// One environment plus one scheduler per station, all derived from a seed.
pub struct Experiment {
    pub cfg: ExperimentConfig,
    pub seed: u64,
    pub env: Environment,
    pub schedulers: Vec<Box<dyn Scheduler>>,
}

impl Experiment {
    pub fn new(cfg: ExperimentConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let env = Environment::new(cfg.env(), seed)?;
        let spec = cfg.agent_spec();
        let schedulers = (0..cfg.nodes)
            .map(|bs| build_scheduler(cfg.method, &spec, &mut derive_rng(seed, &[stream::AGENT, bs as u64])))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            cfg,
            seed,
            env,
            schedulers,
        })
    }

    /// Training episode `episode` (0-based). With `eval_greedy` the returned
    /// stats come from an argmax pass of a snapshot taken after training.
    pub fn train_episode(&mut self, episode: u64) -> Result<EpisodeStats> {
        let learn = self.cfg.method.learns();
        let stats = run_episode(&mut self.env, &mut self.schedulers, episode, learn)?;
        if !self.cfg.eval_greedy {
            return Ok(stats);
        }
        self.greedy_episode(episode)
    }

    /// Argmax pass on copies; leaves the schedulers untouched.
    pub fn greedy_episode(&self, episode: u64) -> Result<EpisodeStats> {
        let mut copies: Vec<Box<dyn Scheduler>> = self.schedulers.iter().map(|s| s.boxed_clone()).collect();
        copies.iter_mut().for_each(|s| s.set_greedy(true));
        let mut env = self.env.clone();
        run_episode(&mut env, &mut copies, episode, false)
    }

    /// Writes `{bs}_{role}.ckpt` for every network plus `config.toml`.
    pub fn save_checkpoints(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let cfg_path = dir.join("config.toml");
        let mut cfg = self.cfg.clone();
        cfg.seed = self.seed;
        fs::write(&cfg_path, cfg.to_toml()?).map_err(|e| Error::io(&cfg_path, e))?;
        for (bs, sched) in self.schedulers.iter().enumerate() {
            for (role, params) in sched.networks() {
                params.save(&dir.join(format!("{bs}_{role}.ckpt")))?;
            }
        }
        Ok(())
    }

    /// Rebuilds an experiment from [`Experiment::save_checkpoints`] output.
    /// Stored latents are not part of a checkpoint and start fresh.
    pub fn load_checkpoints(dir: &Path) -> Result<Self> {
        let cfg = ExperimentConfig::load(&dir.join("config.toml"))?;
        let seed = cfg.seed;
        let mut exp = Self::new(cfg, seed)?;
        for (bs, sched) in exp.schedulers.iter_mut().enumerate() {
            let roles: Vec<&'static str> = sched.networks().into_iter().map(|(r, _)| r).collect();
            for role in roles {
                let params = MlpParams::load(&dir.join(format!("{bs}_{role}.ckpt")))?;
                sched.load_network(role, params)?;
            }
        }
        Ok(exp)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRun {
    pub rows: Vec<MetricsRow>,
    pub summary: ConvergenceSummary,
}

/// `cfg.episodes` episodes for one seed; networks persist across episodes.
pub fn run_training(
    cfg: &ExperimentConfig,
    seed: u64,
    sweep: Option<(SweepParam, f64)>,
) -> Result<(TrainingRun, Experiment)> {
    let mut exp = Experiment::new(cfg.clone(), seed)?;
    let mut curve = Vec::with_capacity(cfg.episodes);
    let mut walls = Vec::with_capacity(cfg.episodes);
    for e in 0..cfg.episodes {
        let started = Instant::now();
        let stats = exp.train_episode(e as u64)?;
        curve.push(stats.mean_delay_s);
        walls.push(if cfg.record_wall_clock {
            started.elapsed().as_millis() as u64
        } else {
            0
        });
    }
    let summary = convergence(&curve).expect("episodes >= 1");
    let rows = curve
        .iter()
        .zip(walls)
        .enumerate()
        .map(|(e, (&delay, wall_ms))| MetricsRow {
            method: cfg.method,
            seed,
            sweep_param: sweep.map(|(p, _)| p),
            sweep_value: sweep.map(|(_, v)| v),
            episode: e + 1,
            mean_delay_s: delay,
            convergence_episode: summary.convergence_episode,
            wall_ms,
        })
        .collect();
    Ok((TrainingRun { rows, summary }, exp))
}

/// Fresh training run for every value and every seed of `cfg`.
pub fn sweep(cfg: &ExperimentConfig, param: SweepParam, values: &[f64]) -> Result<Vec<MetricsRow>> {
    let mut rows = Vec::new();
    for &value in values {
        let mut point = cfg.clone();
        param.apply(&mut point, value)?;
        for seed in cfg.seed..cfg.seed + cfg.seeds {
            let (run, _) = run_training(&point, seed, Some((param, value)))?;
            rows.extend(run.rows);
        }
    }
    Ok(rows)
}

/// `%g`-style rendering with 6 significant digits.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..6).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        return format!("{mantissa}e{exp}");
    }
    let decimals = (5 - exp) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn csv_line(row: &MetricsRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        row.method,
        row.seed,
        row.sweep_param.map_or("", SweepParam::as_str),
        row.sweep_value.map(format_sig6).unwrap_or_default(),
        row.episode,
        format_sig6(row.mean_delay_s),
        row.convergence_episode,
        row.wall_ms
    )
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_csv(rows: &[MetricsRow], path: &Path) -> Result<()> {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&csv_line(row));
        out.push('\n');
    }
    write_text(path, &out)
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

type SeriesKey = (Method, Option<SweepParam>, Option<u64>);

fn series_key(row: &MetricsRow) -> SeriesKey {
    (row.method, row.sweep_param, row.sweep_value.map(f64::to_bits))
}

/// Groups rows by series in first-seen order.
fn group_series(rows: &[MetricsRow]) -> Vec<(SeriesKey, Vec<&MetricsRow>)> {
    let mut groups: Vec<(SeriesKey, Vec<&MetricsRow>)> = Vec::new();
    for row in rows {
        let key = series_key(row);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, g)) => g.push(row),
            None => groups.push((key, vec![row])),
        }
    }
    groups
}

fn series_prefix(key: &SeriesKey) -> String {
    format!(
        "{},{},{}",
        key.0,
        key.1.map_or("", SweepParam::as_str),
        key.2.map(|b| format_sig6(f64::from_bits(b))).unwrap_or_default()
    )
}

/// Writes `learning_curves.csv` (per episode, mean and std over seeds) and
/// `sweep_summary.csv` (per series, final-episode delay mean and std over
/// seeds) into `dir`.
pub fn emit_plot_data(rows: &[MetricsRow], dir: &Path) -> Result<()> {
    let mut curves = String::from("method,sweep_param,sweep_value,episode,mean_delay_s,std_delay_s,seeds\n");
    let mut summary = String::from("method,sweep_param,sweep_value,final_delay_s,std_delay_s,seeds\n");
    for (key, group) in group_series(rows) {
        let prefix = series_prefix(&key);
        let mut seeds: Vec<u64> = group.iter().map(|r| r.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        let episodes = group.iter().map(|r| r.episode).max().unwrap_or(0);
        for ep in 1..=episodes {
            let xs: Vec<f64> = group.iter().filter(|r| r.episode == ep).map(|r| r.mean_delay_s).collect();
            if xs.is_empty() {
                continue;
            }
            let (m, s) = mean_std(&xs);
            curves.push_str(&format!("{prefix},{ep},{},{},{}\n", format_sig6(m), format_sig6(s), xs.len()));
        }
        let finals: Vec<f64> = seeds
            .iter()
            .filter_map(|&seed| {
                let mut curve: Vec<&MetricsRow> = group.iter().copied().filter(|r| r.seed == seed).collect();
                curve.sort_by_key(|r| r.episode);
                let delays: Vec<f64> = curve.iter().map(|r| r.mean_delay_s).collect();
                convergence(&delays).map(|c| c.final_delay)
            })
            .collect();
        let (m, s) = mean_std(&finals);
        summary.push_str(&format!("{prefix},{},{},{}\n", format_sig6(m), format_sig6(s), finals.len()));
    }
    write_text(&dir.join("learning_curves.csv"), &curves)?;
    write_text(&dir.join("sweep_summary.csv"), &summary)
}
