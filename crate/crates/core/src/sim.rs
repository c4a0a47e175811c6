//! Time-slotted edge environment.
//!
//! Each slot, every base station receives a batch of generation tasks. A
//! scheduler at the base station routes each task to one edge server. The
//! task's service delay is uplink transfer + compute + queueing wait +
//! result downlink. Queue backlogs drain by `capacity * slot_seconds` cycles
//! at the end of every slot.
//!
//! Units: bits, bits/second, cycles, cycles/second, seconds.

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_rng, stream, SimRng};

/// Closed interval sampled uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub min: f64,
    pub max: f64,
}

impl Span {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite()) || self.min > self.max {
            return Err(Error::Config(format!(
                "{name}: invalid range [{}, {}]",
                self.min, self.max
            )));
        }
        if self.min <= 0.0 {
            return Err(Error::Config(format!("{name}: values must be positive")));
        }
        Ok(())
    }

    /// Maps a unit draw onto the interval. Drawing `u` first and scaling keeps
    /// samples coupled across configurations that only differ in the bounds.
    pub fn at(&self, u: f64) -> f64 {
        self.min + u * (self.max - self.min)
    }
}

/// Closed integer interval sampled uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntSpan {
    pub min: u32,
    pub max: u32,
}

impl IntSpan {
    pub const fn new(min: u32, max: u32) -> Self {
        Self { min, max }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.min > self.max || self.min == 0 {
            return Err(Error::Config(format!(
                "{name}: invalid range [{}, {}]",
                self.min, self.max
            )));
        }
        Ok(())
    }

    pub fn at(&self, u: f64) -> u32 {
        let width = (self.max - self.min + 1) as f64;
        let k = (u * width).floor() as u32;
        self.min + k.min(self.max - self.min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    pub nodes: usize,
    pub horizon: usize,
    pub slot_seconds: f64,
    pub tasks_per_slot: IntSpan,
    pub data_mbits: Span,
    pub result_mbits: Span,
    pub quality_steps: IntSpan,
    /// Per-step cost in units of `cycles_unit`.
    pub cycles_per_step: Span,
    pub cycles_unit: f64,
    pub link_mbps: Span,
    pub capacity_ghz: Span,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            nodes: 20,
            horizon: 60,
            slot_seconds: 1.0,
            tasks_per_slot: IntSpan::new(1, 50),
            data_mbits: Span::new(2.0, 5.0),
            result_mbits: Span::new(0.6, 1.0),
            quality_steps: IntSpan::new(1, 15),
            cycles_per_step: Span::new(100.0, 300.0),
            cycles_unit: 1e6,
            link_mbps: Span::new(400.0, 500.0),
            capacity_ghz: Span::new(10.0, 50.0),
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nodes == 0 {
            return Err(Error::Config("nodes must be >= 1".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be >= 1".into()));
        }
        if !(self.slot_seconds > 0.0 && self.slot_seconds.is_finite()) {
            return Err(Error::Config("slot_seconds must be positive".into()));
        }
        if !(self.cycles_unit > 0.0 && self.cycles_unit.is_finite()) {
            return Err(Error::Config("cycles_unit must be positive".into()));
        }
        self.tasks_per_slot.validate("tasks_per_slot")?;
        self.data_mbits.validate("data_mbits")?;
        self.result_mbits.validate("result_mbits")?;
        self.quality_steps.validate("quality_steps")?;
        self.cycles_per_step.validate("cycles_per_step")?;
        self.link_mbps.validate("link_mbps")?;
        self.capacity_ghz.validate("capacity_ghz")?;
        Ok(())
    }

    pub fn max_data_bits(&self) -> f64 {
        self.data_mbits.max * 1e6
    }

    pub fn max_workload(&self) -> f64 {
        self.cycles_per_step.max * self.cycles_unit * self.quality_steps.max as f64
    }

    /// Observation width: data size, workload, one backlog per node.
    pub fn obs_dim(&self) -> usize {
        self.nodes + 2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub id: u64,
    pub origin_bs: usize,
    /// 1-based slot index.
    pub slot: usize,
    /// 0-based position within the slot's batch at `origin_bs`.
    pub arrival_index: usize,
    pub data_bits: f64,
    pub result_bits: f64,
    pub quality_steps: u32,
    pub cycles_per_step: f64,
}

impl Task {
    pub fn workload(&self) -> f64 {
        self.cycles_per_step * self.quality_steps as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeNode {
    pub id: usize,
    pub capacity_hz: f64,
}

/// Link rate for every ordered node pair within one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkRates {
    nodes: usize,
    rates: Vec<f64>,
}

impl LinkRates {
    pub fn new(nodes: usize, rates: Vec<f64>) -> Result<Self> {
        if rates.len() != nodes * nodes {
            return Err(Error::shape("link rates", nodes * nodes, rates.len()));
        }
        if rates.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::Config("link rates must be positive".into()));
        }
        Ok(Self { nodes, rates })
    }

    pub fn uniform(nodes: usize, rate: f64) -> Self {
        Self {
            nodes,
            rates: vec![rate; nodes * nodes],
        }
    }

    pub fn sample(nodes: usize, span: &Span, rng: &mut impl Rng) -> Self {
        let rates = (0..nodes * nodes)
            .map(|_| span.at(rng.random::<f64>()) * 1e6)
            .collect();
        Self { nodes, rates }
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.rates[from * self.nodes + to]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotClock {
    /// Current slot, 1-based.
    pub t: usize,
    pub slot_seconds: f64,
    pub horizon: usize,
}

impl SlotClock {
    pub fn is_last(&self) -> bool {
        self.t >= self.horizon
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotState {
    /// Backlog carried in from the previous slot, cycles.
    pub backlog: Vec<f64>,
    /// Workload accepted so far in the current slot, cycles.
    pub within_slot: Vec<f64>,
}

impl SlotState {
    pub fn new(nodes: usize) -> Self {
        Self {
            backlog: vec![0.0; nodes],
            within_slot: vec![0.0; nodes],
        }
    }

    pub fn nodes(&self) -> usize {
        self.backlog.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub raw: Vec<f64>,
    pub normalized: Vec<f64>,
}

/// Scales observation entries to roughly unit range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizer {
    pub data_scale: f64,
    pub workload_scale: f64,
    pub backlog_scale: f64,
}

impl Normalizer {
    pub fn new(cfg: &EnvConfig, nodes: &[EdgeNode]) -> Self {
        let mean_f = nodes.iter().map(|n| n.capacity_hz).sum::<f64>() / nodes.len() as f64;
        Self {
            data_scale: cfg.max_data_bits(),
            workload_scale: cfg.max_workload(),
            backlog_scale: mean_f * cfg.slot_seconds * cfg.horizon as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Action {
    index: usize,
    nodes: usize,
}

impl Action {
    pub fn new(index: usize, nodes: usize) -> Result<Self> {
        if index >= nodes {
            return Err(Error::Index {
                context: "action",
                index,
                len: nodes,
            });
        }
        Ok(Self { index, nodes })
    }

    /// Accepts only vectors with exactly one entry equal to 1 and the rest 0.
    pub fn from_one_hot(v: &[f64]) -> Result<Self> {
        let mut hot = None;
        for (i, &x) in v.iter().enumerate() {
            if x == 1.0 {
                if hot.is_some() {
                    return Err(Error::Config("action has more than one active entry".into()));
                }
                hot = Some(i);
            } else if x != 0.0 {
                return Err(Error::Config(format!("action entry {i} is not binary")));
            }
        }
        let index = hot.ok_or_else(|| Error::Config("action has no active entry".into()))?;
        Self::new(index, v.len())
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn one_hot(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.nodes];
        v[self.index] = 1.0;
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub service_delay_s: f64,
    pub reward: f64,
    pub target_node: usize,
}

/// The four additive parts of a task's service delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayBreakdown {
    pub uplink: f64,
    pub compute: f64,
    pub wait: f64,
    pub downlink: f64,
}

impl DelayBreakdown {
    pub fn total(&self) -> f64 {
        self.uplink + self.compute + self.wait + self.downlink
    }
}

/// Draws one slot's arrivals for every base station.
///
/// Each station gets its own sub-stream seeded by one draw from `rng`, so the
/// task count and attributes at one station do not shift the draws at others.
pub fn generate_tasks(
    slot: usize,
    rng: &mut impl Rng,
    cfg: &EnvConfig,
    first_id: u64,
) -> Result<Vec<Vec<Task>>> {
    cfg.validate()?;
    let mut id = first_id;
    let mut out = Vec::with_capacity(cfg.nodes);
    for b in 0..cfg.nodes {
        let mut sub = SimRng::seed_from_u64(rng.random::<u64>());
        let count = cfg.tasks_per_slot.at(sub.random::<f64>()) as usize;
        let mut tasks = Vec::with_capacity(count);
        for n in 0..count {
            let data_bits = cfg.data_mbits.at(sub.random::<f64>()) * 1e6;
            let result_bits = cfg.result_mbits.at(sub.random::<f64>()) * 1e6;
            let quality_steps = cfg.quality_steps.at(sub.random::<f64>());
            let cycles_per_step = cfg.cycles_per_step.at(sub.random::<f64>()) * cfg.cycles_unit;
            tasks.push(Task {
                id,
                origin_bs: b,
                slot,
                arrival_index: n,
                data_bits,
                result_bits,
                quality_steps,
                cycles_per_step,
            });
            id += 1;
        }
        out.push(tasks);
    }
    Ok(out)
}

pub fn observe(task: &Task, state: &SlotState, norm: &Normalizer) -> Observation {
    let mut raw = Vec::with_capacity(state.nodes() + 2);
    raw.push(task.data_bits);
    raw.push(task.workload());
    raw.extend_from_slice(&state.backlog);

    let mut normalized = Vec::with_capacity(raw.len());
    normalized.push(task.data_bits / norm.data_scale);
    normalized.push(task.workload() / norm.workload_scale);
    normalized.extend(state.backlog.iter().map(|q| q / norm.backlog_scale));
    Observation { raw, normalized }
}

pub fn waiting_time(target: usize, state: &SlotState, node: &EdgeNode) -> f64 {
    (state.backlog[target] + state.within_slot[target]) / node.capacity_hz
}

pub fn delay_breakdown(
    task: &Task,
    target: usize,
    state: &SlotState,
    links: &LinkRates,
    nodes: &[EdgeNode],
) -> DelayBreakdown {
    let node = &nodes[target];
    DelayBreakdown {
        uplink: task.data_bits / links.rate(task.origin_bs, target),
        compute: task.workload() / node.capacity_hz,
        wait: waiting_time(target, state, node),
        downlink: task.result_bits / links.rate(target, task.origin_bs),
    }
}

pub fn service_delay(
    task: &Task,
    action: &Action,
    state: &SlotState,
    links: &LinkRates,
    nodes: &[EdgeNode],
) -> f64 {
    delay_breakdown(task, action.index(), state, links, nodes).total()
}

/// Charges the task to the chosen node and reports its delay and reward.
pub fn apply_decision(
    task: &Task,
    action: &Action,
    state: &mut SlotState,
    links: &LinkRates,
    nodes: &[EdgeNode],
) -> StepOutcome {
    let delay = service_delay(task, action, state, links, nodes);
    state.within_slot[action.index()] += task.workload();
    StepOutcome {
        service_delay_s: delay,
        reward: -delay,
        target_node: action.index(),
    }
}

/// End-of-slot queue update: `q <- max(q + accepted - f * slot_seconds, 0)`.
pub fn advance_slot(state: &mut SlotState, nodes: &[EdgeNode], clock: &mut SlotClock) {
    for (b, node) in nodes.iter().enumerate() {
        let drained = node.capacity_hz * clock.slot_seconds;
        state.backlog[b] = (state.backlog[b] + state.within_slot[b] - drained).max(0.0);
        state.within_slot[b] = 0.0;
    }
    clock.t += 1;
}

pub fn reset(cfg: &EnvConfig) -> (SlotState, SlotClock) {
    (
        SlotState::new(cfg.nodes),
        SlotClock {
            t: 1,
            slot_seconds: cfg.slot_seconds,
            horizon: cfg.horizon,
        },
    )
}

/// Environment instance: fixed node set for a seed, per-episode task and link
/// streams.
#[derive(Debug, Clone)]
pub struct Environment {
    cfg: EnvConfig,
    seed: u64,
    nodes: Vec<EdgeNode>,
    norm: Normalizer,
    state: SlotState,
    clock: SlotClock,
    episode: u64,
    links: LinkRates,
    tasks: Vec<Vec<Task>>,
    next_id: u64,
    arrivals: SimRng,
    link_rng: SimRng,
}

impl Environment {
    pub fn new(cfg: EnvConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut node_rng = derive_rng(seed, &[stream::NODES]);
        let nodes: Vec<EdgeNode> = (0..cfg.nodes)
            .map(|id| EdgeNode {
                id,
                capacity_hz: cfg.capacity_ghz.at(node_rng.random::<f64>()) * 1e9,
            })
            .collect();
        Self::with_nodes(cfg, seed, nodes)
    }

    /// Builds an environment around an explicit node set.
    pub fn with_nodes(cfg: EnvConfig, seed: u64, nodes: Vec<EdgeNode>) -> Result<Self> {
        cfg.validate()?;
        if nodes.len() != cfg.nodes {
            return Err(Error::shape("edge nodes", cfg.nodes, nodes.len()));
        }
        if nodes.iter().any(|n| !(n.capacity_hz > 0.0)) {
            return Err(Error::Config("node capacity must be positive".into()));
        }
        let norm = Normalizer::new(&cfg, &nodes);
        let (state, clock) = reset(&cfg);
        let links = LinkRates::uniform(cfg.nodes, cfg.link_mbps.min * 1e6);
        let mut env = Self {
            tasks: vec![Vec::new(); cfg.nodes],
            cfg,
            seed,
            nodes,
            norm,
            state,
            clock,
            episode: 0,
            links,
            next_id: 0,
            arrivals: derive_rng(seed, &[stream::ARRIVALS, 0]),
            link_rng: derive_rng(seed, &[stream::LINKS, 0]),
        };
        env.reset(0)?;
        Ok(env)
    }

    /// Zeroes all queues, rewinds the clock and draws slot 1 of `episode`.
    pub fn reset(&mut self, episode: u64) -> Result<()> {
        let (state, clock) = reset(&self.cfg);
        self.state = state;
        self.clock = clock;
        self.episode = episode;
        self.next_id = 0;
        self.arrivals = derive_rng(self.seed, &[stream::ARRIVALS, episode]);
        self.link_rng = derive_rng(self.seed, &[stream::LINKS, episode]);
        self.draw_slot()
    }

    fn draw_slot(&mut self) -> Result<()> {
        self.tasks = generate_tasks(self.clock.t, &mut self.arrivals, &self.cfg, self.next_id)?;
        self.next_id += self.tasks.iter().map(|v| v.len() as u64).sum::<u64>();
        self.links = LinkRates::sample(self.cfg.nodes, &self.cfg.link_mbps, &mut self.link_rng);
        Ok(())
    }

    /// Closes the current slot. Returns `false` once the horizon is exhausted.
    pub fn advance_slot(&mut self) -> Result<bool> {
        let last = self.clock.is_last();
        advance_slot(&mut self.state, &self.nodes, &mut self.clock);
        if last {
            self.tasks.iter_mut().for_each(Vec::clear);
            return Ok(false);
        }
        self.draw_slot()?;
        Ok(true)
    }

    pub fn observe(&self, task: &Task) -> Observation {
        observe(task, &self.state, &self.norm)
    }

    pub fn apply(&mut self, task: &Task, action: &Action) -> StepOutcome {
        apply_decision(task, action, &mut self.state, &self.links, &self.nodes)
    }

    pub fn delay_if(&self, task: &Task, target: usize) -> f64 {
        delay_breakdown(task, target, &self.state, &self.links, &self.nodes).total()
    }

    pub fn tasks(&self, bs: usize) -> &[Task] {
        &self.tasks[bs]
    }

    pub fn slot_tasks(&self) -> &[Vec<Task>] {
        &self.tasks
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn nodes(&self) -> &[EdgeNode] {
        &self.nodes
    }

    pub fn state(&self) -> &SlotState {
        &self.state
    }

    pub fn clock(&self) -> &SlotClock {
        &self.clock
    }

    pub fn links(&self) -> &LinkRates {
        &self.links
    }

    pub fn normalizer(&self) -> &Normalizer {
        &self.norm
    }

    pub fn episode(&self) -> u64 {
        self.episode
    }
}
