//! Seeded discrete-event simulation of the timed model.
//!
//! Each node originates an OGM every `U[min_ogmtime, max_ogmtime]` time
//! units and works through its buffer in FIFO order. Handling an OGM that
//! does not have to be rebroadcast is a local update and happens at once.
//! A head that must be rebroadcast is sent `U(0, max_response]` after it
//! reached the head of the buffer. Broadcasts reach all neighbours instantly.
//!
//! Randomness comes from ChaCha8 (`rand_chacha` 0.3): one generator per node,
//! keyed by `(seed, run_index)` with the node id as stream number, so the
//! draws of one node never depend on what other nodes or the metrics do.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::metrics::MetricsSample;
use crate::protocol::{NodeId, NodeState, Ogm, ProtocolParams, Receipt};
use crate::topology::Topology;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedConfig {
    pub min_ogmtime: f64,
    pub max_ogmtime: f64,
    pub max_response: f64,
    pub horizon: f64,
    pub runs: usize,
    pub seed: u64,
    pub sample_period: f64,
}

impl Default for TimedConfig {
    fn default() -> Self {
        TimedConfig {
            min_ogmtime: 19.0,
            max_ogmtime: 20.0,
            max_response: 1.0,
            horizon: 255.0,
            runs: 100,
            seed: 1,
            sample_period: 5.0,
        }
    }
}

impl TimedConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.min_ogmtime) {
            return Err(ConfigError::invalid("min_ogmtime", "must be positive"));
        }
        if !(self.max_ogmtime.is_finite() && self.max_ogmtime >= self.min_ogmtime) {
            return Err(ConfigError::invalid("max_ogmtime", "must be at least min_ogmtime"));
        }
        if !positive(self.max_response) {
            return Err(ConfigError::invalid("max_response", "must be positive"));
        }
        if !positive(self.horizon) {
            return Err(ConfigError::invalid("horizon", "must be positive"));
        }
        if !positive(self.sample_period) {
            return Err(ConfigError::invalid("sample_period", "must be positive"));
        }
        if self.runs == 0 {
            return Err(ConfigError::invalid("runs", "must be at least 1"));
        }
        Ok(())
    }

    /// Sampling instants `0, period, 2·period, …` up to and including the horizon.
    pub fn sample_times(&self) -> Vec<f64> {
        let n = (self.horizon / self.sample_period + 1e-9).floor() as usize;
        (0..=n).map(|k| k as f64 * self.sample_period).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EventKind {
    CreateOgm(NodeId),
    ProcessHead(NodeId),
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    tiebreak: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // reversed: BinaryHeap pops the earliest event first
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.tiebreak.cmp(&self.tiebreak))
    }
}

fn node_rng(seed: u64, run_index: u64, node: NodeId) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&run_index.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(node as u64);
    rng
}

/// One simulation run.
pub struct Simulation<'a> {
    params: &'a ProtocolParams,
    topology: &'a Topology,
    cfg: &'a TimedConfig,
    nodes: Vec<NodeState>,
    rngs: Vec<ChaCha8Rng>,
    queue: BinaryHeap<Event>,
    next_tiebreak: u64,
    now: f64,
    head_since: Vec<f64>,
    /// A rebroadcast of the buffer head is scheduled.
    pending: Vec<bool>,
    wrapped: bool,
    events: u64,
}

impl<'a> Simulation<'a> {
    pub fn new(params: &'a ProtocolParams, topology: &'a Topology, cfg: &'a TimedConfig, run_index: u64) -> Result<Self, ConfigError> {
        params.validate()?;
        cfg.validate()?;
        if topology.is_empty() {
            return Err(ConfigError::Topology("network has no nodes".into()));
        }
        if topology.len() != params.n_nodes {
            return Err(ConfigError::invalid(
                "n_nodes",
                format!("topology has {} nodes, parameters say {}", topology.len(), params.n_nodes),
            ));
        }
        let n = params.n_nodes;
        let mut sim = Simulation {
            params,
            topology,
            cfg,
            nodes: (0..n).map(|id| NodeState::new(id, params)).collect(),
            rngs: (0..n).map(|id| node_rng(cfg.seed, run_index, id)).collect(),
            queue: BinaryHeap::new(),
            next_tiebreak: 0,
            now: 0.0,
            head_since: vec![0.0; n],
            pending: vec![false; n],
            wrapped: false,
            events: 0,
        };
        for id in 0..n {
            let first = sim.ogm_interval(id);
            sim.schedule(first, EventKind::CreateOgm(id));
        }
        Ok(sim)
    }

    fn ogm_interval(&mut self, id: NodeId) -> f64 {
        let (lo, hi) = (self.cfg.min_ogmtime, self.cfg.max_ogmtime);
        if lo == hi {
            lo
        } else {
            self.rngs[id].gen_range(lo..=hi)
        }
    }

    // uniform on (0, max_response]
    fn response_delay(&mut self, id: NodeId) -> f64 {
        let u: f64 = self.rngs[id].gen();
        (1.0 - u) * self.cfg.max_response
    }

    fn schedule(&mut self, at: f64, kind: EventKind) {
        self.queue.push(Event {
            time: at,
            tiebreak: self.next_tiebreak,
            kind,
        });
        self.next_tiebreak += 1;
    }

    fn broadcast(&mut self, from: NodeId, ogm: Ogm) {
        for i in 0..self.topology.degree(from) {
            let j = self.topology.neighbors(from)[i];
            if self.nodes[j].receive(ogm, self.params) == Receipt::Buffered && !self.pending[j] {
                self.settle(j);
            }
        }
    }

    /// Apply the local updates at the head of `id`'s buffer until it is empty
    /// or the head needs a rebroadcast, which is then scheduled.
    fn settle(&mut self, id: NodeId) {
        while let Some(rules) = self.nodes[id].classify_head(self.params) {
            if rules.rebroadcast {
                self.pending[id] = true;
                self.head_since[id] = self.now;
                let at = self.now + self.response_delay(id);
                self.schedule(at, EventKind::ProcessHead(id));
                return;
            }
            self.nodes[id].handle_next(self.params);
        }
    }

    fn execute(&mut self, kind: EventKind) {
        match kind {
            EventKind::CreateOgm(id) => {
                let before = self.nodes[id].own_sqn;
                let ogm = self.nodes[id].create_own_ogm(self.params);
                if ogm.sqn < before {
                    self.wrapped = true;
                }
                self.broadcast(id, ogm);
                let at = self.now + self.ogm_interval(id);
                self.schedule(at, EventKind::CreateOgm(id));
            }
            EventKind::ProcessHead(id) => {
                debug_assert!(self.now - self.head_since[id] <= self.cfg.max_response + 1e-9);
                self.pending[id] = false;
                // the head may have stopped qualifying for a rebroadcast since
                // it was scheduled (a new own OGM ages the link checks)
                let handled = self.nodes[id].handle_next(self.params);
                if let Some(out) = handled.and_then(|h| h.rebroadcast) {
                    self.broadcast(id, out);
                }
                self.settle(id);
            }
        }
    }

    /// Run to the horizon, sampling the metrics on the configured grid.
    pub fn run(mut self) -> RunOutput {
        let times = self.cfg.sample_times();
        let mut samples = Vec::with_capacity(times.len());
        let mut next = 0;
        while let Some(&Event { time, .. }) = self.queue.peek() {
            if time > self.cfg.horizon {
                break;
            }
            while next < times.len() && times[next] < time {
                samples.push(MetricsSample::capture(times[next], &self.nodes, self.topology, self.params));
                next += 1;
            }
            let ev = self.queue.pop().expect("peeked");
            debug_assert!(ev.time >= self.now);
            self.now = ev.time;
            self.events += 1;
            self.execute(ev.kind);
            debug_assert!(
                self.nodes.iter().zip(&self.pending).all(|(n, &p)| n.buffer.is_empty() || p),
                "a non-empty buffer always waits on a scheduled rebroadcast"
            );
        }
        while next < times.len() {
            samples.push(MetricsSample::capture(times[next], &self.nodes, self.topology, self.params));
            next += 1;
        }
        RunOutput {
            samples,
            sqn_wrapped: self.wrapped,
            events: self.events,
            nodes: self.nodes,
        }
    }
}

/// Everything a single run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub samples: Vec<MetricsSample>,
    /// Some node's own sequence number wrapped around during the run.
    pub sqn_wrapped: bool,
    pub events: u64,
    /// Node states at the horizon.
    pub nodes: Vec<NodeState>,
}

/// Run one simulation and return its metric samples.
pub fn run(params: &ProtocolParams, topology: &Topology, cfg: &TimedConfig, run_index: u64) -> Result<Vec<MetricsSample>, ConfigError> {
    Ok(Simulation::new(params, topology, cfg, run_index)?.run().samples)
}

/// Per-sample-time aggregate over a batch: means, except buffer occupancy and
/// overflow counts which take the maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateSample {
    pub t: f64,
    pub bidir_misses: f64,
    pub no_route: f64,
    pub best_hop_total: f64,
    pub route_errors: f64,
    pub avg_buffer: f64,
    pub max_buffer: u32,
    pub buffer_errors: u32,
}

#[derive(Debug, Clone)]
pub struct BatchOutput {
    pub runs: Vec<RunOutput>,
    pub aggregate: Vec<AggregateSample>,
}

impl BatchOutput {
    /// Buffer occupancy averaged over nodes, samples and runs.
    pub fn mean_buffer(&self) -> f64 {
        let n = self.aggregate.len().max(1) as f64;
        self.aggregate.iter().map(|a| a.avg_buffer).sum::<f64>() / n
    }

    /// Largest buffer seen at any sample of any run.
    pub fn max_buffer(&self) -> u32 {
        self.aggregate.iter().map(|a| a.max_buffer).max().unwrap_or(0)
    }

    pub fn total_buffer_errors(&self) -> u32 {
        self.runs.iter().map(|r| r.nodes.iter().map(|n| n.buffer_error).sum::<u32>()).sum()
    }

    /// Aggregate row at sample time `t`.
    pub fn at(&self, t: f64) -> Option<&AggregateSample> {
        self.aggregate.iter().find(|a| (a.t - t).abs() < 1e-9)
    }

    /// Share of runs whose sample at time `t` satisfies `pred`.
    pub fn fraction_of_runs(&self, t: f64, pred: impl Fn(&MetricsSample) -> bool) -> f64 {
        let hits = self
            .runs
            .iter()
            .filter(|r| r.samples.iter().find(|s| (s.t - t).abs() < 1e-9).is_some_and(&pred))
            .count();
        hits as f64 / self.runs.len().max(1) as f64
    }
}

pub fn aggregate(runs: &[RunOutput]) -> Vec<AggregateSample> {
    let Some(first) = runs.first() else {
        return Vec::new();
    };
    let n = runs.len() as f64;
    (0..first.samples.len())
        .map(|k| {
            let column = runs.iter().map(|r| &r.samples[k]);
            let mean = |f: fn(&MetricsSample) -> f64| column.clone().map(f).sum::<f64>() / n;
            AggregateSample {
                t: first.samples[k].t,
                bidir_misses: mean(|s| s.bidir_misses as f64),
                no_route: mean(|s| s.no_route as f64),
                best_hop_total: mean(|s| s.best_hop_total as f64),
                route_errors: mean(|s| s.route_errors as f64),
                avg_buffer: mean(|s| s.avg_buffer),
                max_buffer: column.clone().map(|s| s.max_buffer).max().unwrap_or(0),
                buffer_errors: column.clone().map(|s| s.buffer_errors).max().unwrap_or(0),
            }
        })
        .collect()
}

/// Run `cfg.runs` independent simulations, spread over the available cores.
/// The result does not depend on the thread count.
pub fn run_batch(params: &ProtocolParams, topology: &Topology, cfg: &TimedConfig) -> Result<BatchOutput, ConfigError> {
    run_batch_with_threads(params, topology, cfg, std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub fn run_batch_with_threads(
    params: &ProtocolParams,
    topology: &Topology,
    cfg: &TimedConfig,
    threads: usize,
) -> Result<BatchOutput, ConfigError> {
    // validate once up front so worker threads cannot fail
    Simulation::new(params, topology, cfg, 0)?;
    let threads = threads.clamp(1, cfg.runs);
    let mut runs: Vec<Option<RunOutput>> = vec![None; cfg.runs];
    std::thread::scope(|scope| {
        for (w, chunk) in runs.chunks_mut(cfg.runs.div_ceil(threads)).enumerate() {
            let base = w * cfg.runs.div_ceil(threads);
            scope.spawn(move || {
                for (i, slot) in chunk.iter_mut().enumerate() {
                    let sim = Simulation::new(params, topology, cfg, (base + i) as u64).expect("validated");
                    *slot = Some(sim.run());
                }
            });
        }
    });
    let runs: Vec<RunOutput> = runs.into_iter().map(|r| r.expect("every run filled")).collect();
    let aggregate = aggregate(&runs);
    Ok(BatchOutput { runs, aggregate })
}
