//! Discrete-event simulation of coded-update gossip with exact integration
//! of every node's version age.

mod accumulator;
mod engine;
mod node;
mod stats;
mod trace;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use accumulator::{AgeAccumulator, CycleSummary};
pub use engine::{EventCounts, NodeCounts};
pub use stats::{ClassStats, NodeStats, SimStats, BATCHES};
pub use trace::{NoTrace, Observer, TraceEvent, TraceLog};

use crate::model::ValidatedConfig;

/// Largest number of events [`trace_events`] will materialize.
pub const TRACE_EVENT_LIMIT: u64 = 10_000_000;

/// Default run length in source updates.
pub const DEFAULT_UPDATES: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    /// Run until `N` source updates have occurred; the run ends at the
    /// arrival instant of update `N + 1`.
    Updates(u64),
    /// Run over `[0, T]`.
    Time(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("node {node} completed no renewal cycle; extend the horizon")]
    HorizonTooShort { node: usize },
    #[error("trace would exceed {limit} events")]
    TraceTooLarge { limit: u64 },
    #[error("invalid horizon: {0}")]
    InvalidHorizon(String),
    #[error("replication count must be at least 1")]
    NoReplications,
    #[error("{0}")]
    Internal(String),
}

/// What a memory-scheme sender puts on an activated edge.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Forwarding {
    /// Direct keys received since the edge last fired.
    #[default]
    SinceLastActivation,
    /// Every direct key still held; the receiver drops duplicates.
    AllHeld,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimOptions {
    pub forwarding: Forwarding,
    pub max_events: Option<u64>,
}

fn check_horizon(h: Horizon) -> Result<(), SimError> {
    match h {
        Horizon::Updates(0) => Err(SimError::InvalidHorizon("need at least one update".into())),
        Horizon::Time(t) if !(t.is_finite() && t > 0.0) => {
            Err(SimError::InvalidHorizon(format!("time horizon {t} must be positive")))
        }
        _ => Ok(()),
    }
}

/// Runs one simulation. Output is a pure function of `(cfg, horizon, seed)`.
pub fn run_simulation(
    cfg: &ValidatedConfig,
    horizon: Horizon,
    seed: u64,
) -> Result<SimStats, SimError> {
    run_simulation_with(cfg, horizon, seed, &SimOptions::default(), &mut NoTrace)
}

/// [`run_simulation`] with explicit options and an event observer.
pub fn run_simulation_with<O: Observer>(
    cfg: &ValidatedConfig,
    horizon: Horizon,
    seed: u64,
    opts: &SimOptions,
    observer: &mut O,
) -> Result<SimStats, SimError> {
    check_horizon(horizon)?;
    let out = engine::run(cfg, horizon, seed, opts, observer)?;
    stats::summarize(cfg, seed, out)
}

/// Seed of replication `r`: `base` itself for `r = 0`, a splitmix64 mix of
/// `(base, r)` otherwise.
pub fn replication_seed(base: u64, r: u64) -> u64 {
    if r == 0 {
        return base;
    }
    let mut z = base.wrapping_add(r.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Pooled statistic over replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PooledClass {
    /// Arithmetic mean of the replication means.
    pub mean: f64,
    /// 95% half-width over all batch means of all replications.
    pub ci_half: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicatedStats {
    pub base_seed: u64,
    pub subscriber: Option<PooledClass>,
    pub nonsubscriber: Option<PooledClass>,
    pub graph: PooledClass,
    pub runs: Vec<SimStats>,
}

impl ReplicatedStats {
    pub fn population(&self, p: crate::analytic::Population) -> Option<&PooledClass> {
        use crate::analytic::Population;
        match p {
            Population::Subscriber => self.subscriber.as_ref(),
            Population::Nonsubscriber => self.nonsubscriber.as_ref(),
            Population::Graph => Some(&self.graph),
        }
    }

    pub fn horizon_updates(&self) -> u64 {
        self.runs.iter().map(|r| r.horizon_updates).sum()
    }
}

fn pool<'a>(classes: impl Iterator<Item = &'a ClassStats> + Clone) -> PooledClass {
    let count = classes.clone().count();
    let mean = classes.clone().map(|c| c.mean).sum::<f64>() / count as f64;
    let complete = classes.clone().all(|c| c.batch_means.len() == BATCHES);
    let batches: Vec<f64> = classes.flat_map(|c| c.batch_means.iter().copied()).collect();
    PooledClass {
        mean,
        ci_half: if complete { stats::half_width(&batches) } else { None },
    }
}

/// Threads used for replications: `AOI_THREADS` when set, otherwise all cores.
pub fn replication_threads() -> Option<usize> {
    std::env::var("AOI_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&t| t > 0)
}

/// Runs `count` independent replications, concurrently when possible.
/// Results do not depend on scheduling.
pub fn run_replications(
    cfg: &ValidatedConfig,
    horizon: Horizon,
    base_seed: u64,
    count: usize,
) -> Result<ReplicatedStats, SimError> {
    use rayon::prelude::*;
    if count == 0 {
        return Err(SimError::NoReplications);
    }
    check_horizon(horizon)?;
    let job = || -> Result<Vec<SimStats>, SimError> {
        (0..count as u64)
            .into_par_iter()
            .map(|r| run_simulation(cfg, horizon, replication_seed(base_seed, r)))
            .collect()
    };
    let runs = match replication_threads() {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| SimError::Internal(e.to_string()))?
            .install(job)?,
        None => job()?,
    };
    let subscriber = runs[0]
        .subscriber
        .is_some()
        .then(|| pool(runs.iter().filter_map(|r| r.subscriber.as_ref())));
    let nonsubscriber = runs[0]
        .nonsubscriber
        .is_some()
        .then(|| pool(runs.iter().filter_map(|r| r.nonsubscriber.as_ref())));
    let graph = pool(runs.iter().map(|r| &r.graph));
    Ok(ReplicatedStats {
        base_seed,
        subscriber,
        nonsubscriber,
        graph,
        runs,
    })
}

/// Runs one simulation and returns every event in time order.
pub fn trace_events(
    cfg: &ValidatedConfig,
    horizon: Horizon,
    seed: u64,
) -> Result<Vec<TraceEvent>, SimError> {
    check_horizon(horizon)?;
    let rate = cfg.lambda_s() + cfg.total_gossip_rate();
    let expected = match horizon {
        Horizon::Updates(n) => (n as f64 + 1.0) * rate / cfg.lambda_s(),
        Horizon::Time(t) => t * rate,
    };
    if expected > TRACE_EVENT_LIMIT as f64 {
        return Err(SimError::TraceTooLarge {
            limit: TRACE_EVENT_LIMIT,
        });
    }
    let opts = SimOptions {
        max_events: Some(TRACE_EVENT_LIMIT),
        ..SimOptions::default()
    };
    let mut log = TraceLog::default();
    // Short traces may not complete a cycle; the log is still valid.
    engine::run(cfg, horizon, seed, &opts, &mut log)?;
    Ok(log.events)
}
