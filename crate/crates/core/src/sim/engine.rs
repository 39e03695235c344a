//! Event loop of one simulation run.
//!
//! Events are drawn by superposition: one exponential clock at the total
//! rate `lambda_s + sum of edge rates`, then a categorical draw picks the
//! source or one directed edge. Ties have probability zero, so each instant
//! carries exactly one event.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, weighted::WeightedAliasIndex};

use super::accumulator::AgeAccumulator;
use super::node::NodeState;
use super::trace::{Observer, TraceEvent};
use super::{Forwarding, Horizon, SimError, SimOptions};
use crate::model::{EdgeRates, KeyToken, NodeClass, Scheme, ValidatedConfig};

/// Direct-key queue length that triggers the first garbage collection.
const GC_START: usize = 64;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct EventCounts {
    pub updates: u64,
    pub activations: u64,
    pub decodes: u64,
    /// Memoryless: versions a node never decoded.
    pub misses: u64,
    /// Memory: decodes that overtook an older undecoded version.
    pub early_stops: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct NodeCounts {
    pub decodes: u64,
    pub misses: u64,
    pub early_stops: u64,
}

/// Cumulative per-class age integrals at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Snapshot {
    pub time: f64,
    pub integral: [f64; 2],
}

pub(crate) struct RunOutput {
    pub accs: Vec<AgeAccumulator>,
    pub node_counts: Vec<NodeCounts>,
    pub counts: EventCounts,
    /// Index `u` holds the integrals at the `u`-th update; the final entry
    /// is the end of the run.
    pub snapshots: Vec<Snapshot>,
    pub end_time: f64,
}

enum EdgeSampler {
    Uniform,
    Alias {
        table: WeightedAliasIndex<f64>,
        edges: Vec<(usize, usize)>,
    },
}

struct Engine<'a, O: Observer> {
    m: usize,
    s: usize,
    n: usize,
    threshold: usize,
    scheme: Scheme,
    forwarding: Forwarding,
    nodes: Vec<NodeState>,
    accs: Vec<AgeAccumulator>,
    node_counts: Vec<NodeCounts>,
    /// `cursors[i * m + j]`: first direct-key position of `i` not yet sent
    /// to `j`; `u64::MAX` for absent edges.
    cursors: Vec<u64>,
    gc_threshold: Vec<usize>,
    nonsubs: Vec<usize>,
    version: u64,
    class_sum: [u64; 2],
    class_integral: [f64; 2],
    class_last: f64,
    snapshots: Vec<Snapshot>,
    counts: EventCounts,
    rng: ChaCha8Rng,
    cfg: &'a ValidatedConfig,
    observer: &'a mut O,
}

fn class_index(c: NodeClass) -> usize {
    match c {
        NodeClass::Subscriber => 0,
        NodeClass::Nonsubscriber => 1,
    }
}

pub(crate) fn run<O: Observer>(
    cfg: &ValidatedConfig,
    horizon: Horizon,
    seed: u64,
    opts: &SimOptions,
    observer: &mut O,
) -> Result<RunOutput, SimError> {
    let m = cfg.m();
    let total_gossip = cfg.total_gossip_rate();
    let total_rate = cfg.lambda_s() + total_gossip;
    let p_update = cfg.lambda_s() / total_rate;
    let clock = Exp::new(total_rate).map_err(|e| SimError::Internal(e.to_string()))?;

    let sampler = match &cfg.config().edge_rates {
        EdgeRates::Homogeneous { .. } => EdgeSampler::Uniform,
        EdgeRates::Heterogeneous { matrix } => {
            let mut edges = Vec::new();
            let mut weights = Vec::new();
            for (i, row) in matrix.iter().enumerate() {
                for (j, &r) in row.iter().enumerate() {
                    if i != j && r > 0.0 {
                        edges.push((i, j));
                        weights.push(r);
                    }
                }
            }
            let table =
                WeightedAliasIndex::new(weights).map_err(|e| SimError::Internal(e.to_string()))?;
            EdgeSampler::Alias { table, edges }
        }
    };

    let cursors = if cfg.scheme() == Scheme::Memory {
        let mut c = vec![0u64; m * m];
        for i in 0..m {
            for j in 0..m {
                if cfg.edge_rate(i, j) <= 0.0 {
                    c[i * m + j] = u64::MAX;
                }
            }
        }
        c
    } else {
        Vec::new()
    };

    let mut engine = Engine {
        m,
        s: cfg.s(),
        n: cfg.n(),
        threshold: cfg.decode_threshold(),
        scheme: cfg.scheme(),
        forwarding: opts.forwarding,
        nodes: vec![NodeState::default(); m],
        accs: vec![AgeAccumulator::new(); m],
        node_counts: vec![NodeCounts::default(); m],
        cursors,
        gc_threshold: vec![GC_START; m],
        nonsubs: (cfg.s()..m).collect(),
        version: 0,
        class_sum: [0, 0],
        class_integral: [0.0, 0.0],
        class_last: 0.0,
        snapshots: vec![Snapshot {
            time: 0.0,
            integral: [0.0, 0.0],
        }],
        counts: EventCounts::default(),
        rng: ChaCha8Rng::seed_from_u64(seed),
        cfg,
        observer,
    };

    let mut time = 0.0;
    let mut events: u64 = 0;
    let end_time;
    loop {
        let t = time + clock.sample(&mut engine.rng);
        if let Horizon::Time(limit) = horizon {
            if t > limit {
                engine.finish(limit, false);
                end_time = limit;
                break;
            }
        }
        if engine.rng.random::<f64>() < p_update {
            if let Horizon::Updates(limit) = horizon {
                if engine.version >= limit {
                    engine.finish(t, true);
                    end_time = t;
                    break;
                }
            }
            engine.source_update(t);
        } else {
            let (i, j) = match &sampler {
                EdgeSampler::Uniform => {
                    let i = engine.rng.random_range(0..m);
                    let mut j = engine.rng.random_range(0..m - 1);
                    if j >= i {
                        j += 1;
                    }
                    (i, j)
                }
                EdgeSampler::Alias { table, edges } => edges[table.sample(&mut engine.rng)],
            };
            engine.gossip(i, j, t);
        }
        time = t;
        events += 1;
        if let Some(max) = opts.max_events {
            if events > max {
                return Err(SimError::TraceTooLarge { limit: max });
            }
        }
    }

    Ok(RunOutput {
        accs: engine.accs,
        node_counts: engine.node_counts,
        counts: engine.counts,
        snapshots: engine.snapshots,
        end_time,
    })
}

impl<O: Observer> Engine<'_, O> {
    fn advance_classes(&mut self, t: f64) {
        let dt = t - self.class_last;
        for c in 0..2 {
            self.class_integral[c] += self.class_sum[c] as f64 * dt;
        }
        self.class_last = t;
    }

    fn ages(&self) -> Vec<u64> {
        self.accs.iter().map(|a| a.age()).collect()
    }

    fn source_update(&mut self, t: f64) {
        self.advance_classes(t);
        self.snapshots.push(Snapshot {
            time: t,
            integral: self.class_integral,
        });
        self.version += 1;
        self.counts.updates += 1;
        let v = self.version;

        // Uniform (n - s)-subset of the nonsubscribers by partial shuffle.
        let picks = self.n - self.s;
        for r in 0..picks {
            let idx = self.rng.random_range(r..self.nonsubs.len());
            self.nonsubs.swap(r, idx);
        }

        let before = if O::DETAILED { self.ages() } else { Vec::new() };
        for j in 0..self.m {
            if self.scheme == Scheme::Memoryless {
                if self.nodes[j].decoded + 1 < v {
                    self.counts.misses += 1;
                    self.node_counts[j].misses += 1;
                }
                self.nodes[j].clear_volatile();
            }
            self.accs[j].on_update(t, v);
        }
        self.class_sum[0] += self.s as u64;
        self.class_sum[1] += (self.m - self.s) as u64;

        let holders: Vec<(usize, u32)> = (0..self.s)
            .map(|j| (j, j as u32))
            .chain((0..picks).map(|r| (self.nonsubs[r], (self.s + r) as u32)))
            .collect();

        if O::DETAILED {
            let mut is_holder = vec![false; self.m];
            for &(j, _) in &holders {
                is_holder[j] = true;
            }
            let senders_available = (0..self.m)
                .map(|j| {
                    (0..self.m)
                        .filter(|&i| is_holder[i] && self.cfg.edge_rate(i, j) > 0.0)
                        .count()
                })
                .collect();
            let after = self.ages();
            self.observer.on_event(TraceEvent::SourceUpdate {
                time: t,
                version: v,
                key_holders: holders.clone(),
                senders_available,
                ages_before: before,
                ages_after: after,
            });
        }

        for (j, id) in holders {
            let key = KeyToken {
                version: v,
                key_id: id,
            };
            self.nodes[j].direct.push_back(key);
            if self.scheme == Scheme::Memory && self.nodes[j].direct.len() > self.gc_threshold[j] {
                self.collect_garbage(j);
            }
            if let Some(c) = self.nodes[j].record(v, id) {
                if c >= self.threshold {
                    self.decode(j, v, c, t);
                }
            }
        }
    }

    /// Drops direct keys already forwarded on every outgoing edge.
    fn collect_garbage(&mut self, j: usize) {
        let row = &self.cursors[j * self.m..(j + 1) * self.m];
        let min = row.iter().copied().min().unwrap_or(u64::MAX);
        let node = &mut self.nodes[j];
        node.drop_direct_before(min.min(node.direct_end()));
        if node.direct.len() * 2 > self.gc_threshold[j] {
            self.gc_threshold[j] *= 2;
        }
    }

    fn decode(&mut self, j: usize, version: u64, distinct: usize, t: f64) {
        let old = self.nodes[j].decoded;
        self.nodes[j].mark_decoded(version);
        let early = (self.scheme == Scheme::Memory && version > old + 1)
            .then(|| (old + 1, version - 1));
        if early.is_some() {
            self.counts.early_stops += 1;
            self.node_counts[j].early_stops += 1;
        }
        self.counts.decodes += 1;
        self.node_counts[j].decodes += 1;

        self.advance_classes(t);
        let before = self.accs[j].age();
        let after = self.version - version;
        self.accs[j].on_decode(t, after);
        let c = class_index(self.cfg.node_class(j));
        self.class_sum[c] -= before - after;

        if O::DETAILED {
            self.observer.on_event(TraceEvent::Decode {
                time: t,
                node: j,
                version,
                distinct_keys: distinct,
                early_stopped: early,
                age_before: before,
                age_after: after,
            });
        }
    }

    fn gossip(&mut self, i: usize, j: usize, t: f64) {
        self.counts.activations += 1;
        let age_before = self.accs[j].age();
        let mut sent = Vec::new();
        match self.scheme {
            Scheme::Memory => {
                let idx = i * self.m + j;
                let end = self.nodes[i].direct_end();
                let start = match self.forwarding {
                    Forwarding::SinceLastActivation => self.cursors[idx],
                    Forwarding::AllHeld => self.nodes[i].base,
                };
                self.cursors[idx] = end;
                let direct = std::mem::take(&mut self.nodes[i].direct);
                let base = self.nodes[i].base;
                if O::DETAILED {
                    sent.extend(direct.range((start - base) as usize..));
                }
                // Keys at or below the receiver's decoded version cannot
                // change its state.
                let decoded_j = self.nodes[j].decoded;
                let useful = base + direct.partition_point(|k| k.version <= decoded_j) as u64;
                for pos in start.max(useful)..end {
                    let key = direct[(pos - base) as usize];
                    if let Some(c) = self.nodes[j].record(key.version, key.key_id) {
                        if c >= self.threshold {
                            self.decode(j, key.version, c, t);
                        }
                    }
                }
                self.nodes[i].direct = direct;
            }
            Scheme::Memoryless => {
                if let Some(&key) = self.nodes[i].direct.front() {
                    if key.version == self.version {
                        if O::DETAILED {
                            sent.push(key);
                        }
                        if let Some(c) = self.nodes[j].record(key.version, key.key_id) {
                            if c >= self.threshold {
                                self.decode(j, key.version, c, t);
                            }
                        }
                    }
                }
            }
        }
        if O::DETAILED {
            let age_after = self.accs[j].age();
            self.observer.on_event(TraceEvent::Gossip {
                time: t,
                from: i,
                to: j,
                keys: sent,
                age_before,
                age_after,
            });
        }
    }

    fn finish(&mut self, t: f64, next_update_cuts: bool) {
        self.advance_classes(t);
        let next = self.version + 1;
        for acc in &mut self.accs {
            acc.finish(t, next, next_update_cuts);
        }
        self.snapshots.push(Snapshot {
            time: t,
            integral: self.class_integral,
        });
    }
}
