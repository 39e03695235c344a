use serde::{Deserialize, Serialize};

use crate::model::KeyToken;

/// One logged simulation event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    SourceUpdate {
        time: f64,
        version: u64,
        /// `(node, key_id)` for every key holder of this version.
        key_holders: Vec<(usize, u32)>,
        /// Per node, the number of its in-neighbors holding a key of this version.
        senders_available: Vec<usize>,
        ages_before: Vec<u64>,
        ages_after: Vec<u64>,
    },
    Gossip {
        time: f64,
        from: usize,
        to: usize,
        /// Keys carried by the message.
        keys: Vec<KeyToken>,
        age_before: u64,
        age_after: u64,
    },
    Decode {
        time: f64,
        node: usize,
        version: u64,
        distinct_keys: usize,
        /// Inclusive range of older undecoded versions this decode cut short.
        early_stopped: Option<(u64, u64)>,
        age_before: u64,
        age_after: u64,
    },
}

impl TraceEvent {
    pub fn time(&self) -> f64 {
        match self {
            TraceEvent::SourceUpdate { time, .. }
            | TraceEvent::Gossip { time, .. }
            | TraceEvent::Decode { time, .. } => *time,
        }
    }
}

/// Receives engine events. With `DETAILED = false` (the default) the
/// engine builds no event payloads at all.
pub trait Observer {
    const DETAILED: bool = false;

    fn on_event(&mut self, _event: TraceEvent) {}
}

/// Observer that ignores everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoTrace;

impl Observer for NoTrace {}

/// Collects every event in order.
#[derive(Debug, Default, Clone)]
pub struct TraceLog {
    pub events: Vec<TraceEvent>,
}

impl Observer for TraceLog {
    const DETAILED: bool = true;

    fn on_event(&mut self, event: TraceEvent) {
        self.events.push(event);
    }
}
