use std::collections::VecDeque;

use smallvec::SmallVec;

use crate::model::KeyToken;

pub(crate) type KeyIds = SmallVec<[u32; 8]>;

/// Protocol state of one receiver.
#[derive(Debug, Clone, Default)]
pub(crate) struct NodeState {
    /// Latest decoded version.
    pub decoded: u64,
    /// Keys received straight from the source, ascending in version. The
    /// front sits at absolute position `base`.
    pub direct: VecDeque<KeyToken>,
    pub base: u64,
    /// Distinct key ids observed per undecoded version, ascending.
    pub pending: Vec<(u64, KeyIds)>,
}

impl NodeState {
    /// Absolute position one past the last direct key.
    pub fn direct_end(&self) -> u64 {
        self.base + self.direct.len() as u64
    }

    /// Adds one key id for `version`. Returns the number of distinct ids
    /// now held for it, or `None` when the version is already superseded.
    pub fn record(&mut self, version: u64, key_id: u32) -> Option<usize> {
        if version <= self.decoded {
            return None;
        }
        let idx = match self.pending.binary_search_by_key(&version, |e| e.0) {
            Ok(i) => i,
            Err(i) => {
                self.pending.insert(i, (version, KeyIds::new()));
                i
            }
        };
        let ids = &mut self.pending[idx].1;
        if !ids.contains(&key_id) {
            ids.push(key_id);
        }
        Some(ids.len())
    }

    /// Marks `version` decoded and drops all pending entries at or below it.
    pub fn mark_decoded(&mut self, version: u64) {
        debug_assert!(version > self.decoded);
        self.decoded = version;
        let keep = self.pending.partition_point(|e| e.0 <= version);
        self.pending.drain(..keep);
    }

    /// Memoryless reset at a new update: forget every direct key and every
    /// incomplete id set.
    pub fn clear_volatile(&mut self) {
        self.base += self.direct.len() as u64;
        self.direct.clear();
        self.pending.clear();
    }

    /// Drops direct keys before absolute position `upto`.
    pub fn drop_direct_before(&mut self, upto: u64) {
        if upto > self.base {
            let n = (upto - self.base) as usize;
            self.direct.drain(..n);
            self.base = upto;
        }
    }
}
