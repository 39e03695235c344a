use serde::{Deserialize, Serialize};

/// Aggregated renewal records `(L_a, R_a, M_a)` of one node.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CycleSummary {
    pub count: u64,
    /// Sum of cycle lengths.
    pub sum_l: f64,
    /// Sum of cycle age areas.
    pub sum_r: f64,
    /// Sum of updates per cycle.
    pub sum_m: u64,
    pub sum_m2: u64,
}

impl CycleSummary {
    fn push(&mut self, l: f64, r: f64, m: u64) {
        self.count += 1;
        self.sum_l += l;
        self.sum_r += r;
        self.sum_m += m;
        self.sum_m2 += m * m;
    }

    /// Mean and standard error of the updates-per-cycle count.
    pub fn updates_per_cycle(&self) -> Option<(f64, f64)> {
        if self.count < 2 {
            return None;
        }
        let c = self.count as f64;
        let mean = self.sum_m as f64 / c;
        let var = (self.sum_m2 as f64 - c * mean * mean) / (c - 1.0);
        Some((mean, (var.max(0.0) / c).sqrt()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Cut {
    time: f64,
    integral: f64,
    update: u64,
}

/// Piecewise-constant integration of one node's age plus renewal cycles
/// cut at updates after which the age equals 1.
#[derive(Debug, Clone)]
pub struct AgeAccumulator {
    age: u64,
    integral: f64,
    last_time: f64,
    cycle_r: f64,
    cycle_updates: u64,
    first_cut: Option<Cut>,
    last_cut: Option<Cut>,
    cycles: CycleSummary,
}

impl Default for AgeAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

impl AgeAccumulator {
    pub fn new() -> Self {
        AgeAccumulator {
            age: 0,
            integral: 0.0,
            last_time: 0.0,
            cycle_r: 0.0,
            cycle_updates: 0,
            first_cut: None,
            last_cut: None,
            cycles: CycleSummary::default(),
        }
    }

    pub fn age(&self) -> u64 {
        self.age
    }

    pub fn integral(&self) -> f64 {
        self.integral
    }

    pub fn cycles(&self) -> &CycleSummary {
        &self.cycles
    }

    pub fn advance(&mut self, t: f64) {
        let area = self.age as f64 * (t - self.last_time);
        self.integral += area;
        self.cycle_r += area;
        self.last_time = t;
    }

    /// Source update at `t` (update index `update`). Returns true when the
    /// update starts a new cycle.
    pub fn on_update(&mut self, t: f64, update: u64) -> bool {
        self.advance(t);
        self.age += 1;
        self.cycle_updates += 1;
        if self.age == 1 {
            self.cut(t, update);
            true
        } else {
            false
        }
    }

    /// A decode at `t` lowering the age to `age`.
    pub fn on_decode(&mut self, t: f64, age: u64) {
        debug_assert!(age < self.age);
        self.advance(t);
        self.age = age;
    }

    /// Closes the run at `t`. When `next_update_cuts` is set, the update
    /// that would arrive at `t` is treated as a cycle boundary for nodes at
    /// age 0.
    pub fn finish(&mut self, t: f64, update: u64, next_update_cuts: bool) {
        self.advance(t);
        if next_update_cuts && self.age == 0 {
            self.cycle_updates += 1;
            self.cut(t, update);
        }
    }

    fn cut(&mut self, t: f64, update: u64) {
        let here = Cut {
            time: t,
            integral: self.integral,
            update,
        };
        if let Some(prev) = self.last_cut {
            self.cycles.push(t - prev.time, self.cycle_r, self.cycle_updates);
        } else {
            self.first_cut = Some(here);
        }
        self.last_cut = Some(here);
        self.cycle_r = 0.0;
        self.cycle_updates = 0;
    }

    /// Update index of the first cycle boundary.
    pub fn first_cut_update(&self) -> Option<u64> {
        self.first_cut.map(|c| c.update)
    }

    /// `(window length, window integral)` between the first and last cycle
    /// boundaries; `None` before a full cycle has completed.
    pub fn window(&self) -> Option<(f64, f64)> {
        match (self.first_cut, self.last_cut) {
            (Some(a), Some(b)) if self.cycles.count > 0 => {
                Some((b.time - a.time, b.integral - a.integral))
            }
            _ => None,
        }
    }

    /// Time-average age over the completed cycles.
    pub fn mean(&self) -> Option<f64> {
        self.window().map(|(len, area)| area / len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_built_path() {
        let mut a = AgeAccumulator::new();
        assert!(a.on_update(1.0, 1)); // cut, age 1
        a.on_decode(1.5, 0);
        assert!(a.on_update(2.0, 2)); // cycle L=1, R=0.5, M=1
        assert!(!a.on_update(3.0, 3)); // age 1 -> 2
        a.on_decode(3.5, 0); // area 1 + 1
        assert!(a.on_update(4.0, 4)); // cycle L=2, R=2, M=2
        let c = a.cycles();
        assert_eq!(c.count, 2);
        assert_eq!(c.sum_l, 3.0);
        assert_eq!(c.sum_r, 2.5);
        assert_eq!(c.sum_m, 3);
        assert_eq!(c.sum_m2, 5);
        assert_eq!(a.window(), Some((3.0, 2.5)));
        assert_eq!(a.first_cut_update(), Some(1));
    }

    #[test]
    fn finish_cuts_only_at_age_zero() {
        let mut a = AgeAccumulator::new();
        a.on_update(1.0, 1);
        a.on_decode(1.25, 0);
        a.finish(2.0, 2, true);
        assert_eq!(a.cycles().count, 1);
        assert_eq!(a.mean(), Some(0.25));

        let mut b = AgeAccumulator::new();
        b.on_update(1.0, 1);
        b.finish(2.0, 2, true);
        assert_eq!(b.cycles().count, 0);
        assert_eq!(b.mean(), None);
        assert_eq!(b.integral(), 1.0);
    }
}
