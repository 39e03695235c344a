use serde::{Deserialize, Serialize};

use super::sweep::ComparisonRow;
use crate::analytic::Population;

/// Confidence half-widths of slack granted before a bound miss is hard.
pub const AUDIT_CI_FACTOR: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Containment {
    Contained,
    /// Outside the bounds but within `AUDIT_CI_FACTOR` half-widths.
    ViolatedWithinCi,
    Violated,
}

pub(crate) fn classify(mean: f64, ci_half: f64, lower: f64, upper: f64) -> Containment {
    if lower <= mean && mean <= upper {
        Containment::Contained
    } else {
        let miss = if mean < lower { lower - mean } else { mean - upper };
        if miss <= AUDIT_CI_FACTOR * ci_half {
            Containment::ViolatedWithinCi
        } else {
            Containment::Violated
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    /// Index into the audited rows.
    pub row: usize,
    pub verdict: Containment,
    /// Graph-average rows are hard checks; per-class rows are advisory.
    pub hard: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub entries: Vec<AuditEntry>,
    pub hard_violations: usize,
    pub soft_violations: usize,
}

impl AuditReport {
    pub fn pass(&self) -> bool {
        self.hard_violations == 0
    }
}

/// Checks every simulated bound row against its `[lower, upper]` band.
pub fn audit_bounds(rows: &[ComparisonRow]) -> AuditReport {
    let mut entries = Vec::new();
    let (mut hard_violations, mut soft_violations) = (0, 0);
    for (i, r) in rows.iter().enumerate() {
        let (Some(lo), Some(hi), Some(mean)) = (r.lower_bound, r.upper_bound, r.sim_mean) else {
            continue;
        };
        let verdict = classify(mean, r.sim_ci_half.unwrap_or(0.0), lo, hi);
        let hard = r.node_class == Population::Graph;
        if verdict == Containment::Violated {
            if hard {
                hard_violations += 1;
            } else {
                soft_violations += 1;
            }
        }
        entries.push(AuditEntry { row: i, verdict, hard });
    }
    AuditReport {
        entries,
        hard_violations,
        soft_violations,
    }
}
