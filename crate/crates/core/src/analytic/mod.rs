//! Closed-form ages, bounds, large-network limits and the memory critical
//! gossip rate.

pub mod critical;
pub mod memory;
pub mod memoryless;
pub mod order_stats;
pub mod quadrature;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use critical::{critical_gossip_rate, CriticalRate, CriticalRateQuery};
pub use memory::{
    age_memory_full, age_memory_total_key, age_memory_total_key_graph, asymptote_bounds_memory_partial,
    asymptote_memory, asymptotic_relative_gap, bounds_memory_partial, relative_gap_bound,
};
pub use memoryless::{
    age_memoryless_full, age_memoryless_graph, age_memoryless_partial,
    age_memoryless_partial_from_races, asymptote_memoryless, coeff_a, coeff_b,
    expected_min_orderstat_update, prob_decode_before_update,
};
pub use order_stats::{exp_order_stat_mean, harmonic_sum};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("gap stays above the margin up to lambda_e = {cap}")]
    NoBracket { cap: f64 },
    #[error("memory/memoryless gap is not monotone near lambda_e = {lambda_e}")]
    NotMonotone { lambda_e: f64 },
}

/// Which expression produced an analytic value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formula {
    /// Order-statistic mean over the update rate, any feasible network.
    MemoryFull,
    MemoryTotalKeySubscriber,
    MemoryTotalKeyNonsubscriber,
    /// Large-network limit of the total-key memory graph average.
    MemoryAsymptote,
    MemoryPartialBounds,
    MemoryPartialAsymptoteBounds,
    /// Race of the order statistic against the next update, any feasible network.
    MemorylessFull,
    MemorylessSubscriber,
    MemorylessNonsubscriber,
    MemorylessClosedFormSubscriber,
    MemorylessClosedFormNonsubscriber,
    MemorylessAsymptote,
    GraphAverage,
}

/// A nonnegative, finite expected version age tagged with its formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticResult {
    pub value: f64,
    pub formula: Formula,
}

impl AnalyticResult {
    pub fn new(value: f64, formula: Formula) -> Result<Self, AnalyticError> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(AnalyticError::Domain(format!(
                "{formula:?} evaluated to {value}, expected a finite nonnegative age"
            )));
        }
        Ok(AnalyticResult { value, formula })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundPair {
    pub lower: f64,
    pub upper: f64,
    pub formula: Formula,
}

impl BoundPair {
    pub fn new(lower: f64, upper: f64, formula: Formula) -> Result<Self, AnalyticError> {
        if !(lower.is_finite() && upper.is_finite() && 0.0 <= lower && lower <= upper) {
            return Err(AnalyticError::Domain(format!(
                "invalid bound pair [{lower}, {upper}]"
            )));
        }
        Ok(BoundPair {
            lower,
            upper,
            formula,
        })
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

/// Gossip rates into one node.
#[derive(Debug, Clone, PartialEq)]
pub enum InRates {
    /// `count` in-neighbors, each at `rate`.
    Homogeneous { count: usize, rate: f64 },
    Heterogeneous(Vec<f64>),
}

/// Node population an age refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Population {
    Subscriber,
    Nonsubscriber,
    Graph,
}

impl Population {
    pub fn as_str(self) -> &'static str {
        match self {
            Population::Subscriber => "subscriber",
            Population::Nonsubscriber => "nonsubscriber",
            Population::Graph => "graph",
        }
    }
}

impl From<crate::model::NodeClass> for Population {
    fn from(c: crate::model::NodeClass) -> Self {
        match c {
            crate::model::NodeClass::Subscriber => Population::Subscriber,
            crate::model::NodeClass::Nonsubscriber => Population::Nonsubscriber,
        }
    }
}

impl std::str::FromStr for Population {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "graph" => Ok(Population::Graph),
            other => other.parse::<crate::model::NodeClass>().map(Population::from),
        }
    }
}

/// Average age over the graph: `(s/m) sub + ((m - s)/m) nonsub`.
pub fn graph_average(age_sub: f64, age_nonsub: f64, s: usize, m: usize) -> Result<f64, AnalyticError> {
    if s > m || m == 0 {
        return Err(AnalyticError::Domain(format!("need s <= m, m > 0 (s={s}, m={m})")));
    }
    if s == m {
        return Ok(age_sub);
    }
    if s == 0 {
        return Ok(age_nonsub);
    }
    let w = s as f64 / m as f64;
    Ok(w * age_sub + (1.0 - w) * age_nonsub)
}

pub(crate) fn check_positive(name: &str, v: f64) -> Result<(), AnalyticError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(AnalyticError::Domain(format!("{name} must be positive and finite, got {v}")))
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<(), AnalyticError> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(AnalyticError::Domain(format!("alpha must lie in (0, 1], got {alpha}")))
    }
}
