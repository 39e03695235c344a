//! Memory critical gossip rate: the smallest gossip rate at which the
//! graph-average ages with and without memory differ by at most a margin.

use serde::{Deserialize, Serialize};

use super::memory::{age_memory_total_key_graph, bounds_memory_partial};
use super::memoryless::age_memoryless_graph;
use super::{check_positive, AnalyticError};

/// Bracket floor relative to `lambda_s`.
pub const BRACKET_FLOOR: f64 = 1e-6;
/// Largest gossip rate tried, relative to `lambda_s`.
pub const BRACKET_CAP: f64 = 1e9;
/// Relative width at which bisection stops.
pub const RELATIVE_TOL: f64 = 1e-6;
/// Points of the log-spaced monotonicity scan.
const SCAN_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalRateQuery {
    pub k: usize,
    pub n: usize,
    pub s: usize,
    pub m: usize,
    pub lambda_s: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalRate {
    /// Critical gossip rate; `0.0` when the gap is already within the margin
    /// at the bracket floor.
    pub rate: f64,
    /// `|memory - memoryless|` at `rate` (at the floor when `rate` is 0).
    pub gap: f64,
    /// True for partial-key subscription, where the memory age is replaced
    /// by its upper bound and the result is only an upper bound.
    pub upper_bound: bool,
}

impl CriticalRateQuery {
    fn validate(&self) -> Result<(), AnalyticError> {
        check_positive("lambda_s", self.lambda_s)?;
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(AnalyticError::Domain(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.k >= self.n || self.s > self.n || self.n > self.m || self.m < 2 {
            return Err(AnalyticError::Domain(format!(
                "need k < n, s <= n <= m, m >= 2 (k={}, n={}, s={}, m={})",
                self.k, self.n, self.s, self.m
            )));
        }
        Ok(())
    }

    fn is_partial(&self) -> bool {
        self.s < self.n
    }

    /// `|memory graph age - memoryless graph age|` at gossip rate `lambda_e`.
    pub fn gap(&self, lambda_e: f64) -> Result<f64, AnalyticError> {
        let Self { k, n, s, m, lambda_s, .. } = *self;
        let with_memory = if self.is_partial() {
            bounds_memory_partial(k, n, s, m, lambda_s, lambda_e)?.upper
        } else {
            age_memory_total_key_graph(k, n, m, lambda_s, lambda_e)?.value
        };
        let without = age_memoryless_graph(k, n, s, m, lambda_s, lambda_e)?.value;
        Ok((with_memory - without).abs())
    }
}

/// Finds `inf { lambda_e : gap(lambda_e) <= epsilon }` by bracketing and
/// bisection. The gap is scanned on a log grid first and must be
/// nonincreasing over the bracket.
pub fn critical_gossip_rate(q: &CriticalRateQuery) -> Result<CriticalRate, AnalyticError> {
    q.validate()?;
    let excess = |le: f64| -> Result<f64, AnalyticError> { Ok(q.gap(le)? - q.epsilon) };

    let mut lo = q.lambda_s * BRACKET_FLOOR;
    let floor_gap = q.gap(lo)?;
    if floor_gap <= q.epsilon {
        return Ok(CriticalRate {
            rate: 0.0,
            gap: floor_gap,
            upper_bound: q.is_partial(),
        });
    }
    let cap = q.lambda_s * BRACKET_CAP;
    let mut hi = q.lambda_s;
    while excess(hi)? > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > cap {
            return Err(AnalyticError::NoBracket { cap });
        }
    }

    // Monotonicity over [floor, hi] on a log grid.
    let floor = q.lambda_s * BRACKET_FLOOR;
    let ratio = (hi / floor).ln();
    let mut prev = f64::INFINITY;
    for i in 0..=SCAN_POINTS {
        let le = floor * (ratio * i as f64 / SCAN_POINTS as f64).exp();
        let g = q.gap(le)?;
        if g.is_nan() || (prev.is_finite() && g > prev * (1.0 + 1e-9) + 1e-300) {
            return Err(AnalyticError::NotMonotone { lambda_e: le });
        }
        prev = g;
    }

    while hi - lo > RELATIVE_TOL * hi {
        let mid = if hi / lo > 4.0 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if excess(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CriticalRate {
        rate: hi,
        gap: q.gap(hi)?,
        upper_bound: q.is_partial(),
    })
}
