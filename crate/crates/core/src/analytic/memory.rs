//! Version age with memory: closed forms, bounds and large-network limits.

use super::order_stats::{exp_order_stat_mean, harmonic_sum, race_moments};
use super::{check_alpha, check_positive, AnalyticError, AnalyticResult, BoundPair, Formula, InRates};
use crate::model::NodeClass;

/// Age of a node in a full-subscription network with memory: the mean
/// time to hear from `k` in-neighbors, divided by the mean update period.
pub fn age_memory_full(
    k: usize,
    in_rates: &InRates,
    lambda_s: f64,
) -> Result<AnalyticResult, AnalyticError> {
    check_positive("lambda_s", lambda_s)?;
    let mean = match in_rates {
        InRates::Homogeneous { count, rate } => exp_order_stat_mean(k, *count, *rate)?,
        InRates::Heterogeneous(rates) => race_moments(rates, k, 0.0)?.expected_min,
    };
    AnalyticResult::new(mean * lambda_s, Formula::MemoryFull)
}

/// Scale factor `(m - 1) lambda_s / lambda_e` shared by the homogeneous
/// memory closed forms.
fn scaled_rate(m: usize, lambda_s: f64, lambda_e: f64) -> Result<f64, AnalyticError> {
    check_positive("lambda_s", lambda_s)?;
    check_positive("lambda_e", lambda_e)?;
    if m < 2 {
        return Err(AnalyticError::Domain(format!("m={m} must be at least 2")));
    }
    Ok((m - 1) as f64 * lambda_s / lambda_e)
}

/// Total-key subscription (`s = n`) with memory. Subscribers wait for `k`
/// of the other `n - 1` key holders, nonsubscribers for `k + 1` of `n`.
pub fn age_memory_total_key(
    k: usize,
    n: usize,
    m: usize,
    lambda_s: f64,
    lambda_e: f64,
    class: NodeClass,
) -> Result<AnalyticResult, AnalyticError> {
    if k >= n {
        return Err(AnalyticError::Domain(format!("k={k} must be < n={n}")));
    }
    if n > m {
        return Err(AnalyticError::Domain(format!("n={n} must be <= m={m}")));
    }
    let scale = scaled_rate(m, lambda_s, lambda_e)?;
    let (value, formula) = match class {
        NodeClass::Subscriber => (
            scale * harmonic_sum(n - k, n - 1),
            Formula::MemoryTotalKeySubscriber,
        ),
        NodeClass::Nonsubscriber => (
            scale * harmonic_sum(n - k, n),
            Formula::MemoryTotalKeyNonsubscriber,
        ),
    };
    AnalyticResult::new(value, formula)
}

/// Graph average for total-key subscription with memory.
pub fn age_memory_total_key_graph(
    k: usize,
    n: usize,
    m: usize,
    lambda_s: f64,
    lambda_e: f64,
) -> Result<AnalyticResult, AnalyticError> {
    let sub = age_memory_total_key(k, n, m, lambda_s, lambda_e, NodeClass::Subscriber)?;
    let non = age_memory_total_key(k, n, m, lambda_s, lambda_e, NodeClass::Nonsubscriber)?;
    AnalyticResult::new(
        super::graph_average(sub.value, non.value, n, m)?,
        Formula::GraphAverage,
    )
}

/// Large-network limit of the memory graph average with `n = floor(alpha m)`:
/// `lambda_s (k + 1 - alpha) / (alpha lambda_e)`.
pub fn asymptote_memory(
    k: usize,
    alpha: f64,
    lambda_s: f64,
    lambda_e: f64,
) -> Result<f64, AnalyticError> {
    check_alpha(alpha)?;
    check_positive("lambda_s", lambda_s)?;
    check_positive("lambda_e", lambda_e)?;
    Ok(lambda_s * (k as f64 + 1.0 - alpha) / (alpha * lambda_e))
}

/// Bounds on the graph-average age with memory under partial-key
/// subscription. The lower bound is the full-subscription age on `m`
/// nodes; the upper bound is the total-key nonsubscriber age.
pub fn bounds_memory_partial(
    k: usize,
    n: usize,
    s: usize,
    m: usize,
    lambda_s: f64,
    lambda_e: f64,
) -> Result<BoundPair, AnalyticError> {
    if k >= n {
        return Err(AnalyticError::Domain(format!("k={k} must be < n={n}")));
    }
    if s > n || n > m {
        return Err(AnalyticError::Domain(format!(
            "need s <= n <= m (s={s}, n={n}, m={m})"
        )));
    }
    let scale = scaled_rate(m, lambda_s, lambda_e)?;
    BoundPair::new(
        scale * harmonic_sum(m - k, m - 1),
        scale * harmonic_sum(n - k, n),
        Formula::MemoryPartialBounds,
    )
}

/// Upper bound on the normalized relative gap `(U - L) / L` between the
/// partial-key bounds for finite `m`.
pub fn relative_gap_bound(k: usize, n: usize, m: usize) -> Result<f64, AnalyticError> {
    if k == 0 {
        return Err(AnalyticError::Domain(
            "relative gap is undefined for k = 0 (zero lower bound)".into(),
        ));
    }
    if k >= n || n > m {
        return Err(AnalyticError::Domain(format!(
            "need k < n <= m (k={k}, n={n}, m={m})"
        )));
    }
    let (k, n, m) = (k as f64, n as f64, m as f64);
    Ok(((m - n) * k + m - 1.0 - k + k * k) / ((n - k) * k))
}

/// Large-network limit of [`relative_gap_bound`]: `(k - alpha k + 1) / (alpha k)`.
pub fn asymptotic_relative_gap(k: usize, alpha: f64) -> Result<f64, AnalyticError> {
    if k == 0 {
        return Err(AnalyticError::Domain(
            "relative gap is undefined for k = 0 (zero lower bound)".into(),
        ));
    }
    check_alpha(alpha)?;
    let k = k as f64;
    Ok((k - alpha * k + 1.0) / (alpha * k))
}

/// Large-network bounds for partial-key subscription with memory:
/// `(k lambda_s / lambda_e, (k + 1) lambda_s / (alpha lambda_e))`.
pub fn asymptote_bounds_memory_partial(
    k: usize,
    alpha: f64,
    lambda_s: f64,
    lambda_e: f64,
) -> Result<BoundPair, AnalyticError> {
    check_alpha(alpha)?;
    check_positive("lambda_s", lambda_s)?;
    check_positive("lambda_e", lambda_e)?;
    let k = k as f64;
    BoundPair::new(
        k * lambda_s / lambda_e,
        (k + 1.0) * lambda_s / (alpha * lambda_e),
        Formula::MemoryPartialAsymptoteBounds,
    )
}
