//! Version age without memory.
//!
//! A node without memory must collect its missing keys before the next
//! update arrives; otherwise the version is lost. Ages are ratios of
//! `E[min(X, U)]` to `P(X <= U) E[U]` where `X` is the relevant order
//! statistic and `U` the update interarrival time.
//!
//! Products of race probabilities are evaluated in linear space: every
//! factor lies in `(0, 1)` and is bounded away from zero as long as the
//! number of missing keys stays below the number of senders, which all
//! entry points enforce.

use super::order_stats::{race_moments, RaceMoments};
use super::{check_alpha, check_positive, AnalyticError, AnalyticResult, Formula, InRates, Population};
use crate::model::NodeClass;

/// `B(n, m, i) = (n - i) / (m - 1)`: fraction of gossip from the `n - i`
/// key holders that have not been heard yet.
pub fn coeff_b(n: usize, m: usize, i: usize) -> Result<f64, AnalyticError> {
    if m < 2 {
        return Err(AnalyticError::Domain(format!("m={m} must be at least 2")));
    }
    if i >= n {
        return Err(AnalyticError::Domain(format!("B needs i < n (i={i}, n={n})")));
    }
    Ok((n - i) as f64 / (m - 1) as f64)
}

/// `A(n, m, j) = prod_{i=1}^{j} lambda_e B / (lambda_e B + lambda_s)`:
/// probability that `j` consecutive keys win their race against the next
/// update. `A(n, m, 0) = 1`.
pub fn coeff_a(
    n: usize,
    m: usize,
    j: usize,
    lambda_s: f64,
    lambda_e: f64,
) -> Result<f64, AnalyticError> {
    check_positive("lambda_s", lambda_s)?;
    check_positive("lambda_e", lambda_e)?;
    if j >= n {
        return Err(AnalyticError::Domain(format!("A needs j < n (j={j}, n={n})")));
    }
    let mut acc = 1.0;
    for i in 1..=j {
        let rate = lambda_e * coeff_b(n, m, i)?;
        acc *= rate / (rate + lambda_s);
    }
    Ok(acc)
}

fn check_race(k_t: usize, n_t: usize) -> Result<(), AnalyticError> {
    if k_t >= n_t {
        return Err(AnalyticError::Domain(format!(
            "need k_t < n_t (k_t={k_t}, n_t={n_t})"
        )));
    }
    Ok(())
}

/// `E[min(X_(k_t : n_t - 1), U)]` for `n_t - 1` i.i.d. clocks of rate
/// `lambda_e / (m - 1)` and `U ~ Exp(lambda_s)`.
pub fn expected_min_orderstat_update(
    k_t: usize,
    n_t: usize,
    m: usize,
    lambda_s: f64,
    lambda_e: f64,
) -> Result<f64, AnalyticError> {
    check_race(k_t, n_t)?;
    check_positive("lambda_s", lambda_s)?;
    check_positive("lambda_e", lambda_e)?;
    let mut total = 0.0;
    let mut survive = 1.0;
    for j in 1..=k_t {
        let rate = lambda_e * coeff_b(n_t, m, j)?;
        total += survive / (rate + lambda_s);
        survive *= rate / (rate + lambda_s);
    }
    Ok(total)
}

/// `P(X_(k_t : n_t - 1) <= U) = A(n_t, m, k_t)`.
pub fn prob_decode_before_update(
    k_t: usize,
    n_t: usize,
    m: usize,
    lambda_s: f64,
    lambda_e: f64,
) -> Result<f64, AnalyticError> {
    check_race(k_t, n_t)?;
    coeff_a(n_t, m, k_t, lambda_s, lambda_e)
}

/// Age of a node without memory in a full-subscription network, where the
/// node needs `k` keys from its in-neighbors.
pub fn age_memoryless_full(
    k: usize,
    in_rates: &InRates,
    lambda_s: f64,
) -> Result<AnalyticResult, AnalyticError> {
    check_positive("lambda_s", lambda_s)?;
    let (expected_min, prob) = match in_rates {
        InRates::Homogeneous { count, rate } => {
            if k > *count {
                return Err(AnalyticError::Domain(format!(
                    "k={k} exceeds the in-degree {count}"
                )));
            }
            // With m = 2 the per-edge rate is lambda_e itself.
            (
                expected_min_orderstat_update(k, count + 1, 2, lambda_s, *rate)?,
                prob_decode_before_update(k, count + 1, 2, lambda_s, *rate)?,
            )
        }
        InRates::Heterogeneous(rates) => {
            let RaceMoments {
                expected_min,
                prob_before,
            } = race_moments(rates, k, lambda_s)?;
            (expected_min, prob_before)
        }
    };
    AnalyticResult::new(lambda_s * expected_min / prob, Formula::MemorylessFull)
}

fn check_partial(k: usize, n: usize, s: usize, m: usize) -> Result<(), AnalyticError> {
    if k >= n {
        return Err(AnalyticError::Domain(format!("k={k} must be < n={n}")));
    }
    if s > n || n > m || m < 2 {
        return Err(AnalyticError::Domain(format!(
            "need s <= n <= m, m >= 2 (s={s}, n={n}, m={m})"
        )));
    }
    Ok(())
}

/// Closed-form age without memory on a scalable homogeneous network, for
/// total-key and partial-key subscription alike.
///
/// A subscriber always needs `k` of the other `n - 1` key holders. A
/// nonsubscriber is selected with probability `(n - s) / (m - s)` and then
/// needs `k` of `n - 1`; otherwise it needs `k + 1` of `n`.
pub fn age_memoryless_partial(
    k: usize,
    n: usize,
    s: usize,
    m: usize,
    lambda_s: f64,
    lambda_e: f64,
    class: NodeClass,
) -> Result<AnalyticResult, AnalyticError> {
    check_partial(k, n, s, m)?;
    let selected_num = lambda_s * expected_min_orderstat_update(k, n, m, lambda_s, lambda_e)?;
    let selected_den = coeff_a(n, m, k, lambda_s, lambda_e)?;
    match class {
        NodeClass::Subscriber => AnalyticResult::new(
            selected_num / selected_den,
            Formula::MemorylessClosedFormSubscriber,
        ),
        NodeClass::Nonsubscriber => {
            if m == s {
                return Err(AnalyticError::Domain(
                    "network has no nonsubscriber nodes (s = m)".into(),
                ));
            }
            let w_sel = (n - s) as f64;
            let w_out = (m - n) as f64;
            let out_num =
                lambda_s * expected_min_orderstat_update(k + 1, n + 1, m, lambda_s, lambda_e)?;
            let out_den = coeff_a(n + 1, m, k + 1, lambda_s, lambda_e)?;
            AnalyticResult::new(
                (w_sel * selected_num + w_out * out_num) / (w_sel * selected_den + w_out * out_den),
                Formula::MemorylessClosedFormNonsubscriber,
            )
        }
    }
}

/// The same ages as [`age_memoryless_partial`], evaluated from the
/// order-statistic race of the key holders directly rather than the
/// product formulas.
pub fn age_memoryless_partial_from_races(
    k: usize,
    n: usize,
    s: usize,
    m: usize,
    lambda_s: f64,
    lambda_e: f64,
    class: NodeClass,
) -> Result<AnalyticResult, AnalyticError> {
    check_partial(k, n, s, m)?;
    check_positive("lambda_e", lambda_e)?;
    let edge = lambda_e / (m - 1) as f64;
    let selected = race_moments(&vec![edge; n - 1], k, lambda_s)?;
    match class {
        NodeClass::Subscriber => AnalyticResult::new(
            lambda_s * selected.expected_min / selected.prob_before,
            Formula::MemorylessSubscriber,
        ),
        NodeClass::Nonsubscriber => {
            if m == s {
                return Err(AnalyticError::Domain(
                    "network has no nonsubscriber nodes (s = m)".into(),
                ));
            }
            let outside = race_moments(&vec![edge; n], k + 1, lambda_s)?;
            let a0 = (n - s) as f64 / (m - s) as f64;
            let a1 = 1.0 - a0;
            let num = a0 * selected.expected_min + a1 * outside.expected_min;
            let den = a0 * selected.prob_before + a1 * outside.prob_before;
            AnalyticResult::new(lambda_s * num / den, Formula::MemorylessNonsubscriber)
        }
    }
}

/// Graph average of [`age_memoryless_partial`].
pub fn age_memoryless_graph(
    k: usize,
    n: usize,
    s: usize,
    m: usize,
    lambda_s: f64,
    lambda_e: f64,
) -> Result<AnalyticResult, AnalyticError> {
    let sub = if s > 0 {
        age_memoryless_partial(k, n, s, m, lambda_s, lambda_e, NodeClass::Subscriber)?.value
    } else {
        0.0
    };
    let non = if s < m {
        age_memoryless_partial(k, n, s, m, lambda_s, lambda_e, NodeClass::Nonsubscriber)?.value
    } else {
        0.0
    };
    AnalyticResult::new(super::graph_average(sub, non, s, m)?, Formula::GraphAverage)
}

/// Large-network limit of the memoryless ages with `n = floor(alpha m)`
/// under total-key subscription.
pub fn asymptote_memoryless(
    k: usize,
    alpha: f64,
    lambda_s: f64,
    lambda_e: f64,
    which: Population,
) -> Result<f64, AnalyticError> {
    check_alpha(alpha)?;
    check_positive("lambda_s", lambda_s)?;
    check_positive("lambda_e", lambda_e)?;
    let base = 1.0 + lambda_s / (alpha * lambda_e);
    let k = k as i32;
    Ok(match which {
        Population::Subscriber => base.powi(k) - 1.0,
        Population::Nonsubscriber => base.powi(k + 1) - 1.0,
        Population::Graph => {
            base.powi(k) * ((lambda_s + alpha * (lambda_e - lambda_s)) / (alpha * lambda_e)) - 1.0
        }
    })
}
