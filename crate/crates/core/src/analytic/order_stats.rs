//! Order statistics of independent exponential clocks.
//!
//! Besides the i.i.d. closed form, this module evaluates, for independent
//! exponentials with arbitrary rates, the race between the `k`-th order
//! statistic `X` and an independent exponential deadline `U` of rate `d`:
//!
//! * `E[min(X, U)]` (the plain mean `E[X]` when `d = 0`),
//! * `P(X <= U)` (one when `d = 0`).
//!
//! Two independent routes are provided. [`race_moments_subsets`] walks the
//! lattice of "already fired" edge subsets as a continuous-time Markov chain
//! and is exact; it is used up to [`MAX_SUBSET_EDGES`] edges.
//! [`race_moments_quadrature`] integrates the survival function and the
//! density of `X` against `exp(-d t)`.

use super::quadrature::integrate_half_line;
use super::AnalyticError;

/// Largest edge count handled by subset enumeration.
pub const MAX_SUBSET_EDGES: usize = 20;

/// Absolute tolerance for quadrature of survival functions and densities.
pub const QUADRATURE_TOL: f64 = 1e-10;

/// `sum_{i=a}^{b} 1/i`, summed from the small index upward. `b = a - 1`
/// gives the empty sum.
pub fn harmonic_sum(a: usize, b: usize) -> f64 {
    debug_assert!(a >= 1, "harmonic_sum needs a >= 1");
    (a.max(1)..=b).map(|i| 1.0 / i as f64).sum()
}

/// Mean of the `k`-th smallest of `n` i.i.d. exponentials with rate `rate`:
/// `(H_n - H_{n-k}) / rate`.
pub fn exp_order_stat_mean(k: usize, n: usize, rate: f64) -> Result<f64, AnalyticError> {
    if k > n {
        return Err(AnalyticError::Domain(format!(
            "order statistic k={k} exceeds sample size n={n}"
        )));
    }
    if !(rate.is_finite() && rate > 0.0) {
        return Err(AnalyticError::Domain(format!("rate must be positive, got {rate}")));
    }
    if k == 0 {
        return Ok(0.0);
    }
    Ok(harmonic_sum(n - k + 1, n) / rate)
}

/// Outcome of the race between the `k`-th order statistic and a deadline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaceMoments {
    /// `E[min(X, U)]`
    pub expected_min: f64,
    /// `P(X <= U)`
    pub prob_before: f64,
}

fn check_rates(rates: &[f64], k: usize, discount: f64) -> Result<(), AnalyticError> {
    if k > rates.len() {
        return Err(AnalyticError::Domain(format!(
            "order statistic k={k} exceeds the {} available clocks",
            rates.len()
        )));
    }
    if let Some(r) = rates.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(AnalyticError::Domain(format!("edge rate {r} must be positive")));
    }
    if !(discount.is_finite() && discount >= 0.0) {
        return Err(AnalyticError::Domain(format!(
            "deadline rate {discount} must be nonnegative"
        )));
    }
    Ok(())
}

/// Exact race moments by enumerating the subsets of fired clocks.
///
/// Starting from the empty set, the chain leaves subset `A` at rate
/// `Lambda - lambda_A + d`; the time spent in each transient subset (those
/// with fewer than `k` members) adds up to `E[min(X, U)]`, and the
/// probability of reaching a `k`-subset is `P(X <= U)`. All terms are
/// positive, so there is no cancellation.
pub fn race_moments_subsets(
    rates: &[f64],
    k: usize,
    discount: f64,
) -> Result<RaceMoments, AnalyticError> {
    check_rates(rates, k, discount)?;
    let n = rates.len();
    if n > MAX_SUBSET_EDGES {
        return Err(AnalyticError::Domain(format!(
            "subset enumeration supports at most {MAX_SUBSET_EDGES} clocks, got {n}"
        )));
    }
    if k == 0 {
        return Ok(RaceMoments {
            expected_min: 0.0,
            prob_before: 1.0,
        });
    }
    let total: f64 = rates.iter().sum();
    let mut reach = vec![0.0f64; 1 << n];
    let mut subset_rate = vec![0.0f64; 1 << n];
    reach[0] = 1.0;
    let mut expected = 0.0;
    let mut prob = 0.0;
    // A | bit > A numerically, so every predecessor is final before a subset
    // is expanded.
    for mask in 0usize..(1 << n) {
        let p = reach[mask];
        if p == 0.0 {
            continue;
        }
        let size = mask.count_ones() as usize;
        if size == k {
            prob += p;
            continue;
        }
        let exit = total - subset_rate[mask] + discount;
        expected += p / exit;
        for (i, &r) in rates.iter().enumerate() {
            let bit = 1 << i;
            if mask & bit == 0 {
                let next = mask | bit;
                reach[next] += p * r / exit;
                subset_rate[next] = subset_rate[mask] + r;
            }
        }
    }
    Ok(RaceMoments {
        expected_min: expected,
        prob_before: if discount == 0.0 { 1.0 } else { prob },
    })
}

/// Distribution of the number of fired clocks at time `t`, truncated to
/// counts `0..len`.
fn fired_count_dist(rates: &[f64], t: f64, len: usize) -> Vec<f64> {
    let mut dist = vec![0.0; len];
    if len == 0 {
        return dist;
    }
    dist[0] = 1.0;
    for &r in rates {
        let p = -(-r * t).exp_m1();
        let q = 1.0 - p;
        for j in (0..len).rev() {
            let carry = if j > 0 { dist[j - 1] * p } else { 0.0 };
            dist[j] = dist[j] * q + carry;
        }
    }
    dist
}

/// `P(X_(k) > t)`: fewer than `k` clocks have fired by `t`.
pub fn order_stat_survival(rates: &[f64], k: usize, t: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    fired_count_dist(rates, t, k).iter().sum()
}

/// Density of `X_(k)` at `t`:
/// `sum_i rate_i exp(-rate_i t) P(exactly k-1 of the others fired)`.
pub fn order_stat_density(rates: &[f64], k: usize, t: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let n = rates.len();
    // prefix[i] = truncated fired-count distribution of clocks 0..i,
    // suffix[i] = the same for clocks i..n.
    let mut prefix = vec![vec![0.0; k]; n + 1];
    prefix[0][0] = 1.0;
    for i in 0..n {
        let p = -(-rates[i] * t).exp_m1();
        for j in 0..k {
            let carry = if j > 0 { prefix[i][j - 1] * p } else { 0.0 };
            prefix[i + 1][j] = prefix[i][j] * (1.0 - p) + carry;
        }
    }
    let mut suffix = vec![vec![0.0; k]; n + 1];
    suffix[n][0] = 1.0;
    for i in (0..n).rev() {
        let p = -(-rates[i] * t).exp_m1();
        for j in 0..k {
            let carry = if j > 0 { suffix[i + 1][j - 1] * p } else { 0.0 };
            suffix[i][j] = suffix[i + 1][j] * (1.0 - p) + carry;
        }
    }
    let mut density = 0.0;
    for i in 0..n {
        let others: f64 = (0..k)
            .map(|a| prefix[i][a] * suffix[i + 1][k - 1 - a])
            .sum();
        density += rates[i] * (-rates[i] * t).exp() * others;
    }
    density
}

/// Race moments by quadrature of the survival function and the density.
pub fn race_moments_quadrature(
    rates: &[f64],
    k: usize,
    discount: f64,
) -> Result<RaceMoments, AnalyticError> {
    check_rates(rates, k, discount)?;
    if k == 0 {
        return Ok(RaceMoments {
            expected_min: 0.0,
            prob_before: 1.0,
        });
    }
    let n = rates.len();
    let mean_rate = rates.iter().sum::<f64>() / n as f64;
    let scale = harmonic_sum(n - k + 1, n) / mean_rate;
    let expected_min = integrate_half_line(
        |t| order_stat_survival(rates, k, t) * (-discount * t).exp(),
        scale,
        QUADRATURE_TOL,
    );
    let prob_before = if discount == 0.0 {
        1.0
    } else {
        integrate_half_line(
            |t| order_stat_density(rates, k, t) * (-discount * t).exp(),
            scale,
            QUADRATURE_TOL,
        )
    };
    Ok(RaceMoments {
        expected_min,
        prob_before,
    })
}

/// Race moments, exact for up to [`MAX_SUBSET_EDGES`] clocks and by
/// quadrature beyond.
pub fn race_moments(rates: &[f64], k: usize, discount: f64) -> Result<RaceMoments, AnalyticError> {
    if rates.len() <= MAX_SUBSET_EDGES {
        race_moments_subsets(rates, k, discount)
    } else {
        race_moments_quadrature(rates, k, discount)
    }
}
