use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::analytic::{
    age_memory_total_key_graph, age_memoryless_graph, age_memoryless_partial, asymptote_memory,
    asymptote_memoryless, critical_gossip_rate, CriticalRateQuery, Population,
};
use crate::model::{validate_config, NetworkConfig, NodeClass, Scheme};
use crate::sim::{run_replications, Horizon};

/// Simulation budget attached to an analytic study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimBudget {
    pub updates: u64,
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
}

/// Total-key networks growing as `n = floor(alpha m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSpec {
    pub alpha: f64,
    pub k: usize,
    pub lambda_s: f64,
    pub lambda_e: f64,
    pub m: Vec<usize>,
    pub scheme: Scheme,
    #[serde(default)]
    pub simulate: Option<SimBudget>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub m: usize,
    pub n: usize,
    /// Finite-network graph average.
    pub analytic: f64,
    pub asymptote: f64,
    /// `|analytic - asymptote|`.
    pub gap: f64,
    pub sim_mean: Option<f64>,
    pub sim_ci_half: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub spec: ConvergenceSpec,
    pub rows: Vec<ConvergenceRow>,
    /// Gap nonincreasing over the last three sizes.
    pub tail_monotone: bool,
}

/// Finite-`m` graph average next to its large-network limit for each `m`.
pub fn convergence_study(spec: &ConvergenceSpec) -> Result<ConvergenceTable, ExperimentError> {
    if spec.m.is_empty() || spec.m.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ExperimentError::Spec("m sequence must be nonempty and increasing".into()));
    }
    let sizes: Vec<(usize, usize)> = spec
        .m
        .iter()
        .map(|&m| (m, (spec.alpha * m as f64).floor() as usize))
        .collect();
    if let Some(&(m, n)) = sizes.iter().find(|&&(_, n)| n < spec.k + 1) {
        return Err(ExperimentError::Spec(format!(
            "n = floor(alpha m) = {n} at m = {m} is below k + 1 = {}",
            spec.k + 1
        )));
    }
    let asymptote = match spec.scheme {
        Scheme::Memory => asymptote_memory(spec.k, spec.alpha, spec.lambda_s, spec.lambda_e)?,
        Scheme::Memoryless => asymptote_memoryless(
            spec.k,
            spec.alpha,
            spec.lambda_s,
            spec.lambda_e,
            Population::Graph,
        )?,
    };
    let rows: Result<Vec<ConvergenceRow>, ExperimentError> = sizes
        .par_iter()
        .map(|&(m, n)| {
            let (k, ls, le) = (spec.k, spec.lambda_s, spec.lambda_e);
            let analytic = match spec.scheme {
                Scheme::Memory => age_memory_total_key_graph(k, n, m, ls, le)?.value,
                Scheme::Memoryless => age_memoryless_graph(k, n, n, m, ls, le)?.value,
            };
            let (sim_mean, sim_ci_half) = match spec.simulate {
                Some(b) => {
                    let cfg = validate_config(NetworkConfig::homogeneous(k, n, n, m, ls, le, spec.scheme))?;
                    let rep = run_replications(&cfg, Horizon::Updates(b.updates), b.seed, b.replications)?;
                    (Some(rep.graph.mean), rep.graph.ci_half)
                }
                None => (None, None),
            };
            Ok(ConvergenceRow {
                m,
                n,
                analytic,
                asymptote,
                gap: (analytic - asymptote).abs(),
                sim_mean,
                sim_ci_half,
            })
        })
        .collect();
    let rows = rows?;
    let tail = &rows[rows.len().saturating_sub(3)..];
    let tail_monotone = tail.windows(2).all(|w| w[1].gap <= w[0].gap);
    Ok(ConvergenceTable {
        spec: spec.clone(),
        rows,
        tail_monotone,
    })
}

/// Full-subscription memory critical rates over a `k` grid and margins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryValueSpec {
    pub n: usize,
    pub lambda_s: f64,
    pub k: Vec<usize>,
    pub epsilon: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryValueRow {
    pub k: usize,
    pub n: usize,
    pub epsilon: f64,
    pub rate: f64,
    /// Gap at `rate`.
    pub gap: f64,
    /// Gap at `0.99 * rate`; `None` when the rate is 0.
    pub gap_below: Option<f64>,
    pub upper_bound: bool,
}

/// Rows ordered by `k`, then by the margins in the order given.
pub fn memory_value_study(spec: &MemoryValueSpec) -> Result<Vec<MemoryValueRow>, ExperimentError> {
    let mut out = Vec::with_capacity(spec.k.len() * spec.epsilon.len());
    for &k in &spec.k {
        for &epsilon in &spec.epsilon {
            let q = CriticalRateQuery {
                k,
                n: spec.n,
                s: spec.n,
                m: spec.n,
                lambda_s: spec.lambda_s,
                epsilon,
            };
            let r = critical_gossip_rate(&q)?;
            let gap_below = if r.rate > 0.0 {
                Some(q.gap(0.99 * r.rate)?)
            } else {
                None
            };
            out.push(MemoryValueRow {
                k,
                n: spec.n,
                epsilon,
                rate: r.rate,
                gap: r.gap,
                gap_below,
                upper_bound: r.upper_bound,
            });
        }
    }
    Ok(out)
}

/// Memoryless class ages as the subscriber count varies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubscriptionCostSpec {
    pub k: usize,
    pub n: usize,
    pub lambda_s: f64,
    pub lambda_e: f64,
    pub s: Vec<usize>,
    pub m: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubscriptionCostRow {
    pub s: usize,
    pub m: usize,
    pub subscriber: Option<f64>,
    pub nonsubscriber: Option<f64>,
    pub graph: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubscriptionCostTable {
    pub rows: Vec<SubscriptionCostRow>,
    /// Subscriber age identical across `s` at every `m`.
    pub subscriber_constant: bool,
    /// Nonsubscriber age strictly increasing in `s` at every `m`.
    pub nonsubscriber_increasing: bool,
}

impl SubscriptionCostTable {
    pub fn pass(&self) -> bool {
        self.subscriber_constant && self.nonsubscriber_increasing
    }
}

/// Rows ordered by `m`, then by `s`.
pub fn subscription_cost_study(
    spec: &SubscriptionCostSpec,
) -> Result<SubscriptionCostTable, ExperimentError> {
    if spec.s.is_empty() || spec.m.is_empty() {
        return Err(ExperimentError::Spec("s and m grids must be nonempty".into()));
    }
    let (k, n, ls, le) = (spec.k, spec.n, spec.lambda_s, spec.lambda_e);
    let mut rows = Vec::new();
    let mut subscriber_constant = true;
    let mut nonsubscriber_increasing = true;
    for &m in &spec.m {
        let mut prev_sub: Option<f64> = None;
        let mut prev_non: Option<f64> = None;
        for &s in &spec.s {
            validate_config(NetworkConfig::homogeneous(k, n, s, m, ls, le, Scheme::Memoryless))?;
            let subscriber = (s > 0)
                .then(|| age_memoryless_partial(k, n, s, m, ls, le, NodeClass::Subscriber))
                .transpose()?
                .map(|r| r.value);
            let nonsubscriber = (s < m)
                .then(|| age_memoryless_partial(k, n, s, m, ls, le, NodeClass::Nonsubscriber))
                .transpose()?
                .map(|r| r.value);
            let graph = age_memoryless_graph(k, n, s, m, ls, le)?.value;
            if let (Some(a), Some(b)) = (prev_sub, subscriber) {
                subscriber_constant &= a == b;
            }
            if let (Some(a), Some(b)) = (prev_non, nonsubscriber) {
                nonsubscriber_increasing &= b > a;
            }
            prev_sub = subscriber.or(prev_sub);
            prev_non = nonsubscriber.or(prev_non);
            rows.push(SubscriptionCostRow {
                s,
                m,
                subscriber,
                nonsubscriber,
                graph,
            });
        }
    }
    Ok(SubscriptionCostTable {
        rows,
        subscriber_constant,
        nonsubscriber_increasing,
    })
}
