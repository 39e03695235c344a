use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::accumulator::CycleSummary;
use super::engine::{EventCounts, NodeCounts, RunOutput};
use super::SimError;
use crate::model::{NodeClass, Scheme, ValidatedConfig};

/// Batches used for the confidence interval of one run.
pub const BATCHES: usize = 32;

/// Time-average age of one node population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    /// Mean of the per-node time averages.
    pub mean: f64,
    /// 95% half-width from batch means; `None` when the post-warm-up horizon
    /// is shorter than one update per batch.
    pub ci_half: Option<f64>,
    pub batch_means: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeStats {
    pub node: usize,
    pub class: NodeClass,
    /// Age integral over completed cycles divided by their total length.
    pub mean: f64,
    /// Age integral over the first-to-last cycle boundary window.
    pub window_integral: f64,
    pub window_length: f64,
    pub cycles: CycleSummary,
    pub counts: NodeCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub seed: u64,
    pub scheme: Scheme,
    pub subscriber: Option<ClassStats>,
    pub nonsubscriber: Option<ClassStats>,
    pub graph: ClassStats,
    pub nodes: Vec<NodeStats>,
    pub counts: EventCounts,
    pub horizon_time: f64,
    pub horizon_updates: u64,
    /// Update index where batch-mean measurement starts.
    pub warmup_updates: u64,
}

impl SimStats {
    pub fn class(&self, class: NodeClass) -> Option<&ClassStats> {
        match class {
            NodeClass::Subscriber => self.subscriber.as_ref(),
            NodeClass::Nonsubscriber => self.nonsubscriber.as_ref(),
        }
    }
}

/// Two-sided 95% Student t quantile.
pub(crate) fn t_quantile(df: usize) -> f64 {
    StudentsT::new(0.0, 1.0, df as f64)
        .map(|t| t.inverse_cdf(0.975))
        .unwrap_or(f64::NAN)
}

/// 95% half-width of the mean of `xs` treated as i.i.d.
pub(crate) fn half_width(xs: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Some(t_quantile(n - 1) * (var / n as f64).sqrt())
}

pub(crate) fn summarize(
    cfg: &ValidatedConfig,
    seed: u64,
    out: RunOutput,
) -> Result<SimStats, SimError> {
    let m = cfg.m();
    let s = cfg.s();
    let mut nodes = Vec::with_capacity(m);
    let mut warmup = 0u64;
    for (j, acc) in out.accs.iter().enumerate() {
        let (len, area) = acc.window().ok_or(SimError::HorizonTooShort { node: j })?;
        warmup = warmup.max(acc.first_cut_update().unwrap_or(0));
        nodes.push(NodeStats {
            node: j,
            class: cfg.node_class(j),
            mean: area / len,
            window_integral: area,
            window_length: len,
            cycles: *acc.cycles(),
            counts: out.node_counts[j],
        });
    }

    let snaps = &out.snapshots;
    let last = snaps.len() - 1;
    let start = warmup as usize;
    let bounds: Option<Vec<usize>> = (last >= start + BATCHES)
        .then(|| (0..=BATCHES).map(|b| start + b * (last - start) / BATCHES).collect());
    let batch = |weights: [f64; 2], count: usize| -> Vec<f64> {
        let Some(bounds) = &bounds else {
            return Vec::new();
        };
        bounds
            .windows(2)
            .map(|w| {
                let (a, b) = (&snaps[w[0]], &snaps[w[1]]);
                let area = weights[0] * (b.integral[0] - a.integral[0])
                    + weights[1] * (b.integral[1] - a.integral[1]);
                area / (count as f64 * (b.time - a.time))
            })
            .collect()
    };
    let class_stats = |members: &[NodeStats], weights: [f64; 2]| -> ClassStats {
        let mean = members.iter().map(|n| n.mean).sum::<f64>() / members.len() as f64;
        let batch_means = batch(weights, members.len());
        ClassStats {
            mean,
            ci_half: half_width(&batch_means),
            batch_means,
        }
    };

    let subscriber = (s > 0).then(|| class_stats(&nodes[..s], [1.0, 0.0]));
    let nonsubscriber = (s < m).then(|| class_stats(&nodes[s..], [0.0, 1.0]));
    let graph = class_stats(&nodes, [1.0, 1.0]);

    Ok(SimStats {
        seed,
        scheme: cfg.scheme(),
        subscriber,
        nonsubscriber,
        graph,
        nodes,
        counts: out.counts,
        horizon_time: out.end_time,
        horizon_updates: out.counts.updates,
        warmup_updates: warmup,
    })
}
