//! Network configuration, validation and node classification.
//!
//! Receivers are labeled `0..m`. Indices `0..s` are subscribers and
//! `s..m` are nonsubscribers, so simulated and analytic per-class
//! statistics line up without any remapping.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Forwarding scheme used by the receivers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Nodes keep every key received from the source and forward all of
    /// them that were not yet sent on the activated edge.
    Memory,
    /// Nodes only keep (and forward) the key of the current source version.
    Memoryless,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Memory => "memory",
            Scheme::Memoryless => "memoryless",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "memory" => Ok(Scheme::Memory),
            "memoryless" => Ok(Scheme::Memoryless),
            other => Err(format!("unknown scheme `{other}` (expected memory|memoryless)")),
        }
    }
}

/// Gossip rates between receivers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EdgeRates {
    /// Fully connected receiver graph; every directed edge fires at
    /// `lambda_e / (m - 1)`, so each receiver gossips at total rate `lambda_e`.
    Homogeneous { lambda_e: f64 },
    /// Explicit directed rate matrix: `matrix[i][j]` is the rate of `i -> j`.
    /// Zero entries mean "no edge".
    Heterogeneous { matrix: Vec<Vec<f64>> },
}

/// One experiment point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Keys needed beyond the first; decoding takes `k + 1` distinct keys.
    pub k: usize,
    /// Keys generated per update.
    pub n: usize,
    /// Number of subscriber nodes.
    pub s: usize,
    /// Number of receiver nodes.
    pub m: usize,
    pub lambda_s: f64,
    pub edge_rates: EdgeRates,
    pub scheme: Scheme,
}

impl NetworkConfig {
    /// Homogeneous (scalable) network with the given gossip rate.
    pub fn homogeneous(
        k: usize,
        n: usize,
        s: usize,
        m: usize,
        lambda_s: f64,
        lambda_e: f64,
        scheme: Scheme,
    ) -> Self {
        NetworkConfig {
            k,
            n,
            s,
            m,
            lambda_s,
            edge_rates: EdgeRates::Homogeneous { lambda_e },
            scheme,
        }
    }

    /// Gossip rate `lambda_e` when the network is homogeneous.
    pub fn lambda_e(&self) -> Option<f64> {
        match self.edge_rates {
            EdgeRates::Homogeneous { lambda_e } => Some(lambda_e),
            EdgeRates::Heterogeneous { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("invalid counts: {0}")]
    InvalidCounts(String),
    #[error("rate must be strictly positive and finite: {0}")]
    NonpositiveRate(String),
    #[error("infeasible topology: receiver {node} has in-degree {in_degree}, needs at least {required}")]
    InfeasibleTopology {
        node: usize,
        in_degree: usize,
        required: usize,
    },
}

/// Table of the three network types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NetworkType {
    /// `m = n = s`
    FullSubscription,
    /// `m > n = s`
    TotalKeySubscription,
    /// `m > n > s`
    PartialKeySubscription,
}

impl NetworkType {
    pub fn as_str(self) -> &'static str {
        match self {
            NetworkType::FullSubscription => "full_subscription",
            NetworkType::TotalKeySubscription => "total_key_subscription",
            NetworkType::PartialKeySubscription => "partial_key_subscription",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeClass {
    Subscriber,
    Nonsubscriber,
}

impl NodeClass {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeClass::Subscriber => "subscriber",
            NodeClass::Nonsubscriber => "nonsubscriber",
        }
    }
}

impl std::str::FromStr for NodeClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "subscriber" | "sub" => Ok(NodeClass::Subscriber),
            "nonsubscriber" | "nonsub" => Ok(NodeClass::Nonsubscriber),
            other => Err(format!("unknown node class `{other}`")),
        }
    }
}

/// A key of one update. Keys are opaque: only `(version, key_id)` matters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct KeyToken {
    pub version: u64,
    pub key_id: u32,
}

/// A configuration that passed [`validate_config`]. Immutable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidatedConfig {
    cfg: NetworkConfig,
    network_type: NetworkType,
}

impl ValidatedConfig {
    pub fn config(&self) -> &NetworkConfig {
        &self.cfg
    }

    pub fn network_type(&self) -> NetworkType {
        self.network_type
    }

    pub fn k(&self) -> usize {
        self.cfg.k
    }

    pub fn n(&self) -> usize {
        self.cfg.n
    }

    pub fn s(&self) -> usize {
        self.cfg.s
    }

    pub fn m(&self) -> usize {
        self.cfg.m
    }

    pub fn lambda_s(&self) -> f64 {
        self.cfg.lambda_s
    }

    pub fn scheme(&self) -> Scheme {
        self.cfg.scheme
    }

    /// Distinct keys required to decode a version.
    pub fn decode_threshold(&self) -> usize {
        self.cfg.k + 1
    }

    pub fn node_class(&self, node: usize) -> NodeClass {
        if node < self.cfg.s {
            NodeClass::Subscriber
        } else {
            NodeClass::Nonsubscriber
        }
    }

    /// Rate of the directed edge `from -> to` (0 when absent).
    pub fn edge_rate(&self, from: usize, to: usize) -> f64 {
        if from == to {
            return 0.0;
        }
        match &self.cfg.edge_rates {
            EdgeRates::Homogeneous { lambda_e } => lambda_e / (self.cfg.m - 1) as f64,
            EdgeRates::Heterogeneous { matrix } => matrix[from][to],
        }
    }

    /// Rates of every edge entering `node`, as `(sender, rate)`.
    pub fn in_edges(&self, node: usize) -> Vec<(usize, f64)> {
        (0..self.cfg.m)
            .filter_map(|i| {
                let r = self.edge_rate(i, node);
                (r > 0.0).then_some((i, r))
            })
            .collect()
    }

    /// Sum of all receiver-to-receiver gossip rates.
    pub fn total_gossip_rate(&self) -> f64 {
        match &self.cfg.edge_rates {
            EdgeRates::Homogeneous { lambda_e } => lambda_e * self.cfg.m as f64,
            EdgeRates::Heterogeneous { matrix } => matrix.iter().flatten().sum(),
        }
    }

    /// Returns the config with a different scheme; the scheme does not take
    /// part in validation.
    pub fn with_scheme(&self, scheme: Scheme) -> ValidatedConfig {
        let mut out = self.clone();
        out.cfg.scheme = scheme;
        out
    }
}

fn check_rate(name: &str, rate: f64) -> Result<(), ConfigError> {
    if rate.is_finite() && rate > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::NonpositiveRate(format!("{name} = {rate}")))
    }
}

/// Checks every invariant of a [`NetworkConfig`].
///
/// Feasibility counts in-edges among receivers only; the source link is
/// modeled separately through the per-update key holder set. A receiver
/// needs at least `k + 1` in-neighbors.
pub fn validate_config(cfg: NetworkConfig) -> Result<ValidatedConfig, ConfigError> {
    let NetworkConfig { k, n, s, m, .. } = cfg;
    if n == 0 || m == 0 {
        return Err(ConfigError::InvalidCounts(format!(
            "n and m must be positive (n={n}, m={m})"
        )));
    }
    if k >= n {
        return Err(ConfigError::InvalidCounts(format!("k={k} must be < n={n}")));
    }
    if s > n {
        return Err(ConfigError::InvalidCounts(format!("s={s} must be <= n={n}")));
    }
    if n > m {
        return Err(ConfigError::InvalidCounts(format!("n={n} must be <= m={m}")));
    }
    if m < 2 {
        return Err(ConfigError::InvalidCounts(format!(
            "at least two receivers are needed for gossip (m={m})"
        )));
    }
    if m == n && s < n {
        // Every receiver would be a key holder, yet some are nonsubscribers:
        // the table of network types has no entry for that.
        return Err(ConfigError::InvalidCounts(format!(
            "m = n = {m} requires s = n (got s={s})"
        )));
    }
    check_rate("lambda_s", cfg.lambda_s)?;
    let required = k + 1;
    match &cfg.edge_rates {
        EdgeRates::Homogeneous { lambda_e } => {
            check_rate("lambda_e", *lambda_e)?;
            if m - 1 < required {
                return Err(ConfigError::InfeasibleTopology {
                    node: 0,
                    in_degree: m - 1,
                    required,
                });
            }
        }
        EdgeRates::Heterogeneous { matrix } => {
            if matrix.len() != m || matrix.iter().any(|row| row.len() != m) {
                return Err(ConfigError::InvalidCounts(format!(
                    "rate matrix must be {m}x{m}"
                )));
            }
            for (i, row) in matrix.iter().enumerate() {
                for (j, &r) in row.iter().enumerate() {
                    if i == j {
                        if r != 0.0 {
                            return Err(ConfigError::NonpositiveRate(format!(
                                "diagonal entry [{i}][{i}] = {r} must be zero"
                            )));
                        }
                    } else if !(r.is_finite() && r >= 0.0) {
                        return Err(ConfigError::NonpositiveRate(format!(
                            "entry [{i}][{j}] = {r} must be finite and nonnegative"
                        )));
                    }
                }
            }
            for j in 0..m {
                let in_degree = matrix.iter().filter(|row| row[j] > 0.0).count();
                if in_degree < required {
                    return Err(ConfigError::InfeasibleTopology {
                        node: j,
                        in_degree,
                        required,
                    });
                }
            }
        }
    }
    let network_type = if m == n {
        NetworkType::FullSubscription
    } else if n == s {
        NetworkType::TotalKeySubscription
    } else {
        NetworkType::PartialKeySubscription
    };
    Ok(ValidatedConfig { cfg, network_type })
}

/// Network type of a validated configuration.
pub fn classify_network(cfg: &ValidatedConfig) -> NetworkType {
    cfg.network_type
}
