//! Fixtures shared by the benchmarks.

use vaoi_core::{validate_config, NetworkConfig, Scheme, ValidatedConfig};

/// Homogeneous network with `lambda_s = 10`.
pub fn network(k: usize, n: usize, s: usize, m: usize, lambda_e: f64, scheme: Scheme) -> ValidatedConfig {
    validate_config(NetworkConfig::homogeneous(k, n, s, m, 10.0, lambda_e, scheme))
        .expect("benchmark fixtures are valid")
}

/// Heterogeneous in-rates `1, 2, ..., count`, scaled by `scale`.
pub fn ramp_rates(count: usize, scale: f64) -> Vec<f64> {
    (1..=count).map(|i| i as f64 * scale).collect()
}
