use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::IoError;
use crate::model::{validate_config, EdgeRates, NetworkConfig, Scheme, ValidatedConfig};

/// On-disk configuration. `scheme` may be left out and supplied on the
/// command line instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub k: usize,
    pub n: usize,
    pub s: usize,
    pub m: usize,
    pub lambda_s: f64,
    pub edge_rates: EdgeRates,
    #[serde(default)]
    pub scheme: Option<Scheme>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Resolves the scheme (command line first) and validates.
    pub fn resolve(self, scheme: Option<Scheme>) -> Result<ValidatedConfig, IoError> {
        let scheme = scheme.or(self.scheme).ok_or(IoError::MissingScheme)?;
        Ok(validate_config(NetworkConfig {
            k: self.k,
            n: self.n,
            s: self.s,
            m: self.m,
            lambda_s: self.lambda_s,
            edge_rates: self.edge_rates,
            scheme,
        })?)
    }
}

/// Reads, parses and validates a configuration file.
pub fn load_config(path: &Path, scheme: Option<Scheme>) -> Result<ValidatedConfig, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::Read {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let file = ConfigFile::parse(&text).map_err(|message| IoError::Parse {
        path: path.to_path_buf(),
        message,
    })?;
    file.resolve(scheme)
}

/// Hex SHA-256 of the canonical JSON form of `value` (object keys sorted).
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let canonical = serde_json::to_value(value)
        .and_then(|v| serde_json::to_string(&v))
        .unwrap_or_default();
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NetworkType;

    const HOMOGENEOUS: &str = r#"
k = 2
n = 6
s = 6
m = 10
lambda_s = 10.0
scheme = "memory"

[edge_rates]
kind = "homogeneous"
lambda_e = 100.0
"#;

    #[test]
    fn parses_homogeneous() {
        let cfg = ConfigFile::parse(HOMOGENEOUS).unwrap().resolve(None).unwrap();
        assert_eq!(cfg.network_type(), NetworkType::TotalKeySubscription);
        assert_eq!(cfg.config().lambda_e(), Some(100.0));
        let cfg = ConfigFile::parse(HOMOGENEOUS)
            .unwrap()
            .resolve(Some(Scheme::Memoryless))
            .unwrap();
        assert_eq!(cfg.scheme(), Scheme::Memoryless);
    }

    #[test]
    fn parses_heterogeneous() {
        let text = r#"
k = 1
n = 3
s = 3
m = 3
lambda_s = 1.0

[edge_rates]
kind = "heterogeneous"
matrix = [[0.0, 1.0, 2.0], [1.0, 0.0, 1.0], [3.0, 1.0, 0.0]]
"#;
        let file = ConfigFile::parse(text).unwrap();
        assert!(matches!(file.clone().resolve(None), Err(IoError::MissingScheme)));
        let cfg = file.resolve(Some(Scheme::Memory)).unwrap();
        assert_eq!(cfg.edge_rate(2, 0), 3.0);
    }

    #[test]
    fn rejects_unknown_fields_and_bad_values() {
        assert!(ConfigFile::parse(&format!("extra = 1\n{HOMOGENEOUS}")).is_err());
        let bad = HOMOGENEOUS.replace("k = 2", "k = 6");
        assert!(matches!(
            ConfigFile::parse(&bad).unwrap().resolve(None),
            Err(IoError::Config(_))
        ));
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ConfigFile::parse(HOMOGENEOUS).unwrap();
        let mut b = a.clone();
        assert_eq!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
        b.lambda_s = 11.0;
        assert_ne!(config_hash(&a), config_hash(&b));
    }
}
