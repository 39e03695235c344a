//! Version age of information for k-out-of-n coded updates spreading over
//! gossip networks.

pub mod analytic;
pub mod experiments;
pub mod io;
pub mod model;
pub mod sim;

pub use model::{
    classify_network, validate_config, ConfigError, EdgeRates, KeyToken, NetworkConfig,
    NetworkType, NodeClass, Scheme, ValidatedConfig,
};
