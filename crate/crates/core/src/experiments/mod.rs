//! Parameter sweeps comparing simulation with closed forms, bound audits
//! and the analytic studies behind the shipped presets.

mod audit;
mod presets;
mod studies;
mod sweep;

use thiserror::Error;

pub use audit::{audit_bounds, AuditEntry, AuditReport, Containment, AUDIT_CI_FACTOR};
pub use presets::{load_preset, preset_names, run_preset, Overrides, Preset, Study, StudyOutput};
pub use studies::{
    convergence_study, memory_value_study, subscription_cost_study, ConvergenceRow,
    ConvergenceSpec, ConvergenceTable, MemoryValueRow, MemoryValueSpec, SimBudget,
    SubscriptionCostRow, SubscriptionCostSpec, SubscriptionCostTable,
};
pub use sweep::{analytic_entry, run_sweep, AnalyticEntry, ComparisonRow, GridPoint, SweepSpec};

use crate::analytic::AnalyticError;
use crate::model::ConfigError;
use crate::sim::SimError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error("simulation failed: {0}")]
    Sim(#[from] SimError),
    #[error("invalid study: {0}")]
    Spec(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}
