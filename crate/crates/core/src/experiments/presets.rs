use std::path::Path;

use serde::{Deserialize, Serialize};

use super::audit::{audit_bounds, AuditReport};
use super::studies::{
    convergence_study, memory_value_study, subscription_cost_study, ConvergenceSpec,
    ConvergenceTable, MemoryValueRow, MemoryValueSpec, SubscriptionCostSpec, SubscriptionCostTable,
};
use super::sweep::{run_sweep, ComparisonRow, SweepSpec};
use super::ExperimentError;

const EMBEDDED: &[(&str, &str)] = &[
    ("fig4", include_str!("../../presets/fig4.toml")),
    ("fig5", include_str!("../../presets/fig5.toml")),
    ("fig6", include_str!("../../presets/fig6.toml")),
    ("fig7", include_str!("../../presets/fig7.toml")),
    ("fig8", include_str!("../../presets/fig8.toml")),
    ("fig9", include_str!("../../presets/fig9.toml")),
    ("fig10", include_str!("../../presets/fig10.toml")),
    ("fig11", include_str!("../../presets/fig11.toml")),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Study {
    Sweep(SweepSpec),
    Convergence(ConvergenceSpec),
    MemoryValue(MemoryValueSpec),
    SubscriptionCost(SubscriptionCostSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(rename = "study")]
    pub studies: Vec<Study>,
}

impl Preset {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Spec(e.to_string()))
    }
}

/// Names of the built-in presets.
pub fn preset_names() -> Vec<&'static str> {
    EMBEDDED.iter().map(|(n, _)| *n).collect()
}

/// Looks a preset up by name: first `$AOI_PRESET_DIR/<name>.toml`, then
/// the built-in set, then `name` as a file path.
pub fn load_preset(name: &str) -> Result<Preset, ExperimentError> {
    let read = |p: &Path| {
        std::fs::read_to_string(p)
            .map_err(|e| ExperimentError::Spec(format!("{}: {e}", p.display())))
    };
    if let Ok(dir) = std::env::var("AOI_PRESET_DIR") {
        let path = Path::new(&dir).join(format!("{name}.toml"));
        if path.is_file() {
            return Preset::from_toml(&read(&path)?);
        }
    }
    if let Some((_, text)) = EMBEDDED.iter().find(|(n, _)| *n == name) {
        return Preset::from_toml(text);
    }
    let path = Path::new(name);
    if path.is_file() {
        return Preset::from_toml(&read(path)?);
    }
    Err(ExperimentError::UnknownPreset(name.to_string()))
}

/// Command-line overrides for the simulation budget of a preset.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub updates: Option<u64>,
    pub replications: Option<usize>,
    pub seed: Option<u64>,
    /// `Some(false)` turns every study analytic-only.
    pub simulate: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StudyOutput {
    Sweep {
        rows: Vec<ComparisonRow>,
        audit: AuditReport,
    },
    Convergence(ConvergenceTable),
    MemoryValue { rows: Vec<MemoryValueRow> },
    SubscriptionCost(SubscriptionCostTable),
}

impl StudyOutput {
    /// False when a hard check of the study failed.
    pub fn pass(&self) -> bool {
        match self {
            StudyOutput::Sweep { audit, .. } => audit.pass(),
            StudyOutput::Convergence(t) => t.tail_monotone,
            StudyOutput::MemoryValue { rows } => rows
                .iter()
                .all(|r| r.gap <= r.epsilon && r.gap_below.is_none_or(|g| g > r.epsilon)),
            StudyOutput::SubscriptionCost(t) => t.pass(),
        }
    }
}

impl Study {
    pub fn apply(&mut self, o: &Overrides) {
        match self {
            Study::Sweep(s) => {
                if let Some(u) = o.updates {
                    s.updates = u;
                }
                if let Some(r) = o.replications {
                    s.replications = r;
                }
                if let Some(seed) = o.seed {
                    s.seed = seed;
                }
                if let Some(sim) = o.simulate {
                    s.simulate = sim;
                }
            }
            Study::Convergence(c) => {
                if o.simulate == Some(false) {
                    c.simulate = None;
                }
                if let Some(b) = c.simulate.as_mut() {
                    if let Some(u) = o.updates {
                        b.updates = u;
                    }
                    if let Some(r) = o.replications {
                        b.replications = r;
                    }
                    if let Some(seed) = o.seed {
                        b.seed = seed;
                    }
                }
            }
            Study::MemoryValue(_) | Study::SubscriptionCost(_) => {}
        }
    }

    pub fn run(&self) -> Result<StudyOutput, ExperimentError> {
        Ok(match self {
            Study::Sweep(s) => {
                let rows = run_sweep(s)?;
                let audit = audit_bounds(&rows);
                StudyOutput::Sweep { rows, audit }
            }
            Study::Convergence(c) => StudyOutput::Convergence(convergence_study(c)?),
            Study::MemoryValue(v) => StudyOutput::MemoryValue {
                rows: memory_value_study(v)?,
            },
            Study::SubscriptionCost(c) => StudyOutput::SubscriptionCost(subscription_cost_study(c)?),
        })
    }
}

/// Runs every study of a preset in order.
pub fn run_preset(preset: &Preset, overrides: &Overrides) -> Result<Vec<StudyOutput>, ExperimentError> {
    preset
        .studies
        .iter()
        .map(|s| {
            let mut s = s.clone();
            s.apply(overrides);
            s.run()
        })
        .collect()
}
