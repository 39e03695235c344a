use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::audit::classify;
use super::{Containment, ExperimentError};
use crate::analytic::{
    age_memory_total_key, age_memory_total_key_graph, age_memoryless_graph,
    age_memoryless_partial, bounds_memory_partial, AnalyticError, AnalyticResult, BoundPair,
    Population,
};
use crate::model::{validate_config, NetworkConfig, NodeClass, Scheme};
use crate::sim::{run_replications, Horizon, DEFAULT_UPDATES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridPoint {
    pub k: usize,
    pub n: usize,
    pub s: usize,
    pub m: usize,
}

fn default_updates() -> u64 {
    DEFAULT_UPDATES
}

fn default_replications() -> usize {
    4
}

fn default_true() -> bool {
    true
}

/// Homogeneous grid: every `(k, n, s, m)` point crossed with every gossip
/// rate and every scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub lambda_s: f64,
    pub points: Vec<GridPoint>,
    pub lambda_e: Vec<f64>,
    pub schemes: Vec<Scheme>,
    #[serde(default = "default_updates")]
    pub updates: u64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    /// When false only the analytic columns are filled.
    #[serde(default = "default_true")]
    pub simulate: bool,
}

/// Closed-form reference for one population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AnalyticEntry {
    Point(AnalyticResult),
    Bounds(BoundPair),
}

impl AnalyticEntry {
    pub fn point(&self) -> Option<f64> {
        match self {
            AnalyticEntry::Point(r) => Some(r.value),
            AnalyticEntry::Bounds(_) => None,
        }
    }

    pub fn bounds(&self) -> Option<BoundPair> {
        match self {
            AnalyticEntry::Point(_) => None,
            AnalyticEntry::Bounds(b) => Some(*b),
        }
    }
}

/// Reference value for a homogeneous point: exact ages where a closed form
/// exists, bounds for memory with partial-key subscription.
pub fn analytic_entry(
    p: GridPoint,
    lambda_s: f64,
    lambda_e: f64,
    scheme: Scheme,
    population: Population,
) -> Result<AnalyticEntry, AnalyticError> {
    let GridPoint { k, n, s, m } = p;
    let class = match population {
        Population::Subscriber if s == 0 => None,
        Population::Nonsubscriber if s == m => None,
        Population::Subscriber => Some(NodeClass::Subscriber),
        Population::Nonsubscriber => Some(NodeClass::Nonsubscriber),
        Population::Graph => None,
    };
    if population != Population::Graph && class.is_none() {
        return Err(AnalyticError::Domain(format!(
            "no {} nodes when s={s}, m={m}",
            population.as_str()
        )));
    }
    Ok(match (scheme, class) {
        (Scheme::Memory, _) if s < n => {
            AnalyticEntry::Bounds(bounds_memory_partial(k, n, s, m, lambda_s, lambda_e)?)
        }
        (Scheme::Memory, Some(c)) => {
            AnalyticEntry::Point(age_memory_total_key(k, n, m, lambda_s, lambda_e, c)?)
        }
        (Scheme::Memory, None) => {
            AnalyticEntry::Point(age_memory_total_key_graph(k, n, m, lambda_s, lambda_e)?)
        }
        (Scheme::Memoryless, Some(c)) => {
            AnalyticEntry::Point(age_memoryless_partial(k, n, s, m, lambda_s, lambda_e, c)?)
        }
        (Scheme::Memoryless, None) => {
            AnalyticEntry::Point(age_memoryless_graph(k, n, s, m, lambda_s, lambda_e)?)
        }
    })
}

/// One table row: a population at one grid point under one scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub scheme: Scheme,
    pub k: usize,
    pub n: usize,
    pub s: usize,
    pub m: usize,
    pub lambda_s: f64,
    pub lambda_e: f64,
    pub node_class: Population,
    pub analytic_value: Option<f64>,
    pub lower_bound: Option<f64>,
    pub upper_bound: Option<f64>,
    pub sim_mean: Option<f64>,
    pub sim_ci_half: Option<f64>,
    pub rel_error: Option<f64>,
    pub seed: Option<u64>,
    pub horizon_updates: Option<u64>,
    /// Set only for bound rows with a simulated mean.
    pub containment: Option<Containment>,
}

impl ComparisonRow {
    /// Row with analytic columns only.
    pub fn analytic_only(
        p: GridPoint,
        lambda_s: f64,
        lambda_e: f64,
        scheme: Scheme,
        population: Population,
        entry: AnalyticEntry,
    ) -> Self {
        ComparisonRow {
            scheme,
            k: p.k,
            n: p.n,
            s: p.s,
            m: p.m,
            lambda_s,
            lambda_e,
            node_class: population,
            analytic_value: entry.point(),
            lower_bound: entry.bounds().map(|b| b.lower),
            upper_bound: entry.bounds().map(|b| b.upper),
            sim_mean: None,
            sim_ci_half: None,
            rel_error: None,
            seed: None,
            horizon_updates: None,
            containment: None,
        }
    }

    /// Fills the simulation columns and derived error/containment fields.
    pub fn with_simulation(mut self, mean: f64, ci_half: Option<f64>, seed: u64, updates: u64) -> Self {
        self.sim_mean = Some(mean);
        self.sim_ci_half = ci_half;
        self.seed = Some(seed);
        self.horizon_updates = Some(updates);
        self.rel_error = self.analytic_value.and_then(|a| {
            if a > 0.0 {
                Some((mean - a).abs() / a)
            } else if mean == 0.0 {
                Some(0.0)
            } else {
                None
            }
        });
        if let (Some(lo), Some(hi)) = (self.lower_bound, self.upper_bound) {
            self.containment = Some(classify(mean, ci_half.unwrap_or(0.0), lo, hi));
        }
        self
    }

    pub fn grid_point(&self) -> GridPoint {
        GridPoint {
            k: self.k,
            n: self.n,
            s: self.s,
            m: self.m,
        }
    }
}

fn populations(p: GridPoint) -> Vec<Population> {
    let mut out = Vec::with_capacity(3);
    if p.s > 0 {
        out.push(Population::Subscriber);
    }
    if p.s < p.m {
        out.push(Population::Nonsubscriber);
    }
    out.push(Population::Graph);
    out
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.points.is_empty() || self.lambda_e.is_empty() || self.schemes.is_empty() {
            return Err(ExperimentError::Spec("sweep grids must be nonempty".into()));
        }
        if self.simulate && (self.replications == 0 || self.updates == 0) {
            return Err(ExperimentError::Spec(
                "simulated sweeps need at least one update and one replication".into(),
            ));
        }
        for p in &self.points {
            for &le in &self.lambda_e {
                validate_config(NetworkConfig::homogeneous(
                    p.k, p.n, p.s, p.m, self.lambda_s, le, Scheme::Memory,
                ))?;
            }
        }
        Ok(())
    }
}

/// Runs every grid point (in parallel) and returns the rows in grid order:
/// point, then gossip rate, then scheme, then population.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<ComparisonRow>, ExperimentError> {
    spec.validate()?;
    let mut jobs = Vec::new();
    for &p in &spec.points {
        for &le in &spec.lambda_e {
            for &scheme in &spec.schemes {
                jobs.push((p, le, scheme));
            }
        }
    }
    let blocks: Result<Vec<Vec<ComparisonRow>>, ExperimentError> = jobs
        .par_iter()
        .map(|&(p, le, scheme)| sweep_point(spec, p, le, scheme))
        .collect();
    Ok(blocks?.into_iter().flatten().collect())
}

fn sweep_point(
    spec: &SweepSpec,
    p: GridPoint,
    lambda_e: f64,
    scheme: Scheme,
) -> Result<Vec<ComparisonRow>, ExperimentError> {
    let pops = populations(p);
    let mut rows = Vec::with_capacity(pops.len());
    for &pop in &pops {
        let entry = analytic_entry(p, spec.lambda_s, lambda_e, scheme, pop)?;
        rows.push(ComparisonRow::analytic_only(p, spec.lambda_s, lambda_e, scheme, pop, entry));
    }
    if !spec.simulate {
        return Ok(rows);
    }
    let cfg = validate_config(NetworkConfig::homogeneous(
        p.k, p.n, p.s, p.m, spec.lambda_s, lambda_e, scheme,
    ))?;
    let rep = run_replications(&cfg, Horizon::Updates(spec.updates), spec.seed, spec.replications)?;
    let total_updates = rep.horizon_updates();
    Ok(rows
        .into_iter()
        .map(|row| {
            let pooled = rep
                .population(row.node_class)
                .copied()
                .expect("population present in both analytic and simulated output");
            row.with_simulation(pooled.mean, pooled.ci_half, spec.seed, total_updates)
        })
        .collect())
}
