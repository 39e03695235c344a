use std::fmt;

use serde_json::json;
use vaoi_core::analytic::{
    age_memory_full, age_memoryless_full, critical_gossip_rate, AnalyticError, CriticalRateQuery,
    InRates, Population,
};
use vaoi_core::experiments::{
    analytic_entry, load_preset, ComparisonRow, ExperimentError, GridPoint, Overrides, Study,
    StudyOutput,
};
use vaoi_core::io::{
    load_config, ConfigFile, CriticalRateRow, IoError, NodeRow, Payload, ResultEnvelope,
    ValidationSummary,
};
use vaoi_core::sim::{replication_seed, run_replications, trace_events, Horizon, SimError};
use vaoi_core::{
    validate_config, ConfigError, EdgeRates, NetworkConfig, NetworkType, Scheme, ValidatedConfig,
};

use crate::{AnalyticArgs, CriticalArgs, SimulateArgs, SweepArgs, TraceArgs, ValidateArgs};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config(String),
    /// Output was produced but a hard check failed.
    Audit(String),
    Other(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Other(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Config(_) => 3,
            CliError::Audit(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Config(m) => write!(f, "{m}"),
            CliError::Audit(m) => write!(f, "audit failed: {m}"),
            CliError::Other(m) => write!(f, "{m}"),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Write { .. } => CliError::Other(e.to_string()),
            IoError::MissingScheme => CliError::Usage(format!("{e}; pass --scheme")),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(format!("invalid configuration: {e}"))
    }
}

impl From<AnalyticError> for CliError {
    fn from(e: AnalyticError) -> Self {
        match e {
            AnalyticError::Domain(_) => CliError::Config(e.to_string()),
            _ => CliError::Other(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InvalidHorizon(_) => CliError::Usage(e.to_string()),
            _ => CliError::Other(e.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Analytic(a) => a.into(),
            ExperimentError::Sim(s) => s.into(),
            other => CliError::Config(other.to_string()),
        }
    }
}

/// Envelope plus a failure to report after the output is written.
pub type Done = (ResultEnvelope, Option<CliError>);

fn populations(s: usize, m: usize) -> Vec<Population> {
    let mut out = Vec::new();
    if s > 0 {
        out.push(Population::Subscriber);
    }
    if s < m {
        out.push(Population::Nonsubscriber);
    }
    out.push(Population::Graph);
    out
}

fn comparison_rows(
    cfg: &ValidatedConfig,
    lambda_e: f64,
    only: Option<Population>,
) -> Result<Vec<ComparisonRow>, CliError> {
    let p = GridPoint {
        k: cfg.k(),
        n: cfg.n(),
        s: cfg.s(),
        m: cfg.m(),
    };
    let pops = populations(p.s, p.m);
    if let Some(c) = only {
        if !pops.contains(&c) {
            return Err(CliError::Config(format!(
                "no {} nodes when s={}, m={}",
                c.as_str(),
                p.s,
                p.m
            )));
        }
    }
    pops.into_iter()
        .filter(|pop| only.is_none_or(|c| c == *pop))
        .map(|pop| {
            let entry = analytic_entry(p, cfg.lambda_s(), lambda_e, cfg.scheme(), pop)?;
            Ok(ComparisonRow::analytic_only(
                p,
                cfg.lambda_s(),
                lambda_e,
                cfg.scheme(),
                pop,
                entry,
            ))
        })
        .collect()
}

/// Per-node closed forms; available only under full subscription.
fn node_analytic(cfg: &ValidatedConfig, node: usize) -> Result<Option<f64>, CliError> {
    if cfg.network_type() != NetworkType::FullSubscription {
        return Ok(None);
    }
    let rates = InRates::Heterogeneous(cfg.in_edges(node).into_iter().map(|(_, r)| r).collect());
    let r = match cfg.scheme() {
        Scheme::Memory => age_memory_full(cfg.k(), &rates, cfg.lambda_s())?,
        Scheme::Memoryless => age_memoryless_full(cfg.k(), &rates, cfg.lambda_s())?,
    };
    Ok(Some(r.value))
}

pub fn analytic(a: &AnalyticArgs) -> Result<Done, CliError> {
    let cfg = match &a.config {
        Some(path) => load_config(path, a.scheme)?,
        None => {
            let g = &a.grid;
            let missing: Vec<&str> = [
                ("--k", g.k.is_none()),
                ("--n", g.n.is_none()),
                ("--s", g.s.is_none()),
                ("--m", g.m.is_none()),
                ("--lambda-s", g.lambda_s.is_none()),
                ("--lambda-e", g.lambda_e.is_none()),
                ("--scheme", a.scheme.is_none()),
            ]
            .into_iter()
            .filter_map(|(name, absent)| absent.then_some(name))
            .collect();
            if !missing.is_empty() {
                return Err(CliError::Usage(format!(
                    "missing {} (or pass --config)",
                    missing.join(", ")
                )));
            }
            validate_config(NetworkConfig::homogeneous(
                g.k.unwrap_or_default(),
                g.n.unwrap_or_default(),
                g.s.unwrap_or_default(),
                g.m.unwrap_or_default(),
                g.lambda_s.unwrap_or_default(),
                g.lambda_e.unwrap_or_default(),
                a.scheme.unwrap_or(Scheme::Memory),
            ))?
        }
    };
    let table = match cfg.config().lambda_e() {
        Some(le) => Payload::Comparison {
            rows: comparison_rows(&cfg, le, a.class)?,
            audit: None,
        },
        None => Payload::Nodes {
            rows: (0..cfg.m())
                .filter(|&j| a.class.is_none_or(|c| c == Population::from(cfg.node_class(j))))
                .map(|j| {
                    Ok(NodeRow {
                        node: j,
                        node_class: cfg.node_class(j),
                        analytic_value: node_analytic(&cfg, j)?,
                        sim_mean: None,
                        cycles: None,
                    })
                })
                .collect::<Result<_, CliError>>()?,
        },
    };
    let echo = json!({ "network": cfg.config(), "class": a.class.map(Population::as_str) });
    Ok((ResultEnvelope::new("analytic", &echo, vec![], vec![table]), None))
}

fn seeds(base: u64, count: u64) -> Vec<u64> {
    (0..count).map(|r| replication_seed(base, r)).collect()
}

pub fn simulate(a: &SimulateArgs, horizon: Horizon) -> Result<Done, CliError> {
    let cfg = load_config(&a.config, a.scheme)?;
    let rep = run_replications(&cfg, horizon, a.seed, a.replications as usize)?;
    let updates = rep.horizon_updates();
    let table = match cfg.config().lambda_e() {
        Some(le) => Payload::Comparison {
            rows: comparison_rows(&cfg, le, None)?
                .into_iter()
                .map(|row| {
                    let pooled = rep.population(row.node_class).copied().ok_or_else(|| {
                        CliError::Other(format!("no simulated {} nodes", row.node_class.as_str()))
                    })?;
                    Ok(row.with_simulation(pooled.mean, pooled.ci_half, a.seed, updates))
                })
                .collect::<Result<_, CliError>>()?,
            audit: None,
        },
        None => {
            let runs = rep.runs.len() as f64;
            Payload::Nodes {
                rows: (0..cfg.m())
                    .map(|j| {
                        let mean = rep.runs.iter().map(|r| r.nodes[j].mean).sum::<f64>() / runs;
                        let cycles = rep.runs.iter().map(|r| r.nodes[j].cycles.count).sum();
                        Ok(NodeRow {
                            node: j,
                            node_class: cfg.node_class(j),
                            analytic_value: node_analytic(&cfg, j)?,
                            sim_mean: Some(mean),
                            cycles: Some(cycles),
                        })
                    })
                    .collect::<Result<_, CliError>>()?,
            }
        }
    };
    let echo = json!({
        "network": cfg.config(),
        "horizon": horizon,
        "seed": a.seed,
        "replications": a.replications,
    });
    let env = ResultEnvelope::new("simulate", &echo, seeds(a.seed, a.replications), vec![table]);
    Ok((env, None))
}

fn study_seeds(study: &Study) -> Vec<u64> {
    match study {
        Study::Sweep(s) if s.simulate => seeds(s.seed, s.replications as u64),
        Study::Convergence(c) => c
            .simulate
            .map(|b| seeds(b.seed, b.replications as u64))
            .unwrap_or_default(),
        _ => vec![],
    }
}

pub fn sweep(a: &SweepArgs) -> Result<Done, CliError> {
    let source = match (&a.preset, &a.spec) {
        (Some(name), _) => name.clone(),
        (None, Some(path)) => path.display().to_string(),
        (None, None) => return Err(CliError::Usage("pass --preset or --spec".into())),
    };
    let mut preset = load_preset(&source)?;
    let overrides = Overrides {
        updates: a.updates,
        replications: a.replications.map(|r| r as usize),
        seed: a.seed,
        simulate: a.analytic_only.then_some(false),
    };
    for s in &mut preset.studies {
        s.apply(&overrides);
    }
    let mut all_seeds: Vec<u64> = preset.studies.iter().flat_map(study_seeds).collect();
    all_seeds.sort_unstable();
    all_seeds.dedup();

    let mut tables = Vec::with_capacity(preset.studies.len());
    let mut hard = 0;
    for study in &preset.studies {
        let out = study.run()?;
        match &out {
            StudyOutput::Sweep { audit, .. } => hard += audit.hard_violations,
            other if !other.pass() => {
                eprintln!("vaoi: warning: a {} check did not hold", kind_name(other));
            }
            _ => {}
        }
        tables.push(Payload::from(out));
    }
    let env = ResultEnvelope::new("sweep", &preset, all_seeds, tables);
    let failure = (hard > 0).then(|| {
        CliError::Audit(format!("{hard} simulated means outside their analytic bounds"))
    });
    Ok((env, failure))
}

fn kind_name(s: &StudyOutput) -> &'static str {
    match s {
        StudyOutput::Sweep { .. } => "sweep",
        StudyOutput::Convergence(_) => "convergence",
        StudyOutput::MemoryValue { .. } => "memory-value",
        StudyOutput::SubscriptionCost(_) => "subscription-cost",
    }
}

pub fn critical_rate(a: &CriticalArgs) -> Result<Done, CliError> {
    let s = a.s.unwrap_or(a.n);
    let m = a.m.unwrap_or(a.n);
    let mut rows = Vec::with_capacity(a.epsilon.len());
    for &epsilon in &a.epsilon {
        let q = CriticalRateQuery {
            k: a.k,
            n: a.n,
            s,
            m,
            lambda_s: a.lambda_s,
            epsilon,
        };
        let r = critical_gossip_rate(&q)?;
        rows.push(CriticalRateRow {
            k: a.k,
            n: a.n,
            s,
            m,
            lambda_s: a.lambda_s,
            epsilon,
            critical_rate: r.rate,
            gap: r.gap,
            upper_bound: r.upper_bound,
        });
    }
    let echo = json!({
        "k": a.k, "n": a.n, "s": s, "m": m, "lambda_s": a.lambda_s, "epsilon": a.epsilon,
    });
    Ok((
        ResultEnvelope::new("critical-rate", &echo, vec![], vec![Payload::CriticalRate { rows }]),
        None,
    ))
}

pub fn validate(a: &ValidateArgs) -> Result<Done, CliError> {
    let text = std::fs::read_to_string(&a.config).map_err(|e| IoError::Read {
        path: a.config.clone(),
        message: e.to_string(),
    })?;
    let file = ConfigFile::parse(&text).map_err(|message| IoError::Parse {
        path: a.config.clone(),
        message,
    })?;
    // Validity does not depend on the scheme.
    let scheme = a.scheme.or(file.scheme).unwrap_or(Scheme::Memory);
    let cfg = file.resolve(Some(scheme))?;
    let summary = ValidationSummary {
        network_type: cfg.network_type().as_str().to_string(),
        k: cfg.k(),
        n: cfg.n(),
        s: cfg.s(),
        m: cfg.m(),
        decode_threshold: cfg.decode_threshold(),
        lambda_s: cfg.lambda_s(),
        total_gossip_rate: cfg.total_gossip_rate(),
        min_in_degree: (0..cfg.m()).map(|j| cfg.in_edges(j).len()).min().unwrap_or(0),
    };
    let heterogeneous = matches!(cfg.config().edge_rates, EdgeRates::Heterogeneous { .. });
    let echo = json!({ "network": cfg.config(), "heterogeneous": heterogeneous });
    Ok((
        ResultEnvelope::new("validate", &echo, vec![], vec![Payload::Validation(summary)]),
        None,
    ))
}

pub fn trace(a: &TraceArgs, horizon: Horizon) -> Result<Done, CliError> {
    let cfg = load_config(&a.config, a.scheme)?;
    let events = trace_events(&cfg, horizon, a.seed)?;
    let echo = json!({ "network": cfg.config(), "horizon": horizon, "seed": a.seed });
    Ok((
        ResultEnvelope::new("trace", &echo, vec![a.seed], vec![Payload::Trace { events }]),
        None,
    ))
}
