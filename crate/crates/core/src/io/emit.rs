use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::format::{fmt_num, fmt_opt};
use crate::experiments::{
    AuditReport, ComparisonRow, ConvergenceTable, MemoryValueRow, StudyOutput,
    SubscriptionCostTable,
};
use crate::model::NodeClass;
use crate::sim::TraceEvent;

/// Column order of comparison tables.
pub const COMPARISON_COLUMNS: [&str; 16] = [
    "scheme",
    "k",
    "n",
    "s",
    "m",
    "lambda_s",
    "lambda_e",
    "node_class",
    "analytic_value",
    "lower_bound",
    "upper_bound",
    "sim_mean",
    "sim_ci_half",
    "rel_error",
    "seed",
    "horizon_updates",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (expected csv|json)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalRateRow {
    pub k: usize,
    pub n: usize,
    pub s: usize,
    pub m: usize,
    pub lambda_s: f64,
    pub epsilon: f64,
    pub critical_rate: f64,
    pub gap: f64,
    pub upper_bound: bool,
}

/// Per-node ages, used for heterogeneous networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRow {
    pub node: usize,
    pub node_class: NodeClass,
    pub analytic_value: Option<f64>,
    pub sim_mean: Option<f64>,
    /// Completed renewal cycles summed over replications.
    pub cycles: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub network_type: String,
    pub k: usize,
    pub n: usize,
    pub s: usize,
    pub m: usize,
    pub decode_threshold: usize,
    pub lambda_s: f64,
    pub total_gossip_rate: f64,
    pub min_in_degree: usize,
}

/// One output table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Comparison {
        rows: Vec<ComparisonRow>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        audit: Option<AuditReport>,
    },
    Convergence(ConvergenceTable),
    MemoryValue { rows: Vec<MemoryValueRow> },
    SubscriptionCost(SubscriptionCostTable),
    CriticalRate { rows: Vec<CriticalRateRow> },
    Nodes { rows: Vec<NodeRow> },
    Trace { events: Vec<TraceEvent> },
    Validation(ValidationSummary),
}

impl From<StudyOutput> for Payload {
    fn from(s: StudyOutput) -> Self {
        match s {
            StudyOutput::Sweep { rows, audit } => Payload::Comparison {
                rows,
                audit: Some(audit),
            },
            StudyOutput::Convergence(t) => Payload::Convergence(t),
            StudyOutput::MemoryValue { rows } => Payload::MemoryValue { rows },
            StudyOutput::SubscriptionCost(t) => Payload::SubscriptionCost(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seeds: Vec<u64>,
    pub config_sha256: String,
    /// Resolved input; enough to rerun the command.
    pub config: serde_json::Value,
    /// Wall-clock seconds; present only when requested so default output
    /// stays byte-stable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultEnvelope {
    pub metadata: Metadata,
    pub tables: Vec<Payload>,
}

impl ResultEnvelope {
    pub fn new<C: Serialize>(command: &str, config: &C, seeds: Vec<u64>, tables: Vec<Payload>) -> Self {
        ResultEnvelope {
            metadata: Metadata {
                tool: "vaoi".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                command: command.into(),
                seeds,
                config_sha256: super::config_hash(config),
                config: serde_json::to_value(config).unwrap_or(serde_json::Value::Null),
                elapsed_seconds: None,
            },
            tables,
        }
    }
}

/// Renders an envelope. Output depends only on the envelope contents.
pub fn emit_results(env: &ResultEnvelope, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(env).expect("envelope serializes");
            s.push('\n');
            s
        }
        Format::Csv => emit_csv(env),
    }
}

fn emit_csv(env: &ResultEnvelope) -> String {
    let md = &env.metadata;
    let mut out = String::new();
    let seeds: Vec<String> = md.seeds.iter().map(u64::to_string).collect();
    let _ = writeln!(out, "# {} {}", md.tool, md.version);
    let _ = writeln!(out, "# command: {}", md.command);
    let seeds = if seeds.is_empty() { "none".to_string() } else { seeds.join(" ") };
    let _ = writeln!(out, "# seed: {seeds}");
    let _ = writeln!(out, "# config_sha256: {}", md.config_sha256);
    let _ = writeln!(out, "# config: {}", md.config);
    if let Some(t) = md.elapsed_seconds {
        let _ = writeln!(out, "# elapsed_seconds: {}", fmt_num(t));
    }
    for (i, table) in env.tables.iter().enumerate() {
        if env.tables.len() > 1 {
            if i > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "# table {}: {}", i + 1, table_kind(table));
        }
        write_table(&mut out, table);
    }
    out
}

fn table_kind(p: &Payload) -> &'static str {
    match p {
        Payload::Comparison { .. } => "comparison",
        Payload::Convergence(_) => "convergence",
        Payload::MemoryValue { .. } => "memory_value",
        Payload::SubscriptionCost(_) => "subscription_cost",
        Payload::CriticalRate { .. } => "critical_rate",
        Payload::Nodes { .. } => "nodes",
        Payload::Trace { .. } => "trace",
        Payload::Validation(_) => "validation",
    }
}

fn line(out: &mut String, cells: &[String]) {
    out.push_str(&cells.join(","));
    out.push('\n');
}

fn header(out: &mut String, cols: &[&str]) {
    out.push_str(&cols.join(","));
    out.push('\n');
}

fn opt_u<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn write_table(out: &mut String, table: &Payload) {
    match table {
        Payload::Comparison { rows, audit } => {
            header(out, &COMPARISON_COLUMNS);
            for r in rows {
                line(
                    out,
                    &[
                        r.scheme.to_string(),
                        r.k.to_string(),
                        r.n.to_string(),
                        r.s.to_string(),
                        r.m.to_string(),
                        fmt_num(r.lambda_s),
                        fmt_num(r.lambda_e),
                        r.node_class.as_str().to_string(),
                        fmt_opt(r.analytic_value),
                        fmt_opt(r.lower_bound),
                        fmt_opt(r.upper_bound),
                        fmt_opt(r.sim_mean),
                        fmt_opt(r.sim_ci_half),
                        fmt_opt(r.rel_error),
                        opt_u(r.seed),
                        opt_u(r.horizon_updates),
                    ],
                );
            }
            if let Some(a) = audit {
                if !a.entries.is_empty() {
                    let _ = writeln!(
                        out,
                        "# audit: checked={} hard_violations={} soft_violations={}",
                        a.entries.len(),
                        a.hard_violations,
                        a.soft_violations
                    );
                }
            }
        }
        Payload::Convergence(t) => {
            header(
                out,
                &[
                    "scheme", "alpha", "k", "lambda_s", "lambda_e", "m", "n", "analytic_value",
                    "asymptote", "gap", "sim_mean", "sim_ci_half",
                ],
            );
            let sp = &t.spec;
            for r in &t.rows {
                line(
                    out,
                    &[
                        sp.scheme.to_string(),
                        fmt_num(sp.alpha),
                        sp.k.to_string(),
                        fmt_num(sp.lambda_s),
                        fmt_num(sp.lambda_e),
                        r.m.to_string(),
                        r.n.to_string(),
                        fmt_num(r.analytic),
                        fmt_num(r.asymptote),
                        fmt_num(r.gap),
                        fmt_opt(r.sim_mean),
                        fmt_opt(r.sim_ci_half),
                    ],
                );
            }
        }
        Payload::MemoryValue { rows } => {
            header(out, &["k", "n", "epsilon", "critical_rate", "gap", "gap_below", "upper_bound"]);
            for r in rows {
                line(
                    out,
                    &[
                        r.k.to_string(),
                        r.n.to_string(),
                        fmt_num(r.epsilon),
                        fmt_num(r.rate),
                        fmt_num(r.gap),
                        fmt_opt(r.gap_below),
                        r.upper_bound.to_string(),
                    ],
                );
            }
        }
        Payload::SubscriptionCost(t) => {
            header(out, &["s", "m", "subscriber", "nonsubscriber", "graph"]);
            for r in &t.rows {
                line(
                    out,
                    &[
                        r.s.to_string(),
                        r.m.to_string(),
                        fmt_opt(r.subscriber),
                        fmt_opt(r.nonsubscriber),
                        fmt_num(r.graph),
                    ],
                );
            }
        }
        Payload::CriticalRate { rows } => {
            header(
                out,
                &["k", "n", "s", "m", "lambda_s", "epsilon", "critical_rate", "gap", "upper_bound"],
            );
            for r in rows {
                line(
                    out,
                    &[
                        r.k.to_string(),
                        r.n.to_string(),
                        r.s.to_string(),
                        r.m.to_string(),
                        fmt_num(r.lambda_s),
                        fmt_num(r.epsilon),
                        fmt_num(r.critical_rate),
                        fmt_num(r.gap),
                        r.upper_bound.to_string(),
                    ],
                );
            }
        }
        Payload::Nodes { rows } => {
            header(out, &["node", "node_class", "analytic_value", "sim_mean", "cycles"]);
            for r in rows {
                line(
                    out,
                    &[
                        r.node.to_string(),
                        r.node_class.as_str().to_string(),
                        fmt_opt(r.analytic_value),
                        fmt_opt(r.sim_mean),
                        opt_u(r.cycles),
                    ],
                );
            }
        }
        Payload::Trace { events } => write_trace(out, events),
        Payload::Validation(v) => {
            header(out, &["field", "value"]);
            let fields = [
                ("network_type", v.network_type.clone()),
                ("k", v.k.to_string()),
                ("n", v.n.to_string()),
                ("s", v.s.to_string()),
                ("m", v.m.to_string()),
                ("decode_threshold", v.decode_threshold.to_string()),
                ("lambda_s", fmt_num(v.lambda_s)),
                ("total_gossip_rate", fmt_num(v.total_gossip_rate)),
                ("min_in_degree", v.min_in_degree.to_string()),
            ];
            for (k, val) in fields {
                line(out, &[k.to_string(), val]);
            }
        }
    }
}

/// One CSV line per node for source updates, one per gossip or decode.
fn write_trace(out: &mut String, events: &[TraceEvent]) {
    header(
        out,
        &[
            "event", "time", "node", "peer", "version", "key_id", "count", "early_from",
            "early_to", "age_before", "age_after",
        ],
    );
    for e in events {
        match e {
            TraceEvent::SourceUpdate {
                time,
                version,
                key_holders,
                senders_available,
                ages_before,
                ages_after,
            } => {
                for j in 0..ages_before.len() {
                    let key = key_holders.iter().find(|(n, _)| *n == j).map(|(_, id)| *id);
                    line(
                        out,
                        &[
                            "update".into(),
                            fmt_num(*time),
                            j.to_string(),
                            String::new(),
                            version.to_string(),
                            opt_u(key),
                            senders_available[j].to_string(),
                            String::new(),
                            String::new(),
                            ages_before[j].to_string(),
                            ages_after[j].to_string(),
                        ],
                    );
                }
            }
            TraceEvent::Gossip {
                time,
                from,
                to,
                keys,
                age_before,
                age_after,
            } => line(
                out,
                &[
                    "gossip".into(),
                    fmt_num(*time),
                    to.to_string(),
                    from.to_string(),
                    String::new(),
                    String::new(),
                    keys.len().to_string(),
                    String::new(),
                    String::new(),
                    age_before.to_string(),
                    age_after.to_string(),
                ],
            ),
            TraceEvent::Decode {
                time,
                node,
                version,
                distinct_keys,
                early_stopped,
                age_before,
                age_after,
            } => line(
                out,
                &[
                    "decode".into(),
                    fmt_num(*time),
                    node.to_string(),
                    String::new(),
                    version.to_string(),
                    String::new(),
                    distinct_keys.to_string(),
                    opt_u(early_stopped.map(|r| r.0)),
                    opt_u(early_stopped.map(|r| r.1)),
                    age_before.to_string(),
                    age_after.to_string(),
                ],
            ),
        }
    }
}
