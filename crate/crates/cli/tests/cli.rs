use std::path::Path;
use std::process::{Command, Output};

use vaoi_core::io::{Payload, ResultEnvelope, COMPARISON_COLUMNS};

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

fn vaoi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vaoi"))
        .args(args)
        .env_remove("AOI_PRESET_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn data_lines(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn analytic_total_key_subscriber() {
    let o = vaoi(&[
        "analytic", "--k", "2", "--n", "6", "--s", "6", "--m", "10", "--lambda-s", "10",
        "--lambda-e", "100", "--scheme", "memory", "--class", "subscriber",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    let lines = data_lines(&out);
    assert_eq!(lines[0], COMPARISON_COLUMNS.join(","));
    assert_eq!(lines[1], "memory,2,6,6,10,10,100,subscriber,0.405,,,,,,,");
    assert_eq!(lines.len(), 2);
}

#[test]
fn metadata_block_leads_every_file() {
    let o = vaoi(&[
        "analytic", "--k", "2", "--n", "6", "--s", "3", "--m", "10", "--lambda-s", "10",
        "--lambda-e", "60", "--scheme", "memory",
    ]);
    let out = stdout(&o);
    let head: Vec<&str> = out.lines().take_while(|l| l.starts_with('#')).collect();
    assert!(head[0].starts_with("# vaoi "));
    assert!(head.iter().any(|l| l.starts_with("# seed: ")));
    assert!(head.iter().any(|l| l.len() == "# config_sha256: ".len() + 64));
    // Partial-key memory rows carry bounds only.
    for row in &data_lines(&out)[1..] {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells[8], "");
        assert!(!cells[9].is_empty() && !cells[10].is_empty());
    }
}

#[test]
fn simulate_is_byte_identical_across_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", HOMOGENEOUS);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = vaoi(&[
            "simulate", "--config", &cfg, "--updates", "3000", "--seed", "7", "--replications",
            "2", "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (a, b) = (std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.contains("# seed: 7 "));
    assert!(!text.contains("elapsed"));
    let rows = data_lines(&text);
    assert_eq!(rows.len(), 4);
    assert!(rows[1..].iter().all(|r| r.ends_with(",7,6000")));
}

#[test]
fn json_output_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", HOMOGENEOUS);
    let o = vaoi(&[
        "simulate", "--config", &cfg, "--updates", "2000", "--replications", "2", "--scheme",
        "memoryless", "--format", "json",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let env: ResultEnvelope = serde_json::from_str(&text).unwrap();
    assert_eq!(env.metadata.command, "simulate");
    assert_eq!(env.metadata.seeds.len(), 2);
    let Payload::Comparison { rows, .. } = &env.tables[0] else {
        panic!("comparison table expected");
    };
    assert!(rows.iter().all(|r| r.sim_mean.is_some()));
    let again = serde_json::to_string_pretty(&env).unwrap() + "\n";
    assert_eq!(again, text);
}

#[test]
fn config_echo_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", HOMOGENEOUS);
    let o = vaoi(&["simulate", "--config", &cfg, "--updates", "500", "--format", "json"]);
    let env: ResultEnvelope = serde_json::from_str(&stdout(&o)).unwrap();
    let echo = &env.metadata.config;
    assert_eq!(echo["seed"], 0);
    assert_eq!(echo["replications"], 4);
    assert_eq!(echo["horizon"]["updates"], 500);
    assert_eq!(echo["network"]["edge_rates"]["lambda_e"], 100.0);
}

#[test]
fn timing_is_opt_in() {
    let args = ["critical-rate", "--k", "3", "--n", "30", "--lambda-s", "15", "--epsilon", "0.1"];
    assert!(!stdout(&vaoi(&args)).contains("elapsed"));
    let mut timed = args.to_vec();
    timed.push("--timing");
    assert!(stdout(&vaoi(&timed)).contains("# elapsed_seconds: "));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", HOMOGENEOUS);
    for args in [
        vec!["simulate", "--config", cfg.as_str(), "--updates", "10", "--time", "3"],
        vec!["simulate", "--config", cfg.as_str(), "--bogus"],
        vec!["simulate"],
        vec!["analytic", "--k", "2"],
        vec!["sweep"],
        vec!["simulate", "--config", cfg.as_str(), "--updates", "0"],
    ] {
        assert_eq!(vaoi(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn config_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", &HOMOGENEOUS.replace("k = 2", "k = 6"));
    let unknown = write(dir.path(), "u.toml", &format!("extra = true\n{HOMOGENEOUS}"));
    let missing = dir.path().join("nope.toml");
    for args in [
        vec!["simulate", "--config", bad.as_str()],
        vec!["validate", "--config", unknown.as_str()],
        vec!["validate", "--config", missing.to_str().unwrap()],
        vec!["sweep", "--preset", "no-such-preset"],
    ] {
        let o = vaoi(&args);
        assert_eq!(o.status.code(), Some(3), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn validate_describes_the_network() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", HOMOGENEOUS);
    let out = stdout(&vaoi(&["validate", "--config", &cfg]));
    assert!(out.contains("network_type,total_key_subscription"));
    assert!(out.contains("decode_threshold,3"));
    assert!(out.contains("total_gossip_rate,1000"));
}

#[test]
fn heterogeneous_configs_report_per_node() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "h.toml",
        r#"
k = 1
n = 3
s = 3
m = 3
lambda_s = 1.0
scheme = "memory"

[edge_rates]
kind = "heterogeneous"
matrix = [[0.0, 1.0, 2.0], [1.0, 0.0, 1.0], [3.0, 1.0, 0.0]]
"#,
    );
    let out = stdout(&vaoi(&["analytic", "--config", &cfg]));
    let rows = data_lines(&out);
    assert_eq!(rows[0], "node,node_class,analytic_value,sim_mean,cycles");
    // Memory with k = 1: age is lambda_s over the total in-rate.
    assert_eq!(rows[1], "0,subscriber,0.25,,");
    assert_eq!(rows[2], "1,subscriber,0.5,,");
}

#[test]
fn sweep_presets_and_spec_files() {
    let o = vaoi(&["sweep", "--preset", "fig4", "--analytic-only"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("memory,2,6,6,6,10,100,subscriber,"));

    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "mine.toml",
        r#"
name = "mine"

[[study]]
kind = "sweep"
lambda_s = 10.0
points = [{ k = 2, n = 6, s = 6, m = 10 }]
lambda_e = [100.0]
schemes = ["memory"]
simulate = false

[[study]]
kind = "memory_value"
n = 30
lambda_s = 15.0
k = [2, 3]
epsilon = [0.1]
"#,
    );
    let o = vaoi(&["sweep", "--spec", &spec]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("# table 1: comparison"));
    assert!(out.contains("# table 2: memory_value"));
    assert!(out.contains("memory,2,6,6,10,10,100,subscriber,0.405,"));

    let o = Command::new(env!("CARGO_BIN_EXE_vaoi"))
        .args(["sweep", "--preset", "mine"])
        .env("AOI_PRESET_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(stdout(&o), out);
}

#[test]
fn trace_lists_events() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", HOMOGENEOUS);
    let o = vaoi(&["trace", "--config", &cfg, "--updates", "5", "--seed", "3", "--format", "json"]);
    assert!(o.status.success());
    let env: ResultEnvelope = serde_json::from_str(&stdout(&o)).unwrap();
    let Payload::Trace { events } = &env.tables[0] else {
        panic!("trace table expected");
    };
    assert!(!events.is_empty());
    assert!(events.windows(2).all(|w| w[0].time() <= w[1].time()));
    let csv = stdout(&vaoi(&["trace", "--config", &cfg, "--updates", "5", "--seed", "3"]));
    assert_eq!(data_lines(&csv)[0], "event,time,node,peer,version,key_id,count,early_from,early_to,age_before,age_after");
}
