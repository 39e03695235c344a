//! Acceptance checks. Each criterion prints one PASS/FAIL line; the binary
//! exits nonzero if any criterion fails.

use std::cell::Cell;
use std::collections::{HashMap, HashSet};
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestCaseError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use vaoi_core::analytic::{
    age_memory_total_key_graph, age_memoryless_graph, age_memoryless_partial,
    expected_min_orderstat_update, prob_decode_before_update,
};
use vaoi_core::experiments::{
    audit_bounds, load_preset, memory_value_study, run_sweep, MemoryValueSpec, Overrides, Study,
};
use vaoi_core::sim::{
    run_replications, run_simulation, run_simulation_with, Horizon, Observer, SimOptions,
    SimStats, TraceEvent,
};
use vaoi_core::{validate_config, NetworkConfig, NodeClass, Scheme, ValidatedConfig};

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn rel(x: f64, reference: f64) -> f64 {
    (x - reference).abs() / reference.abs()
}

fn harmonic(from: usize, to: usize) -> f64 {
    (from..=to).map(|i| 1.0 / i as f64).sum()
}

fn homogeneous(k: usize, n: usize, s: usize, m: usize, ls: f64, le: f64, scheme: Scheme) -> ValidatedConfig {
    validate_config(NetworkConfig::homogeneous(k, n, s, m, ls, le, scheme)).expect("valid config")
}

/// Memory ages of a total-key network from exponential order statistics:
/// `(subscriber, nonsubscriber, graph)`.
fn memory_total_key_oracle(k: usize, n: usize, m: usize, ls: f64, le: f64) -> (f64, f64, f64) {
    let scale = (m - 1) as f64 * ls / le;
    let sub = scale * harmonic(n - k, n - 1);
    let non = scale * harmonic(n - k, n);
    (sub, non, (n as f64 * sub + (m - n) as f64 * non) / m as f64)
}

/// Race of the `k`-th of `senders` Exp(`mu`) clocks against Exp(`ls`):
/// `(E[min(X, U)], P(X <= U))`.
fn race_oracle(k: usize, senders: usize, mu: f64, ls: f64) -> (f64, f64) {
    let mut reach = 1.0;
    let mut expected = 0.0;
    for i in 0..k {
        let rate = (senders - i) as f64 * mu;
        expected += reach / (rate + ls);
        reach *= rate / (rate + ls);
    }
    (expected, reach)
}

fn check_within(what: &str, got: f64, want: f64, tol: f64, worst: &mut f64, failures: &mut Vec<String>) {
    let e = rel(got, want);
    *worst = worst.max(e);
    if e > tol {
        failures.push(format!("{what}: {got:.6} vs {want:.6} ({:.2}%)", 100.0 * e));
    }
}

fn verdict(failures: Vec<String>, summary: String) -> Verdict {
    if failures.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{summary}; {}", failures.join("; ")))
    }
}

fn memory_total_key_reproduction() -> Verdict {
    let (k, n, s, m, ls) = (2, 6, 6, 10, 10.0);
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    let mut slowest = Duration::ZERO;
    for le in [20.0, 60.0, 100.0] {
        let started = Instant::now();
        let rep = run_replications(&homogeneous(k, n, s, m, ls, le, Scheme::Memory), Horizon::Updates(100_000), 0, 4)
            .map_err(|e| e.to_string())?;
        let took = started.elapsed();
        slowest = slowest.max(took);
        if took > Duration::from_secs(60) {
            failures.push(format!("lambda_e={le}: {took:?} exceeds 60 s"));
        }
        let (sub, non, graph) = memory_total_key_oracle(k, n, m, ls, le);
        let got = [rep.subscriber.unwrap().mean, rep.nonsubscriber.unwrap().mean, rep.graph.mean];
        for (name, g, w) in [("subscriber", got[0], sub), ("nonsubscriber", got[1], non), ("graph", got[2], graph)] {
            check_within(&format!("lambda_e={le} {name}"), g, w, 0.03, &mut worst, &mut failures);
        }
    }
    verdict(
        failures,
        format!("worst relative error {:.2}%, slowest point {:.1} s", 100.0 * worst, slowest.as_secs_f64()),
    )
}

fn memoryless_partial_reproduction() -> Verdict {
    let (k, n, s, ls) = (4, 8, 3, 10.0);
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for m in [12, 18] {
        for le in [20.0, 40.0, 60.0, 80.0, 100.0] {
            let rep = run_replications(&homogeneous(k, n, s, m, ls, le, Scheme::Memoryless), Horizon::Updates(100_000), 0, 4)
                .map_err(|e| e.to_string())?;
            let sub = age_memoryless_partial(k, n, s, m, ls, le, NodeClass::Subscriber).unwrap().value;
            let non = age_memoryless_partial(k, n, s, m, ls, le, NodeClass::Nonsubscriber).unwrap().value;
            let graph = age_memoryless_graph(k, n, s, m, ls, le).unwrap().value;
            let (ss, sn) = (rep.subscriber.unwrap().mean, rep.nonsubscriber.unwrap().mean);
            let tag = format!("m={m} lambda_e={le}");
            check_within(&format!("{tag} subscriber"), ss, sub, 0.03, &mut worst, &mut failures);
            check_within(&format!("{tag} nonsubscriber"), sn, non, 0.03, &mut worst, &mut failures);
            check_within(&format!("{tag} graph"), rep.graph.mean, graph, 0.03, &mut worst, &mut failures);
            if !(sub < non && ss < sn) {
                failures.push(format!("{tag}: subscriber not below nonsubscriber"));
            }
        }
    }
    verdict(failures, format!("worst relative error {:.2}%", 100.0 * worst))
}

fn partial_key_containment() -> Verdict {
    let overrides = Overrides {
        updates: Some(10_000),
        replications: Some(2),
        seed: Some(0),
        simulate: Some(true),
    };
    let mut checked = 0;
    let mut hard = 0;
    let mut soft = 0;
    for name in ["fig8", "fig9"] {
        let preset = load_preset(name).map_err(|e| e.to_string())?;
        for mut study in preset.studies {
            study.apply(&overrides);
            let Study::Sweep(spec) = study else { continue };
            let rows = run_sweep(&spec).map_err(|e| e.to_string())?;
            let audit = audit_bounds(&rows);
            checked += audit.entries.len();
            hard += audit.hard_violations;
            soft += audit.soft_violations;
        }
    }
    let summary = format!("{checked} bounded rows, {hard} hard and {soft} soft violations at 10^4 updates x 2");
    if hard == 0 && checked > 0 {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn asymptotics() -> Verdict {
    let (k, ls, le) = (10, 15.0, 50.0);
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    let mem = age_memory_total_key_graph(k, 2000, 2000, ls, le).unwrap().value;
    let mless = age_memoryless_graph(k, 2000, 2000, 2000, ls, le).unwrap().value;
    check_within("memory m=2000", mem, 3.0, 0.01, &mut worst, &mut failures);
    check_within("memoryless m=2000", mless, 1.3f64.powi(10) - 1.0, 0.01, &mut worst, &mut failures);
    let mut sim_worst: f64 = 0.0;
    for scheme in [Scheme::Memory, Scheme::Memoryless] {
        let analytic = match scheme {
            Scheme::Memory => age_memory_total_key_graph(k, 200, 200, ls, le).unwrap().value,
            Scheme::Memoryless => age_memoryless_graph(k, 200, 200, 200, ls, le).unwrap().value,
        };
        let rep = run_replications(&homogeneous(k, 200, 200, 200, ls, le, scheme), Horizon::Updates(20_000), 0, 2)
            .map_err(|e| e.to_string())?;
        check_within(&format!("{scheme} simulated m=200"), rep.graph.mean, analytic, 0.05, &mut sim_worst, &mut failures);
    }
    verdict(
        failures,
        format!(
            "m=2000 memory {mem:.4}, memoryless {mless:.4}; worst simulated error at m=200 {:.2}%",
            100.0 * sim_worst
        ),
    )
}

fn race_monte_carlo() -> Verdict {
    const SAMPLES: usize = 1_000_000;
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    let mut points = 0;
    let mut clocks = Vec::new();
    while points < 20 {
        let k_t = rng.random_range(1..=6usize);
        let n_t = rng.random_range(k_t + 1..=k_t + 8);
        let m = rng.random_range(n_t.max(2)..=n_t + 10);
        let ls: f64 = rng.random_range(1.0..20.0);
        let le = ls * rng.random_range(1.0..20.0);
        let p = prob_decode_before_update(k_t, n_t, m, ls, le).unwrap();
        // Rare successes need more samples than the budget allows.
        if p < 0.2 {
            continue;
        }
        points += 1;
        let e = expected_min_orderstat_update(k_t, n_t, m, ls, le).unwrap();
        let gossip = Exp::new(le / (m - 1) as f64).unwrap();
        let update = Exp::new(ls).unwrap();
        let mut wins = 0u64;
        let mut sum = 0.0;
        for _ in 0..SAMPLES {
            clocks.clear();
            clocks.extend((0..n_t - 1).map(|_| gossip.sample(&mut rng)));
            let (_, x, _) = clocks.select_nth_unstable_by(k_t - 1, f64::total_cmp);
            let x = *x;
            let u: f64 = update.sample(&mut rng);
            if x <= u {
                wins += 1;
            }
            sum += x.min(u);
        }
        let tag = format!("(k_t={k_t}, n_t={n_t}, m={m}, ls={ls:.2}, le={le:.2})");
        check_within(&format!("{tag} probability"), wins as f64 / SAMPLES as f64, p, 0.01, &mut worst, &mut failures);
        check_within(&format!("{tag} expected min"), sum / SAMPLES as f64, e, 0.01, &mut worst, &mut failures);
    }
    let took = started.elapsed();
    if took > Duration::from_secs(30) {
        failures.push(format!("runtime {took:?} exceeds 30 s"));
    }
    verdict(
        failures,
        format!("20 points, worst relative error {:.3}%, {:.1} s", 100.0 * worst, took.as_secs_f64()),
    )
}

fn success_run_length() -> Verdict {
    let (k, n, ls, le) = (2, 10, 10.0, 40.0);
    let p = prob_decode_before_update(k, n, n, ls, le).unwrap();
    let (_, p_oracle) = race_oracle(k, n - 1, le / (n - 1) as f64, ls);
    if rel(p, p_oracle) > 1e-12 {
        return Err(format!("decode probability {p} disagrees with the race oracle {p_oracle}"));
    }
    let st = run_simulation(&homogeneous(k, n, n, n, ls, le, Scheme::Memoryless), Horizon::Updates(100_000), 0)
        .map_err(|e| e.to_string())?;
    let target = 1.0 / p;
    let mut failures = Vec::new();
    let mut worst_z: f64 = 0.0;
    for node in &st.nodes {
        let Some((mean, se)) = node.cycles.updates_per_cycle() else {
            failures.push(format!("node {}: fewer than two cycles", node.node));
            continue;
        };
        let z = (mean - target).abs() / se;
        worst_z = worst_z.max(z);
        if z > 3.0 {
            failures.push(format!("node {}: mean run {mean:.5} vs {target:.5} ({z:.2} SE)", node.node));
        }
    }
    verdict(failures, format!("target 1/p = {target:.5}, worst deviation {worst_z:.2} SE over {} nodes", st.nodes.len()))
}

struct GridPoint {
    k: usize,
    n: usize,
    s: usize,
    m: usize,
    ls: f64,
    le: f64,
}

/// Random valid homogeneous network; memoryless age bounded so that a short
/// run completes cycles at every node.
fn random_point(rng: &mut ChaCha8Rng, max_extra: usize) -> GridPoint {
    loop {
        let n = rng.random_range(3..=10usize);
        let k = rng.random_range(0..=(n - 1).min(4));
        let s = rng.random_range(0..=n);
        let m = rng.random_range(n.max(k + 2)..=n + max_extra);
        if m == n && s < n {
            continue;
        }
        let ls: f64 = rng.random_range(1.0..10.0);
        let le = ls * rng.random_range(3.0..10.0);
        if age_memoryless_graph(k, n, s, m, ls, le).is_ok_and(|a| a.value <= 10.0) {
            return GridPoint { k, n, s, m, ls, le };
        }
    }
}

fn scheme_ordering() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut analytic_checked = 0;
    let mut failures = Vec::new();
    for i in 0..200 {
        let p = random_point(&mut rng, 6);
        let mless = age_memoryless_graph(p.k, p.n, p.s, p.m, p.ls, p.le).unwrap().value;
        if p.s == p.n {
            analytic_checked += 1;
            let (_, _, mem) = memory_total_key_oracle(p.k, p.n, p.m, p.ls, p.le);
            if mless < mem * (1.0 - 1e-12) {
                failures.push(format!("point {i}: analytic memoryless {mless} < memory {mem}"));
            }
        }
        let sim = |scheme| {
            run_simulation(&homogeneous(p.k, p.n, p.s, p.m, p.ls, p.le, scheme), Horizon::Updates(3000), i)
                .map(|st| st.graph)
                .map_err(|e| e.to_string())
        };
        let (a, b) = (sim(Scheme::Memory)?, sim(Scheme::Memoryless)?);
        let slack = 3.0 * (a.ci_half.unwrap_or(0.0) + b.ci_half.unwrap_or(0.0));
        if b.mean + slack < a.mean {
            failures.push(format!(
                "point {i} (k={}, n={}, s={}, m={}): simulated memoryless {:.4} < memory {:.4}",
                p.k, p.n, p.s, p.m, b.mean, a.mean
            ));
        }
    }
    verdict(
        failures,
        format!("200 simulated points, {analytic_checked} with exact analytic memory ages"),
    )
}

fn full_subscription_gap(k: usize, n: usize, ls: f64, le: f64) -> f64 {
    let mu = le / (n - 1) as f64;
    let memory = ls / mu * harmonic(n - k, n - 1);
    let (expected, reach) = race_oracle(k, n - 1, mu, ls);
    (ls * expected / reach - memory).abs()
}

fn critical_rate_table() -> Verdict {
    let (n, ls) = (30, 15.0);
    let ks: Vec<usize> = (2..=12).collect();
    let eps = [1.0, 0.1, 0.01];
    let rows = memory_value_study(&MemoryValueSpec {
        n,
        lambda_s: ls,
        k: ks.clone(),
        epsilon: eps.to_vec(),
    })
    .map_err(|e| e.to_string())?;
    let rate = |k: usize, e: f64| {
        rows.iter().find(|r| r.k == k && r.epsilon == e).map(|r| r.rate).expect("row present")
    };
    let mut failures = Vec::new();
    for r in &rows {
        let g = full_subscription_gap(r.k, n, ls, r.rate);
        let below = full_subscription_gap(r.k, n, ls, 0.99 * r.rate);
        if g > r.epsilon * (1.0 + 1e-9) || below <= r.epsilon {
            failures.push(format!(
                "k={} eps={}: gap {g:.6} at rate {:.4}, {below:.6} at 0.99 x rate",
                r.k, r.epsilon, r.rate
            ));
        }
    }
    for &e in &eps {
        for w in ks.windows(2) {
            if rate(w[1], e) <= rate(w[0], e) {
                failures.push(format!("eps={e}: rate not increasing from k={} to k={}", w[0], w[1]));
            }
        }
    }
    for &k in &ks {
        for w in eps.windows(2) {
            if rate(k, w[1]) <= rate(k, w[0]) {
                failures.push(format!("k={k}: rate not increasing from eps={} to eps={}", w[0], w[1]));
            }
        }
    }
    verdict(
        failures,
        format!(
            "{} rows, rates from {:.2} (k=2, eps=1) to {:.2} (k=12, eps=0.01)",
            rows.len(),
            rate(2, 1.0),
            rate(12, 0.01)
        ),
    )
}

/// Independent replay of the event stream.
struct Replay {
    threshold: usize,
    total_key_memory: bool,
    version: u64,
    ages: Vec<u64>,
    decoded: Vec<u64>,
    ids: Vec<HashMap<u64, HashSet<u32>>>,
    last_decode: Option<(usize, f64)>,
    /// Decodes emitted ahead of the gossip that carried their last key.
    pending: Vec<(usize, u64, bool)>,
    errors: Vec<String>,
    events: u64,
}

impl Replay {
    fn new(cfg: &ValidatedConfig) -> Self {
        let m = cfg.m();
        Replay {
            threshold: cfg.k() + 1,
            total_key_memory: cfg.scheme() == Scheme::Memory && cfg.s() == cfg.n(),
            version: 0,
            ages: vec![0; m],
            decoded: vec![0; m],
            ids: vec![HashMap::new(); m],
            last_decode: None,
            pending: Vec::new(),
            errors: Vec::new(),
            events: 0,
        }
    }

    fn fail(&mut self, msg: String) {
        if self.errors.len() < 5 {
            self.errors.push(msg);
        }
    }

    fn hold(&mut self, node: usize, version: u64, id: u32) {
        if version > self.decoded[node] {
            self.ids[node].entry(version).or_default().insert(id);
        }
    }

    fn settle(&mut self) {
        for (node, version, early) in std::mem::take(&mut self.pending) {
            let held = self.ids[node].get(&version).map_or(0, HashSet::len);
            if held < self.threshold {
                self.fail(format!("node {node} decoded version {version} holding {held} ids"));
            }
            if self.total_key_memory && early {
                self.fail(format!("node {node}: early stop in a total-key memory run"));
            }
            if version <= self.decoded[node] {
                self.fail(format!("node {node}: decoded {version} after {}", self.decoded[node]));
            }
            self.decoded[node] = version;
            self.ids[node].retain(|&v, _| v > version);
        }
    }
}

impl Observer for Replay {
    const DETAILED: bool = true;

    fn on_event(&mut self, e: TraceEvent) {
        self.events += 1;
        match e {
            TraceEvent::SourceUpdate { version, key_holders, ages_before, ages_after, .. } => {
                self.settle();
                if version != self.version + 1 {
                    self.fail(format!("update version {version} after {}", self.version));
                }
                self.version = version;
                for j in 0..self.ages.len() {
                    if ages_before[j] != self.ages[j] || ages_after[j] != ages_before[j] + 1 {
                        self.fail(format!("node {j}: update moved age {} -> {}", ages_before[j], ages_after[j]));
                    }
                    self.ages[j] = ages_after[j];
                }
                for (j, id) in key_holders {
                    self.hold(j, version, id);
                }
                self.last_decode = None;
            }
            TraceEvent::Gossip { time, from, to, keys, age_before, age_after } => {
                for key in keys {
                    self.hold(to, key.version, key.key_id);
                }
                self.settle();
                let decoded_now = self.last_decode == Some((to, time));
                if age_after != self.ages[to] || age_after > age_before || (age_after < age_before && !decoded_now) {
                    self.fail(format!("gossip {from}->{to}: age {age_before} -> {age_after} without a decode"));
                }
                self.last_decode = None;
            }
            TraceEvent::Decode { time, node, version, early_stopped, age_before, age_after, .. } => {
                self.pending.push((node, version, early_stopped.is_some()));
                if age_before != self.ages[node] || age_after >= age_before || age_after != self.version - version {
                    self.fail(format!("node {node}: decode moved age {age_before} -> {age_after}"));
                }
                self.ages[node] = age_after;
                self.last_decode = Some((node, time));
            }
        }
    }
}

fn protocol_invariants() -> Verdict {
    let strategy = (
        3usize..=9,
        0usize..=4,
        0usize..=9,
        0usize..=6,
        2.0f64..10.0,
        any::<bool>(),
        any::<u64>(),
        1_000u64..=10_000,
    );
    let mut runner = TestRunner::new_with_rng(
        PropConfig {
            cases: 40,
            failure_persistence: None,
            ..PropConfig::default()
        },
        proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    );
    let runs = Cell::new(0u64);
    let events = Cell::new(0u64);
    let result = runner.run(&strategy, |(n, k, s, extra, ratio, memory, seed, updates)| {
        let k = k.min(n - 1);
        let s = s.min(n);
        let m = (n + extra).max(k + 2);
        prop_assume!(!(m == n && s < n));
        let scheme = if memory { Scheme::Memory } else { Scheme::Memoryless };
        let cfg = homogeneous(k, n, s, m, 1.0, ratio, scheme);
        let horizon = Horizon::Updates(updates);
        let mut replay = Replay::new(&cfg);
        let observed: Result<SimStats, _> = run_simulation_with(&cfg, horizon, seed, &SimOptions::default(), &mut replay);
        replay.settle();
        if !replay.errors.is_empty() {
            return Err(TestCaseError::fail(format!("{scheme} k={k} n={n} s={s} m={m}: {}", replay.errors.join("; "))));
        }
        let plain = run_simulation(&cfg, horizon, seed);
        let again = run_simulation(&cfg, horizon, seed);
        match (observed, plain, again) {
            (Ok(a), Ok(b), Ok(c)) => prop_assert!(a == b && b == c, "runs differ for seed {seed}"),
            // Rare-decode corners may end without a full cycle; that must be
            // reproducible too.
            (Err(a), Err(b), Err(c)) => prop_assert!(a == b && b == c),
            _ => return Err(TestCaseError::fail("observed and plain runs disagree")),
        }
        runs.set(runs.get() + 1);
        events.set(events.get() + replay.events);
        Ok(())
    });
    match result {
        Ok(()) => Ok(format!("{} randomized runs, {} events replayed", runs.get(), events.get())),
        Err(e) => Err(e.to_string()),
    }
}

fn renewal_reward_consistency() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    let mut nodes = 0;
    for i in 0..50 {
        let p = random_point(&mut rng, 8);
        let scheme = if i % 2 == 0 { Scheme::Memory } else { Scheme::Memoryless };
        let st = run_simulation(&homogeneous(p.k, p.n, p.s, p.m, p.ls, p.le, scheme), Horizon::Updates(2000), i)
            .map_err(|e| e.to_string())?;
        for node in &st.nodes {
            nodes += 1;
            let c = &node.cycles;
            let direct = node.window_integral / node.window_length;
            let renewal = c.sum_r / c.sum_l;
            let e = if renewal == 0.0 { direct.abs() } else { rel(direct, renewal) };
            worst = worst.max(e);
            if e > 1e-9 {
                failures.push(format!("config {i} node {}: {direct} vs {renewal}", node.node));
            }
        }
    }
    verdict(failures, format!("50 configs, {nodes} nodes, worst relative difference {worst:.2e}"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("memory total-key class ages", memory_total_key_reproduction),
        ("memoryless partial-key class ages", memoryless_partial_reproduction),
        ("partial-key bound containment", partial_key_containment),
        ("large-network asymptotes", asymptotics),
        ("race oracles vs Monte Carlo", race_monte_carlo),
        ("memoryless success-run length", success_run_length),
        ("memoryless at least memory", scheme_ordering),
        ("critical gossip rate table", critical_rate_table),
        ("protocol invariants", protocol_invariants),
        ("renewal-reward consistency", renewal_reward_consistency),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail} [{secs:.1} s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {detail} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
