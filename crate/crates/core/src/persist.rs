//! Config parsing and run bundles.
//!
//! A bundle directory holds `rounds.csv`, `messages.jsonl`, `states.csv` and
//! `run.json`. Reals are written as fixed six-decimal text with LF line
//! endings, so identical telemetry always produces identical bytes. Opinion
//! poles are Red = 0, Blue = 1.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::Side;
use crate::engine::{
    broadcaster_for, classify_alignment, EngineError, MessageRecord, Outcome, OutcomeKind, RoundRecord, RunTelemetry,
    SimConfig, Snapshot, STREAM_INIT_EPSILON, STREAM_INIT_OPINION, STREAM_INIT_SUSCEPTIBILITY, STREAM_ROUND_EDGES,
};
use crate::metrics::{mean_and_variance, AlignmentCounts};

pub const ROUNDS_HEADER: &str = "round,broadcaster,potency,cost,blue_energy,n_red,n_neutral,n_blue,mean_opinion,var_opinion,accepted,rejected,backfired,class_change_rate";
pub const STATES_HEADER: &str = "round,node_id,opinion";
pub const ROUNDS_FILE: &str = "rounds.csv";
pub const MESSAGES_FILE: &str = "messages.jsonl";
pub const STATES_FILE: &str = "states.csv";
pub const RUN_FILE: &str = "run.json";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("config invalid at `{path}`: {reason}")]
    Validation { path: String, reason: String },
}

impl ConfigError {
    pub fn path(&self) -> Option<&str> {
        match self {
            ConfigError::Validation { path, .. } => Some(path),
            ConfigError::Parse { .. } => None,
        }
    }
}

/// Parses and validates a JSON config. Missing keys take defaults; unknown
/// keys are rejected.
pub fn load_config(text: &str) -> Result<SimConfig, ConfigError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let config: SimConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_data() {
            ConfigError::Validation { path, reason: inner.to_string() }
        } else {
            ConfigError::Parse { line: inner.line(), column: inner.column(), message: inner.to_string() }
        }
    })?;
    de.end().map_err(|e| ConfigError::Parse { line: e.line(), column: e.column(), message: e.to_string() })?;
    config.validate().map_err(|e| match e {
        EngineError::ConfigInvalid { path, reason } => ConfigError::Validation { path, reason },
        other => ConfigError::Validation { path: String::new(), reason: other.to_string() },
    })?;
    Ok(config)
}

/// Six-decimal fixed notation, never `-0.000000`.
pub fn fmt6(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

/// Exact decimal for an amount in cents: `0`, `7`, `1.5`, `0.25`.
pub fn fmt_cents(cents: i64) -> String {
    let (whole, frac) = (cents / 100, (cents % 100).abs());
    match frac {
        0 => whole.to_string(),
        f if f % 10 == 0 => format!("{whole}.{}", f / 10),
        f => format!("{whole}.{f:02}"),
    }
}

fn parse_cents(text: &str) -> Option<i64> {
    let v: f64 = text.parse().ok()?;
    let scaled = (v * 100.0).round();
    ((v * 100.0 - scaled).abs() < 1e-6).then_some(scaled as i64)
}

pub fn export_rounds_csv(t: &RunTelemetry) -> String {
    let mut out = String::with_capacity(64 * (t.rounds.len() + 1));
    out.push_str(ROUNDS_HEADER);
    out.push('\n');
    for r in &t.rounds {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.round,
            r.broadcaster,
            r.potency,
            fmt_cents(r.cost_cents),
            fmt6(r.blue_energy_cents as f64 / 100.0),
            r.counts.red,
            r.counts.neutral,
            r.counts.blue,
            fmt6(r.mean_opinion),
            fmt6(r.var_opinion),
            r.accepted,
            r.rejected,
            r.backfired,
            fmt6(r.class_change_rate()),
        );
    }
    out
}

pub fn export_messages_jsonl(t: &RunTelemetry) -> String {
    let mut out = String::new();
    for m in &t.messages {
        out.push_str(&serde_json::to_string(m).expect("message record serializes"));
        out.push('\n');
    }
    out
}

pub fn export_states_csv(t: &RunTelemetry) -> String {
    let mut out = String::with_capacity(20 * t.n * t.snapshots.len() + 32);
    out.push_str(STATES_HEADER);
    out.push('\n');
    for s in &t.snapshots {
        for (i, &x) in s.opinions.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", s.round, i, fmt6(x));
        }
    }
    out
}

/// The polarization time series: `round,n_red,n_neutral,n_blue,var_opinion`.
pub fn export_polarization_csv(t: &RunTelemetry) -> String {
    let mut out = String::from("round,n_red,n_neutral,n_blue,var_opinion\n");
    for row in crate::metrics::polarization_series(t) {
        let c = row.counts;
        let _ = writeln!(out, "{},{},{},{},{}", row.round, c.red, c.neutral, c.blue, fmt6(row.var_opinion));
    }
    out
}

/// All evaluation metrics in long form: `metric,scope,value`. Per-node
/// resilience is left empty for nodes never challenged, and for every node
/// when the run kept only strided snapshots.
pub fn export_metrics_csv(t: &RunTelemetry) -> Result<String, crate::metrics::MetricsError> {
    use crate::metrics::{final_distribution, node_resilience, resource_efficiency, temporal_evolution};
    let band = t.neutral_band;
    let fin = final_distribution(t, band)?;
    let eff = resource_efficiency(t, band)?;
    let mut out = String::from("metric,scope,value\n");
    let _ = writeln!(out, "final_n_red,network,{}", fin.red);
    let _ = writeln!(out, "final_n_neutral,network,{}", fin.neutral);
    let _ = writeln!(out, "final_n_blue,network,{}", fin.blue);
    let _ = writeln!(out, "blue_energy_spent,network,{}", fmt6(eff.spent));
    let _ = writeln!(out, "blue_gain,network,{}", eff.blue_gain);
    let _ = writeln!(out, "resource_efficiency,network,{}", fmt6(eff.value));
    let _ = writeln!(out, "resource_efficiency_degenerate,network,{}", u8::from(eff.degenerate));
    match node_resilience(t, band) {
        Ok(per_node) => {
            for (i, r) in per_node.iter().enumerate() {
                let _ = writeln!(out, "resilience,node:{i},{}", r.map(fmt6).unwrap_or_default());
            }
        }
        Err(_) => out.push_str("resilience,network,\n"),
    }
    for row in temporal_evolution(t)? {
        let _ = writeln!(out, "delta_mean_opinion,round:{},{}", row.round, fmt6(row.delta_mean_opinion));
        let _ = writeln!(out, "class_change_rate,round:{},{}", row.round, fmt6(row.class_change_rate));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentsMeta {
    pub red: String,
    pub blue: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkMeta {
    pub nodes: usize,
    pub edges: usize,
    pub components: usize,
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_labels_file: Option<String>,
}

/// Contents of `run.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub tool_version: String,
    pub config: SimConfig,
    pub outcome: OutcomeKind,
    pub termination_round: u32,
    pub wall_clock_seconds: f64,
    pub rng_streams: Vec<String>,
    pub pole_convention: String,
    pub network: NetworkMeta,
    pub agents: AgentsMeta,
    pub events: Vec<String>,
}

impl RunMeta {
    pub fn new(config: SimConfig, t: &RunTelemetry, network: NetworkMeta, agents: AgentsMeta, wall_clock_seconds: f64) -> Self {
        let outcome = t.outcome.unwrap_or(Outcome {
            kind: OutcomeKind::Stalemate,
            at_round: t.rounds.len() as u32,
        });
        RunMeta {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            outcome: outcome.kind,
            termination_round: outcome.at_round,
            wall_clock_seconds,
            rng_streams: vec![
                STREAM_INIT_OPINION.to_string(),
                STREAM_INIT_SUSCEPTIBILITY.to_string(),
                STREAM_INIT_EPSILON.to_string(),
                STREAM_ROUND_EDGES.to_string(),
            ],
            pole_convention: "red=0.0 blue=1.0".to_string(),
            network,
            agents,
            events: t.events.clone(),
        }
    }
}

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("{file}: {reason}")]
    Inconsistent { file: &'static str, reason: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl BundleError {
    pub fn file(&self) -> Option<&'static str> {
        match self {
            BundleError::Inconsistent { file, .. } => Some(file),
            BundleError::Io { .. } => None,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BundleError + '_ {
    move |source| BundleError::Io { path: path.to_path_buf(), source }
}

/// Writes the four bundle files into `dir`, creating it if needed.
pub fn write_bundle(dir: &Path, t: &RunTelemetry, meta: &RunMeta) -> Result<(), BundleError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let files = [
        (ROUNDS_FILE, export_rounds_csv(t)),
        (MESSAGES_FILE, export_messages_jsonl(t)),
        (STATES_FILE, export_states_csv(t)),
        (RUN_FILE, serde_json::to_string_pretty(meta).expect("run meta serializes") + "\n"),
    ];
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(io_err(&path))?;
    }
    Ok(())
}

/// A bundle read back from disk.
#[derive(Debug, Clone)]
pub struct LoadedBundle {
    pub meta: RunMeta,
    pub telemetry: RunTelemetry,
    /// Raw `rounds.csv` fields, for print-precision comparisons.
    pub rounds_text: String,
}

fn bad(file: &'static str, reason: impl Into<String>) -> BundleError {
    BundleError::Inconsistent { file, reason: reason.into() }
}

fn read(dir: &Path, name: &str) -> Result<String, BundleError> {
    let path = dir.join(name);
    fs::read_to_string(&path).map_err(io_err(&path))
}

/// Reads a bundle and checks it for internal consistency: row counts,
/// alternation, energy ledger, message/round agreement, and per-round counts
/// and variance recomputed from `states.csv`.
pub fn read_bundle(dir: &Path) -> Result<LoadedBundle, BundleError> {
    let meta_text = read(dir, RUN_FILE)?;
    let meta: RunMeta = serde_json::from_str(&meta_text).map_err(|e| bad("run.json", e.to_string()))?;
    let config_echo = serde_json::to_string(&meta.config).expect("config serializes");
    load_config(&config_echo).map_err(|e| bad("run.json", format!("config echo: {e}")))?;
    let n = meta.network.nodes;
    let band = meta.config.termination.neutral_band;
    let e0 = crate::engine::to_cents(meta.config.economics.initial_energy, "").map_err(|e| bad("run.json", e.to_string()))?;

    let rounds_text = read(dir, ROUNDS_FILE)?;
    let rounds = parse_rounds(&rounds_text, n)?;
    if rounds.len() as u32 != meta.termination_round {
        return Err(bad(
            "rounds.csv",
            format!("{} rows but run.json reports termination at round {}", rounds.len(), meta.termination_round),
        ));
    }
    let mut energy = e0;
    for r in &rounds {
        if r.broadcaster == Side::Blue {
            energy -= r.cost_cents;
        }
        if r.blue_energy_cents != energy || energy < 0 {
            return Err(bad("rounds.csv", format!("round {}: energy ledger broken", r.round)));
        }
    }

    let messages = parse_messages(&read(dir, MESSAGES_FILE)?)?;
    if messages.len() != rounds.len() {
        return Err(bad("messages.jsonl", format!("{} lines for {} rounds", messages.len(), rounds.len())));
    }
    for (m, r) in messages.iter().zip(&rounds) {
        let cost = parse_cents(&m.cost.to_string());
        if m.round != r.round || m.side != r.broadcaster || m.potency != r.potency || cost != Some(r.cost_cents) {
            return Err(bad("messages.jsonl", format!("round {}: disagrees with rounds.csv", r.round)));
        }
        if (m.accepted, m.rejected, m.backfired) != (r.accepted, r.rejected, r.backfired) {
            return Err(bad("messages.jsonl", format!("round {}: effect tallies disagree with rounds.csv", r.round)));
        }
    }

    let snapshots = parse_states(&read(dir, STATES_FILE)?, n)?;
    let stride = meta.config.snapshot_stride.max(1);
    let last = rounds.len() as u32;
    let mut expected: Vec<u32> = (0..=last).filter(|r| r % stride == 0).collect();
    if expected.last() != Some(&last) {
        expected.push(last);
    }
    let got: Vec<u32> = snapshots.iter().map(|s| s.round).collect();
    if got != expected {
        return Err(bad("states.csv", format!("snapshot rounds {got:?}, expected {expected:?}")));
    }
    for s in snapshots.iter().skip(1) {
        let r = &rounds[s.round as usize - 1];
        let counts = crate::metrics::alignment_distribution(&s.opinions, band);
        if counts != r.counts {
            return Err(bad("states.csv", format!("round {}: alignment counts disagree with rounds.csv", s.round)));
        }
        let (mean, var) = mean_and_variance(&s.opinions);
        let (mean, var) = (crate::engine::quantize(mean), crate::engine::quantize(var));
        if (var - r.var_opinion).abs() > 1e-9 || (mean - r.mean_opinion).abs() > 1e-9 {
            return Err(bad("states.csv", format!("round {}: mean/variance disagree with rounds.csv", s.round)));
        }
    }
    // class changes are only checkable between consecutive snapshots
    for pair in snapshots.windows(2) {
        if pair[1].round != pair[0].round + 1 {
            continue;
        }
        let changed = pair[0]
            .opinions
            .iter()
            .zip(&pair[1].opinions)
            .filter(|(&a, &b)| classify_alignment(a, band) != classify_alignment(b, band))
            .count();
        if changed != rounds[pair[1].round as usize - 1].class_change_count {
            return Err(bad("states.csv", format!("round {}: class changes disagree with rounds.csv", pair[1].round)));
        }
    }

    let outcome = Some(Outcome { kind: meta.outcome, at_round: meta.termination_round });
    let telemetry = RunTelemetry {
        n,
        neutral_band: band,
        initial_energy_cents: e0,
        snapshot_stride: stride,
        rounds,
        messages,
        snapshots,
        outcome,
        events: meta.events.clone(),
    };
    Ok(LoadedBundle { meta, telemetry, rounds_text })
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, file: &'static str, line: usize) -> Result<T, BundleError> {
    rec.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad(file, format!("line {line}: bad or missing column {}", i + 1)))
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes())
}

fn parse_rounds(text: &str, n: usize) -> Result<Vec<RoundRecord>, BundleError> {
    const F: &str = "rounds.csv";
    if text.lines().next() != Some(ROUNDS_HEADER) {
        return Err(bad(F, "missing or wrong header"));
    }
    let mut out = Vec::new();
    for (i, row) in csv_reader(text).records().enumerate() {
        let line = i + 2;
        let rec = row.map_err(|e| bad(F, format!("line {line}: {e}")))?;
        if rec.len() != 14 {
            return Err(bad(F, format!("line {line}: expected 14 columns, got {}", rec.len())));
        }
        let round: u32 = field(&rec, 0, F, line)?;
        if round as usize != out.len() + 1 {
            return Err(bad(F, format!("line {line}: round {round} out of sequence")));
        }
        let broadcaster: Side = field(&rec, 1, F, line)?;
        if broadcaster != broadcaster_for(round) {
            return Err(bad(F, format!("line {line}: wrong broadcaster for round {round}")));
        }
        let cost_cents = parse_cents(&rec[3]).ok_or_else(|| bad(F, format!("line {line}: bad cost")))?;
        let blue_energy_cents = parse_cents(&rec[4]).ok_or_else(|| bad(F, format!("line {line}: bad blue_energy")))?;
        let counts = AlignmentCounts {
            red: field(&rec, 5, F, line)?,
            neutral: field(&rec, 6, F, line)?,
            blue: field(&rec, 7, F, line)?,
        };
        if counts.total() != n {
            return Err(bad(F, format!("line {line}: counts sum to {} but n={n}", counts.total())));
        }
        let rate: f64 = field(&rec, 13, F, line)?;
        out.push(RoundRecord {
            round,
            broadcaster,
            potency: field(&rec, 2, F, line)?,
            cost_cents,
            blue_energy_cents,
            counts,
            mean_opinion: field(&rec, 8, F, line)?,
            var_opinion: field(&rec, 9, F, line)?,
            accepted: field(&rec, 10, F, line)?,
            rejected: field(&rec, 11, F, line)?,
            backfired: field(&rec, 12, F, line)?,
            class_change_count: (rate * n as f64).round() as usize,
            fallback: false,
        });
    }
    Ok(out)
}

fn parse_messages(text: &str) -> Result<Vec<MessageRecord>, BundleError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| bad("messages.jsonl", format!("line {}: {e}", i + 1))))
        .collect()
}

fn parse_states(text: &str, n: usize) -> Result<Vec<Snapshot>, BundleError> {
    const F: &str = "states.csv";
    if text.lines().next() != Some(STATES_HEADER) {
        return Err(bad(F, "missing or wrong header"));
    }
    let mut snaps: Vec<Snapshot> = Vec::new();
    for (i, row) in csv_reader(text).records().enumerate() {
        let line = i + 2;
        let rec = row.map_err(|e| bad(F, format!("line {line}: {e}")))?;
        let round: u32 = field(&rec, 0, F, line)?;
        let node: usize = field(&rec, 1, F, line)?;
        let x: f64 = field(&rec, 2, F, line)?;
        if !(0.0..=1.0).contains(&x) {
            return Err(bad(F, format!("line {line}: opinion {x} outside [0,1]")));
        }
        let start_new = snaps.last().is_none_or(|s| s.round != round);
        if start_new {
            if let Some(prev) = snaps.last() {
                if prev.opinions.len() != n || round <= prev.round {
                    return Err(bad(F, format!("line {line}: snapshot for round {} is incomplete or out of order", prev.round)));
                }
            }
            snaps.push(Snapshot { round, opinions: Vec::with_capacity(n) });
        }
        let snap = snaps.last_mut().expect("pushed above");
        if node != snap.opinions.len() {
            return Err(bad(F, format!("line {line}: expected node {} got {node}", snap.opinions.len())));
        }
        snap.opinions.push(x);
    }
    match snaps.last() {
        Some(s) if s.opinions.len() != n => {
            Err(bad(F, format!("snapshot for round {} has {} of {n} nodes", s.round, s.opinions.len())))
        }
        None => Err(bad(F, "no snapshots")),
        _ => Ok(snaps),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Distribution, OutcomeKind};

    #[test]
    fn empty_config_is_all_defaults() {
        assert_eq!(load_config("{}").unwrap(), SimConfig::default());
    }

    #[test]
    fn range_violation_names_field() {
        let e = load_config(r#"{"dynamics":{"mu":0.9}}"#).unwrap_err();
        assert_eq!(e.path(), Some("dynamics.mu"));
    }

    #[test]
    fn partial_config_keeps_defaults() {
        let c = load_config(r#"{"seed":42,"topic":"water fluoridation"}"#).unwrap();
        assert_eq!(c.seed, 42);
        assert_eq!(c.topic, "water fluoridation");
        assert_eq!(c.dynamics, SimConfig::default().dynamics);
    }

    #[test]
    fn unknown_keys_rejected_with_path() {
        let e = load_config(r#"{"dynamics":{"muu":0.2}}"#).unwrap_err();
        assert_eq!(e.path(), Some("dynamics.muu"));
        assert!(e.to_string().contains("muu"));
        assert!(load_config(r#"{"sead":1}"#).is_err());
    }

    #[test]
    fn syntax_error_has_position() {
        match load_config("{\n  \"seed\": ,\n}") {
            Err(ConfigError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(load_config("{} trailing"), Err(ConfigError::Parse { .. })));
    }

    #[test]
    fn tagged_sections_parse() {
        let c = load_config(
            r#"{"init":{"opinion":{"kind":"bimodal","lo":0.1,"hi":0.9,"fraction":0.3}},
                "interaction":{"scheme":{"kind":"sampled_edges","m":25},"peer_rule":"symmetric"}}"#,
        )
        .unwrap();
        assert_eq!(c.init.opinion, Distribution::Bimodal { lo: 0.1, hi: 0.9, fraction: 0.3 });
        assert!(load_config(r#"{"init":{"opinion":{"kind":"constant","value":0.5,"x":1}}}"#).is_err());
        let u = load_config(r#"{"init":{"opinion":{"kind":"uniform"}}}"#).unwrap();
        assert_eq!(u.init.opinion, Distribution::Uniform { lo: 0.0, hi: 1.0 });
    }

    #[test]
    fn config_echo_round_trips() {
        let c = load_config(r#"{"seed":7,"economics":{"initial_energy":12.5,"cost_coefficient":0.25},"init":{"confidence_bound":{"kind":"beta","a":2,"b":5}}}"#).unwrap();
        let echo = serde_json::to_string_pretty(&c).unwrap();
        assert_eq!(load_config(&echo).unwrap(), c);
    }

    #[test]
    fn cents_formatting() {
        assert_eq!(fmt_cents(0), "0");
        assert_eq!(fmt_cents(700), "7");
        assert_eq!(fmt_cents(150), "1.5");
        assert_eq!(fmt_cents(25), "0.25");
        assert_eq!(fmt_cents(1005), "10.05");
        for c in [0, 1, 10, 99, 100, 101, 12345] {
            assert_eq!(parse_cents(&fmt_cents(c)), Some(c));
        }
    }

    #[test]
    fn fmt6_never_negative_zero() {
        assert_eq!(fmt6(-0.0), "0.000000");
        assert_eq!(fmt6(-1e-9), "0.000000");
        assert_eq!(fmt6(1.0), "1.000000");
    }

    fn empty_telemetry() -> RunTelemetry {
        RunTelemetry {
            n: 2,
            neutral_band: 0.05,
            initial_energy_cents: 10_000,
            snapshot_stride: 1,
            rounds: vec![],
            messages: vec![],
            snapshots: vec![Snapshot { round: 0, opinions: vec![0.0, 1.0] }],
            outcome: Some(Outcome { kind: OutcomeKind::Stalemate, at_round: 0 }),
            events: vec![],
        }
    }

    #[test]
    fn zero_round_exports() {
        let t = empty_telemetry();
        assert_eq!(export_rounds_csv(&t), format!("{ROUNDS_HEADER}\n"));
        assert_eq!(export_messages_jsonl(&t), "");
        assert_eq!(export_states_csv(&t), "round,node_id,opinion\n0,0,0.000000\n0,1,1.000000\n");
    }
}
