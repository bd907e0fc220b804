//! Command-line surface.
//!
//! Exit codes: 0 success (a stalemate is a success), 1 runtime failure or a
//! run declined at the prompt, 2 invalid flags or config, 3 missing
//! credentials, 4 inconsistent run bundle.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::agents::{Agent, AgentError, HeuristicAgent, LlmAgent, LlmBackendConfig, ScriptedAgent, TranscriptAgent};
use crate::dynamics::Side;
use crate::engine::{run_simulation, EngineError, SimConfig};
use crate::metrics::{final_distribution, node_resilience, resource_efficiency, temporal_evolution};
use crate::net::{generate_graph, load_edge_list, load_labeled_edge_list, GraphKind, GraphParams, NetError, OpinionNetwork};
use crate::persist::{self, AgentsMeta, BundleError, NetworkMeta, RunMeta};

#[derive(Debug, Parser)]
#[command(name = "infowar", version, about = "Red/blue influence wargame on bounded-confidence opinion networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random network and write it as an edge list.
    GenerateGraph(GenerateArgs),
    /// Run a simulation and write a run bundle.
    Run(RunArgs),
    /// Recompute metrics from a run bundle.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args, Clone)]
pub struct GeneratorFlags {
    /// complete, erdos_renyi, barabasi_albert or watts_strogatz
    #[arg(long)]
    pub kind: Option<GraphKind>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Erdős–Rényi edge probability
    #[arg(long)]
    pub p: Option<f64>,
    /// Barabási–Albert attachments per node
    #[arg(long)]
    pub m: Option<usize>,
    /// Watts–Strogatz ring degree
    #[arg(long)]
    pub k: Option<usize>,
    /// Watts–Strogatz rewiring probability
    #[arg(long)]
    pub beta: Option<f64>,
}

impl GeneratorFlags {
    fn params(&self) -> GraphParams {
        let d = GraphParams::default();
        GraphParams {
            p: self.p.unwrap_or(d.p),
            m: self.m.unwrap_or(d.m),
            k: self.k.unwrap_or(d.k),
            beta: self.beta.unwrap_or(d.beta),
        }
    }

    fn build(&self, seed: u64) -> Result<(OpinionNetwork, String), CliError> {
        let kind = self.kind.ok_or_else(|| CliError::Validation("--kind is required".into()))?;
        let n = self.n.ok_or_else(|| CliError::Validation("--n is required".into()))?;
        let net = generate_graph(kind, &self.params(), n, seed).map_err(net_error)?;
        Ok((net, format!("generated:{}:n={n}:seed={seed}", kind.as_str())))
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub generator: GeneratorFlags,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON config; omitted keys take defaults
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Edge list to load instead of generating a network
    #[arg(long, conflicts_with = "kind")]
    pub graph: Option<PathBuf>,
    /// Treat edge-list ids as labels and remap them to dense ids
    #[arg(long, requires = "graph")]
    pub remap_ids: bool,
    #[command(flatten)]
    pub generator: GeneratorFlags,
    /// Seed for a generated network (defaults to the run seed)
    #[arg(long)]
    pub graph_seed: Option<u64>,
    /// Overrides the config seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// heuristic | scripted:<path> | transcript:<path> | llm:<config-path>
    #[arg(long, default_value = "heuristic")]
    pub red: String,
    #[arg(long, default_value = "heuristic")]
    pub blue: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub topic: Option<String>,
    /// Skip the confirmation prompt
    #[arg(long)]
    pub yes: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Run bundle directory
    pub run_dir: PathBuf,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Credentials(String),
    #[error("inconsistent run bundle: {0}")]
    Bundle(String),
    #[error("{0}")]
    Runtime(String),
    #[error("run declined; nothing written")]
    Declined,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Credentials(_) => 3,
            CliError::Bundle(_) => 4,
            CliError::Runtime(_) | CliError::Declined => 1,
        }
    }
}

fn net_error(e: NetError) -> CliError {
    match e {
        NetError::InvalidParams { name, reason } => CliError::Validation(format!("invalid value for --{name}: {reason}")),
        other => CliError::Validation(other.to_string()),
    }
}

fn read_file(path: &Path, what: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("cannot read {what} {}: {e}", path.display())))
}

/// Agent selection as given on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AgentSpec {
    Heuristic,
    Scripted(PathBuf),
    Transcript(PathBuf),
    Llm(PathBuf),
}

impl std::str::FromStr for AgentSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "heuristic" {
            return Ok(AgentSpec::Heuristic);
        }
        let (kind, path) = s.split_once(':').ok_or_else(|| format!("unknown agent `{s}`"))?;
        if path.is_empty() {
            return Err(format!("agent `{kind}` needs a path"));
        }
        let path = PathBuf::from(path);
        match kind {
            "scripted" => Ok(AgentSpec::Scripted(path)),
            "transcript" => Ok(AgentSpec::Transcript(path)),
            "llm" => Ok(AgentSpec::Llm(path)),
            _ => Err(format!("unknown agent kind `{kind}` (expected heuristic, scripted, transcript, llm)")),
        }
    }
}

/// Builds an agent. Remote backends resolve credentials here, before any
/// round runs.
pub fn build_agent(spec: &AgentSpec, side: Side, config: &SimConfig) -> Result<Box<dyn Agent>, CliError> {
    let agent: Box<dyn Agent> = match spec {
        AgentSpec::Heuristic => Box::new(HeuristicAgent::new(config.economics_view())),
        AgentSpec::Scripted(path) => {
            let text = read_file(path, "script")?;
            let agent = ScriptedAgent::from_jsonl(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            Box::new(agent.with_label(format!("scripted:{}", path.display())))
        }
        AgentSpec::Transcript(path) => {
            let text = read_file(path, "transcript")?;
            let agent =
                TranscriptAgent::from_jsonl(&text, side).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            Box::new(agent.with_label(format!("transcript:{}", path.display())))
        }
        AgentSpec::Llm(path) => {
            let text = read_file(path, "llm config")?;
            let cfg = LlmBackendConfig::from_json(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            match LlmAgent::new(cfg, side, config.dynamics.p_max) {
                Ok(a) => Box::new(a),
                Err(AgentError::AuthMissing { var }) => {
                    return Err(CliError::Credentials(format!("{side} agent: environment variable {var} is not set")))
                }
                Err(e) => return Err(CliError::Validation(e.to_string())),
            }
        }
    };
    Ok(agent)
}

fn settings_summary(config: &SimConfig, net: &NetworkMeta, red: &str, blue: &str, out: &Path) -> String {
    let d = &config.dynamics;
    let rows = [
        ("network", format!("{} nodes, {} edges, {} component(s)", net.nodes, net.edges, net.components)),
        ("graph source", net.source.clone()),
        ("red agent", red.to_string()),
        ("blue agent", blue.to_string()),
        ("seed", config.seed.to_string()),
        ("mu / p_max", format!("{} / {}", d.mu, d.p_max)),
        ("backfire", format!("p >= {} strength {} (blue: {})", d.backfire_threshold, d.backfire_strength, d.backfire_applies_to_blue)),
        ("blue energy / cost", format!("{} / {} per potency", config.economics.initial_energy, config.economics.cost_coefficient)),
        ("max rounds / neutral band", format!("{} / {}", config.termination.max_rounds, config.termination.neutral_band)),
        ("topic", if config.topic.is_empty() { "(not set)".to_string() } else { config.topic.clone() }),
        ("output", out.display().to_string()),
    ];
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut s = String::from("settings (pole convention: red=0, blue=1)\n");
    for (k, v) in rows {
        s.push_str(&format!("  {k:<width$}  {v}\n"));
    }
    s
}

fn prompt(input: &mut dyn BufRead, output: &mut dyn Write, question: &str) -> Result<String, CliError> {
    write!(output, "{question}").and_then(|_| output.flush()).map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut line = String::new();
    input.read_line(&mut line).map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(line.trim().to_string())
}

pub fn cmd_generate_graph(args: &GenerateArgs, output: &mut dyn Write) -> Result<(), CliError> {
    let (net, _) = args.generator.build(args.seed)?;
    std::fs::write(&args.out, net.to_edge_list())
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", args.out.display())))?;
    writeln!(output, "edges={}", net.edge_count()).map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(())
}

pub fn cmd_run(args: &RunArgs, input: &mut dyn BufRead, output: &mut dyn Write) -> Result<(), CliError> {
    let mut config = match &args.config {
        Some(path) => persist::load_config(&read_file(path, "config")?).map_err(|e| CliError::Validation(e.to_string()))?,
        None => SimConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(topic) = &args.topic {
        config.topic = topic.clone();
    }
    if args.yes && config.topic.is_empty() {
        return Err(CliError::Validation("--topic is required with --yes when the config sets no topic".into()));
    }
    let red_spec: AgentSpec = args.red.parse().map_err(|e| CliError::Validation(format!("--red: {e}")))?;
    let blue_spec: AgentSpec = args.blue.parse().map_err(|e| CliError::Validation(format!("--blue: {e}")))?;

    let mut labels: Option<Vec<String>> = None;
    let (net, source) = match &args.graph {
        Some(path) => {
            let text = read_file(path, "graph")?;
            let loaded = if args.remap_ids {
                let (loaded, l) = load_labeled_edge_list(&text).map_err(net_error)?;
                labels = Some(l);
                loaded
            } else {
                load_edge_list(&text, args.generator.n).map_err(net_error)?
            };
            if loaded.duplicate_count > 0 {
                writeln!(output, "warning: collapsed {} duplicate edge(s)", loaded.duplicate_count).ok();
            }
            (loaded.network, format!("file:{}", path.display()))
        }
        None => args.generator.build(args.graph_seed.unwrap_or(config.seed))?,
    };
    let mut network_meta = NetworkMeta {
        nodes: net.node_count(),
        edges: net.edge_count(),
        components: net.component_count(),
        source,
        node_labels_file: None,
    };

    let mut red = build_agent(&red_spec, Side::Red, &config)?;
    let mut blue = build_agent(&blue_spec, Side::Blue, &config)?;
    let agents = AgentsMeta { red: red.describe(), blue: blue.describe() };

    let summary = settings_summary(&config, &network_meta, &agents.red, &agents.blue, &args.out);
    output.write_all(summary.as_bytes()).map_err(|e| CliError::Runtime(e.to_string()))?;
    if !args.yes {
        if config.topic.is_empty() {
            let topic = prompt(input, output, "Topic: ")?;
            if topic.is_empty() {
                return Err(CliError::Validation("a topic is required".into()));
            }
            config.topic = topic;
        }
        let answer = prompt(input, output, "Proceed? [y/N] ")?;
        if !matches!(answer.as_str(), "y" | "Y" | "yes") {
            return Err(CliError::Declined);
        }
    }

    let started = Instant::now();
    let telemetry = run_simulation(config.clone(), &net, &mut red, &mut blue).map_err(|e| match e {
        EngineError::ConfigInvalid { .. } => CliError::Validation(e.to_string()),
        other => CliError::Runtime(other.to_string()),
    })?;
    let elapsed = started.elapsed().as_secs_f64();

    std::fs::create_dir_all(&args.out).map_err(|e| CliError::Runtime(format!("{}: {e}", args.out.display())))?;
    if let Some(labels) = labels {
        let mut text = String::from("node_id,label\n");
        for (i, l) in labels.iter().enumerate() {
            text.push_str(&format!("{i},{l}\n"));
        }
        std::fs::write(args.out.join("node_labels.csv"), text).map_err(|e| CliError::Runtime(e.to_string()))?;
        network_meta.node_labels_file = Some("node_labels.csv".into());
    }
    let meta = RunMeta::new(config, &telemetry, network_meta, agents, elapsed);
    persist::write_bundle(&args.out, &telemetry, &meta).map_err(|e| CliError::Runtime(e.to_string()))?;
    for event in &telemetry.events {
        writeln!(output, "event: {event}").ok();
    }
    writeln!(output, "outcome={} round={}", meta.outcome.as_str(), meta.termination_round)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(())
}

pub fn cmd_analyze(args: &AnalyzeArgs, output: &mut dyn Write) -> Result<(), CliError> {
    let bundle = persist::read_bundle(&args.run_dir).map_err(|e| match e {
        BundleError::Inconsistent { .. } => CliError::Bundle(e.to_string()),
        BundleError::Io { .. } => CliError::Bundle(e.to_string()),
    })?;
    let t = &bundle.telemetry;
    let band = t.neutral_band;
    let metrics_csv = persist::export_metrics_csv(t).map_err(|e| CliError::Bundle(e.to_string()))?;
    let polarization_csv = persist::export_polarization_csv(t);
    for (name, body) in [("metrics.csv", &metrics_csv), ("polarization.csv", &polarization_csv)] {
        std::fs::write(args.run_dir.join(name), body).map_err(|e| CliError::Runtime(format!("{name}: {e}")))?;
    }

    let fin = final_distribution(t, band).map_err(|e| CliError::Bundle(e.to_string()))?;
    let eff = resource_efficiency(t, band).map_err(|e| CliError::Bundle(e.to_string()))?;
    let temporal = temporal_evolution(t).map_err(|e| CliError::Bundle(e.to_string()))?;
    let mut lines = vec![
        format!("outcome={} round={}", bundle.meta.outcome.as_str(), bundle.meta.termination_round),
        format!("final alignment: red={} neutral={} blue={} (n={})", fin.red, fin.neutral, fin.blue, t.n),
        format!(
            "resource efficiency: {} (spent {}, blue gain {}){}",
            persist::fmt6(eff.value),
            persist::fmt6(eff.spent),
            eff.blue_gain,
            if eff.degenerate { " [degenerate: gain <= 0]" } else { "" }
        ),
    ];
    match node_resilience(t, band) {
        Ok(per_node) => {
            let defined: Vec<f64> = per_node.iter().flatten().copied().collect();
            if defined.is_empty() {
                lines.push("node resilience: no node was challenged".into());
            } else {
                let mean = defined.iter().sum::<f64>() / defined.len() as f64;
                lines.push(format!("node resilience: mean {} over {} challenged node(s)", persist::fmt6(mean), defined.len()));
            }
        }
        Err(e) => lines.push(format!("node resilience: unavailable ({e})")),
    }
    if !temporal.is_empty() {
        let k = temporal.len() as f64;
        let drift = temporal.iter().map(|r| r.delta_mean_opinion.abs()).sum::<f64>() / k;
        let churn = temporal.iter().map(|r| r.class_change_rate).sum::<f64>() / k;
        lines.push(format!(
            "temporal evolution: mean |delta mean opinion| {} per round, mean class change rate {}",
            persist::fmt6(drift),
            persist::fmt6(churn)
        ));
    }
    for l in lines {
        writeln!(output, "{l}").map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    Ok(())
}

/// Dispatches a parsed command. Returns the process exit code.
pub fn run(cli: &Cli, input: &mut dyn BufRead, output: &mut dyn Write, errors: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::GenerateGraph(args) => cmd_generate_graph(args, output),
        Command::Run(args) => cmd_run(args, input, output),
        Command::Analyze(args) => cmd_analyze(args, output),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            writeln!(errors, "error: {e}").ok();
            e.exit_code()
        }
    }
}
