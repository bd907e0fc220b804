//! The round loop.
//!
//! Round `r` runs in a fixed phase order:
//!
//! 1. broadcaster is Red on odd rounds, Blue on even rounds;
//! 2. the broadcaster acts on the current [`Observation`];
//! 3. potency is clamped to what the broadcaster can afford and the cost is
//!    charged (potency 0 is a free skip);
//! 4. the broadcast hits every node in ascending id order;
//! 5. a peer sweep visits edges in the order drawn from the `round.{r}.edges`
//!    stream, updating immediately;
//! 6. observables are recorded and termination is checked.
//!
//! Recorded observables (counts, mean, variance, class changes) are computed
//! on opinions rounded to six decimals, the same values written to
//! `states.csv`, and mean and variance are themselves kept on that grid. Every
//! exported file can therefore be recomputed from the others.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{heuristic_policy, Agent, AgentAction, AgentError, EconomicsView, Energy, Observation};
use crate::dynamics::{broadcast_update, peer_update_directed, peer_update_symmetric, DynamicsParams, Effect, GreenNodeState, Side};
use crate::metrics::{alignment_distribution, mean_and_variance, AlignmentCounts};
use crate::net::OpinionNetwork;
use crate::rng::Stream;

pub const STREAM_INIT_OPINION: &str = "init.opinion";
pub const STREAM_INIT_SUSCEPTIBILITY: &str = "init.susc";
pub const STREAM_INIT_EPSILON: &str = "init.eps";
pub const STREAM_ROUND_EDGES: &str = "round.{r}.edges";

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid config at `{path}`: {reason}")]
    ConfigInvalid { path: String, reason: String },
    #[error("agent failure: {0}")]
    Agent(#[from] AgentError),
    #[error("simulation already terminated")]
    Terminated,
}

fn invalid(path: &str, reason: impl Into<String>) -> EngineError {
    EngineError::ConfigInvalid { path: path.to_string(), reason: reason.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Distribution {
    Uniform {
        #[serde(default)]
        lo: f64,
        #[serde(default = "one")]
        hi: f64,
    },
    Constant {
        value: f64,
    },
    /// `lo` with probability `fraction`, otherwise `hi`.
    Bimodal {
        lo: f64,
        hi: f64,
        fraction: f64,
    },
    Beta {
        a: f64,
        b: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl Distribution {
    fn validate(&self, path: &str, open_at_zero: bool) -> Result<(), EngineError> {
        let in_range = |v: f64| if open_at_zero { v > 0.0 && v <= 1.0 } else { (0.0..=1.0).contains(&v) };
        let want = if open_at_zero { "(0, 1]" } else { "[0, 1]" };
        match *self {
            Distribution::Uniform { lo, hi } => {
                if !in_range(lo) || !in_range(hi) || lo > hi {
                    return Err(invalid(path, format!("uniform needs lo <= hi within {want}")));
                }
            }
            Distribution::Constant { value } => {
                if !in_range(value) {
                    return Err(invalid(path, format!("constant value must be in {want}")));
                }
            }
            Distribution::Bimodal { lo, hi, fraction } => {
                if !in_range(lo) || !in_range(hi) {
                    return Err(invalid(path, format!("bimodal modes must be in {want}")));
                }
                if !(0.0..=1.0).contains(&fraction) {
                    return Err(invalid(path, "bimodal fraction must be in [0, 1]"));
                }
            }
            Distribution::Beta { a, b } => {
                if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
                    return Err(invalid(path, "beta shape parameters must be positive"));
                }
            }
        }
        Ok(())
    }

    fn sample(&self, rng: &mut Stream) -> f64 {
        match *self {
            Distribution::Uniform { lo, hi } => lo + rng.next_f64() * (hi - lo),
            Distribution::Constant { value } => value,
            Distribution::Bimodal { lo, hi, fraction } => {
                if rng.next_f64() < fraction {
                    lo
                } else {
                    hi
                }
            }
            Distribution::Beta { a, b } => {
                use rand_distr::Distribution as _;
                // parameters were validated
                rand_distr::Beta::new(a, b).expect("validated beta").sample(rng)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EconomicsConfig {
    pub initial_energy: f64,
    pub cost_coefficient: f64,
    /// `None` is unlimited.
    pub red_budget: Option<f64>,
}

impl Default for EconomicsConfig {
    fn default() -> Self {
        EconomicsConfig { initial_energy: 100.0, cost_coefficient: 1.0, red_budget: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TerminationConfig {
    pub max_rounds: u32,
    pub neutral_band: f64,
}

impl Default for TerminationConfig {
    fn default() -> Self {
        TerminationConfig { max_rounds: 100, neutral_band: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InteractionScheme {
    /// Every edge once per round, in a shuffled order.
    AllEdgesShuffled,
    /// `m` edges drawn uniformly with replacement per round.
    SampledEdges { m: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeerRule {
    /// Only the edge target moves, scaled by its susceptibility.
    Directed,
    /// Classic mutual step; gate uses the smaller of the two bounds.
    Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InteractionConfig {
    pub scheme: InteractionScheme,
    pub peer_rule: PeerRule,
}

impl Default for InteractionConfig {
    fn default() -> Self {
        InteractionConfig { scheme: InteractionScheme::AllEdgesShuffled, peer_rule: PeerRule::Directed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitConfig {
    pub opinion: Distribution,
    pub susceptibility: Distribution,
    pub confidence_bound: Distribution,
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig {
            opinion: Distribution::Uniform { lo: 0.0, hi: 1.0 },
            susceptibility: Distribution::Uniform { lo: 0.5, hi: 1.0 },
            confidence_bound: Distribution::Constant { value: 0.25 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub seed: u64,
    pub topic: String,
    pub dynamics: DynamicsParams,
    pub economics: EconomicsConfig,
    pub termination: TerminationConfig,
    pub interaction: InteractionConfig,
    pub init: InitConfig,
    /// Keep every k-th round's opinion snapshot (round 0 and the final
    /// round are always kept).
    pub snapshot_stride: u32,
    /// Reserved: both agents broadcasting in one round. Not implemented.
    pub both_per_round: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 0,
            topic: String::new(),
            dynamics: DynamicsParams::default(),
            economics: EconomicsConfig::default(),
            termination: TerminationConfig::default(),
            interaction: InteractionConfig::default(),
            init: InitConfig::default(),
            snapshot_stride: 1,
            both_per_round: false,
        }
    }
}

/// Converts a money amount to integer cents, rejecting sub-cent precision.
pub fn to_cents(value: f64, path: &str) -> Result<i64, EngineError> {
    if !value.is_finite() || value < 0.0 {
        return Err(invalid(path, "must be a finite non-negative amount"));
    }
    let scaled = value * 100.0;
    let cents = scaled.round();
    if (scaled - cents).abs() > 1e-6 || cents > 1e15 {
        return Err(invalid(path, "must have at most two decimal places"));
    }
    Ok(cents as i64)
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        self.dynamics.validate().map_err(|e| match e {
            crate::dynamics::DynamicsError::InvalidParam { field, reason } => invalid(&format!("dynamics.{field}"), reason),
            other => invalid("dynamics", other.to_string()),
        })?;
        to_cents(self.economics.initial_energy, "economics.initial_energy")?;
        if to_cents(self.economics.cost_coefficient, "economics.cost_coefficient")? < 1 {
            return Err(invalid("economics.cost_coefficient", "must be > 0"));
        }
        if let Some(b) = self.economics.red_budget {
            to_cents(b, "economics.red_budget")?;
        }
        if self.termination.max_rounds < 1 {
            return Err(invalid("termination.max_rounds", "must be at least 1"));
        }
        let band = self.termination.neutral_band;
        if !(0.0..0.5).contains(&band) {
            return Err(invalid("termination.neutral_band", "must be in [0, 0.5)"));
        }
        if let InteractionScheme::SampledEdges { m } = self.interaction.scheme {
            if m == 0 {
                return Err(invalid("interaction.scheme.m", "must be at least 1"));
            }
        }
        self.init.opinion.validate("init.opinion", false)?;
        self.init.susceptibility.validate("init.susceptibility", false)?;
        self.init.confidence_bound.validate("init.confidence_bound", true)?;
        if self.snapshot_stride < 1 {
            return Err(invalid("snapshot_stride", "must be at least 1"));
        }
        if self.both_per_round {
            return Err(invalid("both_per_round", "both-per-round broadcasting is not implemented"));
        }
        Ok(())
    }

    pub fn economics_view(&self) -> EconomicsView {
        EconomicsView {
            p_max: self.dynamics.p_max,
            cost_cents: to_cents(self.economics.cost_coefficient, "").unwrap_or(1).max(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Alignment {
    RedAligned,
    Neutral,
    BlueAligned,
}

/// Red below `0.5 - band`, Blue above `0.5 + band`, Neutral otherwise.
pub fn classify_alignment(x: f64, band: f64) -> Alignment {
    if x < 0.5 - band {
        Alignment::RedAligned
    } else if x > 0.5 + band {
        Alignment::BlueAligned
    } else {
        Alignment::Neutral
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutcomeKind {
    RedMajority,
    BlueMajority,
    Stalemate,
}

impl OutcomeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeKind::RedMajority => "RedMajority",
            OutcomeKind::BlueMajority => "BlueMajority",
            OutcomeKind::Stalemate => "Stalemate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub kind: OutcomeKind,
    pub at_round: u32,
}

/// Strict majority over all nodes, Neutral included; a stalemate at `max_rounds`.
pub fn check_termination(counts: &AlignmentCounts, round: u32, max_rounds: u32) -> Option<Outcome> {
    let n = counts.total();
    let kind = if 2 * counts.red > n {
        OutcomeKind::RedMajority
    } else if 2 * counts.blue > n {
        OutcomeKind::BlueMajority
    } else if round >= max_rounds {
        OutcomeKind::Stalemate
    } else {
        return None;
    };
    Some(Outcome { kind, at_round: round })
}

/// Red on odd rounds, Blue on even.
pub fn broadcaster_for(round: u32) -> Side {
    if round % 2 == 1 {
        Side::Red
    } else {
        Side::Blue
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: u32,
    pub broadcaster: Side,
    pub potency: u32,
    pub cost_cents: i64,
    pub blue_energy_cents: i64,
    pub counts: AlignmentCounts,
    pub mean_opinion: f64,
    pub var_opinion: f64,
    pub accepted: usize,
    pub rejected: usize,
    pub backfired: usize,
    pub class_change_count: usize,
    /// The agent failed and the heuristic action was used instead.
    pub fallback: bool,
}

impl RoundRecord {
    pub fn class_change_rate(&self) -> f64 {
        let n = self.counts.total();
        if n == 0 {
            0.0
        } else {
            self.class_change_count as f64 / n as f64
        }
    }
}

/// One line of `messages.jsonl`, one per round (skips have potency 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageRecord {
    pub round: u32,
    pub side: Side,
    pub potency: u32,
    pub cost: f64,
    pub text: String,
    pub accepted: usize,
    pub rejected: usize,
    pub backfired: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub round: u32,
    pub opinions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTelemetry {
    pub n: usize,
    pub neutral_band: f64,
    pub initial_energy_cents: i64,
    pub snapshot_stride: u32,
    pub rounds: Vec<RoundRecord>,
    pub messages: Vec<MessageRecord>,
    /// Round 0 first, ascending.
    pub snapshots: Vec<Snapshot>,
    pub outcome: Option<Outcome>,
    /// Fallback substitutions, clamps and other notable events.
    pub events: Vec<String>,
}

impl RunTelemetry {
    pub fn initial_snapshot(&self) -> Option<&Snapshot> {
        self.snapshots.first().filter(|s| s.round == 0)
    }

    pub fn final_blue_energy_cents(&self) -> i64 {
        self.rounds.last().map_or(self.initial_energy_cents, |r| r.blue_energy_cents)
    }

    /// Whether every round from 0 to the last recorded one has a snapshot.
    pub fn has_every_snapshot(&self) -> bool {
        self.snapshots.len() == self.rounds.len() + 1
            && self.snapshots.iter().enumerate().all(|(i, s)| s.round as usize == i)
    }
}

/// Rounds an opinion to the six-decimal grid used by every export.
pub fn quantize(x: f64) -> f64 {
    format!("{x:.6}").parse().expect("formatted float parses")
}

pub struct Simulation<'n> {
    config: SimConfig,
    net: &'n OpinionNetwork,
    nodes: Vec<GreenNodeState>,
    econ: EconomicsView,
    blue_cents: i64,
    red_cents: Option<i64>,
    round: u32,
    classes: Vec<Alignment>,
    counts: AlignmentCounts,
    mean: f64,
    last_message: [Option<(String, u32)>; 2],
    telemetry: RunTelemetry,
}

impl<'n> Simulation<'n> {
    /// Draws per-node state from the configured distributions.
    pub fn init_run(config: SimConfig, net: &'n OpinionNetwork) -> Result<Self, EngineError> {
        config.validate()?;
        let n = net.node_count();
        if n == 0 {
            return Err(invalid("network", "network has no nodes"));
        }
        let mut op_rng = Stream::new(config.seed, STREAM_INIT_OPINION);
        let mut s_rng = Stream::new(config.seed, STREAM_INIT_SUSCEPTIBILITY);
        let mut e_rng = Stream::new(config.seed, STREAM_INIT_EPSILON);
        let nodes: Vec<GreenNodeState> = (0..n)
            .map(|_| GreenNodeState {
                opinion: config.init.opinion.sample(&mut op_rng).clamp(0.0, 1.0),
                susceptibility: config.init.susceptibility.sample(&mut s_rng).clamp(0.0, 1.0),
                confidence_bound: config.init.confidence_bound.sample(&mut e_rng).clamp(1e-12, 1.0),
            })
            .collect();
        let e0 = to_cents(config.economics.initial_energy, "economics.initial_energy")?;
        let red_cents = config.economics.red_budget.map(|b| to_cents(b, "economics.red_budget")).transpose()?;
        let econ = config.economics_view();
        let band = config.termination.neutral_band;

        let q: Vec<f64> = nodes.iter().map(|s| quantize(s.opinion)).collect();
        let classes: Vec<Alignment> = q.iter().map(|&x| classify_alignment(x, band)).collect();
        let counts = alignment_distribution(&q, band);
        let mean = quantize(mean_and_variance(&q).0);
        let telemetry = RunTelemetry {
            n,
            neutral_band: band,
            initial_energy_cents: e0,
            snapshot_stride: config.snapshot_stride,
            rounds: Vec::new(),
            messages: Vec::new(),
            snapshots: vec![Snapshot { round: 0, opinions: q }],
            outcome: None,
            events: Vec::new(),
        };
        Ok(Simulation {
            config,
            net,
            nodes,
            econ,
            blue_cents: e0,
            red_cents,
            round: 0,
            classes,
            counts,
            mean,
            last_message: [None, None],
            telemetry,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn nodes(&self) -> &[GreenNodeState] {
        &self.nodes
    }

    /// Overrides node state, e.g. for hand-built scenarios. Opinions are
    /// clamped and the round-0 snapshot is refreshed when no round has run.
    pub fn set_nodes(&mut self, nodes: Vec<GreenNodeState>) {
        assert_eq!(nodes.len(), self.nodes.len(), "node count mismatch");
        self.nodes = nodes;
        for node in &mut self.nodes {
            node.opinion = node.opinion.clamp(0.0, 1.0);
        }
        if self.round == 0 {
            let band = self.config.termination.neutral_band;
            let q: Vec<f64> = self.nodes.iter().map(|s| quantize(s.opinion)).collect();
            self.classes = q.iter().map(|&x| classify_alignment(x, band)).collect();
            self.counts = alignment_distribution(&q, band);
            self.mean = quantize(mean_and_variance(&q).0);
            self.telemetry.snapshots = vec![Snapshot { round: 0, opinions: q }];
        }
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn blue_energy_cents(&self) -> i64 {
        self.blue_cents
    }

    pub fn outcome(&self) -> Option<Outcome> {
        self.telemetry.outcome
    }

    pub fn telemetry(&self) -> &RunTelemetry {
        &self.telemetry
    }

    fn energy_of(&self, side: Side) -> Energy {
        match side {
            Side::Blue => Energy::Cents(self.blue_cents),
            Side::Red => self.red_cents.map_or(Energy::Unlimited, Energy::Cents),
        }
    }

    pub fn observation(&self, side: Side, round: u32) -> Observation {
        Observation {
            round,
            topic: self.config.topic.clone(),
            own_side: side,
            counts: self.counts,
            mean_opinion: self.mean,
            own_energy: self.energy_of(side),
            opponent_last_message: self.last_message[side_index(side.opponent())].clone(),
        }
    }

    /// Runs one full round and returns its record.
    pub fn run_round(&mut self, red: &mut dyn Agent, blue: &mut dyn Agent) -> Result<&RoundRecord, EngineError> {
        if self.telemetry.outcome.is_some() {
            return Err(EngineError::Terminated);
        }
        let r = self.round + 1;
        let side = broadcaster_for(r);
        let obs = self.observation(side, r);
        let agent: &mut dyn Agent = match side {
            Side::Red => red,
            Side::Blue => blue,
        };

        let mut fallback = false;
        let action = match agent.act(&obs) {
            Ok(a) => a,
            Err(AgentError::BackendUnavailable { attempts, last_error }) => {
                fallback = true;
                let note = format!(
                    "round {r}: {side} backend unavailable after {attempts} attempt(s) ({last_error}); heuristic fallback substituted"
                );
                log::warn!("{note}");
                self.telemetry.events.push(note);
                heuristic_policy(&obs, &self.econ)
            }
            Err(e) => return Err(e.into()),
        };
        for note in agent.drain_events() {
            self.telemetry.events.push(note);
        }

        let potency = self.settle_potency(r, side, &obs, &action);
        let cost = if potency > 0 && (side == Side::Blue || self.red_cents.is_some()) {
            self.econ.cost_cents * i64::from(potency)
        } else {
            0
        };
        match side {
            Side::Blue => self.blue_cents -= cost,
            Side::Red => {
                if let Some(c) = self.red_cents.as_mut() {
                    *c -= cost;
                }
            }
        }

        let (mut accepted, mut rejected, mut backfired) = (0, 0, 0);
        if potency > 0 {
            for node in &mut self.nodes {
                let (x, effect) =
                    broadcast_update(node, side, potency, &self.config.dynamics).expect("potency within [1, p_max]");
                node.opinion = x;
                match effect {
                    Effect::Accepted => accepted += 1,
                    Effect::Rejected => rejected += 1,
                    Effect::Backfired => backfired += 1,
                }
            }
        }
        let text = if potency > 0 { action.message.clone() } else { String::new() };
        self.last_message[side_index(side)] = (potency > 0).then(|| (text.clone(), potency));

        self.peer_sweep(r);

        let band = self.config.termination.neutral_band;
        let q: Vec<f64> = self.nodes.iter().map(|s| quantize(s.opinion)).collect();
        let classes: Vec<Alignment> = q.iter().map(|&x| classify_alignment(x, band)).collect();
        let class_change_count = classes.iter().zip(&self.classes).filter(|(a, b)| a != b).count();
        let counts = alignment_distribution(&q, band);
        let (mean, var) = mean_and_variance(&q);
        let (mean, var) = (quantize(mean), quantize(var));
        self.classes = classes;
        self.counts = counts;
        self.mean = mean;
        self.round = r;

        let record = RoundRecord {
            round: r,
            broadcaster: side,
            potency,
            cost_cents: cost,
            blue_energy_cents: self.blue_cents,
            counts,
            mean_opinion: mean,
            var_opinion: var,
            accepted,
            rejected,
            backfired,
            class_change_count,
            fallback,
        };
        self.telemetry.messages.push(MessageRecord {
            round: r,
            side,
            potency,
            cost: cost as f64 / 100.0,
            text,
            accepted,
            rejected,
            backfired,
        });

        let outcome = check_termination(&counts, r, self.config.termination.max_rounds);
        let stride = self.config.snapshot_stride;
        if r % stride == 0 || outcome.is_some() {
            self.telemetry.snapshots.push(Snapshot { round: r, opinions: q });
        }
        self.telemetry.outcome = outcome;
        self.telemetry.rounds.push(record);
        Ok(self.telemetry.rounds.last().expect("just pushed"))
    }

    fn settle_potency(&mut self, r: u32, side: Side, obs: &Observation, action: &AgentAction) -> u32 {
        let p_max = self.config.dynamics.p_max;
        let mut potency = action.potency;
        if potency > p_max {
            let note = format!("round {r}: {side} potency {potency} clamped to {p_max}");
            log::warn!("{note}");
            self.telemetry.events.push(note);
            potency = p_max;
        }
        let affordable = self.econ.affordable(obs.own_energy);
        if potency > affordable {
            log::info!("round {r}: {side} potency {potency} cut to affordable {affordable}");
            potency = affordable;
        }
        potency
    }

    fn peer_sweep(&mut self, r: u32) {
        let edges = self.net.edges();
        if edges.is_empty() {
            return;
        }
        let mut rng = Stream::new(self.config.seed, &format!("round.{r}.edges"));
        let order: Vec<usize> = match self.config.interaction.scheme {
            InteractionScheme::AllEdgesShuffled => {
                let mut order: Vec<usize> = (0..edges.len()).collect();
                rng.shuffle(&mut order);
                order
            }
            InteractionScheme::SampledEdges { m } => (0..m).map(|_| rng.below(edges.len() as u64) as usize).collect(),
        };
        let mu = self.config.dynamics.mu;
        for idx in order {
            let (u, v) = edges[idx];
            let (u, v) = (u as usize, v as usize);
            match self.config.interaction.peer_rule {
                PeerRule::Directed => {
                    let sender = self.nodes[u].opinion;
                    self.nodes[v].opinion = peer_update_directed(&self.nodes[v], sender, mu);
                }
                PeerRule::Symmetric => {
                    let eps = self.nodes[u].confidence_bound.min(self.nodes[v].confidence_bound);
                    let (a, b) = peer_update_symmetric(self.nodes[u].opinion, self.nodes[v].opinion, eps, mu);
                    self.nodes[u].opinion = a.clamp(0.0, 1.0);
                    self.nodes[v].opinion = b.clamp(0.0, 1.0);
                }
            }
        }
    }

    pub fn into_telemetry(self) -> RunTelemetry {
        self.telemetry
    }
}

fn side_index(side: Side) -> usize {
    match side {
        Side::Red => 0,
        Side::Blue => 1,
    }
}

/// Runs rounds until a strict majority or the round cap.
pub fn run_simulation(
    config: SimConfig,
    net: &OpinionNetwork,
    red: &mut dyn Agent,
    blue: &mut dyn Agent,
) -> Result<RunTelemetry, EngineError> {
    let mut sim = Simulation::init_run(config, net)?;
    while sim.outcome().is_none() {
        sim.run_round(red, blue)?;
    }
    Ok(sim.into_telemetry())
}
