//! Directed Green-node network: generators, edge-list ingestion and export.
//!
//! Edges are stored sorted by `(source, target)` with a CSR offset table, so
//! `out_neighbors` is a slice in ascending target order. Influence flows from
//! source to target.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::Stream;

pub type NodeId = u32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("invalid generator parameter `{name}`: {reason}")]
    InvalidParams { name: &'static str, reason: String },
    #[error("line {line}: cannot parse edge `{text}`")]
    Parse { line: usize, text: String },
    #[error("line {line}: self-loop on node {node}")]
    SelfLoop { line: usize, node: NodeId },
    #[error("line {line}: node id {id} out of range for n={n}")]
    IdOutOfRange { line: usize, id: u64, n: usize },
    #[error("edge ({from},{to}) is a self-loop or out of range for n={n}")]
    InvalidEdge { from: NodeId, to: NodeId, n: usize },
    #[error("network must have at least one node")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    Complete,
    ErdosRenyi,
    BarabasiAlbert,
    WattsStrogatz,
}

impl GraphKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GraphKind::Complete => "complete",
            GraphKind::ErdosRenyi => "erdos_renyi",
            GraphKind::BarabasiAlbert => "barabasi_albert",
            GraphKind::WattsStrogatz => "watts_strogatz",
        }
    }
}

impl std::str::FromStr for GraphKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "complete" => Ok(GraphKind::Complete),
            "erdos_renyi" => Ok(GraphKind::ErdosRenyi),
            "barabasi_albert" => Ok(GraphKind::BarabasiAlbert),
            "watts_strogatz" => Ok(GraphKind::WattsStrogatz),
            other => Err(format!(
                "unknown graph kind `{other}` (expected complete, erdos_renyi, barabasi_albert, watts_strogatz)"
            )),
        }
    }
}

/// Generator parameters. Only the fields relevant to the chosen kind are read.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphParams {
    /// Erdős–Rényi edge probability.
    pub p: f64,
    /// Barabási–Albert attachments per new node.
    pub m: usize,
    /// Watts–Strogatz ring degree (even).
    pub k: usize,
    /// Watts–Strogatz rewiring probability.
    pub beta: f64,
}

impl Default for GraphParams {
    fn default() -> Self {
        GraphParams { p: 0.1, m: 2, k: 4, beta: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpinionNetwork {
    n: usize,
    edges: Vec<(NodeId, NodeId)>,
    offsets: Vec<usize>,
    targets: Vec<NodeId>,
}

impl OpinionNetwork {
    /// Builds a network from arbitrary pairs. Pairs are sorted and
    /// deduplicated; self-loops and out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, pairs: impl IntoIterator<Item = (NodeId, NodeId)>) -> Result<Self, NetError> {
        if n == 0 {
            return Err(NetError::Empty);
        }
        let set: BTreeSet<(NodeId, NodeId)> = pairs.into_iter().collect();
        if let Some(&(source, target)) = set.iter().find(|&&(u, v)| u == v || u.max(v) as usize >= n) {
            return Err(NetError::InvalidEdge { from: source, to: target, n });
        }
        Ok(Self::from_sorted_unchecked(n, set.into_iter().collect()))
    }

    fn from_sorted_unchecked(n: usize, edges: Vec<(NodeId, NodeId)>) -> Self {
        let mut offsets = vec![0usize; n + 1];
        for &(u, _) in &edges {
            offsets[u as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let targets = edges.iter().map(|&(_, v)| v).collect();
        OpinionNetwork { n, edges, offsets, targets }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// All directed edges, sorted by `(source, target)`.
    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    /// Out-neighbors of `i` in ascending order. Panics if `i >= n`.
    pub fn out_neighbors(&self, i: NodeId) -> &[NodeId] {
        let i = i as usize;
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Number of weakly connected components.
    pub fn component_count(&self) -> usize {
        let mut uf = UnionFind::<usize>::new(self.n);
        for &(u, v) in &self.edges {
            uf.union(u as usize, v as usize);
        }
        let mut labels = uf.into_labeling();
        labels.sort_unstable();
        labels.dedup();
        labels.len()
    }

    /// Edge list text: a `# nodes=N` header followed by `source,target` lines.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::with_capacity(self.edges.len() * 10 + 16);
        let _ = writeln!(out, "# nodes={}", self.n);
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "{u},{v}");
        }
        out
    }
}

fn invalid(name: &'static str, reason: impl Into<String>) -> NetError {
    NetError::InvalidParams { name, reason: reason.into() }
}

/// Checks generator preconditions without building anything.
pub fn validate_generator(kind: GraphKind, params: &GraphParams, n: usize) -> Result<(), NetError> {
    if n < 2 {
        return Err(invalid("n", format!("need at least 2 nodes, got {n}")));
    }
    if n > NodeId::MAX as usize {
        return Err(invalid("n", "too many nodes"));
    }
    match kind {
        GraphKind::Complete => {}
        GraphKind::ErdosRenyi => {
            if !(0.0..=1.0).contains(&params.p) {
                return Err(invalid("p", format!("must be in [0,1], got {}", params.p)));
            }
        }
        GraphKind::BarabasiAlbert => {
            if params.m < 1 || params.m > n - 1 {
                return Err(invalid("m", format!("must be in [1,{}], got {}", n - 1, params.m)));
            }
        }
        GraphKind::WattsStrogatz => {
            if params.k % 2 != 0 || params.k >= n {
                return Err(invalid("k", format!("must be even and < n={n}, got {}", params.k)));
            }
            if !(0.0..=1.0).contains(&params.beta) {
                return Err(invalid("beta", format!("must be in [0,1], got {}", params.beta)));
            }
        }
    }
    Ok(())
}

/// Generates a network with reciprocal edge pairs. Randomness comes from the
/// `graph.<kind>` substream of `seed`.
pub fn generate_graph(kind: GraphKind, params: &GraphParams, n: usize, seed: u64) -> Result<OpinionNetwork, NetError> {
    validate_generator(kind, params, n)?;
    let mut rng = Stream::new(seed, &format!("graph.{}", kind.as_str()));
    let undirected: Vec<(NodeId, NodeId)> = match kind {
        GraphKind::Complete => complete(n),
        GraphKind::ErdosRenyi => erdos_renyi(n, params.p, &mut rng),
        GraphKind::BarabasiAlbert => barabasi_albert(n, params.m, &mut rng),
        GraphKind::WattsStrogatz => watts_strogatz(n, params.k, params.beta, &mut rng),
    };
    let mut edges: Vec<(NodeId, NodeId)> = undirected.iter().flat_map(|&(u, v)| [(u, v), (v, u)]).collect();
    edges.sort_unstable();
    edges.dedup();
    Ok(OpinionNetwork::from_sorted_unchecked(n, edges))
}

fn complete(n: usize) -> Vec<(NodeId, NodeId)> {
    let n = n as NodeId;
    (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect()
}

// One Bernoulli draw per unordered pair, in lexicographic pair order.
fn erdos_renyi(n: usize, p: f64, rng: &mut Stream) -> Vec<(NodeId, NodeId)> {
    let mut out = Vec::new();
    for u in 0..n as NodeId {
        for v in u + 1..n as NodeId {
            if rng.next_f64() < p {
                out.push((u, v));
            }
        }
    }
    out
}

// Seed clique on m+1 nodes, then preferential attachment by sampling from the
// endpoint multiset until m distinct targets are found.
fn barabasi_albert(n: usize, m: usize, rng: &mut Stream) -> Vec<(NodeId, NodeId)> {
    let mut out = complete(m + 1);
    let mut endpoints: Vec<NodeId> = out.iter().flat_map(|&(u, v)| [u, v]).collect();
    for new in (m + 1)..n {
        let mut chosen: Vec<NodeId> = Vec::with_capacity(m);
        while chosen.len() < m {
            let t = endpoints[rng.below(endpoints.len() as u64) as usize];
            if !chosen.contains(&t) {
                chosen.push(t);
            }
        }
        for &t in &chosen {
            out.push((t, new as NodeId));
            endpoints.push(t);
            endpoints.push(new as NodeId);
        }
    }
    out
}

// Ring lattice with k/2 neighbors per side; each lattice edge (u, u+j) is
// rewired to a uniform new target with probability beta, unless u is already
// adjacent to everyone.
fn watts_strogatz(n: usize, k: usize, beta: f64, rng: &mut Stream) -> Vec<(NodeId, NodeId)> {
    let key = |a: usize, b: usize| if a < b { (a, b) } else { (b, a) };
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for u in 0..n {
        for j in 1..=k / 2 {
            let v = (u + j) % n;
            adj[u].insert(v);
            adj[v].insert(u);
        }
    }
    for j in 1..=k / 2 {
        for u in 0..n {
            let v = (u + j) % n;
            if rng.next_f64() >= beta || !adj[u].contains(&v) || adj[u].len() >= n - 1 {
                continue;
            }
            let w = loop {
                let w = rng.below(n as u64) as usize;
                if w != u && !adj[u].contains(&w) {
                    break w;
                }
            };
            adj[u].remove(&v);
            adj[v].remove(&u);
            adj[u].insert(w);
            adj[w].insert(u);
        }
    }
    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (u, set) in adj.iter().enumerate() {
        for &v in set {
            pairs.insert(key(u, v));
        }
    }
    pairs.into_iter().map(|(u, v)| (u as NodeId, v as NodeId)).collect()
}

/// Result of parsing an edge list.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedNetwork {
    pub network: OpinionNetwork,
    /// Lines that repeated an earlier edge.
    pub duplicate_count: usize,
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split('\n').enumerate().filter_map(|(i, raw)| {
        let line = raw.trim_end_matches('\r').trim();
        (!line.is_empty() && !line.starts_with('#')).then_some((i + 1, line))
    })
}

fn nodes_hint(text: &str) -> Option<usize> {
    text.lines()
        .map(str::trim)
        .take_while(|l| l.is_empty() || l.starts_with('#'))
        .find_map(|l| l.trim_start_matches('#').trim().strip_prefix("nodes=")?.trim().parse().ok())
}

fn split_pair(line: &str) -> Option<(&str, &str)> {
    let (a, b) = line.split_once(',')?;
    Some((a.trim(), b.trim()))
}

/// Parses `source,target` lines of non-negative integers. Comment lines start
/// with `#`; a leading `# nodes=N` comment supplies the node count when `n`
/// is not given. Otherwise n = max id + 1.
pub fn load_edge_list(text: &str, n: Option<usize>) -> Result<LoadedNetwork, NetError> {
    let mut pairs = Vec::new();
    for (line, content) in content_lines(text) {
        let parse_err = || NetError::Parse { line, text: content.to_string() };
        let (a, b) = split_pair(content).ok_or_else(parse_err)?;
        let u: u64 = a.parse().map_err(|_| parse_err())?;
        let v: u64 = b.parse().map_err(|_| parse_err())?;
        if u == v {
            return Err(NetError::SelfLoop { line, node: u as NodeId });
        }
        if let Some(n) = n {
            for id in [u, v] {
                if id >= n as u64 {
                    return Err(NetError::IdOutOfRange { line, id, n });
                }
            }
        }
        if u.max(v) >= u64::from(NodeId::MAX) {
            return Err(NetError::IdOutOfRange { line, id: u.max(v), n: NodeId::MAX as usize });
        }
        pairs.push((u as NodeId, v as NodeId));
    }
    let max_id = pairs.iter().map(|&(u, v)| u.max(v) as usize + 1).max().unwrap_or(0);
    let n = n.or_else(|| nodes_hint(text).filter(|&h| h >= max_id)).unwrap_or(max_id);
    let total = pairs.len();
    let network = OpinionNetwork::from_edges(n, pairs)?;
    let duplicate_count = total - network.edge_count();
    if duplicate_count > 0 {
        log::warn!("edge list: collapsed {duplicate_count} duplicate edge line(s)");
    }
    Ok(LoadedNetwork { network, duplicate_count })
}

/// Edge list with arbitrary string labels, remapped to dense ids in order of
/// first appearance. Returns the network and `labels[id]`.
pub fn load_labeled_edge_list(text: &str) -> Result<(LoadedNetwork, Vec<String>), NetError> {
    let mut ids: HashMap<String, NodeId> = HashMap::new();
    let mut labels: Vec<String> = Vec::new();
    let mut pairs = Vec::new();
    for (line, content) in content_lines(text) {
        let (a, b) = split_pair(content).ok_or_else(|| NetError::Parse { line, text: content.to_string() })?;
        if a.is_empty() || b.is_empty() {
            return Err(NetError::Parse { line, text: content.to_string() });
        }
        let mut id_of = |label: &str| {
            *ids.entry(label.to_string()).or_insert_with(|| {
                labels.push(label.to_string());
                (labels.len() - 1) as NodeId
            })
        };
        let (u, v) = (id_of(a), id_of(b));
        if u == v {
            return Err(NetError::SelfLoop { line, node: u });
        }
        pairs.push((u, v));
    }
    let total = pairs.len();
    let network = OpinionNetwork::from_edges(labels.len(), pairs)?;
    let duplicate_count = total - network.edge_count();
    Ok((LoadedNetwork { network, duplicate_count }, labels))
}
