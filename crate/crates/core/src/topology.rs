//! Fog network graph: nodes, bidirectional links, static shortest-path
//! routing, betweenness centrality and the two scenario builders.

use std::collections::VecDeque;
use std::path::Path as FsPath;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, streams};

pub type NodeId = usize;
pub type LinkId = usize;

/// RAM assigned to every node. Memory is carried in the model but never
/// constrains admission.
pub const DEFAULT_RAM: u64 = 4000;

pub const IOT_IPT: u64 = 10;
pub const CLOUD_IPT: u64 = 1_000_000;
pub const FOG_IPT_MIN: u64 = 1_000;
pub const FOG_IPT_MAX: u64 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Cloud,
    Fog,
    Iot,
}

impl NodeKind {
    pub fn is_compute(self) -> bool {
        !matches!(self, NodeKind::Iot)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub ipt: u64,
    pub ram: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub a: NodeId,
    pub b: NodeId,
    /// Bytes per time-step.
    pub bw: f64,
    /// Propagation delay in time-steps.
    pub pr: f64,
}

impl Link {
    pub fn other(&self, node: NodeId) -> NodeId {
        if node == self.a {
            self.b
        } else {
            self.a
        }
    }
}

/// A route as the sequence of visited nodes and traversed links.
/// `nodes.len() == links.len() + 1`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Path {
    pub nodes: Vec<NodeId>,
    pub links: Vec<LinkId>,
}

impl Path {
    pub fn trivial(node: NodeId) -> Self {
        Path {
            nodes: vec![node],
            links: Vec::new(),
        }
    }

    pub fn hop_count(&self) -> usize {
        self.links.len()
    }

    /// Nodes strictly between the endpoints.
    pub fn intermediates(&self) -> &[NodeId] {
        if self.nodes.len() <= 2 {
            &[]
        } else {
            &self.nodes[1..self.nodes.len() - 1]
        }
    }
}

pub fn hop_count(path: &Path) -> usize {
    path.hop_count()
}

pub fn path_propagation_delay(topology: &Topology, path: &Path) -> f64 {
    path.links.iter().map(|&l| topology.links[l].pr).sum()
}

/// Σ S/BW over the links of `path` for a message of `bytes`.
pub fn path_transmission_delay(topology: &Topology, path: &Path, bytes: f64) -> f64 {
    path.links.iter().map(|&l| bytes / topology.links[l].bw).sum()
}

#[derive(Serialize, Deserialize)]
struct TopologyFile {
    nodes: Vec<Node>,
    links: Vec<Link>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Topology {
    nodes: Vec<Node>,
    links: Vec<Link>,
    /// Per node, `(neighbor, link)` sorted by neighbor id.
    adjacency: Vec<Vec<(NodeId, LinkId)>>,
}

impl Topology {
    /// Validates and indexes a node/link set. Node ids must be `0..n` in order.
    pub fn new(nodes: Vec<Node>, links: Vec<Link>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidTopology("no nodes".into()));
        }
        for (i, n) in nodes.iter().enumerate() {
            if n.id != i {
                return Err(Error::InvalidTopology(format!(
                    "node at position {i} has id {}; ids must be contiguous from 0",
                    n.id
                )));
            }
            if n.ipt == 0 {
                return Err(Error::InvalidTopology(format!("node {i} has zero ipt")));
            }
        }
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for (id, l) in links.iter().enumerate() {
            for end in [l.a, l.b] {
                if end >= nodes.len() {
                    return Err(Error::UnknownNode(end));
                }
            }
            if l.a == l.b {
                return Err(Error::InvalidTopology(format!("self-loop on node {}", l.a)));
            }
            if !(l.bw > 0.0) || !l.bw.is_finite() {
                return Err(Error::InvalidTopology(format!("link {id} has bw {}", l.bw)));
            }
            if !(l.pr >= 0.0) || !l.pr.is_finite() {
                return Err(Error::InvalidTopology(format!("link {id} has pr {}", l.pr)));
            }
            if adjacency[l.a].iter().any(|&(n, _)| n == l.b) {
                return Err(Error::InvalidTopology(format!(
                    "duplicate link between {} and {}",
                    l.a, l.b
                )));
            }
            adjacency[l.a].push((l.b, id));
            adjacency[l.b].push((l.a, id));
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        let topology = Topology {
            nodes,
            links,
            adjacency,
        };
        if !topology.is_connected() {
            return Err(Error::InvalidTopology("graph is not connected".into()));
        }
        Ok(topology)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn node(&self, id: NodeId) -> Result<&Node> {
        self.nodes.get(id).ok_or(Error::UnknownNode(id))
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id]
    }

    pub fn neighbors(&self, id: NodeId) -> &[(NodeId, LinkId)] {
        &self.adjacency[id]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn nodes_of_kind(&self, kind: NodeKind) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(move |n| n.kind == kind)
    }

    pub fn link_between(&self, a: NodeId, b: NodeId) -> Option<LinkId> {
        self.adjacency
            .get(a)?
            .iter()
            .find(|&&(n, _)| n == b)
            .map(|&(_, l)| l)
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.nodes.len()
    }

    pub fn to_json(&self) -> Result<String> {
        let file = TopologyFile {
            nodes: self.nodes.clone(),
            links: self.links.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: TopologyFile = serde_json::from_str(text)?;
        Topology::new(file.nodes, file.links)
    }

    pub fn save(&self, path: &FsPath) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &FsPath) -> Result<Self> {
        Topology::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Best routes from `src` to every node: fewest hops, then least total
/// propagation delay, then lexicographically smallest node sequence.
fn routes_from(topology: &Topology, src: NodeId) -> Vec<Path> {
    let n = topology.node_count();
    let mut hops = vec![usize::MAX; n];
    let mut layers: Vec<Vec<NodeId>> = vec![vec![src]];
    hops[src] = 0;
    loop {
        let mut next = Vec::new();
        for &u in layers.last().unwrap() {
            for &(v, _) in topology.neighbors(u) {
                if hops[v] == usize::MAX {
                    hops[v] = layers.len();
                    next.push(v);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        next.sort_unstable();
        layers.push(next);
    }

    let mut best: Vec<Option<(f64, Path)>> = vec![None; n];
    best[src] = Some((0.0, Path::trivial(src)));
    for (depth, layer) in layers.iter().enumerate().skip(1) {
        for &v in layer {
            let mut chosen: Option<(f64, Path)> = None;
            for &(u, link) in topology.neighbors(v) {
                if hops[u] != depth - 1 {
                    continue;
                }
                let (pr_u, path_u) = best[u].as_ref().expect("previous layer settled");
                let pr = pr_u + topology.link(link).pr;
                let better = match &chosen {
                    None => true,
                    Some((pr_c, path_c)) => {
                        pr < *pr_c || (pr == *pr_c && path_u.nodes[..] < path_c.nodes[..depth])
                    }
                };
                if better {
                    let mut path = path_u.clone();
                    path.nodes.push(v);
                    path.links.push(link);
                    chosen = Some((pr, path));
                }
            }
            best[v] = chosen;
        }
    }
    best.into_iter()
        .map(|b| b.map(|(_, p)| p).unwrap_or_default())
        .collect()
}

pub fn shortest_path(topology: &Topology, src: NodeId, dst: NodeId) -> Result<Path> {
    topology.node(src)?;
    topology.node(dst)?;
    if src == dst {
        return Ok(Path::trivial(src));
    }
    Ok(routes_from(topology, src).swap_remove(dst))
}

/// All-pairs static routing table. Routes never change during a run.
#[derive(Clone, Debug)]
pub struct Routes {
    n: usize,
    paths: Vec<Path>,
    propagation: Vec<f64>,
}

impl Routes {
    pub fn new(topology: &Topology) -> Self {
        let n = topology.node_count();
        let mut paths = Vec::with_capacity(n * n);
        for src in 0..n {
            paths.extend(routes_from(topology, src));
        }
        let propagation = paths
            .iter()
            .map(|p| path_propagation_delay(topology, p))
            .collect();
        Routes {
            n,
            paths,
            propagation,
        }
    }

    pub fn path(&self, src: NodeId, dst: NodeId) -> &Path {
        &self.paths[src * self.n + dst]
    }

    pub fn hops(&self, src: NodeId, dst: NodeId) -> usize {
        self.path(src, dst).hop_count()
    }

    pub fn propagation(&self, src: NodeId, dst: NodeId) -> f64 {
        self.propagation[src * self.n + dst]
    }
}

/// Unnormalized betweenness: for each node, the number of unordered pairs
/// `{s, t}` (both distinct from it) whose chosen route passes through it.
/// The route of a pair is the one computed from the lower id to the higher.
pub fn betweenness_centrality(topology: &Topology) -> Vec<u64> {
    betweenness_from_routes(&Routes::new(topology), topology.node_count())
}

fn betweenness_from_routes(routes: &Routes, n: usize) -> Vec<u64> {
    let mut score = vec![0u64; n];
    for s in 0..n {
        for t in s + 1..n {
            for &v in routes.path(s, t).intermediates() {
                score[v] += 1;
            }
        }
    }
    score
}

/// Node ids of the generic three-Fog scenario.
pub mod generic {
    use super::NodeId;

    pub const CLOUD: NodeId = 0;
    pub const FOG1: NodeId = 1;
    pub const FOG2: NodeId = 2;
    pub const FOG3: NodeId = 3;
    pub const FOG_NODES: [NodeId; 3] = [FOG1, FOG2, FOG3];
    /// IoT devices 4 and 5 hang off Fog1; 6..=25 hang off Fog2.
    pub const FOG1_DEVICES: std::ops::RangeInclusive<NodeId> = 4..=5;
    pub const FOG2_DEVICES: std::ops::RangeInclusive<NodeId> = 6..=25;
    pub const DEVICE_COUNT: usize = 22;
}

/// The fixed three-Fog architecture: a slow Fog2 serving most devices, a
/// fast Fog3 serving none, and a thin long link between Fog3 and the Cloud.
pub fn build_generic_topology() -> Topology {
    use generic::*;
    let node = |id, kind, ipt| Node {
        id,
        kind,
        ipt,
        ram: DEFAULT_RAM,
    };
    let mut nodes = vec![
        node(CLOUD, NodeKind::Cloud, CLOUD_IPT),
        node(FOG1, NodeKind::Fog, 10_000),
        node(FOG2, NodeKind::Fog, 1_000),
        node(FOG3, NodeKind::Fog, 100_000),
    ];
    let link = |a, b, bw, pr| Link { a, b, bw, pr };
    let mut links = vec![
        link(FOG1, FOG3, 1000.0, 2.0),
        link(FOG2, FOG3, 1000.0, 2.0),
        link(FOG1, CLOUD, 100_000.0, 10.0),
        link(FOG2, CLOUD, 100_000.0, 10.0),
        link(FOG3, CLOUD, 1000.0, 20.0),
    ];
    for dev in FOG1_DEVICES.chain(FOG2_DEVICES) {
        nodes.push(node(dev, NodeKind::Iot, IOT_IPT));
        let fog = if FOG1_DEVICES.contains(&dev) { FOG1 } else { FOG2 };
        links.push(link(dev, fog, 1000.0, 1.0));
    }
    Topology::new(nodes, links).expect("generic topology is valid")
}

pub const DEFAULT_AS_NODES: usize = 32;
const AS_MAX_ATTEMPTS: u32 = 32;
/// Probability that a newly attached node is multi-homed (two upstream links
/// instead of one).
const AS_MULTIHOME_P: f64 = 0.2;

/// Evenly spaced integers over `[FOG_IPT_MIN, FOG_IPT_MAX]`, ascending.
pub fn evenly_spaced_ipt(count: usize) -> Vec<u64> {
    match count {
        0 => Vec::new(),
        1 => vec![FOG_IPT_MIN],
        _ => {
            let span = FOG_IPT_MAX - FOG_IPT_MIN;
            let steps = (count - 1) as u64;
            (0..count as u64)
                .map(|i| FOG_IPT_MIN + i * span / steps)
                .collect()
        }
    }
}

/// Result of the AS-like generator, including the pre-Cloud centrality that
/// drove node classification.
#[derive(Clone, Debug)]
pub struct AsTopology {
    pub topology: Topology,
    /// Betweenness of each non-Cloud node in the graph before the Cloud was added.
    pub centrality: Vec<u64>,
    pub cloud: NodeId,
    pub attempts: u32,
}

/// Random AS-like Fog network. Growth is preferential attachment with a mix of
/// single-homed and multi-homed joins; nodes with
/// zero betweenness become IoT devices, the rest Fog nodes with compute power
/// inversely ordered to their centrality; a Cloud joins the two most central
/// Fog nodes.
pub fn generate_as_topology(seed: u64, target_nodes: usize) -> Result<AsTopology> {
    if target_nodes < 10 {
        return Err(Error::InvalidInput(format!(
            "AS topology needs at least 10 nodes, got {target_nodes}"
        )));
    }
    let mut last_reason = String::new();
    for attempt in 0..AS_MAX_ATTEMPTS {
        let mut rng = stream_rng(seed, streams::TOPOLOGY + ((attempt as u64) << 8));
        let edges = preferential_attachment(&mut rng, target_nodes);

        let bare_nodes = (0..target_nodes)
            .map(|id| Node {
                id,
                kind: NodeKind::Fog,
                ipt: 1,
                ram: DEFAULT_RAM,
            })
            .collect();
        let bare_links = edges
            .iter()
            .map(|&(a, b)| Link { a, b, bw: 1.0, pr: 0.0 })
            .collect();
        let bare = Topology::new(bare_nodes, bare_links)?;
        let centrality = betweenness_centrality(&bare);

        let iot = centrality.iter().filter(|&&c| c == 0).count();
        let fog = target_nodes - iot;
        if fog < 2 || iot < 1 {
            last_reason = format!("{fog} fog / {iot} iot nodes");
            continue;
        }

        let mut fog_by_rank: Vec<NodeId> = (0..target_nodes).filter(|&v| centrality[v] > 0).collect();
        fog_by_rank.sort_by(|&a, &b| centrality[b].cmp(&centrality[a]).then(a.cmp(&b)));
        let ipt_values = evenly_spaced_ipt(fog);

        let mut nodes: Vec<Node> = (0..target_nodes)
            .map(|id| Node {
                id,
                kind: NodeKind::Iot,
                ipt: IOT_IPT,
                ram: DEFAULT_RAM,
            })
            .collect();
        for (rank, &v) in fog_by_rank.iter().enumerate() {
            nodes[v].kind = NodeKind::Fog;
            nodes[v].ipt = ipt_values[rank];
        }
        let cloud = target_nodes;
        nodes.push(Node {
            id: cloud,
            kind: NodeKind::Cloud,
            ipt: CLOUD_IPT,
            ram: DEFAULT_RAM,
        });

        let mut all_edges = edges;
        all_edges.push((fog_by_rank[0], cloud));
        all_edges.push((fog_by_rank[1], cloud));
        let links = all_edges
            .into_iter()
            .map(|(a, b)| {
                let (bw, pr) = draw_link_params(&mut rng, nodes[a].kind, nodes[b].kind);
                Link { a, b, bw, pr }
            })
            .collect();
        return Ok(AsTopology {
            topology: Topology::new(nodes, links)?,
            centrality,
            cloud,
            attempts: attempt + 1,
        });
    }
    Err(Error::Generation {
        attempts: AS_MAX_ATTEMPTS,
        reason: last_reason,
    })
}

/// Undirected edge list of a preferential-attachment graph seeded with a triangle.
fn preferential_attachment<R: Rng>(rng: &mut R, n: usize) -> Vec<(NodeId, NodeId)> {
    let mut edges = vec![(0, 1), (0, 2), (1, 2)];
    // Each node appears once per incident edge.
    let mut endpoints: Vec<NodeId> = vec![0, 1, 0, 2, 1, 2];
    for v in 3..n {
        let attach = if rng.random_bool(AS_MULTIHOME_P) { 2 } else { 1 };
        let mut targets: Vec<NodeId> = Vec::with_capacity(attach);
        while targets.len() < attach {
            let t = endpoints[rng.random_range(0..endpoints.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        targets.sort_unstable();
        for t in targets {
            edges.push((t, v));
            endpoints.push(t);
            endpoints.push(v);
        }
    }
    edges
}

/// Uniform link parameters by endpoint classes. Links touching an IoT device
/// use the IoT ranges.
fn draw_link_params<R: Rng>(rng: &mut R, a: NodeKind, b: NodeKind) -> (f64, f64) {
    use NodeKind::*;
    match (a, b) {
        (Iot, _) | (_, Iot) => (rng.random_range(1e2..1e3), rng.random_range(1.0..2.0)),
        (Cloud, _) | (_, Cloud) => (rng.random_range(1e3..1e4), rng.random_range(10.0..20.0)),
        _ => (rng.random_range(1e3..1e4), rng.random_range(2.0..4.0)),
    }
}
