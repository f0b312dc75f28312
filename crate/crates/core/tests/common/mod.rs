//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use fogsim::topology::{Link, Node, NodeId, NodeKind, Topology};
use fogsim::workload::{AppModule, Application, InstructionDistribution, Loop, MessageSpec, ModuleKind, Placement};
use proptest::prelude::*;

// ELECTRE oracles, written as clamped piecewise-linear forms rather than
// the case analysis used by the library.

pub fn oracle_concordance(g_a: f64, g_b: f64, q: f64, p: f64) -> f64 {
    let diff = g_b - g_a;
    if p > q {
        ((p - diff) / (p - q)).clamp(0.0, 1.0)
    } else if diff <= q {
        1.0
    } else {
        0.0
    }
}

pub fn oracle_discordance(g_a: f64, g_b: f64, p: f64, v: f64) -> f64 {
    let diff = g_b - g_a;
    if v > p {
        ((diff - p) / (v - p)).clamp(0.0, 1.0)
    } else if diff > v {
        1.0
    } else {
        0.0
    }
}

/// `values[i][j]`: gain of alternative `j` on criterion `i`. Returns the
/// concordance and credibility matrices, row-major.
pub fn oracle_credibility(values: &[Vec<f64>], w: &[f64], q: &[f64], p: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = values[0].len();
    let mut conc = vec![1.0; n * n];
    let mut cred = vec![1.0; n * n];
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let c: f64 = (0..values.len())
                .map(|i| w[i] * oracle_concordance(values[i][a], values[i][b], q[i], p[i]))
                .sum();
            conc[a * n + b] = c;
            let mut s = c;
            if c < 1.0 {
                for i in 0..values.len() {
                    let d = oracle_discordance(values[i][a], values[i][b], p[i], v[i]);
                    if d > c {
                        s *= (1.0 - d) / (1.0 - c);
                    }
                }
            } else {
                s = 1.0;
            }
            cred[a * n + b] = s;
        }
    }
    (conc, cred)
}

pub fn oracle_percentile(values: &[f64], pct: f64) -> f64 {
    let mut v: Vec<f64> = values.iter().map(|x| x.abs()).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = pct / 100.0 * (v.len() as f64 - 1.0);
    let i = pos as usize;
    if i + 1 >= v.len() {
        return v[v.len() - 1];
    }
    v[i] * (1.0 - (pos - i as f64)) + v[i + 1] * (pos - i as f64)
}

// Routing oracle: enumerate every simple path.

fn simple_paths(adj: &[Vec<(NodeId, f64)>], at: NodeId, dst: NodeId, seen: &mut Vec<NodeId>, pr: f64, out: &mut Vec<(Vec<NodeId>, f64)>) {
    if at == dst {
        out.push((seen.clone(), pr));
        return;
    }
    for &(next, w) in &adj[at] {
        if !seen.contains(&next) {
            seen.push(next);
            simple_paths(adj, next, dst, seen, pr + w, out);
            seen.pop();
        }
    }
}

/// Route chosen by (hops, propagation, node sequence) over all simple paths.
pub fn brute_force_route(topology: &Topology, src: NodeId, dst: NodeId) -> Vec<NodeId> {
    let mut adj = vec![Vec::new(); topology.node_count()];
    for l in topology.links() {
        adj[l.a].push((l.b, l.pr));
        adj[l.b].push((l.a, l.pr));
    }
    let mut all = Vec::new();
    simple_paths(&adj, src, dst, &mut vec![src], 0.0, &mut all);
    all.into_iter()
        .min_by(|(pa, wa), (pb, wb)| {
            pa.len()
                .cmp(&pb.len())
                .then(wa.partial_cmp(wb).unwrap())
                .then(pa.cmp(pb))
        })
        .unwrap()
        .0
}

pub fn brute_force_betweenness(topology: &Topology) -> Vec<u64> {
    let n = topology.node_count();
    let mut score = vec![0; n];
    for s in 0..n {
        for t in s + 1..n {
            let route = brute_force_route(topology, s, t);
            for &v in &route[1..route.len() - 1] {
                score[v] += 1;
            }
        }
    }
    score
}

/// Connected graphs of 2..=8 nodes: a random spanning tree plus extra
/// edges, with integer propagation delays so ties are common.
pub fn connected_graph() -> impl Strategy<Value = Topology> {
    (2usize..=8)
        .prop_flat_map(|n| {
            (
                Just(n),
                proptest::collection::vec(any::<prop::sample::Index>(), n - 1),
                proptest::collection::vec(any::<bool>(), n * n),
                proptest::collection::vec(0u8..4, n * n),
            )
        })
        .prop_map(|(n, parents, extra, prs)| {
            let mut links = Vec::new();
            let mut has = vec![false; n * n];
            let mut add = |a: usize, b: usize, links: &mut Vec<Link>| {
                let (x, y) = (a.min(b), a.max(b));
                if x != y && !has[x * n + y] {
                    has[x * n + y] = true;
                    links.push(Link { a: x, b: y, bw: 1000.0, pr: prs[x * n + y] as f64 });
                }
            };
            for v in 1..n {
                add(parents[v - 1].index(v), v, &mut links);
            }
            for a in 0..n {
                for b in a + 1..n {
                    if extra[a * n + b] && (a + b) % 3 != 0 {
                        add(a, b, &mut links);
                    }
                }
            }
            let nodes = (0..n)
                .map(|id| Node { id, kind: NodeKind::Fog, ipt: 1000, ram: 1 })
                .collect();
            Topology::new(nodes, links).unwrap()
        })
}

/// One IoT device and one compute node behind an effectively free link.
/// Service draws are exponential with mean `mean_instructions / ipt`.
pub fn single_queue(ipt: u64, mean_instructions: u64) -> (Topology, Vec<Application>, Placement) {
    let nodes = vec![
        Node { id: 0, kind: NodeKind::Iot, ipt: 10, ram: 1 },
        Node { id: 1, kind: NodeKind::Fog, ipt, ram: 1 },
    ];
    let t = Topology::new(nodes, vec![Link { a: 0, b: 1, bw: 1e15, pr: 0.0 }]).unwrap();
    let mut job = MessageSpec::new("Job", "Sensor", "Server", mean_instructions, 1, 1.0);
    job.distribution = InstructionDistribution::Exponential;
    let app = Application {
        name: "Queue".into(),
        modules: vec![
            AppModule { name: "Sensor".into(), kind: ModuleKind::Source, ram: 1 },
            AppModule { name: "Server".into(), kind: ModuleKind::Compute, ram: 1 },
        ],
        messages: vec![job],
        loops: vec![Loop { name: "L".into(), messages: vec!["Job".into()] }],
    };
    let mut p = Placement::default();
    p.place("Queue", "Sensor", 0);
    p.place("Queue", "Server", 1);
    (t, vec![app], p)
}
