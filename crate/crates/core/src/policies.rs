//! Service-selection policies and the per-candidate criteria they share.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::electre::{nearest_index, Decision, Electre, Proximity};
use crate::error::{Error, Result};
use crate::topology::{path_transmission_delay, NodeId, Routes, Topology};

pub const CRITERIA: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Random,
    Drr,
    Nearest,
    Fastest,
    Electre,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::Random,
        PolicyKind::Drr,
        PolicyKind::Nearest,
        PolicyKind::Fastest,
        PolicyKind::Electre,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Random => "random",
            PolicyKind::Drr => "drr",
            PolicyKind::Nearest => "nearest",
            PolicyKind::Fastest => "fastest",
            PolicyKind::Electre => "electre",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::Config {
                key: "policy".into(),
                reason: format!("unknown policy `{s}`"),
            })
    }
}

/// Scope of the Round-Robin cursor.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrrScope {
    PerDevice,
    #[default]
    PerDeviceApp,
}

/// The five selection criteria of one candidate, all to be minimized.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriteriaVector {
    pub hop_count: f64,
    pub propagation: f64,
    pub processing: f64,
    pub execution: f64,
    pub waiting: f64,
}

impl CriteriaVector {
    pub fn as_array(&self) -> [f64; CRITERIA] {
        [
            self.hop_count,
            self.propagation,
            self.processing,
            self.execution,
            self.waiting,
        ]
    }
}

/// Live per-node load visible to the selector.
pub trait NodeLoad {
    /// Instructions queued or in service at `node`.
    fn pending_instructions(&self, node: NodeId) -> u64;
}

/// A node-load view with no queued work anywhere.
pub struct Idle;

impl NodeLoad for Idle {
    fn pending_instructions(&self, _: NodeId) -> u64 {
        0
    }
}

impl NodeLoad for [u64] {
    fn pending_instructions(&self, node: NodeId) -> u64 {
        self[node]
    }
}

impl NodeLoad for Vec<u64> {
    fn pending_instructions(&self, node: NodeId) -> u64 {
        self[node]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Request {
    pub instructions: u64,
    pub bytes: u64,
}

pub struct SelectionContext<'a> {
    pub topology: &'a Topology,
    pub routes: &'a Routes,
    pub source: NodeId,
    pub app: usize,
    pub request: Request,
    /// Replica hosts, ascending by node id.
    pub candidates: &'a [NodeId],
    pub load: &'a dyn NodeLoad,
}

impl SelectionContext<'_> {
    fn proximity(&self, candidate: NodeId) -> Proximity {
        Proximity {
            hops: self.routes.hops(self.source, candidate),
            propagation: self.routes.propagation(self.source, candidate),
        }
    }

    fn proximities(&self) -> Vec<Proximity> {
        self.candidates.iter().map(|&c| self.proximity(c)).collect()
    }

    fn require_candidates(&self) -> Result<()> {
        if self.candidates.is_empty() {
            Err(Error::NoCandidates)
        } else {
            Ok(())
        }
    }
}

/// Hop count, propagation, processing, execution and waiting delay of
/// sending the request from the context's source to `candidate` over its
/// static route.
pub fn compute_criteria(ctx: &SelectionContext, candidate: NodeId) -> Result<CriteriaVector> {
    if !ctx.candidates.contains(&candidate) {
        return Err(Error::NotHosted {
            node: candidate,
            app: format!("#{}", ctx.app),
            module: "requested".into(),
        });
    }
    let ipt = ctx.topology.node(candidate)?.ipt as f64;
    let path = ctx.routes.path(ctx.source, candidate);
    let propagation = ctx.routes.propagation(ctx.source, candidate);
    let processing = ctx.request.instructions as f64 / ipt;
    let transmission = path_transmission_delay(ctx.topology, path, ctx.request.bytes as f64);
    Ok(CriteriaVector {
        hop_count: path.hop_count() as f64,
        propagation,
        processing,
        execution: processing + propagation + transmission,
        waiting: ctx.load.pending_instructions(candidate) as f64 / ipt,
    })
}

pub fn select_random(ctx: &SelectionContext, rng: &mut impl Rng) -> Result<NodeId> {
    ctx.require_candidates()?;
    Ok(ctx.candidates[rng.random_range(0..ctx.candidates.len())])
}

/// Next candidate in ascending id order; advances `counter`.
pub fn select_drr(ctx: &SelectionContext, counter: &mut usize) -> Result<NodeId> {
    ctx.require_candidates()?;
    let chosen = ctx.candidates[*counter % ctx.candidates.len()];
    *counter += 1;
    Ok(chosen)
}

pub fn select_nearest(ctx: &SelectionContext) -> Result<NodeId> {
    ctx.require_candidates()?;
    let i = nearest_index(ctx.candidates, &ctx.proximities()).expect("non-empty");
    Ok(ctx.candidates[i])
}

/// Smallest static execution delay; waiting delay is not considered.
pub fn select_fastest(ctx: &SelectionContext) -> Result<NodeId> {
    ctx.require_candidates()?;
    let execution: Vec<f64> = ctx
        .candidates
        .iter()
        .map(|&c| compute_criteria(ctx, c).map(|v| v.execution))
        .collect::<Result<_>>()?;
    let best = execution.iter().copied().fold(f64::INFINITY, f64::min);
    let tied: Vec<usize> = (0..execution.len()).filter(|&i| execution[i] == best).collect();
    let ids: Vec<NodeId> = tied.iter().map(|&i| ctx.candidates[i]).collect();
    let prox: Vec<Proximity> = ids.iter().map(|&c| ctx.proximity(c)).collect();
    Ok(ids[nearest_index(&ids, &prox).expect("non-empty")])
}

pub fn select_electre(ctx: &SelectionContext, electre: &Electre) -> Result<Decision> {
    ctx.require_candidates()?;
    let mut costs = (0..CRITERIA).map(|_| Vec::with_capacity(ctx.candidates.len())).collect::<Vec<Vec<f64>>>();
    for &c in ctx.candidates {
        for (row, v) in costs.iter_mut().zip(compute_criteria(ctx, c)?.as_array()) {
            row.push(v);
        }
    }
    electre.decide(ctx.candidates, &costs, &ctx.proximities())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionStats {
    /// Multi-candidate ELECTRE decisions taken.
    pub decisions: u64,
    /// Of those, decisions whose top tier held more than one node.
    pub ties: u64,
}

/// Stateful front-end dispatching to the configured policy.
pub struct Selector {
    kind: PolicyKind,
    electre: Electre,
    rng: ChaCha8Rng,
    drr_scope: DrrScope,
    drr: HashMap<(NodeId, usize), usize>,
    pub stats: SelectionStats,
}

impl Selector {
    pub fn new(kind: PolicyKind, electre: Electre, rng: ChaCha8Rng, drr_scope: DrrScope) -> Self {
        Selector {
            kind,
            electre,
            rng,
            drr_scope,
            drr: HashMap::new(),
            stats: SelectionStats::default(),
        }
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    /// Chooses a replica; for ELECTRE the full decision trace is returned too.
    pub fn select(&mut self, ctx: &SelectionContext) -> Result<(NodeId, Option<Decision>)> {
        match self.kind {
            PolicyKind::Random => Ok((select_random(ctx, &mut self.rng)?, None)),
            PolicyKind::Drr => {
                let key = match self.drr_scope {
                    DrrScope::PerDevice => (ctx.source, 0),
                    DrrScope::PerDeviceApp => (ctx.source, ctx.app),
                };
                let counter = self.drr.entry(key).or_insert(0);
                Ok((select_drr(ctx, counter)?, None))
            }
            PolicyKind::Nearest => Ok((select_nearest(ctx)?, None)),
            PolicyKind::Fastest => Ok((select_fastest(ctx)?, None)),
            PolicyKind::Electre => {
                let decision = select_electre(ctx, &self.electre)?;
                if ctx.candidates.len() > 1 {
                    self.stats.decisions += 1;
                    if decision.is_tie() {
                        self.stats.ties += 1;
                    }
                }
                Ok((decision.chosen, Some(decision)))
            }
        }
    }
}
