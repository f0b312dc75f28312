//! Distributed applications, replica placement and workload arrivals.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{NodeId, NodeKind, Topology};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModuleKind {
    Source,
    Compute,
    Sink,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AppModule {
    pub name: String,
    pub kind: ModuleKind,
    #[serde(default = "default_module_ram")]
    pub ram: u64,
}

fn default_module_ram() -> u64 {
    1
}

/// How the instruction count of each runtime message is drawn from its `MessageSpec`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstructionDistribution {
    /// Every message carries exactly `instructions`.
    #[default]
    Fixed,
    /// Exponential with mean `instructions`, rounded to a positive integer.
    Exponential,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MessageSpec {
    pub name: String,
    pub from_module: String,
    pub to_module: String,
    pub instructions: u64,
    pub bytes: u64,
    /// Probability that serving an inbound message at `from_module` emits
    /// this message. Ignored for messages emitted by source modules.
    pub trigger_fraction: f64,
    #[serde(default, skip_serializing_if = "is_fixed")]
    pub distribution: InstructionDistribution,
}

fn is_fixed(d: &InstructionDistribution) -> bool {
    *d == InstructionDistribution::Fixed
}

impl MessageSpec {
    pub fn new(name: &str, from: &str, to: &str, instructions: u64, bytes: u64, trigger: f64) -> Self {
        MessageSpec {
            name: name.into(),
            from_module: from.into(),
            to_module: to.into(),
            instructions,
            bytes,
            trigger_fraction: trigger,
            distribution: InstructionDistribution::Fixed,
        }
    }
}

/// One application loop as the ordered names of the messages composing it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Loop {
    pub name: String,
    pub messages: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Application {
    pub name: String,
    pub modules: Vec<AppModule>,
    pub messages: Vec<MessageSpec>,
    pub loops: Vec<Loop>,
}

impl Application {
    pub fn module(&self, name: &str) -> Option<&AppModule> {
        self.modules.iter().find(|m| m.name == name)
    }

    pub fn message_index(&self, name: &str) -> Option<usize> {
        self.messages.iter().position(|m| m.name == name)
    }

    /// Checks module kinds, message endpoints, acyclicity and loop chains.
    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Error::InvalidApplication(format!("{}: {msg}", self.name));
        let mut names = BTreeSet::new();
        for m in &self.modules {
            if !names.insert(m.name.as_str()) {
                return Err(err(format!("duplicate module `{}`", m.name)));
            }
        }
        let mut msg_names = BTreeSet::new();
        for d in &self.messages {
            if !msg_names.insert(d.name.as_str()) {
                return Err(err(format!("duplicate message `{}`", d.name)));
            }
            let from = self
                .module(&d.from_module)
                .ok_or_else(|| err(format!("message `{}` from unknown module", d.name)))?;
            let to = self
                .module(&d.to_module)
                .ok_or_else(|| err(format!("message `{}` to unknown module", d.name)))?;
            if from.kind == ModuleKind::Sink {
                return Err(err(format!("sink module `{}` emits `{}`", from.name, d.name)));
            }
            if to.kind == ModuleKind::Source {
                return Err(err(format!("source module `{}` consumes `{}`", to.name, d.name)));
            }
            if d.bytes == 0 {
                return Err(err(format!("message `{}` has zero bytes", d.name)));
            }
            if to.kind == ModuleKind::Compute && d.instructions == 0 {
                return Err(err(format!("message `{}` has zero instructions", d.name)));
            }
            if !(0.0..=1.0).contains(&d.trigger_fraction) {
                return Err(err(format!(
                    "message `{}` has trigger fraction {}",
                    d.name, d.trigger_fraction
                )));
            }
        }
        let sources = self
            .messages
            .iter()
            .filter(|d| self.module(&d.from_module).map(|m| m.kind) == Some(ModuleKind::Source))
            .count();
        if sources != 1 {
            return Err(err(format!(
                "expected exactly one message emitted by a source module, found {sources}"
            )));
        }
        if self.topological_order().is_none() {
            return Err(err("module graph has a cycle".into()));
        }
        for l in &self.loops {
            if l.messages.is_empty() {
                return Err(err(format!("loop `{}` is empty", l.name)));
            }
            let mut prev: Option<&MessageSpec> = None;
            for name in &l.messages {
                let idx = self
                    .message_index(name)
                    .ok_or_else(|| err(format!("loop `{}` names unknown message `{name}`", l.name)))?;
                let d = &self.messages[idx];
                if let Some(p) = prev {
                    if p.to_module != d.from_module {
                        return Err(err(format!(
                            "loop `{}` breaks between `{}` and `{}`",
                            l.name, p.name, d.name
                        )));
                    }
                }
                prev = Some(d);
            }
        }
        Ok(())
    }

    /// Kahn's algorithm over modules; `None` when the message graph is cyclic.
    pub fn topological_order(&self) -> Option<Vec<&str>> {
        let mut indegree: BTreeMap<&str, usize> =
            self.modules.iter().map(|m| (m.name.as_str(), 0)).collect();
        for d in &self.messages {
            *indegree.get_mut(d.to_module.as_str())? += 1;
        }
        let mut ready: Vec<&str> = indegree
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(&n, _)| n)
            .collect();
        let mut order = Vec::new();
        while let Some(m) = ready.pop() {
            order.push(m);
            for d in self.messages.iter().filter(|d| d.from_module == m) {
                let e = indegree.get_mut(d.to_module.as_str())?;
                *e -= 1;
                if *e == 0 {
                    ready.push(d.to_module.as_str());
                }
            }
        }
        (order.len() == self.modules.len()).then_some(order)
    }
}

/// Which nodes host a stateless replica of each `(application, module)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub replicas: BTreeMap<String, BTreeMap<String, BTreeSet<NodeId>>>,
}

impl Placement {
    pub fn place(&mut self, app: &str, module: &str, node: NodeId) {
        self.replicas
            .entry(app.to_string())
            .or_default()
            .entry(module.to_string())
            .or_default()
            .insert(node);
    }

    pub fn hosts(&self, app: &str, module: &str) -> Vec<NodeId> {
        self.replicas
            .get(app)
            .and_then(|m| m.get(module))
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default()
    }

    /// Referential integrity against applications and topology, plus node
    /// kind compatibility.
    pub fn validate(&self, topology: &Topology, apps: &[Application]) -> Result<()> {
        for (app_name, modules) in &self.replicas {
            let app = apps
                .iter()
                .find(|a| &a.name == app_name)
                .ok_or_else(|| Error::InvalidPlacement(format!("unknown application `{app_name}`")))?;
            for (module_name, nodes) in modules {
                let module = app.module(module_name).ok_or_else(|| {
                    Error::InvalidPlacement(format!("`{app_name}` has no module `{module_name}`"))
                })?;
                if nodes.is_empty() {
                    return Err(Error::InvalidPlacement(format!(
                        "`{app_name}/{module_name}` has no replicas"
                    )));
                }
                for &n in nodes {
                    let node = topology
                        .node(n)
                        .map_err(|_| Error::InvalidPlacement(format!("unknown node {n}")))?;
                    let ok = match module.kind {
                        ModuleKind::Compute => node.kind.is_compute(),
                        ModuleKind::Source | ModuleKind::Sink => node.kind == NodeKind::Iot,
                    };
                    if !ok {
                        return Err(Error::InvalidPlacement(format!(
                            "`{app_name}/{module_name}` cannot run on {:?} node {n}",
                            node.kind
                        )));
                    }
                }
            }
        }
        for app in apps {
            for m in &app.modules {
                if self.hosts(&app.name, &m.name).is_empty() {
                    return Err(Error::InvalidPlacement(format!(
                        "`{}/{}` is not placed",
                        app.name, m.name
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Instructions and payload size of one application tier.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tier {
    pub instructions: u64,
    pub bytes: u64,
}

pub fn default_tiers() -> Vec<Tier> {
    vec![
        Tier { instructions: 100, bytes: 10 },
        Tier { instructions: 1_000, bytes: 100 },
        Tier { instructions: 10_000, bytes: 1_000 },
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriggerFractions {
    pub fog_down: f64,
    pub fog_up: f64,
    pub cloud: f64,
}

impl Default for TriggerFractions {
    fn default() -> Self {
        TriggerFractions {
            fog_down: 1.0,
            fog_up: 0.1,
            cloud: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Suite {
    pub applications: Vec<Application>,
    pub placement: Placement,
}

impl Suite {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let suite: Suite = serde_json::from_str(text)?;
        for app in &suite.applications {
            app.validate()?;
        }
        Ok(suite)
    }
}

fn modules() -> Vec<AppModule> {
    let m = |name: &str, kind| AppModule {
        name: name.into(),
        kind,
        ram: default_module_ram(),
    };
    vec![
        m("Sensor", ModuleKind::Source),
        m("Fog", ModuleKind::Compute),
        m("Cloud", ModuleKind::Compute),
        m("Actuator", ModuleKind::Sink),
    ]
}

/// Every IoT device hosts the Sensor and Actuator of each app, every Fog node
/// the Fog module, every Cloud node the Cloud module.
fn place_everywhere(topology: &Topology, apps: &[Application]) -> Placement {
    let mut placement = Placement::default();
    for app in apps {
        for node in topology.nodes() {
            let modules: &[&str] = match node.kind {
                NodeKind::Iot => &["Sensor", "Actuator"],
                NodeKind::Fog => &["Fog"],
                NodeKind::Cloud => &["Cloud"],
            };
            for m in modules {
                placement.place(&app.name, m, node.id);
            }
        }
    }
    placement
}

pub fn build_single_loop_suite(topology: &Topology) -> Suite {
    build_single_loop_suite_with(topology, &default_tiers())
}

/// Sensor → Fog → Cloud → Actuator, one application per tier, every message
/// unconditionally triggered.
pub fn build_single_loop_suite_with(topology: &Topology, tiers: &[Tier]) -> Suite {
    let applications: Vec<Application> = tiers
        .iter()
        .enumerate()
        .map(|(i, t)| Application {
            name: format!("App{}", i + 1),
            modules: modules(),
            messages: vec![
                MessageSpec::new("Sensor", "Sensor", "Fog", t.instructions, t.bytes, 1.0),
                MessageSpec::new("Fog", "Fog", "Cloud", t.instructions, t.bytes, 1.0),
                MessageSpec::new("Cloud", "Cloud", "Actuator", t.instructions, t.bytes, 1.0),
            ],
            loops: vec![Loop {
                name: "Loop".into(),
                messages: vec!["Sensor".into(), "Fog".into(), "Cloud".into()],
            }],
        })
        .collect();
    let placement = place_everywhere(topology, &applications);
    Suite {
        applications,
        placement,
    }
}

pub fn build_two_loop_suite(topology: &Topology) -> Suite {
    build_two_loop_suite_with(topology, &default_tiers(), TriggerFractions::default())
}

/// Immediate Fog feedback on every Sensor workload (loop 1) plus a thinned
/// Fog → Cloud → device path (loop 2).
pub fn build_two_loop_suite_with(topology: &Topology, tiers: &[Tier], triggers: TriggerFractions) -> Suite {
    let applications: Vec<Application> = tiers
        .iter()
        .enumerate()
        .map(|(i, t)| Application {
            name: format!("App{}", i + 1),
            modules: modules(),
            messages: vec![
                MessageSpec::new("Sensor", "Sensor", "Fog", t.instructions, t.bytes, 1.0),
                MessageSpec::new("FogDown", "Fog", "Actuator", t.instructions, t.bytes, triggers.fog_down),
                MessageSpec::new("FogUp", "Fog", "Cloud", t.instructions, t.bytes, triggers.fog_up),
                MessageSpec::new("Cloud", "Cloud", "Actuator", t.instructions, t.bytes, triggers.cloud),
            ],
            loops: vec![
                Loop {
                    name: "Loop1".into(),
                    messages: vec!["Sensor".into(), "FogDown".into()],
                },
                Loop {
                    name: "Loop2".into(),
                    messages: vec!["Sensor".into(), "FogUp".into(), "Cloud".into()],
                },
            ],
        })
        .collect();
    let placement = place_everywhere(topology, &applications);
    Suite {
        applications,
        placement,
    }
}

/// Exponential inter-arrival times on the integer time grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrivalProcess {
    /// Mean inter-arrival time in time-steps.
    pub scale: f64,
    /// Smallest emitted gap; a zero draw would create simultaneous tasks.
    pub minimum: u64,
}

impl Default for ArrivalProcess {
    fn default() -> Self {
        ArrivalProcess {
            scale: 100.0,
            minimum: 1,
        }
    }
}

impl ArrivalProcess {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        sample_inter_arrival(self, rng)
    }
}

pub fn sample_inter_arrival<R: Rng + ?Sized>(process: &ArrivalProcess, rng: &mut R) -> u64 {
    let exp = Exp::new(1.0 / process.scale).expect("scale is positive");
    let x: f64 = exp.sample(rng);
    // round half up
    let rounded = (x + 0.5).floor() as u64;
    rounded.max(process.minimum)
}

/// Draws one message's instruction count.
pub fn sample_instructions<R: Rng + ?Sized>(spec: &MessageSpec, rng: &mut R) -> u64 {
    match spec.distribution {
        InstructionDistribution::Fixed => spec.instructions,
        InstructionDistribution::Exponential => {
            let exp = Exp::new(1.0 / spec.instructions as f64).expect("instructions are positive");
            let x: f64 = exp.sample(rng);
            ((x + 0.5).floor() as u64).max(1)
        }
    }
}
