//! Discrete-event simulation of message traffic over a Fog topology.
//!
//! Every directed link half is a FIFO channel: a message holds it for its
//! transmission time `S/BW` and then propagates for `PR` without blocking
//! the next one. Every compute node is a single FIFO server taking
//! `I/IPT` per message. Events at equal times fire in scheduling order.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::electre::Electre;
use crate::error::{Error, Result};
use crate::metrics::{
    AppInfo, DecisionRecord, DrainStatus, EventRecord, LifecycleKind, MessageRecord, MessageState, MetricsLog,
    Resource, RunMeta,
};
use crate::policies::{DrrScope, PolicyKind, Request, SelectionContext, Selector};
use crate::rng::{stream_rng, streams};
use crate::topology::{NodeId, Routes, Topology};
use crate::workload::{sample_instructions, Application, ArrivalProcess, MessageSpec, ModuleKind, Placement};

#[derive(Clone, Debug)]
pub struct SimConfig {
    /// Events strictly after this time are not processed.
    pub duration: u64,
    pub seed: u64,
    pub policy: PolicyKind,
    pub arrival: ArrivalProcess,
    pub electre: Electre,
    pub drr_scope: DrrScope,
    /// Keep every lifecycle transition (memory heavy on long runs).
    pub record_events: bool,
    /// Keep the full ELECTRE trace of every decision.
    pub record_decisions: bool,
}

impl SimConfig {
    pub fn new(policy: PolicyKind, duration: u64, seed: u64) -> Self {
        SimConfig {
            duration,
            seed,
            policy,
            arrival: ArrivalProcess::default(),
            electre: Electre::equal_weights(crate::policies::CRITERIA),
            drr_scope: DrrScope::default(),
            record_events: false,
            record_decisions: false,
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum EventKind {
    Generate { process: usize },
    TxDone { half: usize },
    Arrive { msg: usize },
    ServiceDone { node: NodeId },
}

#[derive(Debug)]
struct Event {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct CompiledMessage {
    spec: MessageSpec,
    consumer: ModuleKind,
    consumer_hosts: Vec<NodeId>,
    /// Messages the consumer module emits after serving this one.
    triggers: Vec<usize>,
}

struct CompiledApp {
    messages: Vec<CompiledMessage>,
    source_message: usize,
}

fn compile(topology: &Topology, apps: &[Application], placement: &Placement) -> Result<Vec<CompiledApp>> {
    placement.validate(topology, apps)?;
    apps.iter()
        .map(|app| {
            app.validate()?;
            let kind_of = |m: &str| app.module(m).expect("validated").kind;
            let messages = app
                .messages
                .iter()
                .map(|m| CompiledMessage {
                    spec: m.clone(),
                    consumer: kind_of(&m.to_module),
                    consumer_hosts: placement.hosts(&app.name, &m.to_module),
                    triggers: (0..app.messages.len())
                        .filter(|&j| app.messages[j].from_module == m.to_module)
                        .collect(),
                })
                .collect();
            let source_message = app
                .messages
                .iter()
                .position(|m| kind_of(&m.from_module) == ModuleKind::Source)
                .expect("validated");
            Ok(CompiledApp {
                messages,
                source_message,
            })
        })
        .collect()
}

struct ArrivalStream {
    device: NodeId,
    app: usize,
    rng: ChaCha8Rng,
}

#[derive(Default)]
struct Channel {
    queue: VecDeque<usize>,
    busy: Option<usize>,
}

#[derive(Default)]
struct Server {
    queue: VecDeque<usize>,
    busy: Option<usize>,
}

#[derive(Clone, Copy, Default)]
struct Cursor {
    hop: usize,
    enqueued: f64,
}

struct Sim<'a> {
    topology: &'a Topology,
    routes: Routes,
    apps: Vec<CompiledApp>,
    config: &'a SimConfig,
    heap: BinaryHeap<Event>,
    seq: u64,
    records: Vec<MessageRecord>,
    cursors: Vec<Cursor>,
    channels: Vec<Channel>,
    servers: Vec<Server>,
    pending: Vec<u64>,
    arrivals: Vec<ArrivalStream>,
    selector: Selector,
    trigger_rng: ChaCha8Rng,
    service_rng: ChaCha8Rng,
    events: Option<Vec<EventRecord>>,
    decisions: Option<Vec<DecisionRecord>>,
}

/// Runs one simulation and returns its message log.
pub fn run(topology: &Topology, apps: &[Application], placement: &Placement, config: &SimConfig) -> Result<MetricsLog> {
    let compiled = compile(topology, apps, placement)?;
    let mut arrivals = Vec::new();
    for (a, app) in apps.iter().enumerate() {
        let source = &app.messages[compiled[a].source_message].from_module;
        for device in placement.hosts(&app.name, source) {
            arrivals.push(ArrivalStream {
                device,
                app: a,
                rng: stream_rng(config.seed, streams::arrival(device, a)),
            });
        }
    }
    if config.arrival.scale <= 0.0 || !config.arrival.scale.is_finite() {
        return Err(Error::InvalidInput("arrival scale must be positive".into()));
    }
    let mut sim = Sim {
        topology,
        routes: Routes::new(topology),
        apps: compiled,
        config,
        heap: BinaryHeap::new(),
        seq: 0,
        records: Vec::new(),
        cursors: Vec::new(),
        channels: (0..topology.link_count() * 2).map(|_| Channel::default()).collect(),
        servers: (0..topology.node_count()).map(|_| Server::default()).collect(),
        pending: vec![0; topology.node_count()],
        arrivals,
        selector: Selector::new(
            config.policy,
            config.electre.clone(),
            stream_rng(config.seed, streams::POLICY),
            config.drr_scope,
        ),
        trigger_rng: stream_rng(config.seed, streams::TRIGGER),
        service_rng: stream_rng(config.seed, streams::SERVICE),
        events: config.record_events.then(Vec::new),
        decisions: config.record_decisions.then(Vec::new),
    };
    for process in 0..sim.arrivals.len() {
        let gap = config.arrival.sample(&mut sim.arrivals[process].rng);
        sim.schedule(gap as f64, EventKind::Generate { process });
    }
    let horizon = config.duration as f64;
    while let Some(ev) = sim.heap.pop() {
        if ev.time > horizon {
            break;
        }
        sim.handle(ev)?;
    }
    let drain = sim.drain_status();
    Ok(MetricsLog {
        meta: RunMeta {
            run_id: String::new(),
            scenario: String::new(),
            policy: config.policy.to_string(),
            seed: config.seed,
            duration: config.duration,
        },
        apps: apps.iter().map(AppInfo::from_application).collect(),
        nodes: topology.nodes().iter().map(|n| (n.id, n.kind)).collect(),
        records: sim.records,
        drain,
        selection: sim.selector.stats,
        events: sim.events,
        decisions: sim.decisions,
    })
}

impl Sim<'_> {
    fn schedule(&mut self, time: f64, kind: EventKind) {
        self.seq += 1;
        self.heap.push(Event {
            time,
            seq: self.seq,
            kind,
        });
    }

    fn log(&mut self, time: f64, kind: LifecycleKind, msg: usize, resource: Resource) {
        if let Some(events) = &mut self.events {
            events.push(EventRecord {
                seq: events.len() as u64,
                time,
                kind,
                msg,
                resource,
            });
        }
    }

    fn channel_resource(&self, half: usize) -> Resource {
        let link = self.topology.link(half / 2);
        let (from, to) = if half.is_multiple_of(2) { (link.a, link.b) } else { (link.b, link.a) };
        Resource::Link {
            link: half / 2,
            from,
            to,
        }
    }

    fn handle(&mut self, ev: Event) -> Result<()> {
        let now = ev.time;
        match ev.kind {
            EventKind::Generate { process } => self.generate(process, now),
            EventKind::TxDone { half } => {
                self.tx_done(half, now);
                Ok(())
            }
            EventKind::Arrive { msg } => {
                self.arrive(msg, now);
                Ok(())
            }
            EventKind::ServiceDone { node } => {
                self.service_done(node, now);
                Ok(())
            }
        }
    }

    fn generate(&mut self, process: usize, now: f64) -> Result<()> {
        let (device, a) = (self.arrivals[process].device, self.arrivals[process].app);
        let m = self.apps[a].source_message;
        let instructions = sample_instructions(&self.apps[a].messages[m].spec, &mut self.service_rng);
        let bytes = self.apps[a].messages[m].spec.bytes;
        let ctx = SelectionContext {
            topology: self.topology,
            routes: &self.routes,
            source: device,
            app: a,
            request: Request { instructions, bytes },
            candidates: &self.apps[a].messages[m].consumer_hosts,
            load: &self.pending,
        };
        let (dst, decision) = self.selector.select(&ctx)?;
        let id = self.records.len();
        if let (Some(log), Some(decision)) = (&mut self.decisions, decision) {
            log.push(DecisionRecord {
                time: now,
                msg: id,
                source: device,
                app: a,
                decision,
            });
        }
        self.create(a, m, id, None, device, dst, device, instructions, now);
        let gap = self.config.arrival.sample(&mut self.arrivals[process].rng);
        self.schedule(now + gap as f64, EventKind::Generate { process });
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn create(
        &mut self,
        app: usize,
        spec: usize,
        root: usize,
        parent: Option<usize>,
        source: NodeId,
        destination: NodeId,
        origin: NodeId,
        instructions: u64,
        now: f64,
    ) {
        let id = self.records.len();
        let hops = self.routes.hops(source, destination) as u32;
        self.records.push(MessageRecord {
            id,
            app,
            spec,
            root,
            parent,
            source,
            destination,
            origin,
            bytes: self.apps[app].messages[spec].spec.bytes,
            instructions,
            hops,
            created: now,
            link_wait: 0.0,
            transmission: 0.0,
            propagation: 0.0,
            arrived: None,
            node_enter: None,
            service_start: None,
            service_end: None,
            state: MessageState::InLinkQueue,
        });
        self.cursors.push(Cursor::default());
        self.log(now, LifecycleKind::Created, id, Resource::Node { node: source });
        if hops == 0 {
            self.reach_destination(id, now);
        } else {
            self.enter_link(id, 0, now);
        }
    }

    fn enter_link(&mut self, msg: usize, hop: usize, now: f64) {
        let r = &self.records[msg];
        let path = self.routes.path(r.source, r.destination);
        let link = path.links[hop];
        let from = path.nodes[hop];
        let half = link * 2 + usize::from(from != self.topology.link(link).a);
        self.cursors[msg] = Cursor { hop, enqueued: now };
        self.records[msg].state = MessageState::InLinkQueue;
        self.log(now, LifecycleKind::LinkEnqueue, msg, self.channel_resource(half));
        if self.channels[half].busy.is_none() {
            self.start_tx(half, msg, now);
        } else {
            self.channels[half].queue.push_back(msg);
        }
    }

    fn start_tx(&mut self, half: usize, msg: usize, now: f64) {
        self.channels[half].busy = Some(msg);
        let tx = self.records[msg].bytes as f64 / self.topology.link(half / 2).bw;
        let r = &mut self.records[msg];
        r.link_wait += now - self.cursors[msg].enqueued;
        r.transmission += tx;
        r.state = MessageState::Transmitting;
        self.log(now, LifecycleKind::TxStart, msg, self.channel_resource(half));
        self.schedule(now + tx, EventKind::TxDone { half });
    }

    fn tx_done(&mut self, half: usize, now: f64) {
        let msg = self.channels[half].busy.take().expect("channel was transmitting");
        let pr = self.topology.link(half / 2).pr;
        self.records[msg].propagation += pr;
        self.records[msg].state = MessageState::Propagating;
        self.log(now, LifecycleKind::TxEnd, msg, self.channel_resource(half));
        self.schedule(now + pr, EventKind::Arrive { msg });
        if let Some(next) = self.channels[half].queue.pop_front() {
            self.start_tx(half, next, now);
        }
    }

    fn arrive(&mut self, msg: usize, now: f64) {
        let hop = self.cursors[msg].hop + 1;
        if hop < self.records[msg].hops as usize {
            self.enter_link(msg, hop, now);
        } else {
            self.reach_destination(msg, now);
        }
    }

    fn reach_destination(&mut self, msg: usize, now: f64) {
        let r = &mut self.records[msg];
        r.arrived = Some(now);
        let node = r.destination;
        self.log(now, LifecycleKind::Arrive, msg, Resource::Node { node });
        let r = &self.records[msg];
        match self.apps[r.app].messages[r.spec].consumer {
            ModuleKind::Compute => {
                let r = &mut self.records[msg];
                r.node_enter = Some(now);
                r.state = MessageState::InNodeQueue;
                self.pending[node] += r.instructions;
                self.log(now, LifecycleKind::NodeEnqueue, msg, Resource::Node { node });
                if self.servers[node].busy.is_none() {
                    self.start_service(node, msg, now);
                } else {
                    self.servers[node].queue.push_back(msg);
                }
            }
            ModuleKind::Sink | ModuleKind::Source => {
                self.records[msg].state = MessageState::Delivered;
                self.log(now, LifecycleKind::Delivered, msg, Resource::Node { node });
            }
        }
    }

    fn start_service(&mut self, node: NodeId, msg: usize, now: f64) {
        self.servers[node].busy = Some(msg);
        let ipt = self.topology.nodes()[node].ipt as f64;
        let r = &mut self.records[msg];
        r.service_start = Some(now);
        r.state = MessageState::InService;
        let t = r.instructions as f64 / ipt;
        self.log(now, LifecycleKind::ServiceStart, msg, Resource::Node { node });
        self.schedule(now + t, EventKind::ServiceDone { node });
    }

    fn service_done(&mut self, node: NodeId, now: f64) {
        let msg = self.servers[node].busy.take().expect("server was busy");
        let r = &mut self.records[msg];
        r.service_end = Some(now);
        r.state = MessageState::Served;
        self.pending[node] -= r.instructions;
        self.log(now, LifecycleKind::ServiceEnd, msg, Resource::Node { node });
        self.emit_triggered(msg, node, now);
        if let Some(next) = self.servers[node].queue.pop_front() {
            self.start_service(node, next, now);
        }
    }

    fn emit_triggered(&mut self, parent: usize, node: NodeId, now: f64) {
        let (a, s, root, origin) = {
            let r = &self.records[parent];
            (r.app, r.spec, r.root, r.origin)
        };
        for i in 0..self.apps[a].messages[s].triggers.len() {
            let t = self.apps[a].messages[s].triggers[i];
            let fraction = self.apps[a].messages[t].spec.trigger_fraction;
            if !(fraction >= 1.0 || self.trigger_rng.random::<f64>() < fraction) {
                continue;
            }
            let target = &self.apps[a].messages[t];
            let dst = if target.consumer == ModuleKind::Sink && target.consumer_hosts.contains(&origin) {
                origin
            } else {
                self.nearest(node, &target.consumer_hosts)
            };
            let instructions = sample_instructions(&target.spec, &mut self.service_rng);
            self.create(a, t, root, Some(parent), node, dst, origin, instructions, now);
        }
    }

    fn nearest(&self, from: NodeId, hosts: &[NodeId]) -> NodeId {
        *hosts
            .iter()
            .min_by(|&&x, &&y| {
                self.routes
                    .hops(from, x)
                    .cmp(&self.routes.hops(from, y))
                    .then(self.routes.propagation(from, x).total_cmp(&self.routes.propagation(from, y)))
                    .then(x.cmp(&y))
            })
            .expect("placement validated")
    }

    fn drain_status(&self) -> DrainStatus {
        let mut d = DrainStatus::default();
        for c in &self.channels {
            d.link_waiting += c.queue.len() as u64;
            d.link_transmitting += u64::from(c.busy.is_some());
        }
        for s in &self.servers {
            d.node_waiting += s.queue.len() as u64;
            d.node_in_service += u64::from(s.busy.is_some());
        }
        d.propagating = self
            .records
            .iter()
            .filter(|r| r.state == MessageState::Propagating)
            .count() as u64;
        d
    }
}
