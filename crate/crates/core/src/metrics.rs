//! Message lifecycle log and every quantity derived from it: per-message
//! delays, loop execution delay and transfer rate, module utilization,
//! network saturation, plus CSV/JSON export.
//!
//! CSV columns, in order:
//! `run_id, seed, policy, scenario, msg_id, app, loop, type, src, dst, bytes,
//! instr, created, latency, waiting, service, response, total_response,
//! root, hops, state`. Delay columns are empty for messages that did not
//! reach the corresponding stage; `loop` lists the loops containing the
//! message type, separated by `;`.

use std::collections::BTreeMap;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use crate::electre::Decision;
use crate::error::{Error, Result};
use crate::policies::{PolicyKind, SelectionStats};
use crate::topology::{NodeId, NodeKind};
use crate::workload::{Application, ModuleKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageState {
    InLinkQueue,
    Transmitting,
    Propagating,
    InNodeQueue,
    InService,
    /// Processed by a compute module.
    Served,
    /// Consumed by a sink module.
    Delivered,
}

impl MessageState {
    pub fn is_done(self) -> bool {
        matches!(self, MessageState::Served | MessageState::Delivered)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MessageState::InLinkQueue => "in_link_queue",
            MessageState::Transmitting => "transmitting",
            MessageState::Propagating => "propagating",
            MessageState::InNodeQueue => "in_node_queue",
            MessageState::InService => "in_service",
            MessageState::Served => "served",
            MessageState::Delivered => "delivered",
        }
    }
}

/// Lifecycle of one runtime message. Per-link detail is aggregated; the
/// optional event log keeps individual link stages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MessageRecord {
    pub id: usize,
    pub app: usize,
    pub spec: usize,
    /// Id of the Sensor message that started this chain.
    pub root: usize,
    pub parent: Option<usize>,
    pub source: NodeId,
    pub destination: NodeId,
    /// IoT device that generated the root message.
    pub origin: NodeId,
    pub bytes: u64,
    pub instructions: u64,
    pub hops: u32,
    pub created: f64,
    /// Σ time spent queued for link access.
    pub link_wait: f64,
    /// Σ S/BW over traversed links.
    pub transmission: f64,
    /// Σ propagation over traversed links.
    pub propagation: f64,
    pub arrived: Option<f64>,
    pub node_enter: Option<f64>,
    pub service_start: Option<f64>,
    pub service_end: Option<f64>,
    pub state: MessageState,
}

/// Network latency of a delivered message: Σ over links of queueing,
/// transmission and propagation.
pub fn latency(r: &MessageRecord) -> Option<f64> {
    r.arrived.map(|_| r.link_wait + r.transmission + r.propagation)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DelayComponents {
    pub latency: f64,
    pub waiting: f64,
    pub service: f64,
    pub response: f64,
    pub total_response: f64,
}

/// Delays of a completed message; sink deliveries have zero waiting and service.
pub fn delay_components(r: &MessageRecord) -> Option<DelayComponents> {
    let latency = latency(r)?;
    let (waiting, service) = match r.state {
        MessageState::Delivered => (0.0, 0.0),
        MessageState::Served => {
            let enter = r.node_enter?;
            let start = r.service_start?;
            let end = r.service_end?;
            (start - enter, end - start)
        }
        _ => return None,
    };
    let response = waiting + service;
    Some(DelayComponents {
        latency,
        waiting,
        service,
        response,
        total_response: response + latency,
    })
}

/// Σ total response over the messages of one loop instance, or `None` when
/// any of them has not completed.
pub fn loop_execution_delay(chain: &[&MessageRecord]) -> Option<f64> {
    chain
        .iter()
        .map(|r| delay_components(r).map(|d| d.total_response))
        .sum()
}

/// Transmitted bytes over mean loop execution delay; absent without
/// completed loops.
pub fn loop_transfer_rate(bytes: u64, mean_delay: Option<f64>) -> Option<f64> {
    match mean_delay {
        Some(d) if d > 0.0 => Some(bytes as f64 / d),
        _ => None,
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrainStatus {
    /// Messages queued for a link, not yet transmitting. This is the
    /// network saturation measure.
    pub link_waiting: u64,
    pub link_transmitting: u64,
    pub propagating: u64,
    pub node_waiting: u64,
    pub node_in_service: u64,
}

impl DrainStatus {
    pub fn from_states<'a>(states: impl IntoIterator<Item = &'a MessageState>) -> Self {
        let mut d = DrainStatus::default();
        for s in states {
            match s {
                MessageState::InLinkQueue => d.link_waiting += 1,
                MessageState::Transmitting => d.link_transmitting += 1,
                MessageState::Propagating => d.propagating += 1,
                MessageState::InNodeQueue => d.node_waiting += 1,
                MessageState::InService => d.node_in_service += 1,
                MessageState::Served | MessageState::Delivered => {}
            }
        }
        d
    }

    pub fn outstanding(&self) -> u64 {
        self.link_waiting + self.link_transmitting + self.propagating + self.node_waiting + self.node_in_service
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LifecycleKind {
    Created,
    LinkEnqueue,
    TxStart,
    TxEnd,
    Arrive,
    NodeEnqueue,
    ServiceStart,
    ServiceEnd,
    Delivered,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Resource {
    /// Directed half of a link.
    Link { link: usize, from: NodeId, to: NodeId },
    Node { node: NodeId },
}

/// One audited state change. `seq` is the global order of recording.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub seq: u64,
    pub time: f64,
    pub kind: LifecycleKind,
    pub msg: usize,
    pub resource: Resource,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub time: f64,
    pub msg: usize,
    pub source: NodeId,
    pub app: usize,
    pub decision: Decision,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MessageInfo {
    pub name: String,
    pub consumer: ModuleKind,
    /// Loops containing this message type.
    pub loops: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopInfo {
    pub name: String,
    pub messages: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AppInfo {
    pub name: String,
    pub messages: Vec<MessageInfo>,
    pub loops: Vec<LoopInfo>,
}

impl AppInfo {
    pub fn from_application(app: &Application) -> Self {
        let loops: Vec<LoopInfo> = app
            .loops
            .iter()
            .map(|l| LoopInfo {
                name: l.name.clone(),
                messages: l
                    .messages
                    .iter()
                    .map(|m| app.message_index(m).expect("validated loop"))
                    .collect(),
            })
            .collect();
        let messages = app
            .messages
            .iter()
            .enumerate()
            .map(|(i, m)| MessageInfo {
                name: m.name.clone(),
                consumer: app.module(&m.to_module).expect("validated").kind,
                loops: (0..loops.len()).filter(|&l| loops[l].messages.contains(&i)).collect(),
            })
            .collect();
        AppInfo {
            name: app.name.clone(),
            messages,
            loops,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub run_id: String,
    pub scenario: String,
    pub policy: String,
    pub seed: u64,
    pub duration: u64,
}

/// Everything one simulation run produced.
#[derive(Clone, Debug)]
pub struct MetricsLog {
    pub meta: RunMeta,
    pub apps: Vec<AppInfo>,
    pub nodes: Vec<(NodeId, NodeKind)>,
    pub records: Vec<MessageRecord>,
    /// Queue occupancy read from the engine's resources at the end of the run.
    pub drain: DrainStatus,
    pub selection: SelectionStats,
    pub events: Option<Vec<EventRecord>>,
    pub decisions: Option<Vec<DecisionRecord>>,
}

impl MetricsLog {
    pub fn policy(&self) -> Option<PolicyKind> {
        self.meta.policy.parse().ok()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub count: u64,
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

impl Stat {
    /// Sample mean and (population) standard deviation.
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Stat::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Stat {
            count: values.len() as u64,
            mean: Some(mean),
            std: Some(var.sqrt()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeSummary {
    pub app: String,
    pub message: String,
    pub generated: u64,
    pub transmitted: u64,
    pub served: u64,
    pub outstanding: DrainStatus,
    pub latency: Stat,
    pub waiting: Stat,
    pub service: Stat,
    pub response: Stat,
    pub total_response: Stat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopSummary {
    pub app: String,
    pub loop_name: String,
    pub completed: u64,
    pub delay: Stat,
    pub transmitted_bytes: u64,
    pub transfer_rate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Utilization {
    pub node: NodeId,
    pub app: String,
    pub message: String,
    pub busy_time: f64,
    pub utilization: f64,
    pub served: u64,
}

/// How many root workloads each `(source, app)` sent to each destination.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub source: NodeId,
    pub app: String,
    pub destination: NodeId,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub start: f64,
    pub latency: Stat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: String,
    pub scenario: String,
    pub policy: String,
    pub seed: u64,
    pub duration: u64,
    pub generated: u64,
    pub transmitted: u64,
    pub served: u64,
    pub messages: Vec<TypeSummary>,
    pub loops: Vec<LoopSummary>,
    /// Mean over loops of their transfer rates.
    pub mean_loop_transfer_rate: Option<f64>,
    /// Mean over loops of their mean execution delays.
    pub mean_loop_execution_delay: Option<f64>,
    pub latency: Stat,
    pub waiting: Stat,
    pub service: Stat,
    pub response: Stat,
    pub total_response: Stat,
    pub utilization: Vec<Utilization>,
    pub saturation: DrainStatus,
    pub selection: SelectionStats,
    pub tie_rate: Option<f64>,
    pub workload_distribution: Vec<Placement>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_buckets: Option<Vec<Bucket>>,
}

/// Minimal per-message view needed for loop metrics, shared by the
/// in-memory path and the CSV re-read.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoopRow {
    pub app: usize,
    pub spec: usize,
    pub root: usize,
    pub bytes: u64,
    pub transmitted: bool,
    pub total_response: Option<f64>,
}

impl LoopRow {
    pub fn from_record(r: &MessageRecord) -> Self {
        LoopRow {
            app: r.app,
            spec: r.spec,
            root: r.root,
            bytes: r.bytes,
            transmitted: is_transmitted(r),
            total_response: delay_components(r).map(|d| d.total_response),
        }
    }
}

/// Arrived at its destination after crossing at least one link.
pub fn is_transmitted(r: &MessageRecord) -> bool {
    r.arrived.is_some() && r.hops > 0
}

/// Per-(app, loop) completion count, execution delay and transfer rate.
/// Rows must be in message-id order.
pub fn loop_summaries(apps: &[AppInfo], rows: impl IntoIterator<Item = LoopRow>) -> Vec<LoopSummary> {
    let mut bytes: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    // (app, loop, root) -> (Σ total response, final message completed)
    let mut instances: BTreeMap<(usize, usize, usize), (f64, bool)> = BTreeMap::new();
    for row in rows {
        let info = &apps[row.app].messages[row.spec];
        for &l in &info.loops {
            if row.transmitted {
                *bytes.entry((row.app, l)).or_default() += row.bytes;
            }
            if let Some(t) = row.total_response {
                let entry = instances.entry((row.app, l, row.root)).or_insert((0.0, false));
                entry.0 += t;
                if apps[row.app].loops[l].messages.last() == Some(&row.spec) {
                    entry.1 = true;
                }
            }
        }
    }
    let mut out = Vec::new();
    for (a, app) in apps.iter().enumerate() {
        for (l, lp) in app.loops.iter().enumerate() {
            let delays: Vec<f64> = instances
                .range((a, l, 0)..=(a, l, usize::MAX))
                .filter(|(_, (_, done))| *done)
                .map(|(_, (d, _))| *d)
                .collect();
            let delay = Stat::of(&delays);
            let b = bytes.get(&(a, l)).copied().unwrap_or(0);
            out.push(LoopSummary {
                app: app.name.clone(),
                loop_name: lp.name.clone(),
                completed: delays.len() as u64,
                delay,
                transmitted_bytes: b,
                transfer_rate: loop_transfer_rate(b, delay.mean),
            });
        }
    }
    out
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = values.collect();
    Stat::of(&v).mean
}

/// Busy-time fraction and served count per (node, app, message type). A
/// service still running at the end counts up to the end of the run.
pub fn module_utilization(log: &MetricsLog) -> Vec<Utilization> {
    let duration = log.meta.duration as f64;
    let mut acc: BTreeMap<(NodeId, usize, usize), (f64, u64)> = BTreeMap::new();
    for r in &log.records {
        let Some(start) = r.service_start else { continue };
        let end = r.service_end.unwrap_or(duration).min(duration);
        let e = acc.entry((r.destination, r.app, r.spec)).or_default();
        e.0 += (end - start).max(0.0);
        if r.state == MessageState::Served {
            e.1 += 1;
        }
    }
    acc.into_iter()
        .map(|((node, app, spec), (busy, served))| Utilization {
            node,
            app: log.apps[app].name.clone(),
            message: log.apps[app].messages[spec].name.clone(),
            busy_time: busy,
            utilization: if duration > 0.0 { busy / duration } else { 0.0 },
            served,
        })
        .collect()
}

/// Latency of transmitted messages bucketed by arrival time.
pub fn latency_buckets(log: &MetricsLog, width: f64) -> Vec<Bucket> {
    let mut acc: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for r in log.records.iter().filter(|r| is_transmitted(r)) {
        let b = (r.arrived.unwrap() / width).floor() as u64;
        acc.entry(b).or_default().push(latency(r).unwrap());
    }
    acc.into_iter()
        .map(|(b, v)| Bucket {
            start: b as f64 * width,
            latency: Stat::of(&v),
        })
        .collect()
}

pub fn summarize(log: &MetricsLog, bucket: Option<f64>) -> RunSummary {
    let mut messages = Vec::new();
    let mut all = [Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    let mut by_type: BTreeMap<(usize, usize), Vec<&MessageRecord>> = BTreeMap::new();
    for r in &log.records {
        by_type.entry((r.app, r.spec)).or_default().push(r);
    }
    for (a, app) in log.apps.iter().enumerate() {
        for (s, info) in app.messages.iter().enumerate() {
            let recs = by_type.get(&(a, s)).map(Vec::as_slice).unwrap_or(&[]);
            let mut cols = [Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new()];
            for r in recs {
                if is_transmitted(r) {
                    cols[0].push(latency(r).unwrap());
                }
                if let Some(d) = delay_components(r) {
                    if r.state == MessageState::Served {
                        cols[1].push(d.waiting);
                        cols[2].push(d.service);
                        cols[3].push(d.response);
                    }
                    cols[4].push(d.total_response);
                }
            }
            for (dst, src) in all.iter_mut().zip(&cols) {
                dst.extend_from_slice(src);
            }
            messages.push(TypeSummary {
                app: app.name.clone(),
                message: info.name.clone(),
                generated: recs.len() as u64,
                transmitted: recs.iter().filter(|r| is_transmitted(r)).count() as u64,
                served: recs.iter().filter(|r| r.state.is_done()).count() as u64,
                outstanding: DrainStatus::from_states(recs.iter().map(|r| &r.state)),
                latency: Stat::of(&cols[0]),
                waiting: Stat::of(&cols[1]),
                service: Stat::of(&cols[2]),
                response: Stat::of(&cols[3]),
                total_response: Stat::of(&cols[4]),
            });
        }
    }
    let loops = loop_summaries(&log.apps, log.records.iter().map(LoopRow::from_record));
    let mut distribution: BTreeMap<(NodeId, usize, NodeId), u64> = BTreeMap::new();
    for r in log.records.iter().filter(|r| r.parent.is_none()) {
        *distribution.entry((r.source, r.app, r.destination)).or_default() += 1;
    }
    let selection = log.selection;
    RunSummary {
        run_id: log.meta.run_id.clone(),
        scenario: log.meta.scenario.clone(),
        policy: log.meta.policy.clone(),
        seed: log.meta.seed,
        duration: log.meta.duration,
        generated: log.records.len() as u64,
        transmitted: log.records.iter().filter(|r| is_transmitted(r)).count() as u64,
        served: log.records.iter().filter(|r| r.state.is_done()).count() as u64,
        messages,
        mean_loop_transfer_rate: mean_of(loops.iter().filter_map(|l| l.transfer_rate)),
        mean_loop_execution_delay: mean_of(loops.iter().filter_map(|l| l.delay.mean)),
        loops,
        latency: Stat::of(&all[0]),
        waiting: Stat::of(&all[1]),
        service: Stat::of(&all[2]),
        response: Stat::of(&all[3]),
        total_response: Stat::of(&all[4]),
        utilization: module_utilization(log),
        saturation: log.drain,
        selection,
        tie_rate: (selection.decisions > 0).then(|| selection.ties as f64 / selection.decisions as f64),
        workload_distribution: distribution
            .into_iter()
            .map(|((source, app, destination), count)| Placement {
                source,
                app: log.apps[app].name.clone(),
                destination,
                count,
            })
            .collect(),
        latency_buckets: bucket.map(|w| latency_buckets(log, w)),
    }
}

/// One line of the per-message CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub run_id: String,
    pub seed: u64,
    pub policy: String,
    pub scenario: String,
    pub msg_id: usize,
    pub app: String,
    #[serde(rename = "loop")]
    pub loops: String,
    #[serde(rename = "type")]
    pub message: String,
    pub src: NodeId,
    pub dst: NodeId,
    pub bytes: u64,
    pub instr: u64,
    pub created: f64,
    pub latency: Option<f64>,
    pub waiting: Option<f64>,
    pub service: Option<f64>,
    pub response: Option<f64>,
    pub total_response: Option<f64>,
    pub root: usize,
    pub hops: u32,
    pub state: MessageState,
}

pub fn csv_rows(log: &MetricsLog) -> impl Iterator<Item = CsvRow> + '_ {
    log.records.iter().map(move |r| {
        let app = &log.apps[r.app];
        let info = &app.messages[r.spec];
        let d = delay_components(r);
        CsvRow {
            run_id: log.meta.run_id.clone(),
            seed: log.meta.seed,
            policy: log.meta.policy.clone(),
            scenario: log.meta.scenario.clone(),
            msg_id: r.id,
            app: app.name.clone(),
            loops: info
                .loops
                .iter()
                .map(|&l| app.loops[l].name.as_str())
                .collect::<Vec<_>>()
                .join(";"),
            message: info.name.clone(),
            src: r.source,
            dst: r.destination,
            bytes: r.bytes,
            instr: r.instructions,
            created: r.created,
            latency: latency(r),
            waiting: d.map(|d| d.waiting),
            service: d.map(|d| d.service),
            response: d.map(|d| d.response),
            total_response: d.map(|d| d.total_response),
            root: r.root,
            hops: r.hops,
            state: r.state,
        }
    })
}

pub fn export_csv(log: &MetricsLog, path: &FsPath) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in csv_rows(log) {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &FsPath) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Rebuilds loop rows from CSV lines using the application layout.
pub fn loop_rows_from_csv(apps: &[AppInfo], rows: &[CsvRow]) -> Result<Vec<LoopRow>> {
    rows.iter()
        .map(|row| {
            let app = apps
                .iter()
                .position(|a| a.name == row.app)
                .ok_or_else(|| Error::InvalidInput(format!("unknown app `{}` in CSV", row.app)))?;
            let spec = apps[app]
                .messages
                .iter()
                .position(|m| m.name == row.message)
                .ok_or_else(|| Error::InvalidInput(format!("unknown message `{}` in CSV", row.message)))?;
            Ok(LoopRow {
                app,
                spec,
                root: row.root,
                bytes: row.bytes,
                transmitted: row.latency.is_some() && row.hops > 0,
                total_response: row.total_response,
            })
        })
        .collect()
}

pub fn write_summary(summary: &RunSummary, path: &FsPath) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(summary)?)?;
    Ok(())
}

pub fn read_summary(path: &FsPath) -> Result<RunSummary> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Writes `(a)` the per-message CSV and `(b)` the run summary.
pub fn export(log: &MetricsLog, summary: &RunSummary, csv_path: &FsPath, summary_path: &FsPath) -> Result<()> {
    export_csv(log, csv_path)?;
    write_summary(summary, summary_path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: usize, spec: usize, root: usize) -> MessageRecord {
        MessageRecord {
            id,
            app: 0,
            spec,
            root,
            parent: None,
            source: 0,
            destination: 1,
            origin: 0,
            bytes: 100,
            instructions: 10,
            hops: 1,
            created: 0.0,
            link_wait: 0.0,
            transmission: 0.0,
            propagation: 0.0,
            arrived: None,
            node_enter: None,
            service_start: None,
            service_end: None,
            state: MessageState::InLinkQueue,
        }
    }

    /// Delivered-to-sink record whose total response equals `latency`.
    fn delivered(id: usize, spec: usize, root: usize, latency: f64) -> MessageRecord {
        let mut r = record(id, spec, root);
        r.transmission = latency;
        r.arrived = Some(latency);
        r.state = MessageState::Delivered;
        r
    }

    fn one_loop_app(len: usize) -> AppInfo {
        AppInfo {
            name: "A".into(),
            messages: (0..len)
                .map(|i| MessageInfo {
                    name: format!("m{i}"),
                    consumer: ModuleKind::Sink,
                    loops: vec![0],
                })
                .collect(),
            loops: vec![LoopInfo {
                name: "L".into(),
                messages: (0..len).collect(),
            }],
        }
    }

    #[test]
    fn latency_of_uncontended_link() {
        let mut r = record(0, 0, 0);
        assert_eq!(latency(&r), None);
        r.transmission = 1000.0 / 1000.0;
        r.propagation = 1.0;
        r.arrived = Some(2.0);
        assert_eq!(latency(&r), Some(2.0));
    }

    #[test]
    fn served_components() {
        let mut r = record(0, 0, 0);
        r.transmission = 1.0;
        r.propagation = 1.0;
        r.arrived = Some(2.0);
        r.node_enter = Some(2.0);
        r.service_start = Some(2.0);
        r.service_end = Some(12.0);
        r.state = MessageState::Served;
        let d = delay_components(&r).unwrap();
        assert_eq!(d.waiting, 0.0);
        assert_eq!(d.service, 10.0);
        assert_eq!(d.total_response, 12.0);
    }

    #[test]
    fn loop_delay_sums_chain() {
        let a = delivered(0, 0, 0, 2.0);
        let b = delivered(1, 1, 0, 3.0);
        let c = delivered(2, 2, 0, 5.0);
        assert_eq!(loop_execution_delay(&[&a]), Some(2.0));
        assert_eq!(loop_execution_delay(&[&a, &b, &c]), Some(10.0));
        let pending = record(3, 2, 0);
        assert_eq!(loop_execution_delay(&[&a, &pending]), None);
    }

    #[test]
    fn transfer_rate_definition() {
        assert_eq!(loop_transfer_rate(1000, Some(10.0)), Some(100.0));
        assert_eq!(loop_transfer_rate(2000, Some(10.0)), Some(200.0));
        assert_eq!(loop_transfer_rate(1000, None), None);
    }

    #[test]
    fn loop_summary_toy_log() {
        // Five two-message loop instances with hand-computed delays
        // (1+2, 2+2, 3+1, 4+4, 5+0.5) = 3, 4, 4, 8, 5.5 → mean 4.9.
        let apps = vec![one_loop_app(2)];
        let pairs = [(1.0, 2.0), (2.0, 2.0), (3.0, 1.0), (4.0, 4.0), (5.0, 0.5)];
        let mut recs = Vec::new();
        for (i, (x, y)) in pairs.iter().enumerate() {
            recs.push(delivered(2 * i, 0, 2 * i, *x));
            recs.push(delivered(2 * i + 1, 1, 2 * i, *y));
        }
        // A sixth instance that never completes still counts its bytes.
        recs.push(delivered(10, 0, 10, 7.0));
        let s = loop_summaries(&apps, recs.iter().map(LoopRow::from_record));
        assert_eq!(s[0].completed, 5);
        assert!((s[0].delay.mean.unwrap() - 4.9).abs() < 1e-12);
        assert_eq!(s[0].transmitted_bytes, 1100);
        assert!((s[0].transfer_rate.unwrap() - 1100.0 / 4.9).abs() < 1e-9);
    }

    #[test]
    fn no_completed_loops_means_no_rate() {
        let apps = vec![one_loop_app(2)];
        let recs = [delivered(0, 0, 0, 1.0)];
        let s = loop_summaries(&apps, recs.iter().map(LoopRow::from_record));
        assert_eq!(s[0].completed, 0);
        assert_eq!(s[0].transfer_rate, None);
    }

    fn toy_log(records: Vec<MessageRecord>, duration: u64) -> MetricsLog {
        let mut app = one_loop_app(1);
        app.messages[0].consumer = ModuleKind::Compute;
        MetricsLog {
            meta: RunMeta {
                duration,
                ..Default::default()
            },
            apps: vec![app],
            nodes: vec![(0, NodeKind::Iot), (1, NodeKind::Fog)],
            records,
            drain: DrainStatus::default(),
            selection: SelectionStats::default(),
            events: None,
            decisions: None,
        }
    }

    #[test]
    fn utilization_toy_log() {
        let served = |id, start: f64, end: f64| {
            let mut r = record(id, 0, id);
            r.arrived = Some(start);
            r.node_enter = Some(start);
            r.service_start = Some(start);
            r.service_end = Some(end);
            r.state = MessageState::Served;
            r
        };
        // busy 0-10 and 30-35, plus an unfinished service from 95 clipped at 100
        let mut running = record(2, 0, 2);
        running.arrived = Some(95.0);
        running.node_enter = Some(95.0);
        running.service_start = Some(95.0);
        running.state = MessageState::InService;
        let log = toy_log(vec![served(0, 0.0, 10.0), served(1, 30.0, 35.0), running], 100);
        let u = module_utilization(&log);
        assert_eq!(u.len(), 1);
        assert_eq!(u[0].busy_time, 20.0);
        assert_eq!(u[0].utilization, 0.2);
        assert_eq!(u[0].served, 2);

        let back_to_back = toy_log((0..10).map(|i| served(i, i as f64 * 10.0, i as f64 * 10.0 + 10.0)).collect(), 100);
        assert_eq!(module_utilization(&back_to_back)[0].utilization, 1.0);
        assert!(module_utilization(&toy_log(vec![], 100)).is_empty());
    }

    #[test]
    fn stat_basics() {
        let s = Stat::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, Some(2.5));
        assert!((s.std.unwrap() - 1.25f64.sqrt()).abs() < 1e-12);
        assert_eq!(Stat::of(&[]).mean, None);
    }
}
