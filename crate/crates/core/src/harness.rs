//! Experiment sweeps: scenario construction, seeded runs across policies and
//! durations, output files and cross-policy comparison.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path as FsPath, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::electre::{Electre, ThresholdRule};
use crate::engine::{self, SimConfig};
use crate::error::{Error, Result};
use crate::metrics::{self, MetricsLog, RunSummary, Stat};
use crate::policies::{DrrScope, PolicyKind, CRITERIA};
use crate::rng::derive_seed;
use crate::topology::{build_generic_topology, generate_as_topology, Topology, DEFAULT_AS_NODES};
use crate::workload::{
    build_single_loop_suite_with, build_two_loop_suite_with, default_tiers, ArrivalProcess, Suite, Tier,
    TriggerFractions,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Fixed three-Fog topology with single-loop applications.
    #[default]
    Generic,
    /// Generated AS-like topology with two-loop applications.
    AsInspired,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Generic => "generic",
            Scenario::AsInspired => "as_inspired",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "generic" => Ok(Scenario::Generic),
            "as_inspired" | "as" => Ok(Scenario::AsInspired),
            _ => Err(Error::Config {
                key: "scenario".into(),
                reason: format!("unknown scenario `{s}`"),
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub policies: Vec<PolicyKind>,
    pub durations: Vec<u64>,
    /// Number of seeds; seed `i` is derived from `master_seed` and shared by
    /// every policy and duration.
    pub seeds: u64,
    pub master_seed: u64,
    pub arrival: ArrivalProcess,
    pub weights: Vec<f64>,
    pub thresholds: ThresholdRule,
    pub as_nodes: usize,
    pub tiers: Vec<Tier>,
    pub triggers: TriggerFractions,
    pub drr_scope: DrrScope,
    pub out_dir: Option<PathBuf>,
    /// Write the per-message CSV next to each summary.
    pub write_messages: bool,
    pub record_events: bool,
    pub record_decisions: bool,
    /// Width of latency-over-time buckets in the summaries.
    pub bucket: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenario: Scenario::Generic,
            policies: PolicyKind::ALL.to_vec(),
            durations: vec![10_000],
            seeds: 10,
            master_seed: 42,
            arrival: ArrivalProcess::default(),
            weights: vec![1.0 / CRITERIA as f64; CRITERIA],
            thresholds: ThresholdRule::default(),
            as_nodes: DEFAULT_AS_NODES,
            tiers: default_tiers(),
            triggers: TriggerFractions::default(),
            drr_scope: DrrScope::default(),
            out_dir: None,
            write_messages: true,
            record_events: false,
            record_decisions: false,
            bucket: None,
        }
    }
}

const CONFIG_KEYS: &[&str] = &[
    "scenario",
    "policies",
    "durations",
    "seeds",
    "master_seed",
    "arrival",
    "weights",
    "thresholds",
    "as_nodes",
    "tiers",
    "triggers",
    "drr_scope",
    "out_dir",
    "write_messages",
    "record_events",
    "record_decisions",
    "bucket",
];

fn config_error(key: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        key: key.into(),
        reason: reason.into(),
    }
}

impl ExperimentConfig {
    /// Parses JSON, naming the offending key on failure.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let map = value
            .as_object()
            .ok_or_else(|| config_error("<root>", "expected a JSON object"))?;
        for (key, v) in map {
            if !CONFIG_KEYS.contains(&key.as_str()) {
                return Err(config_error(key, "unknown key"));
            }
            // Deserialize each key alone so the error names it.
            let mut single = serde_json::Map::new();
            single.insert(key.clone(), v.clone());
            serde_json::from_value::<ExperimentConfig>(serde_json::Value::Object(single))
                .map_err(|e| config_error(key, e.to_string()))?;
        }
        let config: ExperimentConfig = serde_json::from_value(value)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &FsPath) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.policies.is_empty() {
            return Err(config_error("policies", "at least one policy is required"));
        }
        if self.durations.is_empty() || self.durations.contains(&0) {
            return Err(config_error("durations", "need one or more positive durations"));
        }
        if self.seeds == 0 {
            return Err(config_error("seeds", "must be positive"));
        }
        if !(self.arrival.scale.is_finite() && self.arrival.scale > 0.0) {
            return Err(config_error("arrival", "scale must be positive"));
        }
        if self.weights.len() != CRITERIA {
            return Err(config_error("weights", format!("expected {CRITERIA} weights")));
        }
        self.electre().map_err(|e| config_error("weights", e.to_string()))?;
        let t = &self.thresholds;
        for pct in [t.indifference_percentile, t.preference_percentile, t.veto_percentile] {
            if !(0.0..=100.0).contains(&pct) {
                return Err(config_error("thresholds", "percentiles must lie in [0, 100]"));
            }
        }
        if !(t.indifference_divisor > 0.0) {
            return Err(config_error("thresholds", "divisor must be positive"));
        }
        if self.as_nodes < 10 {
            return Err(config_error("as_nodes", "must be at least 10"));
        }
        if self.tiers.is_empty() || self.tiers.iter().any(|t| t.instructions == 0 || t.bytes == 0) {
            return Err(config_error("tiers", "need one or more tiers with positive sizes"));
        }
        let tr = &self.triggers;
        if [tr.fog_down, tr.fog_up, tr.cloud].iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(config_error("triggers", "fractions must lie in [0, 1]"));
        }
        if let Some(b) = self.bucket {
            if !(b > 0.0) {
                return Err(config_error("bucket", "must be positive"));
            }
        }
        Ok(())
    }

    pub fn electre(&self) -> Result<Electre> {
        Electre::new(self.weights.clone(), self.thresholds)
    }

    /// Seed shared by every run with seed index `index`.
    pub fn seed(&self, index: u64) -> u64 {
        derive_seed(self.master_seed, index)
    }
}

/// Topology and applications of one scenario instance.
pub fn build_scenario(config: &ExperimentConfig, seed: u64) -> Result<(Topology, Suite)> {
    match config.scenario {
        Scenario::Generic => {
            let t = build_generic_topology();
            let suite = build_single_loop_suite_with(&t, &config.tiers);
            Ok((t, suite))
        }
        Scenario::AsInspired => {
            let t = generate_as_topology(seed, config.as_nodes)?.topology;
            let suite = build_two_loop_suite_with(&t, &config.tiers, config.triggers);
            Ok((t, suite))
        }
    }
}

pub fn run_id(scenario: Scenario, policy: PolicyKind, duration: u64, index: u64) -> String {
    format!("{scenario}_{policy}_d{duration}_s{index}")
}

/// One simulation of the sweep.
pub fn run_one(
    config: &ExperimentConfig,
    topology: &Topology,
    suite: &Suite,
    policy: PolicyKind,
    duration: u64,
    index: u64,
) -> Result<MetricsLog> {
    let seed = config.seed(index);
    let sim = SimConfig {
        duration,
        seed,
        policy,
        arrival: config.arrival,
        electre: config.electre()?,
        drr_scope: config.drr_scope,
        record_events: config.record_events,
        record_decisions: config.record_decisions,
    };
    let mut log = engine::run(topology, &suite.applications, &suite.placement, &sim)?;
    log.meta.scenario = config.scenario.to_string();
    log.meta.run_id = run_id(config.scenario, policy, duration, index);
    Ok(log)
}

fn write_outputs(config: &ExperimentConfig, dir: &FsPath, log: &MetricsLog, summary: &RunSummary) -> Result<()> {
    let base = dir.join(&log.meta.run_id);
    metrics::write_summary(summary, &base.with_extension("summary.json"))?;
    if config.write_messages {
        metrics::export_csv(log, &base.with_extension("csv"))?;
    }
    if let Some(events) = &log.events {
        let mut text = String::new();
        for e in events {
            text.push_str(&serde_json::to_string(e)?);
            text.push('\n');
        }
        std::fs::write(base.with_extension("events.jsonl"), text)?;
    }
    if let Some(decisions) = &log.decisions {
        let mut text = String::new();
        for d in decisions {
            text.push_str(&serde_json::to_string(d)?);
            text.push('\n');
        }
        std::fs::write(base.with_extension("decisions.jsonl"), text)?;
    }
    Ok(())
}

/// Runs every (seed, policy, duration) combination, in parallel, and
/// returns the summaries in a stable order. When `out_dir` is set the
/// per-run files are written there.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunSummary>> {
    config.validate()?;
    if let Some(dir) = &config.out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let scenarios: Vec<(Topology, Suite)> = (0..config.seeds)
        .map(|i| build_scenario(config, config.seed(i)))
        .collect::<Result<_>>()?;
    let mut jobs = Vec::new();
    for i in 0..config.seeds {
        for &p in &config.policies {
            for &d in &config.durations {
                jobs.push((i, p, d));
            }
        }
    }
    jobs.into_par_iter()
        .map(|(i, p, d)| {
            let (topology, suite) = &scenarios[i as usize];
            let log = run_one(config, topology, suite, p, d, i)?;
            let summary = metrics::summarize(&log, config.bucket);
            if let Some(dir) = &config.out_dir {
                write_outputs(config, dir, &log, &summary)?;
            }
            Ok(summary)
        })
        .collect()
}

/// Reads every `*.summary.json` in `dir`, sorted by file name.
pub fn load_summaries(dir: &FsPath) -> Result<Vec<RunSummary>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_string_lossy().ends_with(".summary.json"))
        .collect();
    paths.sort();
    paths.iter().map(|p| metrics::read_summary(p)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyAggregate {
    pub scenario: String,
    pub duration: u64,
    pub policy: String,
    pub runs: u64,
    /// Across runs, of each run's mean loop transfer rate.
    pub transfer_rate: Stat,
    pub loop_delay: Stat,
    pub waiting: Stat,
    pub total_response: Stat,
    pub link_waiting: Stat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Improvement {
    pub scenario: String,
    pub duration: u64,
    pub policy: String,
    pub baseline: String,
    /// `(mean_policy - mean_baseline) / mean_baseline` of transfer rates.
    pub mean_improvement: Option<f64>,
    /// Seeds where the policy's transfer rate is strictly higher.
    pub wins: u64,
    pub paired_runs: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub aggregates: Vec<PolicyAggregate>,
    pub improvements: Vec<Improvement>,
}

fn seed_index(run_id: &str) -> &str {
    run_id.rsplit('_').next().unwrap_or(run_id)
}

/// Aggregates summaries per (scenario, duration, policy) and compares every
/// policy against every other on the transfer rate, pairing runs by seed.
pub fn compare(summaries: &[RunSummary]) -> Comparison {
    type Key = (String, u64, String);
    let mut groups: BTreeMap<Key, Vec<&RunSummary>> = BTreeMap::new();
    for s in summaries {
        groups
            .entry((s.scenario.clone(), s.duration, s.policy.clone()))
            .or_default()
            .push(s);
    }
    let stat = |runs: &[&RunSummary], f: &dyn Fn(&RunSummary) -> Option<f64>| {
        Stat::of(&runs.iter().filter_map(|r| f(r)).collect::<Vec<_>>())
    };
    let mut out = Comparison::default();
    for ((scenario, duration, policy), runs) in &groups {
        out.aggregates.push(PolicyAggregate {
            scenario: scenario.clone(),
            duration: *duration,
            policy: policy.clone(),
            runs: runs.len() as u64,
            transfer_rate: stat(runs, &|r| r.mean_loop_transfer_rate),
            loop_delay: stat(runs, &|r| r.mean_loop_execution_delay),
            waiting: stat(runs, &|r| r.waiting.mean),
            total_response: stat(runs, &|r| r.total_response.mean),
            link_waiting: stat(runs, &|r| Some(r.saturation.link_waiting as f64)),
        });
    }
    for ((scenario, duration, policy), runs) in &groups {
        for ((s2, d2, baseline), base_runs) in &groups {
            if s2 != scenario || d2 != duration || baseline == policy {
                continue;
            }
            let by_seed: BTreeMap<&str, Option<f64>> = base_runs
                .iter()
                .map(|r| (seed_index(&r.run_id), r.mean_loop_transfer_rate))
                .collect();
            let mut wins = 0;
            let mut paired = 0;
            for r in runs {
                if let (Some(a), Some(Some(b))) = (r.mean_loop_transfer_rate, by_seed.get(seed_index(&r.run_id))) {
                    paired += 1;
                    if a > *b {
                        wins += 1;
                    }
                }
            }
            let a = stat(runs, &|r| r.mean_loop_transfer_rate).mean;
            let b = stat(base_runs, &|r| r.mean_loop_transfer_rate).mean;
            out.improvements.push(Improvement {
                scenario: scenario.clone(),
                duration: *duration,
                policy: policy.clone(),
                baseline: baseline.clone(),
                mean_improvement: match (a, b) {
                    (Some(a), Some(b)) if b != 0.0 => Some((a - b) / b),
                    _ => None,
                },
                wins,
                paired_runs: paired,
            });
        }
    }
    out
}

fn fmt_stat(s: &Stat) -> String {
    match (s.mean, s.std) {
        (Some(m), Some(sd)) => format!("{m:.4} ± {sd:.4}"),
        _ => "-".into(),
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<12} {:>9} {:<8} {:>4}  {:>24} {:>24} {:>24} {:>24}",
            "scenario", "duration", "policy", "runs", "transfer rate", "loop delay", "waiting", "link waiting"
        )?;
        for a in &self.aggregates {
            writeln!(
                f,
                "{:<12} {:>9} {:<8} {:>4}  {:>24} {:>24} {:>24} {:>24}",
                a.scenario,
                a.duration,
                a.policy,
                a.runs,
                fmt_stat(&a.transfer_rate),
                fmt_stat(&a.loop_delay),
                fmt_stat(&a.waiting),
                fmt_stat(&a.link_waiting)
            )?;
        }
        let electre = PolicyKind::Electre.as_str();
        for i in self.improvements.iter().filter(|i| i.policy == electre) {
            writeln!(
                f,
                "{} d{}: electre vs {:<8} improvement {:>8} wins {}/{}",
                i.scenario,
                i.duration,
                i.baseline,
                i.mean_improvement
                    .map(|v| format!("{:+.1}%", v * 100.0))
                    .unwrap_or_else(|| "-".into()),
                i.wins,
                i.paired_runs
            )?;
        }
        Ok(())
    }
}
