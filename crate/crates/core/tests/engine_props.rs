mod common;

use std::collections::{BTreeMap, HashMap};

use fogsim::engine::{run, SimConfig};
use fogsim::metrics::{DrainStatus, LifecycleKind, MessageState, MetricsLog, Resource};
use fogsim::policies::PolicyKind;
use fogsim::topology::{build_generic_topology, generate_as_topology, Link, Node, NodeKind, Topology};
use fogsim::workload::{build_single_loop_suite, build_two_loop_suite, Suite};
use proptest::prelude::*;

fn policy() -> impl Strategy<Value = PolicyKind> {
    prop::sample::select(PolicyKind::ALL.to_vec())
}

fn generic_run(policy: PolicyKind, seed: u64, duration: u64, events: bool) -> MetricsLog {
    let t = build_generic_topology();
    let s = build_single_loop_suite(&t);
    let mut cfg = SimConfig::new(policy, duration, seed);
    cfg.record_events = events;
    run(&t, &s.applications, &s.placement, &cfg).unwrap()
}

fn as_run(policy: PolicyKind, seed: u64, duration: u64) -> MetricsLog {
    let t = generate_as_topology(seed, 32).unwrap().topology;
    let s: Suite = build_two_loop_suite(&t);
    let mut cfg = SimConfig::new(policy, duration, seed);
    cfg.record_events = true;
    run(&t, &s.applications, &s.placement, &cfg).unwrap()
}

fn check_conservation(log: &MetricsLog) -> Result<(), TestCaseError> {
    // engine-side queue occupancy agrees with per-message states
    prop_assert_eq!(DrainStatus::from_states(log.records.iter().map(|r| &r.state)), log.drain);
    let mut per_type: BTreeMap<(usize, usize), [u64; 2]> = BTreeMap::new();
    for r in &log.records {
        let e = per_type.entry((r.app, r.spec)).or_default();
        e[0] += 1;
        e[1] += u64::from(r.state.is_done());
    }
    for (&(a, s), &[generated, done]) in &per_type {
        let out = DrainStatus::from_states(log.records.iter().filter(|r| r.app == a && r.spec == s).map(|r| &r.state));
        prop_assert_eq!(generated, done + out.outstanding());
    }
    Ok(())
}

fn check_causality(log: &MetricsLog) -> Result<(), TestCaseError> {
    let horizon = log.meta.duration as f64;
    for r in &log.records {
        let stages = [Some(r.created), r.arrived, r.node_enter, r.service_start, r.service_end];
        let seen: Vec<f64> = stages.iter().flatten().copied().collect();
        prop_assert!(seen.windows(2).all(|w| w[0] <= w[1]), "{:?}", r);
        prop_assert!(seen.iter().all(|&t| t <= horizon));
        if let Some(p) = r.parent {
            prop_assert_eq!(Some(r.created), log.records[p].service_end);
            prop_assert_eq!(r.root, log.records[p].root);
        }
        prop_assert!(r.link_wait >= 0.0);
    }
    Ok(())
}

/// For every resource, service starts happen in queue-entry order.
fn check_fcfs(log: &MetricsLog) -> Result<(), TestCaseError> {
    let events = log.events.as_ref().unwrap();
    let mut entered: HashMap<Resource, Vec<usize>> = HashMap::new();
    let mut started: HashMap<Resource, Vec<usize>> = HashMap::new();
    let mut last = (f64::NEG_INFINITY, 0u64);
    for e in events {
        prop_assert!(e.time >= last.0 && (e.seq > last.1 || e.seq == 0));
        last = (e.time, e.seq);
        match e.kind {
            LifecycleKind::LinkEnqueue | LifecycleKind::NodeEnqueue => entered.entry(e.resource).or_default().push(e.msg),
            LifecycleKind::TxStart | LifecycleKind::ServiceStart => started.entry(e.resource).or_default().push(e.msg),
            _ => {}
        }
    }
    for (res, order) in &started {
        let queued = &entered[res];
        prop_assert_eq!(&queued[..order.len()], &order[..], "{:?}", res);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn generic_runs_are_consistent(p in policy(), seed in any::<u64>(), duration in 200u64..3_000) {
        let log = generic_run(p, seed, duration, true);
        check_conservation(&log)?;
        check_causality(&log)?;
        check_fcfs(&log)?;
    }

    #[test]
    fn as_runs_are_consistent(p in policy(), seed in 0u64..1_000) {
        let log = as_run(p, seed, 2_000);
        check_conservation(&log)?;
        check_causality(&log)?;
        check_fcfs(&log)?;
    }

    #[test]
    fn same_seed_same_events(p in policy(), seed in any::<u64>()) {
        let a = generic_run(p, seed, 1_500, true);
        let b = generic_run(p, seed, 1_500, true);
        prop_assert_eq!(a.events, b.events);
        prop_assert_eq!(a.records, b.records);
    }
}

#[test]
fn empty_horizon_has_no_messages() {
    let log = generic_run(PolicyKind::Electre, 1, 0, false);
    assert!(log.records.is_empty());
    assert_eq!(log.drain, DrainStatus::default());
}

#[test]
fn underload_never_waits() {
    // one device, arrivals every ~1000 steps, 2-step service
    let (t, apps, p) = common::single_queue(1000, 2000);
    let mut cfg = SimConfig::new(PolicyKind::Nearest, 200_000, 5);
    cfg.arrival.scale = 1e-9; // every gap rounds to the minimum
    cfg.arrival.minimum = 1000;
    let mut apps = apps;
    apps[0].messages[0].distribution = Default::default();
    let log = run(&t, &apps, &p, &cfg).unwrap();
    assert_eq!(log.records.len(), 200);
    for r in &log.records {
        assert_eq!(r.service_start, r.node_enter);
    }
}

#[test]
fn overloaded_link_grows_linearly() {
    // one message per step, two steps of transmission each: the queue
    // grows by half a message per step
    let nodes = vec![
        Node { id: 0, kind: NodeKind::Iot, ipt: 10, ram: 1 },
        Node { id: 1, kind: NodeKind::Fog, ipt: 1_000_000, ram: 1 },
    ];
    let t = Topology::new(nodes, vec![Link { a: 0, b: 1, bw: 0.5, pr: 3.0 }]).unwrap();
    let (_, mut apps, p) = common::single_queue(1, 1);
    apps[0].messages[0].distribution = Default::default();
    for horizon in [1_000u64, 4_000] {
        let mut cfg = SimConfig::new(PolicyKind::Nearest, horizon, 1);
        cfg.arrival.scale = 1e-9;
        let log = run(&t, &apps, &p, &cfg).unwrap();
        let expected = horizon as f64 / 2.0;
        assert!((log.drain.link_waiting as f64 - expected).abs() <= 2.0, "{:?}", log.drain);
        assert_eq!(log.drain.link_transmitting, 1);
    }
}

#[test]
fn mm1_waiting_time() {
    // λ = 1/200, μ = 1/100: W = 200, Wq = ρ/(μ-λ) = 100
    let (t, apps, p) = common::single_queue(1, 100);
    let mut cfg = SimConfig::new(PolicyKind::Nearest, 4_000_000, 11);
    cfg.arrival.scale = 200.0;
    let log = run(&t, &apps, &p, &cfg).unwrap();
    let served: Vec<_> = log.records.iter().filter(|r| r.state == MessageState::Served).collect();
    assert!(served.len() >= 10_000);
    let wq = served.iter().map(|r| r.service_start.unwrap() - r.node_enter.unwrap()).sum::<f64>() / served.len() as f64;
    assert!((wq - 100.0).abs() < 15.0, "mean queueing delay {wq}");
}
