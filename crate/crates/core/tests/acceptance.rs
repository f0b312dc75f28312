//! Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned
//! below. Run with `cargo test --test acceptance`.

mod common;

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use common::{oracle_credibility, single_queue};
use fogsim::electre::{
    compute_thresholds, concordance_matrix, credibility, discordance_index, select_with_thresholds, DecisionMatrix,
    Proximity, Thresholds,
};
use fogsim::engine::{run, SimConfig};
use fogsim::harness::{compare, run_experiment, ExperimentConfig, Scenario};
use fogsim::metrics::{MessageState, RunSummary};
use fogsim::policies::PolicyKind;
use fogsim::rng::stream_rng;
use fogsim::topology::generic::{FOG1, FOG1_DEVICES, FOG2, FOG3};
use rand::Rng;
use sha2::{Digest, Sha256};

const ELECTRE_TOL: f64 = 1e-9;
const ELECTRE_INSTANCES: usize = 1000;
const MM1_TARGET: f64 = 200.0;
const MM1_REL_TOL: f64 = 0.10;
const MM1_MIN_COMPLETIONS: usize = 50_000;
const NEAREST_FOG2_SHARE: f64 = 20.0 / 22.0;
const NEAREST_FOG2_TOL: f64 = 0.02;
const FASTEST_APP3_FOG3_MIN: f64 = 0.95;
const HEADLINE_MIN_WINS: u64 = 8;
const HEADLINE_MIN_IMPROVEMENT: f64 = 0.10;
const AS_MIN_TOPOLOGIES: usize = 8;
const TIE_RATE_TARGET: f64 = 0.1535;
const TIE_RATE_TOL: f64 = 0.05;
const SEEDS: u64 = 10;

struct Report {
    failures: Vec<String>,
}

impl Report {
    fn line(&mut self, id: &str, pass: bool, hard: bool, detail: String) {
        let tag = match (pass, hard) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "FAIL (soft)",
        };
        let text = format!("acceptance {id} [{tag}] {detail}\n");
        // written past the test harness's capture so it always shows
        let mut out = std::io::stdout().lock();
        out.write_all(text.as_bytes()).unwrap();
        out.flush().unwrap();
        if !pass && hard {
            self.failures.push(format!("{id}: {detail}"));
        }
    }
}

fn sweep(scenario: Scenario, policies: &[PolicyKind], duration: u64) -> Vec<RunSummary> {
    let config = ExperimentConfig {
        scenario,
        policies: policies.to_vec(),
        durations: vec![duration],
        seeds: SEEDS,
        ..Default::default()
    };
    run_experiment(&config).unwrap()
}

fn by_policy(runs: &[RunSummary], p: PolicyKind) -> Vec<&RunSummary> {
    runs.iter().filter(|r| r.policy == p.as_str()).collect()
}

fn electre_math(rep: &mut Report) {
    let start = Instant::now();
    let mut rng = stream_rng(2024, 1);
    let mut worst = 0.0f64;
    let mut sigma_eq_c_checked = 0;
    for _ in 0..ELECTRE_INSTANCES {
        let n = rng.random_range(2..9);
        let gains: Vec<Vec<f64>> = (0..5)
            .map(|_| {
                (0..n)
                    .map(|_| {
                        if rng.random_bool(0.3) {
                            -(rng.random_range(0..8) as f64)
                        } else {
                            -rng.random_range(0.0..100.0)
                        }
                    })
                    .collect()
            })
            .collect();
        let raw: Vec<f64> = (0..5).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let m = DecisionMatrix::new((0..n).collect(), gains.clone(), w.clone()).unwrap();
        let t = compute_thresholds(&m).unwrap();
        let (c_or, s_or) = oracle_credibility(&gains, &w, &t.q, &t.p, &t.v);
        let c_lib = concordance_matrix(&m, &t);
        let s_lib = credibility(&m, &t).unwrap();
        for k in 0..n * n {
            worst = worst.max((c_lib[k] - c_or[k]).abs()).max((s_lib.values()[k] - s_or[k]).abs());
        }
        for a in 0..n {
            for b in 0..n {
                let c = c_lib[a * n + b];
                if a != b && (0..5).all(|i| discordance_index(gains[i][a], gains[i][b], t.p[i], t.v[i]) <= c) {
                    worst = worst.max((s_lib.get(a, b) - c).abs());
                    sigma_eq_c_checked += 1;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    rep.line(
        "1 electre-math",
        worst <= ELECTRE_TOL && secs < 10.0,
        true,
        format!(
            "{ELECTRE_INSTANCES} instances, max |lib - oracle| = {worst:.2e} (tol {ELECTRE_TOL:.0e}), \
             {sigma_eq_c_checked} pairs with sigma = c, {secs:.2}s (< 10s)"
        ),
    );
}

fn degenerate_argmin(rep: &mut Report) {
    let mut rng = stream_rng(2024, 2);
    let mut mismatches = 0;
    for _ in 0..ELECTRE_INSTANCES {
        let n = rng.random_range(1..9);
        let costs: Vec<f64> = (0..n).map(|_| rng.random_range(0..6) as f64).collect();
        let prox: Vec<Proximity> = (0..n)
            .map(|_| Proximity {
                hops: rng.random_range(1..4),
                propagation: rng.random_range(0..4) as f64,
            })
            .collect();
        let ids: Vec<usize> = (0..n).map(|i| 100 + i).collect();
        let got = select_with_thresholds(
            &ids,
            std::slice::from_ref(&costs),
            &[1.0],
            Thresholds::uniform(1, 0.0, 0.0, f64::INFINITY),
            &prox,
        )
        .unwrap();
        let best = costs.iter().cloned().fold(f64::INFINITY, f64::min);
        let expect = (0..n)
            .filter(|&i| costs[i] == best)
            .min_by(|&x, &y| {
                (prox[x].hops, prox[x].propagation, ids[x])
                    .partial_cmp(&(prox[y].hops, prox[y].propagation, ids[y]))
                    .unwrap()
            })
            .map(|i| ids[i])
            .unwrap();
        mismatches += usize::from(got != expect);
    }
    rep.line(
        "2 degenerate-argmin",
        mismatches == 0,
        true,
        format!("{ELECTRE_INSTANCES} instances, {mismatches} mismatches (exact)"),
    );
}

fn mm1_time_in_system(rep: &mut Report) {
    let start = Instant::now();
    let (t, apps, p) = single_queue(1, 100);
    let mut cfg = SimConfig::new(PolicyKind::Nearest, 12_000_000, 77);
    cfg.arrival.scale = 200.0;
    let log = run(&t, &apps, &p, &cfg).unwrap();
    let sojourn: Vec<f64> = log
        .records
        .iter()
        .filter(|r| r.state == MessageState::Served)
        .map(|r| r.service_end.unwrap() - r.node_enter.unwrap())
        .collect();
    let mean = sojourn.iter().sum::<f64>() / sojourn.len() as f64;
    let secs = start.elapsed().as_secs_f64();
    let ok = sojourn.len() >= MM1_MIN_COMPLETIONS && (mean - MM1_TARGET).abs() <= MM1_REL_TOL * MM1_TARGET && secs < 30.0;
    rep.line(
        "3 mm1",
        ok,
        true,
        format!(
            "mean time in system {mean:.2} over {} completions (target {MM1_TARGET} ± {:.0}%), {secs:.1}s (< 30s)",
            sojourn.len(),
            MM1_REL_TOL * 100.0
        ),
    );
}

fn generic_behaviour(rep: &mut Report, runs: &[RunSummary]) {
    let nearest = by_policy(runs, PolicyKind::Nearest);
    let (mut fog2, mut fog3, mut total) = (0u64, 0u64, 0u64);
    for r in &nearest {
        for d in &r.workload_distribution {
            total += d.count;
            fog2 += d.count * u64::from(d.destination == FOG2);
            fog3 += d.count * u64::from(d.destination == FOG3);
        }
    }
    let share = fog2 as f64 / total as f64;
    let ok_a = fog3 == 0 && (share - NEAREST_FOG2_SHARE).abs() <= NEAREST_FOG2_TOL;

    let fastest = by_policy(runs, PolicyKind::Fastest);
    let (mut fog1_dev_total, mut fog1_dev_fog1, mut app3_total, mut app3_fog3) = (0u64, 0u64, 0u64, 0u64);
    for r in &fastest {
        for d in &r.workload_distribution {
            if FOG1_DEVICES.contains(&d.source) {
                fog1_dev_total += d.count;
                fog1_dev_fog1 += d.count * u64::from(d.destination == FOG1);
            } else if d.app == "App3" {
                app3_total += d.count;
                app3_fog3 += d.count * u64::from(d.destination == FOG3);
            }
        }
    }
    let app3_share = app3_fog3 as f64 / app3_total as f64;
    let ok_b = fog1_dev_total == fog1_dev_fog1 && app3_share >= FASTEST_APP3_FOG3_MIN;

    let mean_link_waiting = |p| {
        let rs = by_policy(runs, p);
        rs.iter().map(|r| r.saturation.link_waiting as f64).sum::<f64>() / rs.len() as f64
    };
    let waits: Vec<(PolicyKind, f64)> = PolicyKind::ALL.iter().map(|&p| (p, mean_link_waiting(p))).collect();
    let nearest_wait = mean_link_waiting(PolicyKind::Nearest);
    let ok_c = waits.iter().all(|&(_, w)| nearest_wait <= w);

    rep.line(
        "4a generic-nearest",
        ok_a,
        true,
        format!(
            "Fog3 received {fog3} Sensor workloads (need 0); Fog2 share {:.2}% (target {:.1}% ± {:.0}pp)",
            share * 100.0,
            NEAREST_FOG2_SHARE * 100.0,
            NEAREST_FOG2_TOL * 100.0
        ),
    );
    rep.line(
        "4b generic-fastest",
        ok_b,
        true,
        format!(
            "Fog1 devices -> Fog1 {fog1_dev_fog1}/{fog1_dev_total} (need all); Fog2-device App3 -> Fog3 {:.2}% (need >= {:.0}%)",
            app3_share * 100.0,
            FASTEST_APP3_FOG3_MIN * 100.0
        ),
    );
    rep.line(
        "4c generic-saturation",
        ok_c,
        true,
        format!(
            "mean link-waiting messages at end over {SEEDS} seeds: {}",
            waits.iter().map(|(p, w)| format!("{p}={w:.1}")).collect::<Vec<_>>().join(" ")
        ),
    );
}

/// Per-seed wins and improvement of ELECTRE over `baseline` on the mean loop transfer rate.
fn head_to_head(runs: &[RunSummary], baseline: PolicyKind) -> (u64, u64, f64) {
    compare(runs)
        .improvements
        .into_iter()
        .find(|i| i.policy == "electre" && i.baseline == baseline.as_str())
        .map(|i| (i.wins, i.paired_runs, i.mean_improvement.unwrap_or(f64::NAN)))
        .unwrap_or((0, 0, f64::NAN))
}

fn headline_transfer_rate(rep: &mut Report, mid: &[RunSummary], long: &[RunSummary], secs: f64) {
    let mut details = Vec::new();
    let mut ok = true;
    for (label, runs) in [("1e5", mid), ("1e6", long)] {
        let (wins, paired, imp) = head_to_head(runs, PolicyKind::Fastest);
        ok &= wins >= HEADLINE_MIN_WINS && imp >= HEADLINE_MIN_IMPROVEMENT;
        details.push(format!(
            "{label}: electre beats fastest in {wins}/{paired} seeds (need >= {HEADLINE_MIN_WINS}), mean improvement {:+.1}% (need >= {:+.0}%)",
            imp * 100.0,
            HEADLINE_MIN_IMPROVEMENT * 100.0
        ));
    }
    let mut all = Vec::new();
    for b in [PolicyKind::Random, PolicyKind::Drr, PolicyKind::Nearest, PolicyKind::Fastest] {
        let (wins, paired, imp) = head_to_head(long, b);
        ok &= imp > 0.0;
        all.push(format!("{b} {:+.1}% ({wins}/{paired})", imp * 100.0));
    }
    ok &= secs <= 1800.0;
    details.push(format!("1e6 vs every baseline: {}", all.join(", ")));
    details.push(format!("sweep {secs:.0}s (<= 1800s)"));
    rep.line("5 headline", ok, true, details.join("; "));
}

fn as_inspired_delays(rep: &mut Report, runs: &[RunSummary]) {
    let mut seeds: BTreeMap<u64, Vec<&RunSummary>> = BTreeMap::new();
    for r in runs {
        seeds.entry(r.seed).or_default().push(r);
    }
    let lowest = |rs: &[&RunSummary], f: &dyn Fn(&RunSummary) -> f64| {
        rs.iter()
            .min_by(|a, b| f(a).total_cmp(&f(b)))
            .map(|r| r.policy.clone())
            .unwrap()
    };
    let (mut waiting, mut total, mut worst_loop) = (0, 0, 0);
    for rs in seeds.values() {
        let w = |r: &RunSummary| r.waiting.mean.unwrap_or(f64::INFINITY);
        let t = |r: &RunSummary| r.total_response.mean.unwrap_or(f64::INFINITY);
        let l = |r: &RunSummary| -r.mean_loop_execution_delay.unwrap_or(f64::INFINITY);
        waiting += usize::from(lowest(rs, &w) == "electre");
        total += usize::from(lowest(rs, &t) == "electre");
        worst_loop += usize::from(lowest(rs, &l) == "nearest");
    }
    let n = seeds.len();
    let need = AS_MIN_TOPOLOGIES;
    rep.line(
        "6 as-inspired",
        waiting >= need && total >= need && worst_loop >= need,
        true,
        format!(
            "electre lowest waiting in {waiting}/{n}, lowest total response in {total}/{n}; \
             nearest worst loop delay in {worst_loop}/{n} (each need >= {need})"
        ),
    );
}

fn tie_rate(rep: &mut Report, runs: &[RunSummary]) {
    let (mut ties, mut decisions) = (0u64, 0u64);
    for r in by_policy(runs, PolicyKind::Electre) {
        ties += r.selection.ties;
        decisions += r.selection.decisions;
    }
    let rate = ties as f64 / decisions as f64;
    rep.line(
        "7 tie-rate",
        (rate - TIE_RATE_TARGET).abs() <= TIE_RATE_TOL,
        false,
        format!(
            "{:.2}% of {decisions} generic decisions tied (target {:.2}% ± {:.0}pp)",
            rate * 100.0,
            TIE_RATE_TARGET * 100.0,
            TIE_RATE_TOL * 100.0
        ),
    );
}

fn hash_dir(dir: &std::path::Path) -> Vec<(String, String)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    files.sort();
    files
        .iter()
        .map(|p| {
            let digest = Sha256::digest(std::fs::read(p).unwrap());
            let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
            (p.file_name().unwrap().to_string_lossy().into_owned(), hex)
        })
        .collect()
}

fn csv_determinism(rep: &mut Report) {
    let mut hashes = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        for (scenario, duration) in [(Scenario::Generic, 10_000), (Scenario::AsInspired, 5_000)] {
            let config = ExperimentConfig {
                scenario,
                durations: vec![duration],
                seeds: 2,
                master_seed: 99,
                out_dir: Some(dir.path().to_path_buf()),
                ..Default::default()
            };
            run_experiment(&config).unwrap();
        }
        hashes.push(hash_dir(dir.path()));
    }
    let files = hashes[0].len();
    rep.line(
        "8 determinism",
        files == 20 && hashes[0] == hashes[1],
        true,
        format!("{files} per-message CSVs hashed twice with SHA-256, identical: {}", hashes[0] == hashes[1]),
    );
}

fn conservation(rep: &mut Report, all: &[&[RunSummary]]) {
    let mut runs = 0;
    let mut broken = Vec::new();
    for set in all {
        for r in set.iter() {
            runs += 1;
            let mut outstanding = fogsim::metrics::DrainStatus::default();
            for t in &r.messages {
                let o = t.outstanding;
                if t.generated != t.served + o.outstanding() {
                    broken.push(format!("{} {}/{}", r.run_id, t.app, t.message));
                }
                outstanding.link_waiting += o.link_waiting;
                outstanding.link_transmitting += o.link_transmitting;
                outstanding.propagating += o.propagating;
                outstanding.node_waiting += o.node_waiting;
                outstanding.node_in_service += o.node_in_service;
            }
            // message states agree with the engine's own queues
            if outstanding != r.saturation {
                broken.push(format!("{} queues", r.run_id));
            }
        }
    }
    rep.line(
        "9 conservation",
        broken.is_empty(),
        true,
        format!("{runs} runs checked per message type, violations: {:?}", broken),
    );
}

#[test]
fn acceptance() {
    let mut rep = Report { failures: Vec::new() };
    electre_math(&mut rep);
    degenerate_argmin(&mut rep);
    mm1_time_in_system(&mut rep);

    let short = sweep(Scenario::Generic, &PolicyKind::ALL, 10_000);
    generic_behaviour(&mut rep, &short);

    let start = Instant::now();
    let mid = sweep(Scenario::Generic, &PolicyKind::ALL, 100_000);
    let long = sweep(Scenario::Generic, &PolicyKind::ALL, 1_000_000);
    headline_transfer_rate(&mut rep, &mid, &long, start.elapsed().as_secs_f64());

    let as_runs = sweep(Scenario::AsInspired, &PolicyKind::ALL, 100_000);
    as_inspired_delays(&mut rep, &as_runs);
    tie_rate(&mut rep, &short);
    csv_determinism(&mut rep);
    conservation(&mut rep, &[&short, &mid, &long, &as_runs]);

    assert!(rep.failures.is_empty(), "failed criteria:\n{}", rep.failures.join("\n"));
}
