use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use fogsim::harness::{self, ExperimentConfig, Scenario};
use fogsim::policies::PolicyKind;
use fogsim::topology::{betweenness_centrality, build_generic_topology, generate_as_topology, Topology, DEFAULT_AS_NODES};

#[derive(Parser)]
#[command(name = "fogsim", version, about = "Fog service-placement simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep of seeds, policies and durations.
    Simulate(SimulateArgs),
    /// Aggregate the summaries written by `simulate`.
    Compare {
        #[arg(long = "in")]
        input: PathBuf,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Topology utilities.
    #[command(subcommand)]
    Topo(TopoCommand),
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON experiment config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<Scenario>,
    /// Repeatable; a policy name or `all` (the default).
    #[arg(long = "policy")]
    policies: Vec<String>,
    /// Repeatable.
    #[arg(long = "duration")]
    durations: Vec<u64>,
    #[arg(long)]
    seeds: Option<u64>,
    /// Master seed from which per-run seeds are derived.
    #[arg(long = "seed")]
    master_seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Skip the per-message CSV files.
    #[arg(long)]
    no_csv: bool,
    #[arg(long = "dump-events")]
    events: bool,
    #[arg(long = "dump-decisions")]
    decisions: bool,
    /// Latency bucket width (time-steps) for the summaries.
    #[arg(long)]
    bucket: Option<f64>,
}

#[derive(Subcommand)]
enum TopoCommand {
    /// Generate an AS-like topology and write it as JSON.
    Gen {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_AS_NODES)]
        nodes: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Describe a topology file, or the generic one.
    Show {
        #[arg(long)]
        file: Option<PathBuf>,
    },
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = args.scenario {
        config.scenario = s;
    }
    if !args.policies.is_empty() {
        config.policies = if args.policies.iter().any(|p| p == "all") {
            PolicyKind::ALL.to_vec()
        } else {
            args.policies.iter().map(|p| p.parse()).collect::<Result<_, _>>()?
        };
    }
    if args.bucket.is_some() {
        config.bucket = args.bucket;
    }
    if !args.durations.is_empty() {
        config.durations = args.durations;
    }
    if let Some(s) = args.seeds {
        config.seeds = s;
    }
    if let Some(s) = args.master_seed {
        config.master_seed = s;
    }
    if args.out.is_some() {
        config.out_dir = args.out;
    }
    config.write_messages &= !args.no_csv;
    config.record_events |= args.events;
    config.record_decisions |= args.decisions;
    let summaries = harness::run_experiment(&config)?;
    print!("{}", harness::compare(&summaries));
    Ok(())
}

fn show(t: &Topology) {
    let centrality = betweenness_centrality(t);
    println!("{} nodes, {} links", t.node_count(), t.link_count());
    for n in t.nodes() {
        println!(
            "{:>4} {:<6} ipt {:>8} degree {:>3} centrality {:>5}",
            n.id,
            format!("{:?}", n.kind).to_lowercase(),
            n.ipt,
            t.neighbors(n.id).len(),
            centrality[n.id]
        );
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate(args) => simulate(args)?,
        Command::Compare { input, json } => {
            let cmp = harness::compare(&harness::load_summaries(&input)?);
            if json {
                println!("{}", serde_json::to_string_pretty(&cmp)?);
            } else {
                print!("{cmp}");
            }
        }
        Command::Topo(TopoCommand::Gen { seed, nodes, out }) => {
            let t = generate_as_topology(seed, nodes)?.topology;
            match out {
                Some(p) => t.save(&p)?,
                None => println!("{}", t.to_json()?),
            }
        }
        Command::Topo(TopoCommand::Show { file }) => {
            let t = match file {
                Some(p) => Topology::load(&p)?,
                None => build_generic_topology(),
            };
            show(&t);
        }
    }
    Ok(())
}
