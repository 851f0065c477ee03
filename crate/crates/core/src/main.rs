use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;

use localvote::config::ConfigBuilder;
use localvote::experiment::run_experiment;

/// Simulate TDMA node scheduling in multihop wireless networks and compare
/// Local Voting against LQF and static coloring.
#[derive(Parser, Debug)]
#[command(name = "localvote", version)]
struct Cli {
    /// Flat key=value file with the same keys as the long flags
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Nodes in the generated geometric topology
    #[arg(long, conflicts_with = "topology_file")]
    nodes: Option<String>,

    /// Side of the square deployment area in meters
    #[arg(long, conflicts_with = "topology_file")]
    area: Option<String>,

    /// Radio range in meters
    #[arg(long, conflicts_with = "topology_file")]
    radius: Option<String>,

    /// Edge-list topology file instead of a generated one
    #[arg(long, value_name = "FILE")]
    topology_file: Option<String>,

    /// Connections per run; a comma list sweeps over several counts
    #[arg(long)]
    connections: Option<String>,

    /// Packets per connection
    #[arg(long)]
    packets: Option<String>,

    /// Slots between packet generations; a comma list sweeps the load
    #[arg(long)]
    interval: Option<String>,

    /// Slots per frame
    #[arg(long)]
    slots: Option<String>,

    /// local-voting, lqf, coloring, all, or a comma list
    #[arg(long)]
    scheduler: Option<String>,

    /// Seeds, e.g. 1-20 or 1,5,9
    #[arg(long)]
    seeds: Option<String>,

    /// Frame limit per run, or "auto"
    #[arg(long)]
    frame_cap: Option<String>,

    /// Neighborhood the balancing value averages over: one-hop or two-hop
    #[arg(long)]
    neighborhood: Option<String>,

    /// Write per-run event, state and trace logs (true/false)
    #[arg(long)]
    logs: Option<String>,

    /// Worker threads, 0 for all cores, 1 for serial execution
    #[arg(long)]
    jobs: Option<String>,

    /// Output directory
    #[arg(long)]
    out: Option<String>,
}

impl Cli {
    fn flags(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("nodes", &self.nodes),
            ("area", &self.area),
            ("radius", &self.radius),
            ("topology-file", &self.topology_file),
            ("connections", &self.connections),
            ("packets", &self.packets),
            ("interval", &self.interval),
            ("slots", &self.slots),
            ("scheduler", &self.scheduler),
            ("seeds", &self.seeds),
            ("frame-cap", &self.frame_cap),
            ("neighborhood", &self.neighborhood),
            ("logs", &self.logs),
            ("jobs", &self.jobs),
            ("out", &self.out),
        ]
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let mut builder = ConfigBuilder::new();
    if let Some(path) = &cli.config {
        builder.merge_file(path)?;
    }
    for (key, value) in cli.flags() {
        if let Some(v) = value {
            builder.set(key, v.clone())?;
        }
    }
    let config = builder.build()?;

    let result = run_experiment(&config)
        .with_context(|| format!("experiment in {} failed", config.out.display()))?;
    eprintln!(
        "{} runs written to {}",
        result.reports.len(),
        config.out.join("summary.csv").display()
    );
    for spec in &result.capped {
        eprintln!("frame cap reached: {}", spec.label());
    }
    Ok(result.capped.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
