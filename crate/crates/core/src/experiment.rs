//! Sweeps over schedulers × connection counts × intervals × seeds.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ExperimentConfig, TopologySource};
use crate::engine::{run_to_completion, EngineError, RunOutcome, SimulationRun};
use crate::metrics::{self, MetricsError, MetricsReport};
use crate::schedule::{FrameConfig, ScheduleError};
use crate::scheduler::SchedulerKind;
use crate::topology::{Topology, TopologyError};
use crate::traffic::{generate_connections, TrafficError, TrafficParams};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("topology")]
    Topology(#[from] TopologyError),

    #[error("traffic")]
    Traffic(#[from] TrafficError),

    #[error("schedule")]
    Schedule(#[from] ScheduleError),

    #[error("{scheduler} seed {seed}")]
    Engine {
        scheduler: SchedulerKind,
        seed: u64,
        source: EngineError,
    },

    #[error("metrics")]
    Metrics(#[from] MetricsError),

    #[error("topology file {path} is disconnected")]
    DisconnectedFile { path: PathBuf },

    #[error("cannot write {path}")]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

/// Traffic endpoints are drawn from a stream independent of placement.
pub fn traffic_seed(seed: u64) -> u64 {
    seed ^ 0x9E37_79B9_7F4A_7C15
}

/// One point of the sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunSpec {
    pub scheduler: SchedulerKind,
    pub connections: usize,
    pub interval: u64,
    pub seed: u64,
}

impl RunSpec {
    pub fn label(&self) -> String {
        format!(
            "{}_c{}_i{}_seed{}",
            self.scheduler, self.connections, self.interval, self.seed
        )
    }
}

/// Cross product in a fixed order: scheduler, connections, interval, seed.
pub fn plan(config: &ExperimentConfig) -> Vec<RunSpec> {
    let mut out = Vec::new();
    for &scheduler in &config.schedulers {
        for &connections in &config.connections {
            for &interval in &config.intervals {
                for &seed in &config.seeds {
                    out.push(RunSpec {
                        scheduler,
                        connections,
                        interval,
                        seed,
                    });
                }
            }
        }
    }
    out
}

pub fn topology_for(config: &ExperimentConfig, seed: u64) -> Result<Topology, ExperimentError> {
    match &config.topology {
        TopologySource::Generate { nodes, area, radius } => {
            Ok(Topology::generate_geometric(*nodes, *area, *radius, seed)?)
        }
        TopologySource::File(path) => {
            let t = Topology::load(path)?;
            if !t.is_connected() {
                return Err(ExperimentError::DisconnectedFile { path: path.clone() });
            }
            Ok(t)
        }
    }
}

/// Builds the fully determined run for one sweep point.
pub fn build_run(config: &ExperimentConfig, spec: RunSpec) -> Result<SimulationRun, ExperimentError> {
    let topology = topology_for(config, spec.seed)?;
    let params = TrafficParams {
        packets_per_connection: config.packets,
        interval_slots: spec.interval,
        phase: 0,
    };
    let connections = generate_connections(&topology, spec.connections, params, traffic_seed(spec.seed))?;
    let mut run = SimulationRun::new(
        Arc::new(topology),
        connections,
        spec.scheduler,
        FrameConfig::new(config.slots)?,
        spec.seed,
    );
    run.frame_cap = config.frame_cap;
    run.neighborhood = config.neighborhood;
    Ok(run)
}

pub fn execute(config: &ExperimentConfig, spec: RunSpec) -> Result<RunOutcome, ExperimentError> {
    let run = build_run(config, spec)?;
    run_to_completion(run).map_err(|source| ExperimentError::Engine {
        scheduler: spec.scheduler,
        seed: spec.seed,
        source,
    })
}

pub struct SweepResult {
    pub reports: Vec<MetricsReport>,
    /// Runs stopped by the frame cap.
    pub capped: Vec<RunSpec>,
}

impl SweepResult {
    pub fn summary_csv(&self) -> String {
        metrics::summary_csv(&self.reports)
    }
}

/// Runs the sweep, optionally writing per-run logs into `log_dir`.
/// Results are in [`plan`] order regardless of the worker count.
pub fn sweep(config: &ExperimentConfig, log_dir: Option<&Path>) -> Result<SweepResult, ExperimentError> {
    let specs = plan(config);
    let one = |spec: &RunSpec| -> Result<(MetricsReport, bool), ExperimentError> {
        let outcome = execute(config, *spec)?;
        if let Some(dir) = log_dir {
            write_run_logs(dir, spec, &outcome)?;
        }
        Ok((MetricsReport::from_outcome(&outcome)?, outcome.completed))
    };
    let results: Vec<Result<(MetricsReport, bool), ExperimentError>> = if config.jobs == 1 {
        specs.iter().map(one).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| ExperimentError::Pool(e.to_string()))?;
        pool.install(|| specs.par_iter().map(one).collect())
    };

    let mut reports = Vec::with_capacity(specs.len());
    let mut capped = Vec::new();
    for (spec, result) in specs.iter().zip(results) {
        let (report, completed) = result?;
        if !completed {
            capped.push(*spec);
        }
        reports.push(report);
    }
    Ok(SweepResult { reports, capped })
}

fn create(path: PathBuf) -> Result<BufWriter<File>, ExperimentError> {
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|source| ExperimentError::Output { path, source })
}

fn write_text(path: PathBuf, text: &str) -> Result<(), ExperimentError> {
    fs::write(&path, text).map_err(|source| ExperimentError::Output { path, source })
}

fn write_run_logs(dir: &Path, spec: &RunSpec, outcome: &RunOutcome) -> Result<(), ExperimentError> {
    let label = spec.label();
    let io = |path: PathBuf| move |source| ExperimentError::Output { path, source };
    let path = dir.join(format!("{label}_events.csv"));
    outcome.write_event_log(create(path.clone())?).map_err(io(path))?;
    let path = dir.join(format!("{label}_state.csv"));
    outcome.write_state_log(create(path.clone())?).map_err(io(path))?;
    if spec.scheduler == SchedulerKind::LocalVoting {
        let path = dir.join(format!("{label}_trace.csv"));
        outcome.write_scheduler_trace(create(path.clone())?).map_err(io(path))?;
    }
    Ok(())
}

/// Full experiment: sweep plus `config.txt`, `summary.csv`,
/// `aggregate.csv` and one `plot_<scheduler>.dat` per scheduler under
/// `config.out`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<SweepResult, ExperimentError> {
    let out = &config.out;
    let mk = |path: &Path| {
        fs::create_dir_all(path).map_err(|source| ExperimentError::Output {
            path: path.to_path_buf(),
            source,
        })
    };
    mk(out)?;
    write_text(out.join("config.txt"), &config.to_config_text())?;
    let log_dir = out.join("runs");
    if config.logs {
        mk(&log_dir)?;
    }

    let result = sweep(config, config.logs.then_some(log_dir.as_path()))?;
    write_text(out.join("summary.csv"), &result.summary_csv())?;
    let rows = metrics::aggregate(&result.reports)?;
    write_text(out.join("aggregate.csv"), &metrics::aggregate_csv(&rows))?;
    for &kind in &config.schedulers {
        write_text(out.join(format!("plot_{kind}.dat")), &metrics::plot_data(&rows, kind))?;
    }
    Ok(result)
}
