//! Delay and fairness metrics, per-run summaries and cross-seed aggregation.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::engine::RunOutcome;
use crate::scheduler::SchedulerKind;
use crate::traffic::Packet;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("packet {0} has not been delivered")]
    Undelivered(usize),

    #[error("no delivered packets to measure")]
    NoDeliveries,

    #[error("cannot aggregate an empty set of runs")]
    NoRuns,

    #[error("runs grouped under {group} disagree on {field}")]
    MixedConfigurations { group: String, field: &'static str },
}

/// End-to-end delay in slots: delivery slot minus creation slot.
pub fn packet_delay(packet: &Packet) -> Result<u64, MetricsError> {
    let delivered = packet
        .delivered_at
        .ok_or(MetricsError::Undelivered(packet.id.0))?;
    Ok(delivered - packet.created_at)
}

/// Jain's index `(Σd)² / (n·Σd²)`.
pub fn fairness(values: &[f64]) -> Result<f64, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::NoDeliveries);
    }
    let sum: f64 = values.iter().sum();
    let sum_sq: f64 = values.iter().map(|v| v * v).sum();
    if sum_sq == 0.0 {
        return Ok(1.0);
    }
    Ok(sum * sum / (values.len() as f64 * sum_sq))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub scheduler: SchedulerKind,
    pub seed: u64,
    pub n_nodes: usize,
    pub n_connections: usize,
    pub slots_per_frame: usize,
    pub interval: u64,
    pub packets_per_connection: usize,
    /// Mean delay per connection, `None` when nothing was delivered on it.
    pub connection_mean_delay: Vec<Option<f64>>,
    /// Delay statistics are `None`/NaN for a capped run that delivered nothing.
    pub min_delay: Option<u64>,
    pub mean_delay: f64,
    pub max_delay: Option<u64>,
    pub fairness: f64,
    pub completion_frame: u64,
    pub delivered: usize,
    pub total: usize,
    pub completed: bool,
}

impl MetricsReport {
    pub fn from_outcome(outcome: &RunOutcome) -> Result<Self, MetricsError> {
        let delays = outcome
            .delivered
            .iter()
            .map(packet_delay)
            .collect::<Result<Vec<u64>, _>>()?;
        let mut per_conn = vec![(0u64, 0usize); outcome.connections.len()];
        for (packet, &d) in outcome.delivered.iter().zip(&delays) {
            per_conn[packet.connection].0 += d;
            per_conn[packet.connection].1 += 1;
        }
        let connection_mean_delay: Vec<Option<f64>> = per_conn
            .iter()
            .map(|&(sum, count)| (count > 0).then(|| sum as f64 / count as f64))
            .collect();
        let means: Vec<f64> = connection_mean_delay.iter().flatten().copied().collect();

        let first = outcome.connections.first();
        Ok(MetricsReport {
            scheduler: outcome.scheduler,
            seed: outcome.seed,
            n_nodes: outcome.nodes,
            n_connections: outcome.connections.len(),
            slots_per_frame: outcome.slots_per_frame,
            interval: first.map_or(0, |c| c.interval_slots),
            packets_per_connection: first.map_or(0, |c| c.packet_count),
            min_delay: delays.iter().min().copied(),
            mean_delay: delays.iter().sum::<u64>() as f64 / delays.len() as f64,
            max_delay: delays.iter().max().copied(),
            fairness: if means.is_empty() { f64::NAN } else { fairness(&means)? },
            connection_mean_delay,
            completion_frame: outcome.completion_frame,
            delivered: delays.len(),
            total: outcome.total_packets,
            completed: outcome.completed,
        })
    }
}

pub const SUMMARY_HEADER: &str = "scheduler,seed,n_nodes,n_connections,S,interval,min_delay,mean_delay,max_delay,fairness,completion_frame,delivered,total";

/// Delay fields are left empty for a run that delivered nothing.
pub fn summary_row(r: &MetricsReport) -> String {
    let int = |v: Option<u64>| v.map(|v| v.to_string()).unwrap_or_default();
    let real = |v: f64| if v.is_nan() { String::new() } else { format!("{v:.6}") };
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.scheduler,
        r.seed,
        r.n_nodes,
        r.n_connections,
        r.slots_per_frame,
        r.interval,
        int(r.min_delay),
        real(r.mean_delay),
        int(r.max_delay),
        real(r.fairness),
        r.completion_frame,
        r.delivered,
        r.total
    )
}

pub fn summary_csv(reports: &[MetricsReport]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&summary_row(r));
        out.push('\n');
    }
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation, 0 for a single run.
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Stat {
            mean,
            std: var.sqrt(),
            min: values.iter().cloned().fold(f64::INFINITY, f64::min),
            max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct GroupKey {
    pub scheduler: SchedulerKind,
    pub n_nodes: usize,
    pub n_connections: usize,
    pub slots_per_frame: usize,
    pub interval: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRow {
    pub key: GroupKey,
    pub runs: usize,
    pub min_delay: Stat,
    pub mean_delay: Stat,
    pub max_delay: Stat,
    pub fairness: Stat,
    pub completion_frame: Stat,
}

/// Groups runs by (scheduler, load level) and summarizes each metric
/// across seeds.
pub fn aggregate(reports: &[MetricsReport]) -> Result<Vec<AggregateRow>, MetricsError> {
    if reports.is_empty() {
        return Err(MetricsError::NoRuns);
    }
    let mut groups: BTreeMap<GroupKey, Vec<&MetricsReport>> = BTreeMap::new();
    for r in reports {
        let key = GroupKey {
            scheduler: r.scheduler,
            n_nodes: r.n_nodes,
            n_connections: r.n_connections,
            slots_per_frame: r.slots_per_frame,
            interval: r.interval,
        };
        groups.entry(key).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(key, runs)| {
            if runs
                .iter()
                .any(|r| r.packets_per_connection != runs[0].packets_per_connection)
            {
                return Err(MetricsError::MixedConfigurations {
                    group: format!("{key:?}"),
                    field: "packets_per_connection",
                });
            }
            let stat = |f: fn(&MetricsReport) -> f64| {
                Stat::of(&runs.iter().map(|r| f(r)).collect::<Vec<_>>())
            };
            Ok(AggregateRow {
                key,
                runs: runs.len(),
                min_delay: stat(|r| r.min_delay.map_or(f64::NAN, |d| d as f64)),
                mean_delay: stat(|r| r.mean_delay),
                max_delay: stat(|r| r.max_delay.map_or(f64::NAN, |d| d as f64)),
                fairness: stat(|r| r.fairness),
                completion_frame: stat(|r| r.completion_frame as f64),
            })
        })
        .collect()
}

pub const AGGREGATE_HEADER: &str = "scheduler,n_nodes,n_connections,S,interval,runs,min_delay_mean,min_delay_std,mean_delay_mean,mean_delay_std,max_delay_mean,max_delay_std,fairness_mean,fairness_std,completion_frame_mean,completion_frame_std";

pub fn aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::from(AGGREGATE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = write!(
            out,
            "{},{},{},{},{},{}",
            r.key.scheduler,
            r.key.n_nodes,
            r.key.n_connections,
            r.key.slots_per_frame,
            r.key.interval,
            r.runs
        );
        for s in [r.min_delay, r.mean_delay, r.max_delay, r.fairness, r.completion_frame] {
            let _ = write!(out, ",{:.6},{:.6}", s.mean, s.std);
        }
        out.push('\n');
    }
    out
}

/// Whitespace-separated columns for one scheduler, one line per load
/// level: `interval n_connections min mean max fairness`.
pub fn plot_data(rows: &[AggregateRow], scheduler: SchedulerKind) -> String {
    let mut out = format!(
        "# scheduler={scheduler}\n# interval n_connections min_delay mean_delay max_delay fairness\n"
    );
    let mut selected: Vec<&AggregateRow> = rows.iter().filter(|r| r.key.scheduler == scheduler).collect();
    selected.sort_by_key(|r| (r.key.n_connections, r.key.interval));
    for r in selected {
        let _ = writeln!(
            out,
            "{} {} {:.6} {:.6} {:.6} {:.6}",
            r.key.interval,
            r.key.n_connections,
            r.min_delay.mean,
            r.mean_delay.mean,
            r.max_delay.mean,
            r.fairness.mean
        );
    }
    out
}
