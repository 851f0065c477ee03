//! Common per-frame interface over all schedulers.

use std::fmt;
use std::str::FromStr;

use crate::baselines::{coloring_schedule, lqf_frame, BaselineError};
use crate::local_voting::{FrameTrace, LocalVoting, Neighborhood};
use crate::schedule::{FrameConfig, Schedule};
use crate::topology::Topology;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SchedulerKind {
    LocalVoting,
    Lqf,
    StaticColoring,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 3] = [
        SchedulerKind::LocalVoting,
        SchedulerKind::Lqf,
        SchedulerKind::StaticColoring,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SchedulerKind::LocalVoting => "local-voting",
            SchedulerKind::Lqf => "lqf",
            SchedulerKind::StaticColoring => "coloring",
        }
    }

    pub fn build(
        &self,
        topology: &Topology,
        frame: FrameConfig,
        neighborhood: Neighborhood,
    ) -> Result<Box<dyn Scheduler + Send>, BaselineError> {
        Ok(match self {
            SchedulerKind::LocalVoting => Box::new(LocalVotingScheduler {
                inner: LocalVoting::new(neighborhood),
                schedule: Schedule::empty(topology.len(), frame),
            }),
            SchedulerKind::Lqf => Box::new(LqfScheduler {
                frame,
                schedule: Schedule::empty(topology.len(), frame),
            }),
            SchedulerKind::StaticColoring => Box::new(ColoringScheduler {
                schedule: coloring_schedule(topology, frame)?,
            }),
        })
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchedulerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "local-voting" | "lv" => Ok(SchedulerKind::LocalVoting),
            "lqf" => Ok(SchedulerKind::Lqf),
            "coloring" => Ok(SchedulerKind::StaticColoring),
            other => Err(format!(
                "unknown scheduler {other:?} (expected local-voting, lqf or coloring)"
            )),
        }
    }
}

/// A scheduler decides the slot ownership for the coming frame from the
/// frame-start queue lengths.
pub trait Scheduler {
    fn kind(&self) -> SchedulerKind;

    /// Updates the schedule for this frame. Local Voting returns its trace.
    fn plan_frame(&mut self, queues: &[usize], topology: &Topology) -> Option<FrameTrace>;

    fn schedule(&self) -> &Schedule;
}

pub struct LocalVotingScheduler {
    inner: LocalVoting,
    schedule: Schedule,
}

impl Scheduler for LocalVotingScheduler {
    fn kind(&self) -> SchedulerKind {
        SchedulerKind::LocalVoting
    }

    fn plan_frame(&mut self, queues: &[usize], topology: &Topology) -> Option<FrameTrace> {
        Some(self.inner.frame(queues, &mut self.schedule, topology))
    }

    fn schedule(&self) -> &Schedule {
        &self.schedule
    }
}

pub struct LqfScheduler {
    frame: FrameConfig,
    schedule: Schedule,
}

impl Scheduler for LqfScheduler {
    fn kind(&self) -> SchedulerKind {
        SchedulerKind::Lqf
    }

    fn plan_frame(&mut self, queues: &[usize], topology: &Topology) -> Option<FrameTrace> {
        self.schedule = lqf_frame(queues, topology, self.frame);
        None
    }

    fn schedule(&self) -> &Schedule {
        &self.schedule
    }
}

pub struct ColoringScheduler {
    schedule: Schedule,
}

impl Scheduler for ColoringScheduler {
    fn kind(&self) -> SchedulerKind {
        SchedulerKind::StaticColoring
    }

    fn plan_frame(&mut self, _queues: &[usize], _topology: &Topology) -> Option<FrameTrace> {
        None
    }

    fn schedule(&self) -> &Schedule {
        &self.schedule
    }
}
