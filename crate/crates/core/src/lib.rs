//! TDMA node scheduling for multihop wireless networks under the two-hop
//! interference model: the Local Voting load-balancing scheduler, LQF and
//! static coloring baselines, a frame-level simulator and delay metrics.

pub mod baselines;
pub mod config;
pub mod engine;
pub mod experiment;
pub mod lemma;
pub mod local_voting;
pub mod metrics;
pub mod schedule;
pub mod scheduler;
pub mod topology;
pub mod traffic;

pub use engine::{run_to_completion, RunOutcome, Simulation, SimulationRun};
pub use local_voting::{LocalVoting, Neighborhood};
pub use metrics::MetricsReport;
pub use schedule::{FrameConfig, Schedule};
pub use scheduler::SchedulerKind;
pub use topology::{NodeId, Topology};
pub use traffic::{Connection, TrafficParams};
