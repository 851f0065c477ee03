//! Comparison schedulers: centralized Longest Queue First and a static
//! TDMA schedule from a greedy coloring of the two-hop conflict graph.

use std::cmp::Reverse;

use thiserror::Error;

use crate::schedule::{FrameConfig, Schedule};
use crate::topology::{NodeId, Topology};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BaselineError {
    #[error("two-hop coloring needs {colors} colors but the frame has only {slots} slots")]
    TooFewSlots { colors: usize, slots: usize },
}

/// Greedy per-slot LQF. For each slot, backlogged nodes are visited by
/// decreasing remaining backlog (ties: lower id) and activated unless an
/// already-active node in that slot lies within their two-hop neighborhood.
/// Remaining backlog shrinks by one for each slot granted.
pub fn lqf_frame(queues: &[usize], topology: &Topology, frame: FrameConfig) -> Schedule {
    let n = topology.len();
    let mut schedule = Schedule::empty(n, frame);
    let mut backlog = queues.to_vec();
    let mut order: Vec<usize> = (0..n).collect();
    for s in 0..frame.slots() {
        order.sort_by_key(|&i| (Reverse(backlog[i]), i));
        let mut active: Vec<NodeId> = Vec::new();
        for &i in &order {
            if backlog[i] == 0 {
                break;
            }
            let blocked = topology
                .interferers(i)
                .iter()
                .any(|j| active.contains(j));
            if !blocked {
                schedule.force(NodeId(i), s, true);
                active.push(NodeId(i));
                backlog[i] -= 1;
            }
        }
        if active.is_empty() {
            break;
        }
    }
    schedule
}

/// Greedy coloring of the two-hop conflict graph: nodes in descending
/// conflict-degree order (ties: lower id), each taking the smallest color
/// unused by its already-colored interferers.
pub fn two_hop_coloring(topology: &Topology) -> Vec<usize> {
    let n = topology.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (Reverse(topology.interferers(i).len()), i));
    let mut color: Vec<Option<usize>> = vec![None; n];
    for i in order {
        let mut used: Vec<usize> = topology
            .interferers(i)
            .iter()
            .filter_map(|j| color[j.index()])
            .collect();
        used.sort_unstable();
        used.dedup();
        let c = used
            .iter()
            .enumerate()
            .find(|(k, &c)| *k != c)
            .map_or(used.len(), |(k, _)| k);
        color[i] = Some(c);
    }
    color.into_iter().map(|c| c.unwrap_or(0)).collect()
}

/// Static schedule where the node with color `c` owns every slot
/// `s ≡ c (mod colors)`.
pub fn coloring_schedule(topology: &Topology, frame: FrameConfig) -> Result<Schedule, BaselineError> {
    let colors = two_hop_coloring(topology);
    let count = colors.iter().max().map_or(0, |c| c + 1);
    if count > frame.slots() {
        return Err(BaselineError::TooFewSlots {
            colors: count,
            slots: frame.slots(),
        });
    }
    let mut schedule = Schedule::empty(topology.len(), frame);
    for (i, &c) in colors.iter().enumerate() {
        for s in (c..frame.slots()).step_by(count) {
            schedule.force(NodeId(i), s, true);
        }
    }
    Ok(schedule)
}
