//! Local Voting scheduler.
//!
//! Each frame runs two phases over the persistent slot schedule:
//!
//! 1. request/release: nodes are visited in ascending id order. A node with
//!    a backlog takes the lowest slot that is free in its two-hop
//!    neighborhood (at most one per frame); a node with an empty queue that
//!    still holds slots gives back its highest one.
//! 2. load balancing: every backlogged node that found no free slot pulls
//!    slots from one-hop neighbors whose balancing value `u` is smaller
//!    than its own, always from the neighbor with the smallest `u`, until
//!    its own `u` is no longer positive or nobody can give without
//!    breaking the two-hop rule.
//!
//! The balancing value is the signed distance between the slots a node
//! holds and its share of the neighborhood's slots, where shares are
//! proportional to `max{1, q}`. Driving every `u` to zero equalizes the
//! load `x = p / max{1, q}` across the neighborhood.

use crate::schedule::Schedule;
use crate::topology::{NodeId, Topology};

/// Which neighborhood `u` averages over. Slot exchanges always happen
/// between one-hop neighbors regardless of this choice.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Neighborhood {
    #[default]
    OneHop,
    TwoHop,
}

impl Neighborhood {
    fn members<'a>(&self, topology: &'a Topology, i: NodeId) -> &'a [NodeId] {
        match self {
            Neighborhood::OneHop => topology.neighbors(i.index()),
            Neighborhood::TwoHop => topology.interferers(i.index()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeState {
    pub q: usize,
    pub p: usize,
    pub u: i64,
}

impl NodeState {
    /// Load ratio `p / max{1, q}`.
    pub fn x(&self) -> f64 {
        load(self.p, self.q)
    }
}

pub fn load(p: usize, q: usize) -> f64 {
    p as f64 / q.max(1) as f64
}

/// `round(max{1,q_i} · P / Q) − p_i` with `P`, `Q` the sums of `p` and
/// `max{1,q}` over `i` and its neighborhood. Halves round away from zero.
pub fn compute_u(
    queues: &[usize],
    schedule: &Schedule,
    topology: &Topology,
    i: NodeId,
    neighborhood: Neighborhood,
) -> i64 {
    let weight = |j: NodeId| queues[j.index()].max(1) as u128;
    let members = neighborhood.members(topology, i);
    let total_p: u128 = schedule.count(i) as u128
        + members.iter().map(|&j| schedule.count(j) as u128).sum::<u128>();
    let total_q: u128 = weight(i) + members.iter().map(|&j| weight(j)).sum::<u128>();
    let num = weight(i) * total_p;
    let target = (2 * num + total_q) / (2 * total_q);
    target as i64 - schedule.count(i) as i64
}

/// Outcome of the request/release phase for one node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RequestOutcome {
    Idle,
    Granted(usize),
    Released(usize),
    /// Backlogged but no free slot; the node becomes a balancing candidate.
    Blocked,
}

pub fn request_release_phase(
    queues: &[usize],
    schedule: &mut Schedule,
    topology: &Topology,
) -> Vec<RequestOutcome> {
    topology
        .nodes()
        .map(|i| {
            if queues[i.index()] > 0 {
                match schedule.first_free_slot(topology, i) {
                    Some(s) => {
                        schedule
                            .assign(topology, i, s)
                            .expect("free slot is assignable");
                        RequestOutcome::Granted(s)
                    }
                    None => RequestOutcome::Blocked,
                }
            } else if let Some(s) = schedule.highest_owned(i) {
                schedule.release(i, s).expect("owned slot is releasable");
                RequestOutcome::Released(s)
            } else {
                RequestOutcome::Idle
            }
        })
        .collect()
}

/// One slot handed from `giver` to `receiver`, with both balancing values
/// as seen when the exchange was decided.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Transfer {
    pub giver: NodeId,
    pub receiver: NodeId,
    pub slot: usize,
    pub giver_u: i64,
    pub receiver_u: i64,
}

/// Pulls slots toward `i` from its one-hop neighbors. `cached_u` holds the
/// current balancing values of every node; givers are decremented by one
/// per slot given and `i`'s entry is refreshed on exit.
///
/// Meant for a node with a non-empty queue and no free slot.
pub fn load_balance_phase(
    queues: &[usize],
    schedule: &mut Schedule,
    topology: &Topology,
    i: NodeId,
    cached_u: &mut [i64],
    neighborhood: Neighborhood,
) -> Vec<Transfer> {
    let neighbors = topology.neighbors(i.index());
    let bound = schedule.slots() * neighbors.len();
    let mut transfers = Vec::new();
    loop {
        let u_i = compute_u(queues, schedule, topology, i, neighborhood);
        cached_u[i.index()] = u_i;
        if u_i <= 0 {
            break;
        }
        let giver = neighbors
            .iter()
            .copied()
            .filter(|&j| cached_u[j.index()] < u_i)
            .filter_map(|j| {
                let slots = schedule.transferable_slots(topology, j, i);
                slots.first().map(|&s| (cached_u[j.index()], j, s))
            })
            .min();
        let Some((u_j, j, slot)) = giver else {
            break;
        };
        schedule
            .transfer(topology, j, i, slot)
            .expect("transferable slot moves cleanly");
        cached_u[j.index()] -= 1;
        transfers.push(Transfer {
            giver: j,
            receiver: i,
            slot,
            giver_u: u_j,
            receiver_u: u_i,
        });
        assert!(
            transfers.len() <= bound,
            "balancing for node {i} exceeded {bound} transfers"
        );
    }
    transfers
}

/// Per-frame record of what the scheduler did.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FrameTrace {
    pub requests: Vec<RequestOutcome>,
    /// Balancing values computed right after the request phase.
    pub u: Vec<i64>,
    pub transfers: Vec<Transfer>,
    /// `p` after the frame minus `p` before it.
    pub slot_delta: Vec<i64>,
}

impl FrameTrace {
    pub fn transfers_in(&self, i: NodeId) -> usize {
        self.transfers.iter().filter(|t| t.receiver == i).count()
    }

    pub fn transfers_out(&self, i: NodeId) -> usize {
        self.transfers.iter().filter(|t| t.giver == i).count()
    }
}

#[derive(Clone, Debug, Default)]
pub struct LocalVoting {
    pub neighborhood: Neighborhood,
}

impl LocalVoting {
    pub fn new(neighborhood: Neighborhood) -> Self {
        LocalVoting { neighborhood }
    }

    /// Runs both phases on `schedule` given frame-start queue lengths.
    pub fn frame(&self, queues: &[usize], schedule: &mut Schedule, topology: &Topology) -> FrameTrace {
        let before: Vec<usize> = schedule.counts().to_vec();
        let requests = request_release_phase(queues, schedule, topology);
        let mut cached_u: Vec<i64> = topology
            .nodes()
            .map(|i| compute_u(queues, schedule, topology, i, self.neighborhood))
            .collect();
        let u = cached_u.clone();

        let mut transfers = Vec::new();
        for i in topology.nodes() {
            if requests[i.index()] == RequestOutcome::Blocked {
                transfers.extend(load_balance_phase(
                    queues,
                    schedule,
                    topology,
                    i,
                    &mut cached_u,
                    self.neighborhood,
                ));
            }
        }

        let slot_delta = schedule
            .counts()
            .iter()
            .zip(&before)
            .map(|(&after, &before)| after as i64 - before as i64)
            .collect();
        FrameTrace {
            requests,
            u,
            transfers,
            slot_delta,
        }
    }
}
