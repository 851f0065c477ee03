//! Slot-ownership matrix for one TDMA frame under the two-hop interference model.

use std::fmt::Write as _;

use thiserror::Error;

use crate::topology::{NodeId, Topology};

pub const DEFAULT_SLOTS_PER_FRAME: usize = 32;

/// Number of slots per frame, fixed for a whole simulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameConfig {
    slots_per_frame: usize,
}

impl FrameConfig {
    pub fn new(slots_per_frame: usize) -> Result<Self, ScheduleError> {
        if slots_per_frame == 0 {
            return Err(ScheduleError::ZeroSlots);
        }
        Ok(FrameConfig { slots_per_frame })
    }

    pub fn slots(&self) -> usize {
        self.slots_per_frame
    }
}

impl Default for FrameConfig {
    fn default() -> Self {
        FrameConfig {
            slots_per_frame: DEFAULT_SLOTS_PER_FRAME,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("a frame needs at least one slot")]
    ZeroSlots,

    #[error("slot {slot} out of range (frame has {slots} slots)")]
    SlotOutOfRange { slot: usize, slots: usize },

    #[error("node {node} out of range")]
    NodeOutOfRange { node: usize },

    #[error("node {node} already owns slot {slot}")]
    AlreadyOwned { node: usize, slot: usize },

    #[error("slot {slot} is held by node {holder}, within two hops of node {node}")]
    Conflict { node: usize, slot: usize, holder: usize },

    #[error("node {node} does not own slot {slot}")]
    NotOwned { node: usize, slot: usize },
}

/// First pair of nodes found sharing a slot inside each other's two-hop
/// neighborhood.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Violation {
    pub slot: usize,
    pub first: NodeId,
    pub second: NodeId,
}

/// Per-(node, slot) ownership `X[i][s]` with cached per-node counts `p[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    nodes: usize,
    slots: usize,
    owned: Vec<bool>,
    counts: Vec<usize>,
}

impl Schedule {
    pub fn empty(nodes: usize, frame: FrameConfig) -> Self {
        Schedule {
            nodes,
            slots: frame.slots(),
            owned: vec![false; nodes * frame.slots()],
            counts: vec![0; nodes],
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    #[inline]
    pub fn owns(&self, i: NodeId, s: usize) -> bool {
        self.owned[i.index() * self.slots + s]
    }

    /// `p[i]`, the number of slots node `i` holds.
    #[inline]
    pub fn count(&self, i: NodeId) -> usize {
        self.counts[i.index()]
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn owned_slots(&self, i: NodeId) -> impl Iterator<Item = usize> + '_ {
        (0..self.slots).filter(move |&s| self.owns(i, s))
    }

    pub fn owners(&self, s: usize) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes).map(NodeId).filter(move |&i| self.owns(i, s))
    }

    pub fn highest_owned(&self, i: NodeId) -> Option<usize> {
        (0..self.slots).rev().find(|&s| self.owns(i, s))
    }

    fn bounds(&self, i: NodeId, s: usize) -> Result<(), ScheduleError> {
        if i.index() >= self.nodes {
            return Err(ScheduleError::NodeOutOfRange { node: i.index() });
        }
        if s >= self.slots {
            return Err(ScheduleError::SlotOutOfRange {
                slot: s,
                slots: self.slots,
            });
        }
        Ok(())
    }

    fn set(&mut self, i: NodeId, s: usize, value: bool) {
        let cell = &mut self.owned[i.index() * self.slots + s];
        if *cell != value {
            *cell = value;
            if value {
                self.counts[i.index()] += 1;
            } else {
                self.counts[i.index()] -= 1;
            }
        }
    }

    /// Holder of slot `s` among `i`'s two-hop neighborhood, if any.
    fn interfering_holder(&self, topology: &Topology, i: NodeId, s: usize) -> Option<NodeId> {
        topology
            .interferers(i.index())
            .iter()
            .copied()
            .find(|&j| self.owns(j, s))
    }

    /// Slot `s` is free for `i` when neither `i` nor any two-hop neighbor holds it.
    pub fn is_free_for(&self, topology: &Topology, i: NodeId, s: usize) -> bool {
        !self.owns(i, s) && self.interfering_holder(topology, i, s).is_none()
    }

    /// Lowest slot not held by `i` or any node in its two-hop neighborhood.
    pub fn first_free_slot(&self, topology: &Topology, i: NodeId) -> Option<usize> {
        (0..self.slots).find(|&s| self.is_free_for(topology, i, s))
    }

    pub fn assign(&mut self, topology: &Topology, i: NodeId, s: usize) -> Result<(), ScheduleError> {
        self.bounds(i, s)?;
        if self.owns(i, s) {
            return Err(ScheduleError::AlreadyOwned { node: i.index(), slot: s });
        }
        if let Some(holder) = self.interfering_holder(topology, i, s) {
            return Err(ScheduleError::Conflict {
                node: i.index(),
                slot: s,
                holder: holder.index(),
            });
        }
        self.set(i, s, true);
        Ok(())
    }

    pub fn release(&mut self, i: NodeId, s: usize) -> Result<(), ScheduleError> {
        self.bounds(i, s)?;
        if !self.owns(i, s) {
            return Err(ScheduleError::NotOwned { node: i.index(), slot: s });
        }
        self.set(i, s, false);
        Ok(())
    }

    /// Sets `X[i][s]` without checking interference. Used by schedulers that
    /// build whole frames and by tests that need arbitrary matrices.
    pub fn force(&mut self, i: NodeId, s: usize, value: bool) {
        self.set(i, s, value);
    }

    /// Slots held by `giver` that `receiver` could take over without
    /// violating the two-hop rule. Exchanges only happen between one-hop
    /// neighbors; for any other pair the list is empty.
    pub fn transferable_slots(&self, topology: &Topology, giver: NodeId, receiver: NodeId) -> Vec<usize> {
        if giver == receiver || !topology.has_edge(giver, receiver) {
            return Vec::new();
        }
        self.owned_slots(giver)
            .filter(|&s| {
                !self.owns(receiver, s)
                    && topology
                        .interferers(receiver.index())
                        .iter()
                        .all(|&k| k == giver || !self.owns(k, s))
            })
            .collect()
    }

    /// Moves slot `s` from `giver` to `receiver`. The schedule is left
    /// untouched when the move would break conflict-freeness.
    pub fn transfer(
        &mut self,
        topology: &Topology,
        giver: NodeId,
        receiver: NodeId,
        s: usize,
    ) -> Result<(), ScheduleError> {
        self.release(giver, s)?;
        if let Err(e) = self.assign(topology, receiver, s) {
            self.set(giver, s, true);
            return Err(e);
        }
        Ok(())
    }

    pub fn first_conflict(&self, topology: &Topology) -> Option<Violation> {
        for s in 0..self.slots {
            for i in 0..self.nodes {
                if !self.owns(NodeId(i), s) {
                    continue;
                }
                for &j in topology.interferers(i) {
                    if j.index() > i && self.owns(j, s) {
                        return Some(Violation {
                            slot: s,
                            first: NodeId(i),
                            second: j,
                        });
                    }
                }
            }
        }
        None
    }

    pub fn is_conflict_free(&self, topology: &Topology) -> bool {
        self.first_conflict(topology).is_none()
    }

    /// One line per slot: `"s: i1 i2 ..."` listing owners in ascending order.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for s in 0..self.slots {
            let _ = write!(out, "{s}:");
            for i in self.owners(s) {
                let _ = write!(out, " {i}");
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn frame(s: usize) -> FrameConfig {
        FrameConfig::new(s).unwrap()
    }

    #[test]
    fn zero_slots_rejected() {
        assert_eq!(FrameConfig::new(0), Err(ScheduleError::ZeroSlots));
        assert_eq!(FrameConfig::default().slots(), 32);
    }

    #[test]
    fn conflict_examples() {
        let t = Topology::path(3);
        let mut x = Schedule::empty(3, frame(2));
        assert!(x.is_conflict_free(&t));
        x.force(NodeId(0), 0, true);
        x.force(NodeId(2), 0, true);
        assert_eq!(
            x.first_conflict(&t),
            Some(Violation { slot: 0, first: NodeId(0), second: NodeId(2) })
        );

        let t = Topology::path(4);
        let mut x = Schedule::empty(4, frame(1));
        x.force(NodeId(0), 0, true);
        x.force(NodeId(3), 0, true);
        assert!(x.is_conflict_free(&t));
    }

    #[test]
    fn first_free_slot_examples() {
        let t = Topology::path(3);
        let x = Schedule::empty(3, frame(4));
        assert_eq!(x.first_free_slot(&t, NodeId(1)), Some(0));

        let mut x = Schedule::empty(3, frame(2));
        x.force(NodeId(1), 0, true);
        x.force(NodeId(1), 1, true);
        assert_eq!(x.first_free_slot(&t, NodeId(0)), None);

        // 0 holds slot 0 (two hops from 2), 2 holds slot 1 itself, slot 2 free.
        let mut x = Schedule::empty(3, frame(3));
        x.force(NodeId(0), 0, true);
        x.force(NodeId(2), 1, true);
        assert_eq!(x.first_free_slot(&t, NodeId(2)), Some(2));
    }

    #[test]
    fn assign_release() {
        let t = Topology::path(3);
        let mut x = Schedule::empty(3, frame(4));
        let before = x.clone();
        x.assign(&t, NodeId(1), 2).unwrap();
        assert_eq!(x.count(NodeId(1)), 1);
        x.release(NodeId(1), 2).unwrap();
        assert_eq!(x, before);

        x.assign(&t, NodeId(0), 1).unwrap();
        assert_eq!(
            x.assign(&t, NodeId(2), 1),
            Err(ScheduleError::Conflict { node: 2, slot: 1, holder: 0 })
        );
        assert_eq!(x.assign(&t, NodeId(0), 1), Err(ScheduleError::AlreadyOwned { node: 0, slot: 1 }));
        assert_eq!(x.release(NodeId(2), 1), Err(ScheduleError::NotOwned { node: 2, slot: 1 }));
        assert!(matches!(x.assign(&t, NodeId(0), 4), Err(ScheduleError::SlotOutOfRange { .. })));
        assert_eq!(x.count(NodeId(0)), 1);
    }

    #[test]
    fn transferable_examples() {
        let t = Topology::path(2);
        let mut x = Schedule::empty(2, frame(2));
        x.force(NodeId(1), 0, true);
        assert_eq!(x.transferable_slots(&t, NodeId(1), NodeId(0)), vec![0]);

        // 0-1-2: node 2 is two hops from 0 and also holds slot 0.
        let t = Topology::new(3, [(0, 1), (1, 2)]).unwrap();
        let mut x = Schedule::empty(3, frame(1));
        x.force(NodeId(1), 0, true);
        x.force(NodeId(2), 0, true);
        assert!(x.transferable_slots(&t, NodeId(1), NodeId(0)).is_empty());
        // not neighbors
        assert!(x.transferable_slots(&t, NodeId(2), NodeId(0)).is_empty());
    }

    #[test]
    fn transferable_matches_brute_force_on_line() {
        let t = Topology::path(5);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            let mut x = Schedule::empty(5, frame(6));
            for s in 0..6 {
                for i in 0..5 {
                    if rng.gen_bool(0.4) && x.is_free_for(&t, NodeId(i), s) {
                        x.force(NodeId(i), s, true);
                    }
                }
            }
            for r in 0..5 {
                for &g in t.one_hop(NodeId(r)).unwrap() {
                    let expected: Vec<usize> = x
                        .owned_slots(g)
                        .filter(|&s| {
                            let mut y = x.clone();
                            y.force(g, s, false);
                            y.force(NodeId(r), s, true);
                            y.is_conflict_free(&t)
                        })
                        .collect();
                    assert_eq!(x.transferable_slots(&t, g, NodeId(r)), expected);
                }
            }
        }
    }

    #[test]
    fn dump_format() {
        let t = Topology::path(4);
        let mut x = Schedule::empty(4, frame(3));
        x.assign(&t, NodeId(0), 0).unwrap();
        x.assign(&t, NodeId(3), 0).unwrap();
        x.assign(&t, NodeId(1), 2).unwrap();
        assert_eq!(x.dump(), "0: 0 3\n1:\n2: 1\n");
    }

    #[derive(Clone, Debug)]
    enum Op {
        Assign(usize, usize),
        Release(usize, usize),
        Transfer(usize, usize, usize),
    }

    fn op() -> impl Strategy<Value = Op> {
        prop_oneof![
            (0usize..8, 0usize..5).prop_map(|(i, s)| Op::Assign(i, s)),
            (0usize..8, 0usize..5).prop_map(|(i, s)| Op::Release(i, s)),
            (0usize..8, 0usize..8, 0usize..5).prop_map(|(g, r, s)| Op::Transfer(g, r, s)),
        ]
    }

    proptest! {
        #[test]
        fn mutations_preserve_invariants(
            seed in 0u64..500,
            ops in proptest::collection::vec(op(), 1..80),
        ) {
            let t = Topology::generate_geometric(8, 100.0, 45.0, seed)
                .unwrap_or_else(|_| Topology::path(8));
            let mut x = Schedule::empty(8, frame(5));
            for op in ops {
                let _ = match op {
                    Op::Assign(i, s) => x.assign(&t, NodeId(i), s),
                    Op::Release(i, s) => x.release(NodeId(i), s),
                    Op::Transfer(g, r, s) => x.transfer(&t, NodeId(g), NodeId(r), s),
                };
                prop_assert!(x.is_conflict_free(&t));
                for i in 0..8 {
                    prop_assert_eq!(x.count(NodeId(i)), x.owned_slots(NodeId(i)).count());
                    // linear-scan reference for the lowest free slot
                    let scan = (0..5).find(|&s| {
                        !x.owns(NodeId(i), s)
                            && t.hop_distances(i).iter().enumerate().all(|(j, d)| {
                                !matches!(d, Some(1) | Some(2)) || !x.owns(NodeId(j), s)
                            })
                    });
                    prop_assert_eq!(x.first_free_slot(&t, NodeId(i)), scan);
                }
            }
        }
    }
}
