//! Connection traffic, packets and per-node FIFO queues.

use std::collections::VecDeque;
use std::sync::Arc;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::topology::{NodeId, Topology, TopologyError};

pub const DEFAULT_PACKETS_PER_CONNECTION: usize = 100;
pub const DEFAULT_INTERVAL_SLOTS: u64 = 5;

#[derive(Debug, Error)]
pub enum TrafficError {
    #[error("requested {requested} connections but only {available} ordered pairs exist")]
    TooManyConnections { requested: usize, available: usize },

    #[error("invalid connection: {0}")]
    InvalidConnection(String),

    #[error("dequeue from an empty queue")]
    Underflow,

    #[error(transparent)]
    Topology(#[from] TopologyError),
}

/// Position in time as `(frame, slot)`, convertible to a global slot index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct SlotTime {
    pub frame: u64,
    pub slot: usize,
}

impl SlotTime {
    pub fn from_global(global: u64, slots_per_frame: usize) -> Self {
        let s = slots_per_frame as u64;
        SlotTime {
            frame: global / s,
            slot: (global % s) as usize,
        }
    }

    pub fn global(&self, slots_per_frame: usize) -> u64 {
        self.frame * slots_per_frame as u64 + self.slot as u64
    }
}

/// Generation parameters shared by every connection of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrafficParams {
    pub packets_per_connection: usize,
    pub interval_slots: u64,
    /// Global slot of the first packet of every connection.
    pub phase: u64,
}

impl Default for TrafficParams {
    fn default() -> Self {
        TrafficParams {
            packets_per_connection: DEFAULT_PACKETS_PER_CONNECTION,
            interval_slots: DEFAULT_INTERVAL_SLOTS,
            phase: 0,
        }
    }
}

/// A source/destination flow emitting `packet_count` packets, one every
/// `interval_slots` slots, over a fixed route.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Connection {
    pub source: NodeId,
    pub destination: NodeId,
    pub packet_count: usize,
    pub interval_slots: u64,
    pub phase: u64,
    pub route: Arc<[NodeId]>,
}

impl Connection {
    pub fn new(
        topology: &Topology,
        source: NodeId,
        destination: NodeId,
        params: TrafficParams,
    ) -> Result<Self, TrafficError> {
        if params.packets_per_connection == 0 {
            return Err(TrafficError::InvalidConnection(
                "packet count must be at least 1".into(),
            ));
        }
        if params.interval_slots == 0 {
            return Err(TrafficError::InvalidConnection(
                "interval must be at least 1 slot".into(),
            ));
        }
        let route = topology.shortest_route(source, destination)?;
        Ok(Connection {
            source,
            destination,
            packet_count: params.packets_per_connection,
            interval_slots: params.interval_slots,
            phase: params.phase,
            route: route.into(),
        })
    }

    /// Global creation slot of packet `k`.
    pub fn creation_slot(&self, k: usize) -> u64 {
        self.phase + k as u64 * self.interval_slots
    }

    pub fn last_creation_slot(&self) -> u64 {
        self.creation_slot(self.packet_count - 1)
    }

    pub fn hops(&self) -> usize {
        self.route.len() - 1
    }
}

/// Picks `count` distinct ordered `(source, destination)` pairs uniformly at
/// random and precomputes their shortest-hop routes.
pub fn generate_connections(
    topology: &Topology,
    count: usize,
    params: TrafficParams,
    seed: u64,
) -> Result<Vec<Connection>, TrafficError> {
    let n = topology.len();
    let available = n * n.saturating_sub(1);
    if count > available {
        return Err(TrafficError::TooManyConnections {
            requested: count,
            available,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    index::sample(&mut rng, available, count)
        .into_iter()
        .map(|pair| {
            let src = pair / (n - 1);
            let mut dst = pair % (n - 1);
            if dst >= src {
                dst += 1;
            }
            Connection::new(topology, NodeId(src), NodeId(dst), params)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PacketId(pub usize);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Packet {
    pub id: PacketId,
    pub connection: usize,
    pub route: Arc<[NodeId]>,
    /// Index into `route` of the node currently holding the packet.
    pub hop_index: usize,
    /// Global slot of creation.
    pub created_at: u64,
    /// Global slot of the final transmission.
    pub delivered_at: Option<u64>,
}

impl Packet {
    pub fn source(&self) -> NodeId {
        self.route[0]
    }

    pub fn destination(&self) -> NodeId {
        self.route[self.route.len() - 1]
    }

    pub fn holder(&self) -> NodeId {
        self.route[self.hop_index]
    }

    pub fn next_hop(&self) -> Option<NodeId> {
        self.route.get(self.hop_index + 1).copied()
    }

    pub fn is_delivered(&self) -> bool {
        self.delivered_at.is_some()
    }
}

/// Deterministic packet numbering: connection `c` owns ids
/// `offsets[c] .. offsets[c] + packet_count`.
#[derive(Clone, Debug)]
pub struct TrafficPlan {
    connections: Vec<Connection>,
    offsets: Vec<usize>,
    total: usize,
}

impl TrafficPlan {
    pub fn new(connections: Vec<Connection>) -> Self {
        let mut offsets = Vec::with_capacity(connections.len());
        let mut total = 0;
        for c in &connections {
            offsets.push(total);
            total += c.packet_count;
        }
        TrafficPlan {
            connections,
            offsets,
            total,
        }
    }

    pub fn connections(&self) -> &[Connection] {
        &self.connections
    }

    pub fn total_packets(&self) -> usize {
        self.total
    }

    /// One past the last global slot in which any packet is created.
    pub fn generation_horizon(&self) -> u64 {
        self.connections
            .iter()
            .map(|c| c.last_creation_slot() + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn max_route_len(&self) -> usize {
        self.connections.iter().map(|c| c.route.len()).max().unwrap_or(0)
    }

    /// Packets created in frame `t`, i.e. with creation slot in
    /// `[t·S, (t+1)·S)`, grouped by source node and ordered by creation
    /// slot then connection index.
    pub fn arrivals_for_frame(&self, t: u64, slots_per_frame: usize, nodes: usize) -> Vec<Vec<Packet>> {
        let mut out = vec![Vec::new(); nodes];
        let start = t * slots_per_frame as u64;
        let end = start + slots_per_frame as u64;
        let mut created = Vec::new();
        for (c, conn) in self.connections.iter().enumerate() {
            if conn.phase >= end {
                continue;
            }
            let first = if start <= conn.phase {
                0
            } else {
                (start - conn.phase).div_ceil(conn.interval_slots)
            };
            let mut k = first as usize;
            while k < conn.packet_count && conn.creation_slot(k) < end {
                created.push((conn.creation_slot(k), c, k));
                k += 1;
            }
        }
        created.sort_unstable();
        for (slot, c, k) in created {
            let conn = &self.connections[c];
            out[conn.source.index()].push(Packet {
                id: PacketId(self.offsets[c] + k),
                connection: c,
                route: conn.route.clone(),
                hop_index: 0,
                created_at: slot,
                delivered_at: None,
            });
        }
        out
    }
}

/// Free-function form of [`TrafficPlan::arrivals_for_frame`].
pub fn arrivals_for_frame(
    connections: &[Connection],
    t: u64,
    slots_per_frame: usize,
    nodes: usize,
) -> Vec<Vec<Packet>> {
    TrafficPlan::new(connections.to_vec()).arrivals_for_frame(t, slots_per_frame, nodes)
}

/// FIFO packet buffer. One packet is one slot of demand, so `q()` is the
/// queue length in slots.
#[derive(Clone, Debug, Default)]
pub struct NodeQueue {
    buf: VecDeque<Packet>,
}

impl NodeQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn q(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn enqueue<I: IntoIterator<Item = Packet>>(&mut self, packets: I) {
        self.buf.extend(packets);
    }

    pub fn dequeue_head(&mut self) -> Result<Packet, TrafficError> {
        self.buf.pop_front().ok_or(TrafficError::Underflow)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Packet> {
        self.buf.iter()
    }
}
