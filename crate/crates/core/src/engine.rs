//! Discrete-time frame loop.
//!
//! At the start of frame `t` every node's queue holds `q_t` packets. The
//! active scheduler fixes slot ownership for the frame, then slots are
//! executed in order: a node owning slot `s` sends its head-of-line packet
//! one hop if it still has a packet that was queued at frame start. Packets
//! generated or received during frame `t` are held aside and enqueued at
//! the end of the frame, so that
//!
//! ```text
//! q_{t+1} = max{0, q_t - p_t} + z_{t+1}
//! ```
//!
//! where `z_{t+1}` counts those arrivals.

use std::io::{self, Write};
use std::sync::Arc;

use thiserror::Error;

use crate::baselines::BaselineError;
use crate::local_voting::{load, FrameTrace, Neighborhood};
use crate::schedule::{FrameConfig, Schedule};
use crate::scheduler::{Scheduler, SchedulerKind};
use crate::topology::{NodeId, Topology};
use crate::traffic::{Connection, NodeQueue, Packet, PacketId, SlotTime, TrafficPlan};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Baseline(#[from] BaselineError),

    #[error("connection {connection} references node {node} outside the topology")]
    BadConnection { connection: usize, node: usize },

    #[error("frame {frame}: schedule conflict in slot {slot} between nodes {first} and {second}")]
    Conflict {
        frame: u64,
        slot: usize,
        first: NodeId,
        second: NodeId,
    },

    #[error("frame {frame}: internal inconsistency: {msg}")]
    Inconsistent { frame: u64, msg: String },
}

/// Everything that determines a run.
#[derive(Clone, Debug)]
pub struct SimulationRun {
    pub topology: Arc<Topology>,
    pub connections: Vec<Connection>,
    pub scheduler: SchedulerKind,
    pub frame: FrameConfig,
    pub seed: u64,
    /// Defaults to `10 · total packets · longest route` frames.
    pub frame_cap: Option<u64>,
    pub neighborhood: Neighborhood,
}

impl SimulationRun {
    pub fn new(
        topology: Arc<Topology>,
        connections: Vec<Connection>,
        scheduler: SchedulerKind,
        frame: FrameConfig,
        seed: u64,
    ) -> Self {
        SimulationRun {
            topology,
            connections,
            scheduler,
            frame,
            seed,
            frame_cap: None,
            neighborhood: Neighborhood::OneHop,
        }
    }

    pub fn effective_frame_cap(&self) -> u64 {
        self.frame_cap.unwrap_or_else(|| {
            let total: usize = self.connections.iter().map(|c| c.packet_count).sum();
            let longest = self.connections.iter().map(|c| c.route.len()).max().unwrap_or(0);
            10 * total as u64 * longest as u64
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKind {
    Created,
    Hop,
    Delivered,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Created => "created",
            EventKind::Hop => "hop",
            EventKind::Delivered => "delivered",
        }
    }
}

/// One line of the packet event log. `node` is the source for `created`
/// and the receiving node for `hop` and `delivered`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PacketEvent {
    pub packet: PacketId,
    pub connection: usize,
    pub kind: EventKind,
    pub at: SlotTime,
    pub node: NodeId,
}

/// Per-frame node state: queue at frame start, slots owned, packets sent,
/// and arrivals enqueued at frame end (`z_{t+1}`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameRecord {
    pub frame: u64,
    pub q: Vec<usize>,
    pub p: Vec<usize>,
    pub sent: Vec<usize>,
    pub arrivals: Vec<usize>,
}

pub struct Simulation {
    run: SimulationRun,
    plan: TrafficPlan,
    scheduler: Box<dyn Scheduler + Send>,
    queues: Vec<NodeQueue>,
    frame: u64,
    cap: u64,
    events: Vec<PacketEvent>,
    records: Vec<FrameRecord>,
    traces: Vec<(u64, FrameTrace)>,
    delivered: Vec<Packet>,
    created: usize,
}

impl Simulation {
    pub fn new(run: SimulationRun) -> Result<Self, EngineError> {
        let n = run.topology.len();
        for (c, conn) in run.connections.iter().enumerate() {
            if let Some(bad) = conn.route.iter().find(|v| v.index() >= n) {
                return Err(EngineError::BadConnection {
                    connection: c,
                    node: bad.index(),
                });
            }
        }
        let scheduler = run.scheduler.build(&run.topology, run.frame, run.neighborhood)?;
        let plan = TrafficPlan::new(run.connections.clone());
        let cap = run.effective_frame_cap();
        Ok(Simulation {
            plan,
            scheduler,
            queues: vec![NodeQueue::new(); n],
            frame: 0,
            cap,
            events: Vec::new(),
            records: Vec::new(),
            traces: Vec::new(),
            delivered: Vec::new(),
            created: 0,
            run,
        })
    }

    pub fn frame(&self) -> u64 {
        self.frame
    }

    pub fn queue_lengths(&self) -> Vec<usize> {
        self.queues.iter().map(NodeQueue::q).collect()
    }

    pub fn schedule(&self) -> &Schedule {
        self.scheduler.schedule()
    }

    pub fn is_complete(&self) -> bool {
        self.delivered.len() == self.plan.total_packets()
    }

    pub fn hit_frame_cap(&self) -> bool {
        !self.is_complete() && self.frame >= self.cap
    }

    /// Packets created so far, delivered so far, and still in the network.
    pub fn packet_counts(&self) -> (usize, usize, usize) {
        let queued: usize = self.queues.iter().map(NodeQueue::q).sum();
        (self.created, self.delivered.len(), queued)
    }

    /// Executes one frame and returns its record together with the schedule
    /// that was in force.
    pub fn step_frame(&mut self) -> Result<(&FrameRecord, &Schedule), EngineError> {
        let t = self.frame;
        let slots = self.run.frame.slots();
        let topology = Arc::clone(&self.run.topology);
        let n = topology.len();

        let q: Vec<usize> = self.queue_lengths();
        if let Some(trace) = self.scheduler.plan_frame(&q, &topology) {
            self.traces.push((t, trace));
        }
        let schedule = self.scheduler.schedule();
        if let Some(v) = schedule.first_conflict(&topology) {
            return Err(EngineError::Conflict {
                frame: t,
                slot: v.slot,
                first: v.first,
                second: v.second,
            });
        }
        let p: Vec<usize> = schedule.counts().to_vec();

        let mut generated = self.plan.arrivals_for_frame(t, slots, n);
        for packets in &mut generated {
            packets.reverse();
        }
        let mut pending: Vec<Vec<Packet>> = vec![Vec::new(); n];
        let mut budget = q.clone();
        let mut sent = vec![0; n];
        let frame_start = t * slots as u64;

        for s in 0..slots {
            let now = frame_start + s as u64;
            let at = SlotTime { frame: t, slot: s };
            for (i, packets) in generated.iter_mut().enumerate() {
                while packets.last().is_some_and(|p| p.created_at == now) {
                    let packet = packets.pop().expect("checked non-empty");
                    self.events.push(PacketEvent {
                        packet: packet.id,
                        connection: packet.connection,
                        kind: EventKind::Created,
                        at,
                        node: NodeId(i),
                    });
                    self.created += 1;
                    pending[i].push(packet);
                }
            }
            for i in 0..n {
                if budget[i] == 0 || !schedule.owns(NodeId(i), s) {
                    continue;
                }
                let mut packet = self.queues[i]
                    .dequeue_head()
                    .map_err(|e| EngineError::Inconsistent { frame: t, msg: e.to_string() })?;
                budget[i] -= 1;
                sent[i] += 1;
                packet.hop_index += 1;
                let holder = packet.holder();
                let kind = if packet.next_hop().is_none() {
                    packet.delivered_at = Some(now);
                    EventKind::Delivered
                } else {
                    EventKind::Hop
                };
                self.events.push(PacketEvent {
                    packet: packet.id,
                    connection: packet.connection,
                    kind,
                    at,
                    node: holder,
                });
                if kind == EventKind::Delivered {
                    self.delivered.push(packet);
                } else {
                    pending[holder.index()].push(packet);
                }
            }
        }

        for i in 0..n {
            if sent[i] != q[i].min(p[i]) {
                return Err(EngineError::Inconsistent {
                    frame: t,
                    msg: format!(
                        "node {i} sent {} packets with q={} and p={}",
                        sent[i], q[i], p[i]
                    ),
                });
            }
        }
        if generated.iter().any(|g| !g.is_empty()) {
            return Err(EngineError::Inconsistent {
                frame: t,
                msg: "generated packet outside its frame".into(),
            });
        }

        let arrivals: Vec<usize> = pending.iter().map(Vec::len).collect();
        for (queue, packets) in self.queues.iter_mut().zip(pending) {
            queue.enqueue(packets);
        }
        self.records.push(FrameRecord {
            frame: t,
            q,
            p,
            sent,
            arrivals,
        });
        self.frame += 1;
        let record = self.records.last().expect("just pushed");
        Ok((record, self.scheduler.schedule()))
    }

    /// Steps until every packet is delivered or the frame cap is reached,
    /// calling `observe` after each frame.
    pub fn run_with<F>(mut self, mut observe: F) -> Result<RunOutcome, EngineError>
    where
        F: FnMut(&FrameRecord, &Schedule),
    {
        while !self.is_complete() && self.frame < self.cap {
            let (record, schedule) = self.step_frame()?;
            observe(record, schedule);
        }
        let completed = self.is_complete();
        let completion_frame = self
            .events
            .iter()
            .rev()
            .find(|e| e.kind == EventKind::Delivered)
            .map_or(0, |e| e.at.frame);
        self.delivered.sort_by_key(|p| p.id);
        Ok(RunOutcome {
            scheduler: self.run.scheduler,
            slots_per_frame: self.run.frame.slots(),
            seed: self.run.seed,
            nodes: self.run.topology.len(),
            connections: self.run.connections,
            total_packets: self.plan.total_packets(),
            completed,
            frames_run: self.frame,
            completion_frame,
            events: self.events,
            frames: self.records,
            traces: self.traces,
            delivered: self.delivered,
        })
    }
}

pub fn run_to_completion(run: SimulationRun) -> Result<RunOutcome, EngineError> {
    Simulation::new(run)?.run_with(|_, _| {})
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub scheduler: SchedulerKind,
    pub slots_per_frame: usize,
    pub seed: u64,
    pub nodes: usize,
    pub connections: Vec<Connection>,
    pub total_packets: usize,
    /// False when the frame cap stopped the run.
    pub completed: bool,
    pub frames_run: u64,
    /// Frame of the last delivery.
    pub completion_frame: u64,
    pub events: Vec<PacketEvent>,
    pub frames: Vec<FrameRecord>,
    pub traces: Vec<(u64, FrameTrace)>,
    /// Delivered packets ordered by id.
    pub delivered: Vec<Packet>,
}

impl RunOutcome {
    /// CSV: `packet_id,connection_id,event,frame,slot,node`.
    pub fn write_event_log<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "packet_id,connection_id,event,frame,slot,node")?;
        for e in &self.events {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                e.packet.0,
                e.connection,
                e.kind.as_str(),
                e.at.frame,
                e.at.slot,
                e.node
            )?;
        }
        Ok(())
    }

    /// CSV: `frame,node,q,p,x`.
    pub fn write_state_log<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "frame,node,q,p,x")?;
        for r in &self.frames {
            for i in 0..r.q.len() {
                writeln!(
                    w,
                    "{},{},{},{},{:.6}",
                    r.frame,
                    i,
                    r.q[i],
                    r.p[i],
                    load(r.p[i], r.q[i])
                )?;
            }
        }
        Ok(())
    }

    /// CSV: `frame,node,u,transfers_in,transfers_out`. Empty for schedulers
    /// other than Local Voting.
    pub fn write_scheduler_trace<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "frame,node,u,transfers_in,transfers_out")?;
        for (frame, trace) in &self.traces {
            for (i, u) in trace.u.iter().enumerate() {
                let node = NodeId(i);
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    frame,
                    i,
                    u,
                    trace.transfers_in(node),
                    trace.transfers_out(node)
                )?;
            }
        }
        Ok(())
    }
}
