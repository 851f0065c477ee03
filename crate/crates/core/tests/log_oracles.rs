//! Metrics and conservation checks rebuilt from the CSV logs with an
//! independent parser.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use localvote::engine::run_to_completion;
use localvote::metrics::MetricsReport;
use localvote::traffic::{generate_connections, Connection, TrafficParams};
use localvote::{FrameConfig, NodeId, SchedulerKind, SimulationRun, Topology};

struct Event {
    packet: usize,
    connection: usize,
    kind: String,
    frame: u64,
    slot: u64,
    node: usize,
}

fn parse_events(text: &str) -> Vec<Event> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().unwrap().clone();
    assert_eq!(
        headers.iter().collect::<Vec<_>>(),
        vec!["packet_id", "connection_id", "event", "frame", "slot", "node"]
    );
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            Event {
                packet: r[0].parse().unwrap(),
                connection: r[1].parse().unwrap(),
                kind: r[2].to_string(),
                frame: r[3].parse().unwrap(),
                slot: r[4].parse().unwrap(),
                node: r[5].parse().unwrap(),
            }
        })
        .collect()
}

fn scenario(kind: SchedulerKind, seed: u64) -> (SimulationRun, usize) {
    let t = Topology::generate_geometric(30, 800.0, 250.0, seed).unwrap();
    let params = TrafficParams {
        packets_per_connection: 40,
        interval_slots: 3,
        phase: 0,
    };
    let conns = generate_connections(&t, 6, params, seed + 100).unwrap();
    let run = SimulationRun::new(Arc::new(t), conns, kind, FrameConfig::new(16).unwrap(), seed);
    (run, 16)
}

#[test]
fn metrics_match_log_recomputation() {
    for kind in SchedulerKind::ALL {
        for seed in [3, 8] {
            let (run, slots) = scenario(kind, seed);
            let out = run_to_completion(run).unwrap();
            let report = MetricsReport::from_outcome(&out).unwrap();

            let mut buf = Vec::new();
            out.write_event_log(&mut buf).unwrap();
            let events = parse_events(std::str::from_utf8(&buf).unwrap());

            let mut created = HashMap::new();
            let mut delivered = HashMap::new();
            for e in &events {
                let global = e.frame * slots as u64 + e.slot;
                match e.kind.as_str() {
                    "created" => {
                        assert_eq!(out.connections[e.connection].source.0, e.node);
                        created.insert(e.packet, (global, e.connection));
                    }
                    "delivered" => {
                        assert_eq!(out.connections[e.connection].destination.0, e.node);
                        delivered.insert(e.packet, global);
                    }
                    "hop" => {}
                    other => panic!("unknown event {other}"),
                }
            }
            let delays: BTreeMap<usize, (u64, usize)> = delivered
                .iter()
                .map(|(id, &d)| {
                    let (c, conn) = created[id];
                    (*id, (d - c, conn))
                })
                .collect();
            assert!(delays.values().all(|&(d, _)| d >= 1), "delay below one slot");

            let min = delays.values().map(|d| d.0).min().unwrap();
            let max = delays.values().map(|d| d.0).max().unwrap();
            let sum: u64 = delays.values().map(|d| d.0).sum();
            assert_eq!(report.min_delay, Some(min));
            assert_eq!(report.max_delay, Some(max));
            assert_eq!(report.mean_delay, sum as f64 / delays.len() as f64);
            assert_eq!(report.delivered, delivered.len());

            let mut per_conn: BTreeMap<usize, (u64, u64)> = BTreeMap::new();
            for &(d, c) in delays.values() {
                let e = per_conn.entry(c).or_default();
                e.0 += d;
                e.1 += 1;
            }
            let means: Vec<f64> = per_conn.values().map(|&(s, n)| s as f64 / n as f64).collect();
            for (c, m) in per_conn.keys().zip(&means) {
                assert_eq!(report.connection_mean_delay[*c], Some(*m));
            }
            let jain = means.iter().sum::<f64>().powi(2)
                / (means.len() as f64 * means.iter().map(|m| m * m).sum::<f64>());
            assert!((report.fairness - jain).abs() < 1e-12);
            assert!(min as f64 <= report.mean_delay && report.mean_delay <= max as f64);
        }
    }
}

#[test]
fn packets_are_conserved_at_every_frame_boundary() {
    for kind in SchedulerKind::ALL {
        let (run, _) = scenario(kind, 5);
        let out = run_to_completion(run).unwrap();
        let mut created_by = vec![0usize; out.frames.len() + 1];
        let mut delivered_by = vec![0usize; out.frames.len() + 1];
        for e in &out.events {
            let f = e.at.frame as usize;
            match e.kind {
                localvote::engine::EventKind::Created => created_by[f] += 1,
                localvote::engine::EventKind::Delivered => delivered_by[f] += 1,
                localvote::engine::EventKind::Hop => {}
            }
        }
        let (mut created, mut delivered) = (0, 0);
        for (t, next) in out.frames.iter().skip(1).enumerate() {
            created += created_by[t];
            delivered += delivered_by[t];
            let queued: usize = next.q.iter().sum();
            assert_eq!(created, delivered + queued, "{kind} boundary after frame {t}");
        }
        assert_eq!(out.total_packets, 6 * 40);
        assert_eq!(out.delivered.len(), out.total_packets);
    }
}

#[test]
fn hops_follow_routes_in_order() {
    let (run, _) = scenario(SchedulerKind::LocalVoting, 9);
    let out = run_to_completion(run).unwrap();
    let mut position: HashMap<usize, (usize, u64)> = HashMap::new();
    for e in &out.events {
        let route = &out.connections[e.connection].route;
        let entry = position.entry(e.packet.0).or_insert((0, 0));
        let global = e.at.frame * 16 + e.at.slot as u64;
        match e.kind {
            localvote::engine::EventKind::Created => assert_eq!(route[0], e.node),
            _ => {
                entry.0 += 1;
                assert_eq!(route[entry.0], e.node);
                assert!(global > entry.1);
            }
        }
        entry.1 = global;
    }
    assert!(out.delivered.iter().all(|p| p.hop_index == p.route.len() - 1));
}

#[test]
fn single_connection_on_two_nodes_completes() {
    let t = Topology::path(2);
    let c = Connection::new(&t, NodeId(0), NodeId(1), TrafficParams::default()).unwrap();
    for kind in SchedulerKind::ALL {
        let run = SimulationRun::new(Arc::new(t.clone()), vec![c.clone()], kind, FrameConfig::default(), 0);
        let out = run_to_completion(run).unwrap();
        assert!(out.completed);
        assert_eq!(out.delivered.len(), 100);
        // last packet is created at slot 495, frame 15; it leaves in frame 16
        assert!(out.completion_frame >= 16);
    }
}

#[test]
fn coloring_dump_golden() {
    let g = Topology::grid(2, 3);
    let x = localvote::baselines::coloring_schedule(&g, FrameConfig::new(8).unwrap()).unwrap();
    // 0 1 2
    // 3 4 5
    // Nodes 1 and 4 interfere with everyone and are colored first (0, 1).
    // Then 0 -> 2, 2 -> 3, 3 -> 3 (three hops from 2), 5 -> 2 (three hops
    // from 0). Four colors repeat twice in an 8-slot frame.
    let expected = "\
0: 1
1: 4
2: 0 5
3: 2 3
4: 1
5: 4
6: 0 5
7: 2 3
";
    assert_eq!(x.dump(), expected);
}
