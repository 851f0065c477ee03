//! Network graph, one-hop and two-hop neighborhoods, topology generation
//! and static shortest-hop routing.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Number of placements tried by [`Topology::generate_geometric`] before it
/// gives up on finding a connected graph.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 100;

/// Dense node index in `[0, n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(i)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("node {node} out of range for a topology with {n} nodes")]
    InvalidNode { node: usize, n: usize },

    #[error("self-loop on node {0}")]
    SelfLoop(usize),

    #[error("topology must have at least one node")]
    Empty,

    #[error("invalid generator parameter: {0}")]
    InvalidParameter(String),

    #[error("no connected placement found after {0} attempts")]
    Disconnected(usize),

    #[error("node {dst} is unreachable from node {src}")]
    Unreachable { src: usize, dst: usize },

    #[error("route endpoints must differ (got {0} twice)")]
    SameEndpoints(usize),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Undirected wireless connectivity graph with cached neighborhoods.
#[derive(Clone, Debug)]
pub struct Topology {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    positions: Option<Vec<(f64, f64)>>,
    one_hop: Vec<Vec<NodeId>>,
    two_hop: Vec<Vec<NodeId>>,
}

impl PartialEq for Topology {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.edges == other.edges
    }
}

impl Topology {
    /// Builds a topology from an edge list. Duplicate and reversed edges
    /// collapse to a single undirected edge.
    pub fn new<I>(n: usize, edges: I) -> Result<Self, TopologyError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n == 0 {
            return Err(TopologyError::Empty);
        }
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            for node in [u, v] {
                if node >= n {
                    return Err(TopologyError::InvalidNode { node, n });
                }
            }
            if u == v {
                return Err(TopologyError::SelfLoop(u));
            }
            set.insert((u.min(v), u.max(v)));
        }
        Ok(Self::from_edge_set(n, set, None))
    }

    fn from_edge_set(
        n: usize,
        edges: BTreeSet<(usize, usize)>,
        positions: Option<Vec<(f64, f64)>>,
    ) -> Self {
        let mut one_hop = vec![Vec::new(); n];
        for &(u, v) in &edges {
            one_hop[u].push(NodeId(v));
            one_hop[v].push(NodeId(u));
        }
        for adj in &mut one_hop {
            adj.sort_unstable();
        }

        let two_hop = (0..n)
            .map(|i| {
                let mut set = BTreeSet::new();
                for &j in &one_hop[i] {
                    set.insert(j);
                    set.extend(one_hop[j.index()].iter().copied());
                }
                set.remove(&NodeId(i));
                set.into_iter().collect()
            })
            .collect();

        Topology {
            n,
            edges,
            positions,
            one_hop,
            two_hop,
        }
    }

    pub fn path(n: usize) -> Self {
        Self::new(n, (1..n).map(|i| (i - 1, i))).expect("path graph is valid")
    }

    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "cycle needs at least 3 nodes");
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n))).expect("cycle graph is valid")
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        Self::new(n, edges).expect("complete graph is valid")
    }

    /// Star with center 0 and leaves `1..n`.
    pub fn star(n: usize) -> Self {
        Self::new(n, (1..n).map(|i| (0, i))).expect("star graph is valid")
    }

    /// Four-neighbor lattice, nodes numbered row-major.
    pub fn grid(rows: usize, cols: usize) -> Self {
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let i = r * cols + c;
                if c + 1 < cols {
                    edges.push((i, i + 1));
                }
                if r + 1 < rows {
                    edges.push((i, i + cols));
                }
            }
        }
        Self::new(rows * cols, edges).expect("grid graph is valid")
    }

    /// Random unit-disk graph: `n` nodes uniform in a `side`×`side` square,
    /// edge iff Euclidean distance ≤ `radius`. Placements are redrawn until
    /// the graph is connected, up to [`MAX_PLACEMENT_ATTEMPTS`] times.
    pub fn generate_geometric(
        n: usize,
        side: f64,
        radius: f64,
        seed: u64,
    ) -> Result<Self, TopologyError> {
        if n == 0 {
            return Err(TopologyError::Empty);
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(TopologyError::InvalidParameter(format!(
                "radius must be positive, got {radius}"
            )));
        }
        if !(side >= 0.0 && side.is_finite()) {
            return Err(TopologyError::InvalidParameter(format!(
                "area side must be non-negative, got {side}"
            )));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r2 = radius * radius;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let pos: Vec<(f64, f64)> = (0..n)
                .map(|_| (rng.gen::<f64>() * side, rng.gen::<f64>() * side))
                .collect();
            let mut edges = BTreeSet::new();
            for u in 0..n {
                for v in u + 1..n {
                    let dx = pos[u].0 - pos[v].0;
                    let dy = pos[u].1 - pos[v].1;
                    if dx * dx + dy * dy <= r2 {
                        edges.insert((u, v));
                    }
                }
            }
            let topo = Self::from_edge_set(n, edges, Some(pos));
            if topo.is_connected() {
                return Ok(topo);
            }
        }
        Err(TopologyError::Disconnected(MAX_PLACEMENT_ATTEMPTS))
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.n).map(NodeId)
    }

    /// Edges as `(u, v)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn positions(&self) -> Option<&[(f64, f64)]> {
        self.positions.as_deref()
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.edges.contains(&(u.0.min(v.0), u.0.max(v.0)))
    }

    fn check(&self, i: NodeId) -> Result<(), TopologyError> {
        if i.0 < self.n {
            Ok(())
        } else {
            Err(TopologyError::InvalidNode { node: i.0, n: self.n })
        }
    }

    /// Sorted one-hop neighborhood of `i`, excluding `i`.
    pub fn one_hop(&self, i: NodeId) -> Result<&[NodeId], TopologyError> {
        self.check(i)?;
        Ok(&self.one_hop[i.0])
    }

    /// Sorted two-hop neighborhood of `i`: neighbors plus nodes sharing a
    /// neighbor with `i`, excluding `i`.
    pub fn two_hop(&self, i: NodeId) -> Result<&[NodeId], TopologyError> {
        self.check(i)?;
        Ok(&self.two_hop[i.0])
    }

    // Unchecked accessors for hot loops where ids come from the topology itself.
    pub(crate) fn neighbors(&self, i: usize) -> &[NodeId] {
        &self.one_hop[i]
    }

    pub(crate) fn interferers(&self, i: usize) -> &[NodeId] {
        &self.two_hop[i]
    }

    pub fn max_two_hop_degree(&self) -> usize {
        self.two_hop.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn is_connected(&self) -> bool {
        self.hop_distances(0).iter().all(Option::is_some)
    }

    /// BFS hop counts from `src`; `None` for unreachable nodes.
    pub fn hop_distances(&self, src: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n];
        let mut queue = VecDeque::new();
        dist[src] = Some(0);
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap_or_default();
            for &v in &self.one_hop[u] {
                if dist[v.0].is_none() {
                    dist[v.0] = Some(d + 1);
                    queue.push_back(v.0);
                }
            }
        }
        dist
    }

    /// Minimum-hop route from `src` to `dst`, both inclusive. Among equal
    /// length routes the lexicographically smallest node sequence wins, so
    /// each step takes the lowest-id neighbor that is still on a shortest path.
    pub fn shortest_route(&self, src: NodeId, dst: NodeId) -> Result<Vec<NodeId>, TopologyError> {
        self.check(src)?;
        self.check(dst)?;
        if src == dst {
            return Err(TopologyError::SameEndpoints(src.0));
        }
        let to_dst = self.hop_distances(dst.0);
        let mut remaining = to_dst[src.0].ok_or(TopologyError::Unreachable {
            src: src.0,
            dst: dst.0,
        })?;
        let mut route = vec![src];
        let mut cur = src;
        while remaining > 0 {
            remaining -= 1;
            cur = *self.one_hop[cur.0]
                .iter()
                .find(|v| to_dst[v.0] == Some(remaining))
                .expect("BFS layer has a predecessor");
            route.push(cur);
        }
        Ok(route)
    }

    /// Parses the plain-text edge-list format: first line is the node count,
    /// each following non-empty line is `u v` with `u < v`, `#` starts a
    /// comment line.
    pub fn parse(text: &str) -> Result<Self, TopologyError> {
        let mut n = None;
        let mut edges = BTreeSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| TopologyError::Parse { line: line_no, msg };
            let fields: Vec<&str> = line.split_whitespace().collect();
            match n {
                None => {
                    if fields.len() != 1 {
                        return Err(err(format!("expected node count, got {line:?}")));
                    }
                    let count: usize = fields[0]
                        .parse()
                        .map_err(|_| err(format!("invalid node count {:?}", fields[0])))?;
                    if count == 0 {
                        return Err(err("node count must be positive".into()));
                    }
                    n = Some(count);
                }
                Some(count) => {
                    if fields.len() != 2 {
                        return Err(err(format!("expected \"u v\", got {line:?}")));
                    }
                    let parse = |s: &str| {
                        s.parse::<usize>()
                            .map_err(|_| err(format!("invalid node id {s:?}")))
                    };
                    let (u, v) = (parse(fields[0])?, parse(fields[1])?);
                    if u >= v {
                        return Err(err(format!("edge {u} {v} must satisfy u < v")));
                    }
                    if v >= count {
                        return Err(err(format!(
                            "edge {u} {v} references a node outside 0..{count}"
                        )));
                    }
                    edges.insert((u, v));
                }
            }
        }
        let n = n.ok_or(TopologyError::Parse {
            line: text.lines().count().max(1),
            msg: "missing node count".into(),
        })?;
        Ok(Self::from_edge_set(n, edges, None))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TopologyError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    /// Serializes to the edge-list format with edges in ascending order.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for (u, v) in &self.edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TopologyError> {
        fs::write(path, self.to_edge_list())?;
        Ok(())
    }
}
