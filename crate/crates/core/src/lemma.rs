//! Minmax completion on complete-conflict instances.
//!
//! Every node interferes with every other, so each frame at most `S` slots
//! are shared among all nodes and there are no arrivals. The brute-force
//! search explores every per-frame allocation; the equal-ratio policy hands
//! out slots proportionally to queue length with largest-remainder rounding.

use std::collections::HashMap;

use thiserror::Error;

pub const MAX_NODES: usize = 3;
pub const MAX_SLOTS: usize = 8;
pub const MAX_QUEUE: usize = 6;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LemmaError {
    #[error("instance too large to enumerate (nodes ≤ {MAX_NODES}, S ≤ {MAX_SLOTS}, q ≤ {MAX_QUEUE})")]
    TooLarge,

    #[error("a frame needs at least one slot")]
    ZeroSlots,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub queues: Vec<usize>,
    pub slots: usize,
}

impl Instance {
    pub fn new(queues: Vec<usize>, slots: usize) -> Result<Self, LemmaError> {
        if slots == 0 {
            return Err(LemmaError::ZeroSlots);
        }
        if queues.len() > MAX_NODES || slots > MAX_SLOTS || queues.iter().any(|&q| q > MAX_QUEUE) {
            return Err(LemmaError::TooLarge);
        }
        Ok(Instance { queues, slots })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Comparison {
    /// Fewest frames after which every queue is empty, over all policies.
    pub optimal: u32,
    /// Frames needed by the equal-ratio policy.
    pub equal_ratio: u32,
}

impl Comparison {
    pub fn matches(&self) -> bool {
        self.optimal == self.equal_ratio
    }
}

pub fn compare(instance: &Instance) -> Comparison {
    Comparison {
        optimal: brute_force_minmax(instance),
        equal_ratio: equal_ratio_completion(instance),
    }
}

/// Every `p` with `Σ p ≤ slots` and `len` entries.
fn allocations(len: usize, slots: usize) -> Vec<Vec<usize>> {
    if len == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 0..=slots {
        for mut rest in allocations(len - 1, slots - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Minimum over all allocation sequences of the largest per-node
/// completion frame. A node's completion frame is the first frame after
/// which its queue is empty, 0 if it starts empty.
pub fn brute_force_minmax(instance: &Instance) -> u32 {
    let choices = allocations(instance.queues.len(), instance.slots);
    let mut memo = HashMap::new();
    search(&instance.queues, &choices, &mut memo)
}

fn search(state: &[usize], choices: &[Vec<usize>], memo: &mut HashMap<Vec<usize>, u32>) -> u32 {
    if state.iter().all(|&q| q == 0) {
        return 0;
    }
    if let Some(&v) = memo.get(state) {
        return v;
    }
    let mut best = u32::MAX;
    for p in choices {
        let next: Vec<usize> = state.iter().zip(p).map(|(&q, &p)| q.saturating_sub(p)).collect();
        if next == state {
            continue;
        }
        best = best.min(1 + search(&next, choices, memo));
    }
    memo.insert(state.to_vec(), best);
    best
}

/// Largest-remainder apportionment of `slots` among weights. Ties in the
/// remainder go to the lower index.
pub fn apportion(weights: &[usize], slots: usize) -> Vec<usize> {
    let total: usize = weights.iter().sum();
    if total == 0 {
        return vec![0; weights.len()];
    }
    let mut alloc: Vec<usize> = weights.iter().map(|&w| w * slots / total).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    // remainder numerators share the denominator `total`
    order.sort_by_key(|&i| (std::cmp::Reverse(weights[i] * slots % total), i));
    let left = slots - alloc.iter().sum::<usize>();
    for &i in order.iter().take(left) {
        alloc[i] += 1;
    }
    alloc
}

/// Frames needed when each frame's `S` slots are split among the nodes
/// that still have a backlog, proportionally to `max{1, q}`.
pub fn equal_ratio_completion(instance: &Instance) -> u32 {
    let mut q = instance.queues.clone();
    let mut frames = 0;
    while q.iter().any(|&v| v > 0) {
        let weights: Vec<usize> = q.iter().map(|&v| if v > 0 { v.max(1) } else { 0 }).collect();
        let p = apportion(&weights, instance.slots);
        for (v, p) in q.iter_mut().zip(p) {
            *v = v.saturating_sub(p);
        }
        frames += 1;
    }
    frames
}

/// All guard-range instances with `nodes` nodes.
pub fn enumerate_instances(nodes: usize) -> Vec<Instance> {
    let mut out = Vec::new();
    let queue_vectors = allocations_bounded(nodes, MAX_QUEUE);
    for slots in 1..=MAX_SLOTS {
        for q in &queue_vectors {
            out.push(Instance {
                queues: q.clone(),
                slots,
            });
        }
    }
    out
}

fn allocations_bounded(len: usize, max: usize) -> Vec<Vec<usize>> {
    if len == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 0..=max {
        for mut rest in allocations_bounded(len - 1, max) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}
