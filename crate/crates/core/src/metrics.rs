//! Observables over a whole network: link discovery, route discovery, route
//! quality, loop freedom and buffer occupancy.
//!
//! All functions are pure reads of the node states.

use serde::{Deserialize, Serialize};

use crate::protocol::{NodeId, NodeState, ProtocolParams};
use crate::topology::{Topology, UNREACHABLE};

/// One timestamped snapshot of the network observables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSample {
    pub t: f64,
    pub bidir_misses: u32,
    pub no_route: u32,
    pub best_hop_total: u32,
    pub route_errors: u32,
    pub avg_buffer: f64,
    pub max_buffer: u32,
    pub buffer_errors: u32,
}

impl MetricsSample {
    pub fn capture(t: f64, nodes: &[NodeState], topology: &Topology, params: &ProtocolParams) -> Self {
        let buffers = buffer_stats(nodes);
        MetricsSample {
            t,
            bidir_misses: count_bidirectional_misses(nodes, topology, params),
            no_route: count_no_route(nodes, params),
            best_hop_total: count_best_hops(nodes, params),
            route_errors: count_route_mismatch(nodes, topology, params),
            avg_buffer: buffers.avg,
            max_buffer: buffers.max,
            buffer_errors: buffers.errors,
        }
    }
}

/// Ordered adjacent pairs `(i, j)` where `i` does not consider the link to `j`
/// bidirectional.
pub fn count_bidirectional_misses(nodes: &[NodeState], topology: &Topology, params: &ProtocolParams) -> u32 {
    nodes
        .iter()
        .map(|node| {
            topology
                .neighbors(node.id)
                .iter()
                .filter(|&&j| !node.is_bidirectional(j, params))
                .count() as u32
        })
        .sum()
}

/// Ordered pairs `(v, d)`, `v != d`, for which `v` has no best next hop to `d`.
pub fn count_no_route(nodes: &[NodeState], params: &ProtocolParams) -> u32 {
    let mut missing = 0;
    for v in nodes {
        for d in 0..nodes.len() {
            if d != v.id && v.best_next_hops(d, params).is_empty() {
                missing += 1;
            }
        }
    }
    missing
}

/// Total number of best next hops over all ordered pairs.
pub fn count_best_hops(nodes: &[NodeState], params: &ProtocolParams) -> u32 {
    nodes
        .iter()
        .map(|v| (0..nodes.len()).map(|d| v.best_next_hops(d, params).len() as u32).sum::<u32>())
        .sum()
}

/// Best next hops `h` of `v` towards `d` that do not lie on a shortest path,
/// counted once per `(v, d, h)`.
pub fn count_route_mismatch(nodes: &[NodeState], topology: &Topology, params: &ProtocolParams) -> u32 {
    let mut wrong = 0;
    for v in nodes {
        for d in 0..nodes.len() {
            if d == v.id {
                continue;
            }
            let want = topology.dist(v.id, d);
            for h in v.best_next_hops(d, params) {
                let got = topology.dist(h, d);
                if want == UNREACHABLE || got == UNREACHABLE || got + 1 != want {
                    wrong += 1;
                }
            }
        }
    }
    wrong
}

/// Some destination's next-hop graph contains a cycle.
pub fn has_loop(nodes: &[NodeState], params: &ProtocolParams) -> bool {
    (0..nodes.len()).any(|d| find_loop(nodes, d, params).is_some())
}

/// A cycle in the next-hop graph towards `d`, as the list of nodes on it.
pub fn find_loop(nodes: &[NodeState], d: NodeId, params: &ProtocolParams) -> Option<Vec<NodeId>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Open,
        Done,
    }
    let n = nodes.len();
    let succ: Vec<Vec<NodeId>> = nodes
        .iter()
        .map(|v| if v.id == d { Vec::new() } else { v.best_next_hops(d, params) })
        .collect();
    let mut mark = vec![Mark::New; n];
    let mut path = Vec::new();
    for root in 0..n {
        if mark[root] != Mark::New {
            continue;
        }
        // iterative DFS; stack holds (node, next successor index)
        let mut stack = vec![(root, 0usize)];
        mark[root] = Mark::Open;
        path.push(root);
        while let Some(&mut (v, ref mut i)) = stack.last_mut() {
            if let Some(&h) = succ[v].get(*i) {
                *i += 1;
                match mark[h] {
                    Mark::Open => {
                        let start = path.iter().position(|&x| x == h).unwrap_or(0);
                        return Some(path[start..].to_vec());
                    }
                    Mark::New => {
                        mark[h] = Mark::Open;
                        path.push(h);
                        stack.push((h, 0));
                    }
                    Mark::Done => {}
                }
            } else {
                mark[v] = Mark::Done;
                path.pop();
                stack.pop();
            }
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BufferStats {
    pub avg: f64,
    pub max: u32,
    pub errors: u32,
}

pub fn buffer_stats(nodes: &[NodeState]) -> BufferStats {
    if nodes.is_empty() {
        return BufferStats {
            avg: 0.0,
            max: 0,
            errors: 0,
        };
    }
    let total: usize = nodes.iter().map(|n| n.buffer.len()).sum();
    BufferStats {
        avg: total as f64 / nodes.len() as f64,
        max: nodes.iter().map(|n| n.buffer.len() as u32).max().unwrap_or(0),
        errors: nodes.iter().map(|n| n.buffer_error).sum(),
    }
}
