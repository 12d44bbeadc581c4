//! Breadth-first exploration of the untimed model.
//!
//! Every node may either originate one of its budgeted OGMs or process the
//! head of its buffer. Sends (originations and rebroadcasts) are delivered
//! atomically to every neighbour; the sender never hears itself. Processing
//! steps that do not send anything are purely local, and by default they take
//! priority over sends: while any is enabled, only those are explored.
//!
//! States are deduplicated through a compact byte encoding. Loop freedom is
//! checked in every reachable state, link and route discovery in every
//! quiescent one (budgets spent, buffers empty).

use std::collections::BTreeSet;
use std::fmt;

use indexmap::IndexSet;
use serde::Serialize;

use crate::metrics::{count_bidirectional_misses, find_loop};
use crate::protocol::{NodeId, NodeState, Ogm, OriginatorEntry, ProtocolParams, RuleSet, SlidingWindow};
use crate::topology::Topology;

/// Default bound on the number of distinct states.
pub const DEFAULT_STATE_CAP: usize = 50_000_000;

/// Snapshot of every node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GlobalState {
    pub nodes: Vec<NodeState>,
}

impl GlobalState {
    pub fn initial(params: &ProtocolParams, budgets: &[u32]) -> Self {
        GlobalState {
            nodes: (0..params.n_nodes)
                .map(|id| NodeState::new(id, params).with_budget(budgets.get(id).copied().unwrap_or(0)))
                .collect(),
        }
    }

    pub fn is_quiescent(&self) -> bool {
        self.nodes.iter().all(|n| n.ogm_budget == 0 && n.buffer.is_empty())
    }

    /// Canonical byte encoding; two states are equal iff their encodings are.
    pub fn encode(&self, params: &ProtocolParams) -> Vec<u8> {
        let wbytes = window_bytes(params);
        let mut out = Vec::with_capacity(self.nodes.len() * (16 + self.nodes.len() * (12 + self.nodes.len() * wbytes)));
        for node in &self.nodes {
            out.extend_from_slice(&node.own_sqn.to_le_bytes());
            out.extend_from_slice(&node.ogm_budget.to_le_bytes());
            out.extend_from_slice(&node.buffer_error.to_le_bytes());
            out.extend_from_slice(&(node.buffer.len() as u32).to_le_bytes());
            for ogm in &node.buffer {
                out.extend_from_slice(&(ogm.oid as u16).to_le_bytes());
                out.extend_from_slice(&(ogm.sid as u16).to_le_bytes());
                out.extend_from_slice(&ogm.sqn.to_le_bytes());
                out.push(ogm.ttl);
                out.push(u8::from(ogm.is_direct) | (u8::from(ogm.is_unidirectional) << 1));
            }
            for entry in &node.table {
                put_opt(&mut out, entry.bidirectional_sqn);
                put_opt(&mut out, entry.last_sqn);
                put_opt(&mut out, entry.last_ttl.map(u16::from));
                put_opt(&mut out, entry.designated_best.map(|d| d as u16));
                for w in &entry.windows {
                    out.extend_from_slice(&w.bits().to_le_bytes()[..wbytes]);
                }
            }
        }
        out
    }

    pub fn decode(bytes: &[u8], params: &ProtocolParams) -> Self {
        let wbytes = window_bytes(params);
        let mut r = Reader { bytes, pos: 0 };
        let nodes = (0..params.n_nodes)
            .map(|id| {
                let mut node = NodeState::new(id, params);
                node.own_sqn = r.u16();
                node.ogm_budget = r.u32();
                node.buffer_error = r.u32();
                let len = r.u32() as usize;
                for _ in 0..len {
                    let oid = r.u16() as NodeId;
                    let sid = r.u16() as NodeId;
                    let sqn = r.u16();
                    let ttl = r.u8();
                    let flags = r.u8();
                    node.buffer.push_back(Ogm {
                        oid,
                        sid,
                        sqn,
                        ttl,
                        is_direct: flags & 1 != 0,
                        is_unidirectional: flags & 2 != 0,
                    });
                }
                for entry in &mut node.table {
                    *entry = OriginatorEntry {
                        bidirectional_sqn: r.opt(),
                        last_sqn: r.opt(),
                        last_ttl: r.opt().map(|t| t as u8),
                        designated_best: r.opt().map(|d| d as NodeId),
                        windows: (0..params.n_nodes).map(|_| SlidingWindow::from_bits(r.window(wbytes))).collect(),
                    };
                }
                node
            })
            .collect();
        debug_assert_eq!(r.pos, bytes.len());
        GlobalState { nodes }
    }

    /// Best-next-hop sets of every node towards every other node.
    pub fn route_table(&self, params: &ProtocolParams) -> RouteTable {
        self.nodes
            .iter()
            .map(|v| (0..self.nodes.len()).map(|d| v.best_next_hops(d, params)).collect())
            .collect()
    }
}

/// `table[v][d]` lists the best next hops of `v` towards `d`.
pub type RouteTable = Vec<Vec<Vec<NodeId>>>;

fn window_bytes(params: &ProtocolParams) -> usize {
    params.window_size.div_ceil(8)
}

fn put_opt(out: &mut Vec<u8>, v: Option<u16>) {
    match v {
        None => out.push(0),
        Some(v) => {
            out.push(1);
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let v = self.bytes[self.pos..self.pos + N].try_into().unwrap();
        self.pos += N;
        v
    }
    fn u8(&mut self) -> u8 {
        self.take::<1>()[0]
    }
    fn u16(&mut self) -> u16 {
        u16::from_le_bytes(self.take())
    }
    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }
    fn opt(&mut self) -> Option<u16> {
        match self.u8() {
            0 => None,
            _ => Some(self.u16()),
        }
    }
    fn window(&mut self, n: usize) -> u32 {
        let mut buf = [0u8; 4];
        buf[..n].copy_from_slice(&self.bytes[self.pos..self.pos + n]);
        self.pos += n;
        u32::from_le_bytes(buf)
    }
}

/// What a transition did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    /// Created and broadcast a new own OGM.
    Originate { ogm: Ogm },
    /// Processed the buffer head and broadcast the rebroadcast copy.
    Rebroadcast { received: Ogm, sent: Ogm, rules: RuleSet },
    /// Processed the buffer head without sending.
    Process { received: Ogm, rules: RuleSet },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Transition {
    pub node: NodeId,
    pub action: Action,
}

impl Transition {
    pub fn is_internal(&self) -> bool {
        matches!(self.action, Action::Process { .. })
    }

    pub fn label(&self) -> &'static str {
        match self.action {
            Action::Originate { .. } => "originate",
            Action::Rebroadcast { rules, .. } if rules.rank => "rank+rebroadcast",
            Action::Rebroadcast { .. } => "rebroadcast",
            Action::Process { rules, .. } if rules.own_echo => "echo",
            Action::Process { rules, .. } if rules.rank => "rank",
            Action::Process { .. } => "drop",
        }
    }

    /// The OGM put on the air, or the one consumed by a local step.
    pub fn ogm(&self) -> Ogm {
        match self.action {
            Action::Originate { ogm } => ogm,
            Action::Rebroadcast { sent, .. } => sent,
            Action::Process { received, .. } => received,
        }
    }
}

/// Enabled transitions of `g` and their targets.
pub fn successors(g: &GlobalState, params: &ProtocolParams, topology: &Topology, reduction: bool) -> Vec<(Transition, GlobalState)> {
    let mut internal = Vec::new();
    let mut sends = Vec::new();
    for (id, node) in g.nodes.iter().enumerate() {
        if let Some(rules) = node.classify_head(params) {
            if rules.rebroadcast {
                sends.push((id, false));
            } else {
                internal.push(id);
            }
        }
        if node.ogm_budget > 0 {
            sends.push((id, true));
        }
    }

    let mut out = Vec::with_capacity(internal.len() + sends.len());
    for id in internal {
        let mut next = g.clone();
        let h = next.nodes[id].handle_next(params).expect("head present");
        debug_assert!(h.rebroadcast.is_none());
        out.push((
            Transition {
                node: id,
                action: Action::Process {
                    received: h.ogm,
                    rules: h.rules,
                },
            },
            next,
        ));
    }
    if reduction && !out.is_empty() {
        return out;
    }
    for (id, originate) in sends {
        let mut next = g.clone();
        let (action, sent) = if originate {
            let node = &mut next.nodes[id];
            node.ogm_budget -= 1;
            let ogm = node.create_own_ogm(params);
            (Action::Originate { ogm }, ogm)
        } else {
            let h = next.nodes[id].handle_next(params).expect("head present");
            let sent = h.rebroadcast.expect("rebroadcast rule held");
            (
                Action::Rebroadcast {
                    received: h.ogm,
                    sent,
                    rules: h.rules,
                },
                sent,
            )
        };
        for &j in topology.neighbors(id) {
            next.nodes[j].receive(sent, params);
        }
        out.push((Transition { node: id, action }, next));
    }
    out
}

/// The checked properties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    /// No reachable state has a next-hop cycle towards any destination.
    LoopFreedom,
    /// Every quiescent state has all bidirectional links discovered.
    BidirectionalDiscovery,
    /// In every quiescent state every node other than 0 has a best next hop to node 0.
    #[serde(rename = "route_to_originator_0")]
    RouteToOriginatorZero,
}

impl Property {
    pub const ALL: [Property; 3] = [
        Property::LoopFreedom,
        Property::BidirectionalDiscovery,
        Property::RouteToOriginatorZero,
    ];
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Property::LoopFreedom => "loop_freedom",
            Property::BidirectionalDiscovery => "bidirectional_discovery",
            Property::RouteToOriginatorZero => "route_to_originator_0",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub step: usize,
    pub transition: Transition,
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} node={} {} {}",
            self.step,
            self.transition.node,
            self.transition.label(),
            self.transition.ogm()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub property: Property,
    pub detail: String,
    pub trace: Vec<TraceStep>,
}

impl Violation {
    /// Counterexample as one line per transition.
    pub fn trace_text(&self) -> String {
        let mut s = String::new();
        for step in &self.trace {
            s.push_str(&step.to_string());
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExploreOptions {
    /// Give local processing priority over sends.
    pub reduction: bool,
    pub state_cap: usize,
    /// Keep the encoded states in the report.
    pub retain_states: bool,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions {
            reduction: true,
            state_cap: DEFAULT_STATE_CAP,
            retain_states: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExplorationReport {
    pub states_visited: usize,
    pub transitions: usize,
    pub quiescent_states: usize,
    /// First counterexample per violated property.
    pub violations: Vec<Violation>,
    /// False when the state cap stopped the search early.
    pub complete: bool,
    pub reduction: bool,
    /// Distinct best-next-hop tables over all quiescent states.
    #[serde(skip)]
    pub quiescent_routes: BTreeSet<RouteTable>,
    /// Every discovered state in [`GlobalState::encode`] form, in discovery
    /// order; only filled when requested.
    #[serde(skip)]
    pub states: Vec<Box<[u8]>>,
}

impl ExplorationReport {
    pub fn holds(&self, property: Property) -> bool {
        self.violations.iter().all(|v| v.property != property)
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Exhaustively explore every state reachable from the initial state with
/// the given per-node OGM budgets.
pub fn explore(params: &ProtocolParams, topology: &Topology, budgets: &[u32], opts: ExploreOptions) -> ExplorationReport {
    explore_from(params, topology, GlobalState::initial(params, budgets), opts)
}

/// Like [`explore`], starting from an arbitrary state.
pub fn explore_from(params: &ProtocolParams, topology: &Topology, init: GlobalState, opts: ExploreOptions) -> ExplorationReport {
    let mut seen: IndexSet<Box<[u8]>> = IndexSet::new();
    // parent index and incoming transition, parallel to `seen`
    let mut parents: Vec<Option<(u32, Transition)>> = Vec::new();
    seen.insert(init.encode(params).into_boxed_slice());
    parents.push(None);

    let mut report = ExplorationReport {
        states_visited: 0,
        transitions: 0,
        quiescent_states: 0,
        violations: Vec::new(),
        complete: true,
        reduction: opts.reduction,
        quiescent_routes: BTreeSet::new(),
        states: Vec::new(),
    };

    let trace_to = |parents: &[Option<(u32, Transition)>], mut idx: usize| {
        let mut steps = Vec::new();
        while let Some((p, t)) = parents[idx] {
            steps.push(t);
            idx = p as usize;
        }
        steps
            .into_iter()
            .rev()
            .enumerate()
            .map(|(i, transition)| TraceStep { step: i + 1, transition })
            .collect::<Vec<_>>()
    };

    let mut cursor = 0;
    while cursor < seen.len() {
        let state = GlobalState::decode(&seen[cursor], params);
        report.states_visited += 1;
        debug_assert!(state.nodes.iter().all(|n| n.check_invariants(params).is_ok()));

        let mut found = Vec::new();
        if report.holds(Property::LoopFreedom) {
            if let Some((d, cycle)) = (0..params.n_nodes).find_map(|d| find_loop(&state.nodes, d, params).map(|c| (d, c))) {
                found.push((Property::LoopFreedom, format!("next-hop cycle {cycle:?} towards {d}")));
            }
        }
        if state.is_quiescent() {
            report.quiescent_states += 1;
            report.quiescent_routes.insert(state.route_table(params));
            let misses = count_bidirectional_misses(&state.nodes, topology, params);
            if misses > 0 && report.holds(Property::BidirectionalDiscovery) {
                found.push((
                    Property::BidirectionalDiscovery,
                    format!("{misses} undiscovered bidirectional links"),
                ));
            }
            let lost: Vec<NodeId> = state
                .nodes
                .iter()
                .filter(|n| n.id != 0 && n.best_next_hops(0, params).is_empty())
                .map(|n| n.id)
                .collect();
            if !lost.is_empty() && report.holds(Property::RouteToOriginatorZero) {
                found.push((
                    Property::RouteToOriginatorZero,
                    format!("nodes {lost:?} have no best next hop to 0"),
                ));
            }
        }
        for (property, detail) in found {
            report.violations.push(Violation {
                property,
                detail,
                trace: trace_to(&parents, cursor),
            });
        }

        for (transition, next) in successors(&state, params, topology, opts.reduction) {
            report.transitions += 1;
            let (_, inserted) = seen.insert_full(next.encode(params).into_boxed_slice());
            if inserted {
                parents.push(Some((cursor as u32, transition)));
                if seen.len() > opts.state_cap {
                    report.complete = false;
                    break;
                }
            }
        }
        if !report.complete {
            break;
        }
        cursor += 1;
    }
    report.violations.sort_by_key(|v| v.property);
    if opts.retain_states {
        report.states = seen.into_iter().collect();
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::Interpretation;

    #[test]
    fn encoding_round_trips_and_separates() {
        let p = ProtocolParams::new(4, Interpretation::Literal);
        let t = Topology::ring(4).unwrap();
        let g = GlobalState::initial(&p, &[2, 1, 1, 1]);
        let bytes = g.encode(&p);
        assert_eq!(GlobalState::decode(&bytes, &p), g);
        let mut frontier = vec![g];
        for _ in 0..4 {
            let mut next = Vec::new();
            for s in &frontier {
                for (_, n) in successors(s, &p, &t, false) {
                    assert_eq!(GlobalState::decode(&n.encode(&p), &p), n);
                    next.push(n);
                }
            }
            frontier = next;
        }
        for a in &frontier {
            for b in &frontier {
                assert_eq!(a == b, a.encode(&p) == b.encode(&p));
            }
        }
    }

    #[test]
    fn quiescent_without_budget() {
        let p = ProtocolParams::new(4, Interpretation::Alternative);
        let t = Topology::ring(4).unwrap();
        let g = GlobalState::initial(&p, &[0; 4]);
        assert!(successors(&g, &p, &t, true).is_empty());
        let r = explore(&p, &t, &[0; 4], ExploreOptions::default());
        assert_eq!(r.states_visited, 1);
        assert_eq!(r.quiescent_states, 1);
        assert!(r.holds(Property::LoopFreedom));
        assert!(!r.holds(Property::BidirectionalDiscovery));
        assert!(!r.holds(Property::RouteToOriginatorZero));
    }

    #[test]
    fn initial_sends() {
        let p = ProtocolParams::new(4, Interpretation::Literal);
        let t = Topology::ring(4).unwrap();
        let g = GlobalState::initial(&p, &[2, 1, 1, 1]);
        let succ = successors(&g, &p, &t, true);
        assert_eq!(succ.len(), 4);
        assert!(succ.iter().all(|(tr, _)| matches!(tr.action, Action::Originate { .. })));
        // node 0 can originate twice along a path
        let (_, after) = succ.iter().find(|(tr, _)| tr.node == 0).unwrap();
        assert_eq!(after.nodes[0].ogm_budget, 1);
        assert_eq!(after.nodes[1].buffer.len(), 1);
        assert_eq!(after.nodes[3].buffer.len(), 1);
        assert!(after.nodes[0].buffer.is_empty());
        assert!(after.nodes[2].buffer.is_empty());
    }

    #[test]
    fn reduction_keeps_only_local_steps() {
        let p = ProtocolParams::new(4, Interpretation::Literal);
        let t = Topology::ring(4).unwrap();
        let mut g = GlobalState::initial(&p, &[1, 1, 1, 1]);
        // a multi-hop OGM at node 2 that can only be dropped
        g.nodes[2].buffer.push_back(Ogm {
            sid: 1,
            ..Ogm::originate(0, 1, 9)
        });
        let reduced = successors(&g, &p, &t, true);
        assert_eq!(reduced.len(), 1);
        assert!(reduced[0].0.is_internal());
        assert_eq!(reduced[0].0.node, 2);
        assert_eq!(successors(&g, &p, &t, false).len(), 5);
    }

    #[test]
    fn trace_lines() {
        let step = TraceStep {
            step: 3,
            transition: Transition {
                node: 1,
                action: Action::Originate {
                    ogm: Ogm::originate(1, 1, 10),
                },
            },
        };
        assert_eq!(step.to_string(), "3 node=1 originate oid=1 sid=1 sqn=1 ttl=10 direct=0 uni=0");
    }
}
