use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::window::{newer_than, window_offset, SlidingWindow};
use super::{Interpretation, NodeId, Ogm, ProtocolParams, Sqn, Ttl};

/// Routing-table row for one originator.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OriginatorEntry {
    /// Last own sequence number echoed back by this neighbour (self-originated
    /// echoes are filed under the echoing neighbour's row).
    pub bidirectional_sqn: Option<Sqn>,
    pub last_sqn: Option<Sqn>,
    /// TTL carried by the OGM that set `last_sqn`.
    pub last_ttl: Option<Ttl>,
    /// One window per potential neighbour, indexed by node id.
    pub windows: Vec<SlidingWindow>,
    /// Unique best next hop, maintained only under the literal interpretation.
    pub designated_best: Option<NodeId>,
}

/// The OGM handed to [`OriginatorEntry::shift_and_record`] was neither newer
/// than the last recorded sequence number nor inside the window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("sequence number {sqn} is neither newer than nor inside the window ending at {last:?}")]
pub struct OutOfWindow {
    pub sqn: Sqn,
    pub last: Option<Sqn>,
}

impl OriginatorEntry {
    pub fn new(n_nodes: usize) -> Self {
        OriginatorEntry {
            bidirectional_sqn: None,
            last_sqn: None,
            last_ttl: None,
            windows: vec![SlidingWindow::default(); n_nodes],
            designated_best: None,
        }
    }

    /// Offset of `sqn` in this originator's window, if it has one and `sqn` is in it.
    pub fn offset_of(&self, sqn: Sqn, params: &ProtocolParams) -> Option<usize> {
        self.last_sqn.and_then(|last| window_offset(sqn, last, params))
    }

    /// The same `(sid, sqn)` was already recorded inside the current window.
    pub fn is_duplicate(&self, ogm: &Ogm, params: &ProtocolParams) -> bool {
        self.offset_of(ogm.sqn, params).is_some_and(|k| self.windows[ogm.sid].get(k))
    }

    /// Neighbour ranking update: shift the windows forward if `ogm` carries a
    /// newer sequence number, then record `ogm.sid` for `ogm.sqn`.
    pub fn shift_and_record(&mut self, ogm: &Ogm, params: &ProtocolParams) -> Result<(), OutOfWindow> {
        if newer_than(ogm.sqn, self.last_sqn, params) {
            match self.last_sqn {
                None => self.windows.iter_mut().for_each(SlidingWindow::clear),
                Some(last) => {
                    let k = (u32::from(ogm.sqn) + params.range() - u32::from(last)) % params.range();
                    for w in &mut self.windows {
                        w.shift(k as usize, params.window_size);
                    }
                }
            }
            self.last_sqn = Some(ogm.sqn);
            self.last_ttl = Some(ogm.ttl);
        }
        let k = self.offset_of(ogm.sqn, params).ok_or(OutOfWindow {
            sqn: ogm.sqn,
            last: self.last_sqn,
        })?;
        self.windows[ogm.sid].set(k);
        if params.interpretation == Interpretation::Literal {
            self.designated_best = self.nominate();
        }
        Ok(())
    }

    /// Neighbours with the highest non-zero count, ascending by id.
    pub fn top_ranked(&self) -> Vec<NodeId> {
        let best = self.windows.iter().map(SlidingWindow::count).max().unwrap_or(0);
        if best == 0 {
            return Vec::new();
        }
        self.windows
            .iter()
            .enumerate()
            .filter(|(_, w)| w.count() == best)
            .map(|(n, _)| n)
            .collect()
    }

    // Sticky: keep the current pick while it stays top ranked, else lowest id.
    fn nominate(&self) -> Option<NodeId> {
        let top = self.top_ranked();
        match self.designated_best {
            Some(cur) if top.contains(&cur) => Some(cur),
            _ => top.first().copied(),
        }
    }

    fn is_pristine(&self) -> bool {
        self.last_sqn.is_none() && self.last_ttl.is_none() && self.windows.iter().all(SlidingWindow::is_empty)
    }
}

/// Which receive rules an OGM satisfies. The rules overlap; an OGM matching
/// none of them is dropped.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RuleSet {
    /// Self-originated echo; only feeds the bidirectional link check.
    pub own_echo: bool,
    /// Update the originator's sliding window.
    pub rank: bool,
    /// Rebroadcast.
    pub rebroadcast: bool,
}

impl RuleSet {
    #[inline]
    pub fn is_drop(&self) -> bool {
        !self.own_echo && !self.rank && !self.rebroadcast
    }
}

/// Outcome of [`NodeState::receive`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Receipt {
    Buffered,
    DroppedUnidirectional,
    Overflow,
}

/// Result of processing one buffered OGM.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Handled {
    pub ogm: Ogm,
    pub rules: RuleSet,
    pub rebroadcast: Option<Ogm>,
}

/// Complete protocol state of one node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NodeState {
    pub id: NodeId,
    pub own_sqn: Sqn,
    /// One row per node id; the node's own row only holds nothing useful.
    pub table: Vec<OriginatorEntry>,
    pub buffer: VecDeque<Ogm>,
    pub buffer_error: u32,
    /// Own OGMs this node may still originate (explorer only).
    pub ogm_budget: u32,
}

impl NodeState {
    pub fn new(id: NodeId, params: &ProtocolParams) -> Self {
        NodeState {
            id,
            own_sqn: 0,
            table: (0..params.n_nodes).map(|_| OriginatorEntry::new(params.n_nodes)).collect(),
            buffer: VecDeque::with_capacity(params.buffer_capacity.min(64)),
            buffer_error: 0,
            ogm_budget: 0,
        }
    }

    pub fn with_budget(mut self, budget: u32) -> Self {
        self.ogm_budget = budget;
        self
    }

    /// A link is bidirectional while the last echo the neighbour returned is
    /// fewer than `bi_link_timeout` own sequence numbers old.
    pub fn is_bidirectional(&self, neighbor: NodeId, params: &ProtocolParams) -> bool {
        debug_assert_ne!(neighbor, self.id);
        match self.table[neighbor].bidirectional_sqn {
            None => false,
            Some(bd) => {
                let age = (u32::from(self.own_sqn) + params.range() - u32::from(bd)) % params.range();
                age < params.bi_link_timeout
            }
        }
    }

    /// Best next hops towards `oid`. Under the literal interpretation this is
    /// at most the designated hop; otherwise every top-ranked neighbour.
    pub fn best_next_hops(&self, oid: NodeId, params: &ProtocolParams) -> Vec<NodeId> {
        if oid == self.id {
            return Vec::new();
        }
        let entry = &self.table[oid];
        match params.interpretation {
            Interpretation::Literal => entry.designated_best.into_iter().collect(),
            Interpretation::Alternative => entry.top_ranked(),
        }
    }

    pub fn is_best_next_hop(&self, oid: NodeId, hop: NodeId, params: &ProtocolParams) -> bool {
        if oid == self.id {
            return false;
        }
        let entry = &self.table[oid];
        match params.interpretation {
            Interpretation::Literal => entry.designated_best == Some(hop),
            Interpretation::Alternative => {
                let c = entry.windows[hop].count();
                c > 0 && entry.windows.iter().all(|w| w.count() <= c)
            }
        }
    }

    /// Evaluate the receive rules for `ogm` against the current state.
    pub fn classify(&self, ogm: &Ogm, params: &ProtocolParams) -> RuleSet {
        if ogm.oid == self.id {
            return RuleSet {
                own_echo: true,
                ..RuleSet::default()
            };
        }
        let entry = &self.table[ogm.oid];
        let bidirectional = self.is_bidirectional(ogm.sid, params);
        let newer = newer_than(ogm.sqn, entry.last_sqn, params);
        let in_window = entry.offset_of(ogm.sqn, params).is_some();
        let duplicate = entry.is_duplicate(ogm, params);
        let fresh_in_window = in_window && !duplicate;

        let rank = bidirectional
            && match params.interpretation {
                Interpretation::Literal => newer,
                Interpretation::Alternative => newer || fresh_in_window,
            };

        let single_hop = ogm.oid == ogm.sid && ogm.ttl >= 2;
        let multi_hop = bidirectional
            && ogm.ttl >= 2
            && self.is_best_next_hop(ogm.oid, ogm.sid, params)
            && match params.interpretation {
                Interpretation::Literal => newer || fresh_in_window || (in_window && entry.last_ttl == Some(ogm.ttl)),
                Interpretation::Alternative => newer || (fresh_in_window && entry.last_ttl.is_none_or(|t| ogm.ttl >= t)),
            };

        RuleSet {
            own_echo: false,
            rank,
            rebroadcast: single_hop || multi_hop,
        }
    }

    /// Bidirectional link check for a self-originated echo: a direct echo of
    /// the current own sequence number confirms the link to the echoing
    /// neighbour.
    pub fn check_echo(&mut self, ogm: &Ogm) {
        debug_assert_eq!(ogm.oid, self.id);
        if ogm.is_direct && ogm.sqn == self.own_sqn && ogm.sid != self.id {
            self.table[ogm.sid].bidirectional_sqn = Some(ogm.sqn);
        }
    }

    /// The copy of `ogm` this node sends when rebroadcasting it.
    pub fn prepare_rebroadcast(&self, ogm: &Ogm, params: &ProtocolParams) -> Ogm {
        assert!(ogm.ttl >= 2, "rebroadcast requires ttl >= 2, got {}", ogm.ttl);
        Ogm {
            oid: ogm.oid,
            sid: self.id,
            sqn: ogm.sqn,
            ttl: ogm.ttl - 1,
            is_direct: ogm.sid == ogm.oid,
            is_unidirectional: !self.is_bidirectional(ogm.sid, params),
        }
    }

    /// Classify the buffer head without removing it.
    pub fn classify_head(&self, params: &ProtocolParams) -> Option<RuleSet> {
        self.buffer.front().map(|ogm| self.classify(ogm, params))
    }

    /// Pop the buffer head and apply every process its rules call for. An OGM
    /// matching both the ranking and the rebroadcast rule does both.
    pub fn handle_next(&mut self, params: &ProtocolParams) -> Option<Handled> {
        let ogm = self.buffer.pop_front()?;
        let rules = self.classify(&ogm, params);
        if rules.own_echo {
            self.check_echo(&ogm);
            return Some(Handled {
                ogm,
                rules,
                rebroadcast: None,
            });
        }
        let rebroadcast = rules.rebroadcast.then(|| self.prepare_rebroadcast(&ogm, params));
        if rules.rank {
            self.table[ogm.oid]
                .shift_and_record(&ogm, params)
                .expect("ranking rule admits only newer or in-window sequence numbers");
        }
        Some(Handled { ogm, rules, rebroadcast })
    }

    /// Accept an OGM from a neighbour into the buffer.
    ///
    /// OGMs flagged unidirectional are dropped unless they are echoes of this
    /// node's own OGMs, which the link check still needs. A full buffer drops
    /// the incoming OGM and counts the overflow.
    pub fn receive(&mut self, ogm: Ogm, params: &ProtocolParams) -> Receipt {
        if ogm.is_unidirectional && ogm.oid != self.id {
            return Receipt::DroppedUnidirectional;
        }
        if self.buffer.len() >= params.buffer_capacity {
            self.buffer_error += 1;
            return Receipt::Overflow;
        }
        self.buffer.push_back(ogm);
        Receipt::Buffered
    }

    /// Originate a new OGM with the next own sequence number.
    pub fn create_own_ogm(&mut self, params: &ProtocolParams) -> Ogm {
        self.own_sqn = ((u32::from(self.own_sqn) + 1) % params.range()) as Sqn;
        Ogm::originate(self.id, self.own_sqn, params.ttl_max)
    }

    /// Checks the structural invariants of the state; used by tests and the
    /// explorer's debug assertions.
    pub fn check_invariants(&self, params: &ProtocolParams) -> Result<(), String> {
        if self.buffer.len() > params.buffer_capacity {
            return Err(format!("node {}: buffer over capacity", self.id));
        }
        if self.table.len() != params.n_nodes {
            return Err(format!("node {}: table has {} rows", self.id, self.table.len()));
        }
        let limit = if params.window_size >= 32 {
            u32::MAX
        } else {
            (1u32 << params.window_size) - 1
        };
        for (oid, entry) in self.table.iter().enumerate() {
            if entry.windows.len() != params.n_nodes {
                return Err(format!("node {}: row {oid} has wrong window count", self.id));
            }
            if entry.windows.iter().any(|w| w.bits() & !limit != 0) {
                return Err(format!("node {}: row {oid} window exceeds window size", self.id));
            }
            if entry.last_sqn.is_none() && !entry.is_pristine() {
                return Err(format!("node {}: row {oid} has flags without a last sqn", self.id));
            }
            if let Some(d) = entry.designated_best {
                if !entry.top_ranked().contains(&d) {
                    return Err(format!("node {}: designated hop {d} for {oid} is not top ranked", self.id));
                }
            }
        }
        Ok(())
    }
}
