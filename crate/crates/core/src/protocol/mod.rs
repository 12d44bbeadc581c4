//! The per-node protocol state machine.
//!
//! Everything here is deterministic and free of time or delivery concerns:
//! a [`NodeState`] accepts OGMs into its buffer ([`NodeState::receive`]),
//! classifies the head of the buffer against the receive rules
//! ([`NodeState::classify`]) and applies the matching processes
//! ([`NodeState::handle_next`]). Harnesses such as the explorer and the
//! simulator are responsible for moving OGMs between neighbours.

mod node;
mod ogm;
mod params;
mod window;

pub use node::{Handled, NodeState, OriginatorEntry, OutOfWindow, Receipt, RuleSet};
pub use ogm::Ogm;
pub use params::{Interpretation, ProtocolParams};
pub use window::{newer_than, window_offset, SlidingWindow};

/// Node identifier, `0..n_nodes`.
pub type NodeId = usize;
/// Sequence number, `0..=max_sqn`.
pub type Sqn = u16;
/// Remaining hop budget of an OGM.
pub type Ttl = u8;
