//! Route discovery for the B.A.T.M.A.N. mesh routing protocol.
//!
//! The crate is split into a pure per-node state machine ([`protocol`]), static
//! network shapes ([`topology`]), the correctness and performance observables
//! ([`metrics`]), a breadth-first explorer for the untimed model ([`explorer`])
//! and a seeded discrete-event simulator for the timed model ([`sim`]).
//!
//! Two readings of the receive rules are supported, selected through
//! [`Interpretation`]: `Literal` follows the RFC wording as closely as it can,
//! `Alternative` resolves its inconsistencies in favour of the sliding-window
//! concept.

pub mod config;
pub mod error;
pub mod explorer;
pub mod metrics;
pub mod protocol;
pub mod sim;
pub mod topology;

pub use error::ConfigError;
pub use protocol::{Interpretation, NodeId, NodeState, Ogm, OriginatorEntry, ProtocolParams, RuleSet, SlidingWindow, Sqn, Ttl};
pub use topology::{Topology, TopologySpec};
